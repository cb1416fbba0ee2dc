#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bllab/forward.hpp"
#include "bllab/symbol.hpp"

namespace bllab {

/// Named analytic potential. Shapes: zero, constant, sine (amplitude
/// sin(pi x / lx) sin(pi y / ly)), bump (amplitude exp(-width |x - center|^2)).
struct PotentialRecipe {
  std::string shape = "zero";
  double amplitude = 0.0;
  double cx = 0.5, cy = 0.5;
  double width = 30.0;

  std::function<double(double, double)> function(const RectGrid& grid) const;
  RVec sample(const RectGrid& grid) const;
};

struct RunConfig {
  std::string kind = "polyharmonic";  // or "laplacian", which pins m = 1
  int m = 1;
  int nx = 33, ny = 33;
  double lx = 1.0, ly = 1.0;
  PotentialRecipe potential;
  PotentialRecipe reference;
  int modes = 0;  // 0: every interior unknown
  int mask = 0;
  std::vector<double> schedule;  // empty: per-command default
  double xi_max = 6.0 * 3.141592653589793;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::string output = "out";
  std::string dataset;  // input dataset for reconstruct; default <output>/dataset.json
  std::vector<RPoint> xi_samples{{1.0, 0.0}, {0.0, 2.0}, {3.0, 4.0}};
  int shift_count = 2;
  RPoint certificate_xi{3.141592653589793, 0.0};

  RectGrid grid() const { return RectGrid(nx, ny, lx, ly); }
  int mode_count() const;
};

/// Default configuration as a JSON document; every accepted key appears here.
nlohmann::json default_config_json();

/// Merges `doc` over the defaults, rejecting unknown keys and mistyped values.
/// Errors are ArgumentError naming the offending field.
RunConfig parse_config(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& cfg);

/// Applies `a.b=value`; the value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

nlohmann::json read_json_file(const std::string& path);

/// FNV-1a of the canonical (sorted, compact) JSON text, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

}  // namespace bllab
