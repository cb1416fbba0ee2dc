#include "bllab/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace bllab {

using nlohmann::json;

namespace {

json recipe_json(const PotentialRecipe& r) {
  return {{"shape", r.shape}, {"amplitude", r.amplitude}, {"center", {r.cx, r.cy}}, {"width", r.width}};
}

void check_keys(const json& doc, const json& schema, const std::string& prefix) {
  if (!doc.is_object()) throw ArgumentError("config field '" + prefix + "' must be an object");
  for (const auto& [key, value] : doc.items()) {
    std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) throw ArgumentError("unknown config key '" + path + "'");
    const json& expect = schema.at(key);
    if (expect.is_object()) {
      check_keys(value, expect, path);
    } else if (expect.is_number()) {
      if (!value.is_number()) throw ArgumentError("config field '" + path + "' must be a number");
    } else if (expect.is_string()) {
      if (!value.is_string()) throw ArgumentError("config field '" + path + "' must be a string");
    } else if (expect.is_array()) {
      if (!value.is_array()) throw ArgumentError("config field '" + path + "' must be an array");
    }
  }
}

void merge(json& base, const json& over) {
  for (const auto& [key, value] : over.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) merge(base[key], value);
    else base[key] = value;
  }
}

template <class T>
T field(const json& doc, const std::string& path) {
  const json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) node = &node->at(part);
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    throw ArgumentError("config field '" + path + "' has the wrong type");
  }
}

int whole(const json& doc, const std::string& path) {
  double v = field<double>(doc, path);
  if (v != std::floor(v)) throw ArgumentError("config field '" + path + "' must be an integer");
  return static_cast<int>(v);
}

PotentialRecipe recipe(const json& doc, const std::string& path) {
  PotentialRecipe r;
  r.shape = field<std::string>(doc, path + ".shape");
  r.amplitude = field<double>(doc, path + ".amplitude");
  auto c = field<std::vector<double>>(doc, path + ".center");
  if (c.size() != 2) throw ArgumentError("config field '" + path + ".center' must have two entries");
  r.cx = c[0];
  r.cy = c[1];
  r.width = field<double>(doc, path + ".width");
  if (r.shape != "zero" && r.shape != "constant" && r.shape != "sine" && r.shape != "bump")
    throw ArgumentError("config field '" + path + ".shape' must be one of zero, constant, sine, bump");
  return r;
}

}  // namespace

std::function<double(double, double)> PotentialRecipe::function(const RectGrid& g) const {
  const double a = amplitude, x0 = cx * g.lx(), y0 = cy * g.ly(), w = width, lx = g.lx(), ly = g.ly();
  if (shape == "zero") return [](double, double) { return 0.0; };
  if (shape == "constant") return [a](double, double) { return a; };
  if (shape == "sine")
    return [a, lx, ly](double x, double y) {
      return a * std::sin(std::numbers::pi * x / lx) * std::sin(std::numbers::pi * y / ly);
    };
  if (shape == "bump")
    return [a, x0, y0, w](double x, double y) { return a * std::exp(-w * ((x - x0) * (x - x0) + (y - y0) * (y - y0))); };
  throw ArgumentError("unknown potential shape '" + shape + "'");
}

RVec PotentialRecipe::sample(const RectGrid& g) const { return sample_interior(g, function(g)); }

int RunConfig::mode_count() const { return modes > 0 ? modes : (nx - 2) * (ny - 2); }

json default_config_json() { return to_json(RunConfig{}); }

json to_json(const RunConfig& c) {
  json xs = json::array();
  for (const auto& x : c.xi_samples) xs.push_back(x);
  return {{"kind", c.kind},
          {"m", c.m},
          {"grid", {{"nx", c.nx}, {"ny", c.ny}, {"lx", c.lx}, {"ly", c.ly}}},
          {"potential", recipe_json(c.potential)},
          {"reference", recipe_json(c.reference)},
          {"modes", c.modes},
          {"mask", c.mask},
          {"schedule", c.schedule},
          {"xi_max", c.xi_max},
          {"noise", c.noise},
          {"seed", c.seed},
          {"output", c.output},
          {"dataset", c.dataset},
          {"xi_samples", xs},
          {"shift_count", c.shift_count},
          {"certificate_xi", c.certificate_xi}};
}

RunConfig parse_config(const json& doc) {
  const json schema = default_config_json();
  check_keys(doc, schema, "");
  json full = schema;
  merge(full, doc);

  RunConfig c;
  c.m = whole(full, "m");
  if (c.m < 1 || c.m > 2) throw ArgumentError("config field 'm' must be 1 or 2");
  c.kind = field<std::string>(full, "kind");
  if (c.kind != "laplacian" && c.kind != "polyharmonic")
    throw ArgumentError("config field 'kind' must be laplacian or polyharmonic");
  if (c.kind == "laplacian" && c.m != 1) throw ArgumentError("config field 'kind' is laplacian but m is not 1");
  c.nx = whole(full, "grid.nx");
  c.ny = whole(full, "grid.ny");
  c.lx = field<double>(full, "grid.lx");
  c.ly = field<double>(full, "grid.ly");
  if (c.nx < 2 * c.m + 3 || c.ny < 2 * c.m + 3) throw ArgumentError("config field 'grid' is too coarse for m");
  if (std::abs(c.lx / (c.nx - 1) - c.ly / (c.ny - 1)) > 1e-12 * c.lx)
    throw ArgumentError("config field 'grid' must give square cells");
  c.potential = recipe(full, "potential");
  c.reference = recipe(full, "reference");
  c.modes = whole(full, "modes");
  if (c.modes < 0 || c.modes > (c.nx - 2) * (c.ny - 2))
    throw ArgumentError("config field 'modes' must lie in [0, interior unknowns]");
  c.mask = whole(full, "mask");
  if (c.mask < 0 || c.mask >= c.mode_count()) throw ArgumentError("config field 'mask' must satisfy 0 <= mask < modes");
  c.schedule = field<std::vector<double>>(full, "schedule");
  for (std::size_t k = 0; k < c.schedule.size(); ++k) {
    if (!(c.schedule[k] < 0)) throw ArgumentError("config field 'schedule' must hold negative values");
    if (k > 0 && !(c.schedule[k] < c.schedule[k - 1]))
      throw ArgumentError("config field 'schedule' must be strictly decreasing");
  }
  c.xi_max = field<double>(full, "xi_max");
  if (!(c.xi_max >= 0)) throw ArgumentError("config field 'xi_max' must be non-negative");
  c.noise = field<double>(full, "noise");
  if (!(c.noise >= 0)) throw ArgumentError("config field 'noise' must be non-negative");
  double seed = field<double>(full, "seed");
  if (seed < 0 || seed != std::floor(seed)) throw ArgumentError("config field 'seed' must be a non-negative integer");
  c.seed = full.at("seed").is_number_unsigned() ? full.at("seed").get<std::uint64_t>()
                                                 : static_cast<std::uint64_t>(seed);
  c.output = field<std::string>(full, "output");
  c.dataset = field<std::string>(full, "dataset");
  c.xi_samples.clear();
  for (const auto& x : full.at("xi_samples")) {
    if (!x.is_array() || x.size() != 2) throw ArgumentError("config field 'xi_samples' must hold pairs");
    c.xi_samples.push_back(x.get<RPoint>());
  }
  c.shift_count = whole(full, "shift_count");
  if (c.shift_count < 0) throw ArgumentError("config field 'shift_count' must be non-negative");
  c.certificate_xi = field<RPoint>(full, "certificate_xi");
  if (c.certificate_xi.size() != 2) throw ArgumentError("config field 'certificate_xi' must have two entries");
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ArgumentError("override must look like key=value: " + assignment);
  std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    node = &next;
  }
  (*node)[parts.back()] = value;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError("config file " + path + " is not valid JSON: " + e.what());
  }
}

std::string config_hash(const json& doc) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(doc.dump()));
  return buf;
}

}  // namespace bllab
