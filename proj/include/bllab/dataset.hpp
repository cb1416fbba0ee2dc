#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bllab/forward.hpp"

namespace bllab {

struct SpectralRecord {
  int k = 0;
  double lambda = 0.0;
  TraceSet traces;
};

struct DatasetHeader {
  static constexpr int kVersion = 1;
  int version = kVersion;
  int m = 1;
  int dimension = 2;
  int nx = 0, ny = 0;
  double lx = 1.0, ly = 1.0;
  int K = 0;  // modes simulated
  int M = 0;  // leading modes withheld
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  // groups of indices with numerically equal eigenvalues; a group cut by the
  // truncation ends at K + 1
  std::vector<std::vector<int>> degenerate;
};

/// Eigenvalues and boundary traces of the eigenfunctions, records k = M+1..K.
struct SpectralDataset {
  DatasetHeader header;
  std::vector<SpectralRecord> records;

  RectGrid grid() const;
  const SpectralRecord* find(int k) const;
  void check() const;
};

/// Runs the eigensolver and stores the operator-consistent traces of each
/// eigenfunction. Noise is relative Gaussian on traces, scaled per record by
/// the root-mean-square trace value.
SpectralDataset simulate_measurement(DiscreteOperator& op, int K, double noise_sigma = 0.0,
                                     std::uint64_t seed = 1, const EigenOptions& opt = {});

/// Groups of consecutive indices whose eigenvalues agree to 1e-6 (1 + |lambda|).
std::vector<std::vector<int>> degenerate_groups(const std::vector<SpectralRecord>& records);

SpectralDataset mask_low_modes(const SpectralDataset& ds, int M);

std::uint64_t dataset_checksum(const SpectralDataset& ds);
std::string to_text(const SpectralDataset& ds);
SpectralDataset from_text(const std::string& text);
void save(const SpectralDataset& ds, const std::string& path);
SpectralDataset load(const std::string& path);

}  // namespace bllab
