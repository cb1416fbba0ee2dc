#pragma once

#include <complex>
#include <cstdint>
#include <string_view>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bllab {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

// Error kinds. The CLI maps them to exit codes.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct PreconditionError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResolventError : NumericalError {
  using NumericalError::NumericalError;
};
struct DivergenceError : NumericalError {
  using NumericalError::NumericalError;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a, used for dataset checksums and config hashes.
inline std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace bllab
