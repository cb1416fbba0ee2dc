#pragma once

#include <optional>
#include <vector>

#include "bllab/cgo.hpp"
#include "bllab/dataset.hpp"
#include "bllab/dtn.hpp"

namespace bllab {

/// Approximation of the integral of (q1 - q2) e^{i xi.x} over the domain.
struct FourierSample {
  RPoint xi;
  double lambda = 0.0;
  cplx value = 0.0;
  double exponent_range = 0.0;  // conditioning indicator of the exponentials used
  double noise = 0.0;           // rounding bound: eps times the series of absolute terms
};

/// Dirichlet data of e^{i zeta.x} (for m = 2 with the ghost-consistent f_1).
BoundaryData exponential_data(const RectGrid& grid, int m, const CPoint& zeta);
BoundaryData conjugate(const BoundaryData& f);

/// Green pairing of the series for u_{q1,f} - u_{q2,f}, f = data of e^{i zeta1.x},
/// against the data of e^{i zeta2.x}. Equals
/// h^2 sum (q1 - q2) u_{q1,f} conj(v), v the q2-solution with data e^{i zeta2.x}.
/// The pair is used as given; pass it through refine_to_grid first.
FourierSample fourier_sample(const SpectralDataset& ds_unknown, const SpectralDataset& ds_ref,
                             const CharacteristicPair& pair);
/// Builds and grid-refines the pair for (xi, lambda), then samples.
FourierSample fourier_sample(const SpectralDataset& ds_unknown, const SpectralDataset& ds_ref, const RPoint& xi,
                             double lambda);

struct Extrapolation {
  cplx endpoint = 0.0;     // value at the most negative lambda (normative)
  cplx extrapolant = 0.0;  // a in the fit a + b |lambda|^{-1/(2m)}
  double spread = 0.0;     // |endpoint - extrapolant|
};
Extrapolation lambda_extrapolate(const std::vector<FourierSample>& sweep, int m);

/// Fourier synthesis on the periodic box of side `period` (lattice spacing
/// 2 pi / period). Every sample needs its mirror -xi; the mirror value is
/// replaced by the conjugate. Returns nodal values on the grid.
RVec invert_fourier(const std::vector<FourierSample>& samples, const RectGrid& grid, double period);

struct SweepDiagnostics {
  RPoint xi;
  std::vector<FourierSample> sweep;
  Extrapolation result;
  int skipped = 0;  // schedule points rejected by the margin or the conditioning cap
};

struct ReconstructionConfig {
  double xi_max = 6.0 * 3.141592653589793;
  std::vector<double> schedule;  // empty: derived from xi_max and m
  double range_cap = 25.0;       // largest exponent range accepted per sample
  double noise_cap = 0.05;       // largest rounding bound accepted, relative to the data scale;
                                 // the bound is worst case, observed errors run 10-40x lower
  int jobs = 1;
};

struct ReconstructionResult {
  RVec q_estimate;  // nodal values
  std::vector<FourierSample> samples;  // endpoint values over the full lattice
  std::vector<SweepDiagnostics> sweeps;
  double imaginary_residue = 0.0;
  std::optional<double> relative_error;  // against a known contrast, when supplied
};

/// Scale of the contrast seen by the data: area times the mean eigenvalue shift.
double data_scale(const SpectralDataset& ds_unknown, const SpectralDataset& ds_ref);

/// Default schedule: m = 1 uses -25 * 2^j (j = 0..5); m >= 2 starts at the
/// margin bound -(xi_max^2 / (1 + cos(pi/m)))^m and doubles five times.
std::vector<double> default_schedule(int m, double xi_max);

ReconstructionResult reconstruct_full(const SpectralDataset& ds_unknown, const SpectralDataset& ds_ref,
                                      const ReconstructionConfig& cfg, const RVec* truth_nodal = nullptr);

/// Relative discrete L2 error over the grid nodes.
double relative_l2(const RVec& estimate, const RVec& truth);

/// Unit vector spanning the (numerical) null space of H, L = rows + 1 columns.
/// Ties are broken by projecting e_1, e_2, ... and keeping the first nonzero
/// projection; the first nonzero entry is made real-positive.
CVec constrained_coefficients(const CMat& constraints);

struct CertificateConfig {
  int M = 3;
  RPoint xi{3.141592653589793, 0.0};
  std::vector<double> schedule{-1e4, -2e4, -3e4};
  int K = -1;  // modes simulated; all interior unknowns when negative
  EigenOptions eig;
};

struct CertificateRow {
  double lambda = 0.0;
  CVec c;
  double coefficient_norm = 0.0;   // sum |c_l|^2
  double constraint_residual = 0.0;  // max |H c| / (||H|| ||c||)
  cplx series_value = 0.0;   // boundary series over k > M only
  cplx volume_value = 0.0;   // brute-force volume pairing
  double relative_mismatch = 0.0;
  double exponent_range = 0.0;
  double step_from_previous = 0.0;  // ||c - c_prev||
};

struct CertificateReport {
  int m = 1;
  int M = 0;
  int L = 0;
  std::vector<std::vector<int>> degenerate_withheld;
  std::vector<CertificateRow> rows;
  // Limit factor sum_l c_l e^{i l x} at the last schedule point, on grid nodes.
  RVec factor_modulus;
  int factor_excluded = 0;  // nodes with |factor| < 0.05 max
};

/// Exercises the incomplete-data argument on two known potentials.
CertificateReport incomplete_certificate(DiscreteOperator& op1, DiscreteOperator& op2, const CertificateConfig& cfg);

/// h^2 sum over interior nodes of (q1 - q2) u conj(v).
cplx volume_pairing(const DiscreteOperator& op1, const DiscreteOperator& op2, const GridField& u,
                    const GridField& v);

}  // namespace bllab
