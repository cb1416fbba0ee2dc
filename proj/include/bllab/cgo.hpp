#pragma once

#include <string>
#include <vector>

#include "bllab/forward.hpp"
#include "bllab/symbol.hpp"

namespace bllab {

/// (xi, lambda, zeta1, zeta2) with (zeta_j . zeta_j)^m = lambda and
/// xi = zeta1 - conj(zeta2).
struct CharacteristicPair {
  int m = 1;
  RPoint xi;
  double lambda = -1.0;
  CPoint zeta1, zeta2;
};

struct ShiftFamily {
  CharacteristicPair pair;
  std::vector<CPoint> shifts;  // eta_l, l = 1..L
};

/// Closed-form real and imaginary parts of the second canonical component.
std::pair<double, double> alpha_beta(double r, double lambda, int m);

/// Canonical construction in the frame where xi = (|xi|, 0, ...), mapped back
/// by the Householder reflection e1 -> xi/|xi|. m = 1 gives the Laplacian pair.
CharacteristicPair make_pair(int m, const RPoint& xi, double lambda);

/// zeta1 + eta_l = (l, alpha(2l), 0, ...) + i (0, beta(2l), 0, ...), kept in the
/// lab frame so that the sum does not depend on xi.
ShiftFamily make_shift_family(int m, const RPoint& xi, double lambda, int count);

/// Pair for -xi whose exponentials are the complex conjugates of those of `p`.
CharacteristicPair mirror_pair(const CharacteristicPair& p);

/// s_h(z) = (4/h^2) sum_j sin^2(z_j h / 2), the 5-point symbol.
cplx grid_symbol(const CPoint& z, double h);

/// Moves the pair onto the discrete characteristic set: s_h(zeta_j)^m = lambda
/// with xi = zeta1 - conj(zeta2) kept exact. Complex Newton from the
/// continuum vectors.
CharacteristicPair refine_to_grid(const CharacteristicPair& p, double h);
/// Same refinement for a single vector on the principal branch through `zeta`.
CPoint refine_vector_to_grid(const CPoint& zeta, int m, double lambda, double h);

double max_symbol_residual(const CharacteristicPair& p);
double grid_symbol_residual(const CharacteristicPair& p, double h);

/// Range of Im(zeta . x) over the rectangle [0,lx] x [0,ly]; the exponential
/// e^{i zeta.x} varies in modulus by exp of this amount.
double exponent_range(const CPoint& zeta, double lx, double ly);

struct AssumptionRow {
  double lambda = 0.0;
  double min_scaled_im = 0.0;     // min |Im zeta| |lambda|^{-1/2m}
  double sup_inv_tilde = 0.0;     // sup over sampled real xi of 1 / L~_zeta(xi)
  double bound = 0.0;             // 1/(2 sqrt|lambda|) for m = 1, otherwise 0
  int vectors = 0;
};

struct AssumptionReport {
  int m = 1;
  std::vector<AssumptionRow> rows;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Measures the lower bound on |Im zeta| and the decay of sup 1/L~ along a
/// strictly decreasing schedule for pairs and shift families.
AssumptionReport verify_assumptions(int m, const std::vector<RPoint>& xi_samples,
                                    const std::vector<double>& lambda_schedule, int shift_count = 2,
                                    int sample_radius_steps = 12);

struct CGOSolution {
  CPoint zeta;
  double lambda = 0.0;
  GridField values;   // u = e^{i zeta.x}(1 + w)
  GridField w;        // correction, zero on the boundary for exact exponential data
  double remainder_norm = 0.0;  // discrete L2 norm of w over interior nodes
  double residual = 0.0;        // relative stencil residual, 2-cell collar excluded
};

/// Solves (P + q - lambda) u = 0 with Dirichlet data of e^{i zeta.x}. The
/// system is written for w with the conjugated stencil, which keeps the
/// exponential dynamic range out of the linear algebra. `w_data` optionally
/// supplies nonzero boundary and ghost values of w.
CGOSolution build_cgo_bvp(const DiscreteOperator& op, double lambda, const CPoint& zeta,
                          const GridField* w_data = nullptr);

/// Discrete L2 norm over interior nodes of e^{-i zeta.x}(P + q - lambda) applied to
/// e^{i zeta.x}(1 + w), using node and ghost values of w.
double cgo_residual_norm(const DiscreteOperator& op, double lambda, const CPoint& zeta, const GridField& w);

/// Periodic box of side 2x the domain with q extended by zero; the domain sits
/// in the middle. Requires odd node counts.
struct PaddedBox {
  int n = 0;          // nodes per side (periodic)
  double h = 0.0;
  double origin = 0.0;  // coordinate of box node 0
  int offset = 0;       // box index of domain node 0
  RVec q;               // n*n, index a + n*b
};

PaddedBox make_padded_box(const RectGrid& grid, const RVec& q_interior);

struct FixedPointResult {
  CVec w;  // box values
  int iterations = 0;
  double contraction = 0.0;
  double inverse_norm = 0.0;  // max over retained modes of 1/|L(k)|
  int dropped = 0;
};

/// w <- -L^{-1}[q (1 + w)] with L(k) = s_h(k + zeta)^m - lambda on the box
/// lattice; modes with |L| < dropout or |k| > cutoff are zeroed.
FixedPointResult solve_correction_fixed_point(const PaddedBox& box, int m, double lambda, const CPoint& zeta,
                                              double cutoff = -1.0, double dropout = -1.0);

/// Restriction of a box field to the domain, with ghost values from the box.
GridField restrict_box(const PaddedBox& box, const RectGrid& grid, const CVec& w);

}  // namespace bllab
