#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>

#include "bllab/grid.hpp"

namespace bllab {

using SpMat = Eigen::SparseMatrix<double>;

/// Discretization of (-Laplace)^m + q on interior unknowns. m=1 uses the
/// 5-point stencil with Dirichlet elimination; m=2 the 13-point square of it
/// with ghost nodes u_ghost = u_inner + 2h f_1 (clamped when f_1 = 0).
struct DiscreteOperator {
  int m = 1;
  RectGrid grid{3, 3};
  RVec q;                // interior potential
  SpMat matrix;          // symmetric, includes q
  SpMat coupling;        // interior rows x stacked boundary data (see BoundaryData::stacked)
  double certified_lambda0 = 0.0;  // strictly below the discrete spectrum
  bool lambda0_from_spectrum = false;
};

struct StencilTap {
  int di, dj;
  double w;  // multiplies h^{-2m}
};
/// Interior stencil of (-Laplace_h)^m.
const std::vector<StencilTap>& interior_stencil(int m);

DiscreteOperator assemble(int m, const RVec& q_interior, const RectGrid& grid);

/// Potential sampled at interior nodes.
RVec sample_interior(const RectGrid& grid, const std::function<double(double, double)>& fn);

struct EigenPair {
  int k = 0;
  double lambda = 0.0;
  RVec phi;  // interior values, h^2 * sum phi^2 = 1
};

struct EigenOptions {
  int dense_limit = 1600;   // unknown count above which block Lanczos is used
  int block = 8;
  double tol = 1e-11;
  unsigned seed = 20240611u;
};

/// First K eigenpairs in ascending order. Sign convention: the largest-magnitude
/// component of each eigenvector is positive. Updates op.certified_lambda0.
std::vector<EigenPair> eigen_decompose(DiscreteOperator& op, int K, const EigenOptions& opt = {});

/// Factorization of (A - lambda) reused across right-hand sides.
class ResolventSolver {
 public:
  ResolventSolver(const DiscreteOperator& op, double lambda);
  ~ResolventSolver();
  ResolventSolver(ResolventSolver&&) noexcept;

  GridField solve(const BoundaryData& f) const;
  /// Interior solve of (A - lambda) x = rhs.
  CVec solve_interior(const CVec& rhs) const;
  double lambda() const { return lambda_; }
  const DiscreteOperator& op() const { return *op_; }

 private:
  struct Impl;
  const DiscreteOperator* op_;
  double lambda_;
  std::unique_ptr<Impl> impl_;
};

GridField solve_bvp(const DiscreteOperator& op, double lambda, const BoundaryData& f);

/// (P_h + q) u at interior nodes using all node and ghost values of u.
CVec apply_operator(const DiscreteOperator& op, const GridField& u);
/// Stencil residual relative to the size of u, measured on interior nodes at
/// least `collar` cells from the boundary.
double interior_residual(const DiscreteOperator& op, const GridField& u, double lambda, int collar = 0);

/// Full-grid field from interior values with zero Dirichlet data.
GridField embed_interior(const RectGrid& grid, int m, const CVec& interior);
GridField embed_interior(const RectGrid& grid, int m, const RVec& interior);

/// Samples a function at nodes and ghost positions.
GridField sample_field(const RectGrid& grid, const std::function<cplx(double, double)>& fn);

/// Discrete Dirichlet data of a function: node values on the boundary
/// (corners included) and, for m=2, f_1 = (value at ghost - value at first
/// interior node) / 2h, which makes the sampled function an exact discrete
/// solution whenever it solves the interior stencil.
BoundaryData dirichlet_data(const RectGrid& grid, int m, const std::function<cplx(double, double)>& fn);
BoundaryData dirichlet_data(const RectGrid& grid, int m, const GridField& field);

enum class TraceStencil {
  OneSided,  // second-order one-sided differences along the inward normal
  Compact,   // operator-consistent traces, valid for vanishing Dirichlet data
};

/// Normal derivatives of order m..2m-1 on each boundary slot.
TraceSet neumann_traces(const RectGrid& grid, int m, const GridField& u,
                        TraceStencil stencil = TraceStencil::OneSided);
TraceSet compact_traces(const RectGrid& grid, int m, const CVec& interior);
TraceSet compact_traces(const RectGrid& grid, int m, const RVec& interior);

/// Boundary functional sum_i int N_{2m-1-i}(psi) f_i with psi given by its
/// compact traces (psi vanishing Dirichlet data). For m=2 the corner values of
/// f_0 contribute through the adjacent slot. Equals <psi, -B f>_h exactly.
cplx boundary_functional(const RectGrid& grid, int m, const TraceSet& psi, const BoundaryData& f);

/// The part of boundary_functional that pairs with f_i alone (i = 0..m-1).
cplx boundary_functional_part(const RectGrid& grid, int m, const TraceSet& psi, const BoundaryData& f, int i);

enum class GreenQuadrature {
  Corrected,  // trapezoid on slots with a half-cell collar correction
  Discrete,   // the exact summation-by-parts form of the stencil
};

/// Boundary form of Green's identity, (P u, v) - (u, P v) up to O(h^2).
cplx green_pairing(int m, const RectGrid& grid, const GridField& u, const GridField& v,
                   GreenQuadrature quad = GreenQuadrature::Corrected);

/// h^2 sum over interior nodes of u conj(v).
cplx volume_product(const RectGrid& grid, const GridField& u, const GridField& v);

/// Least-squares slope of log(lambda_k) against log(k) for k in [k_lo, k_hi] (1-based).
double weyl_fit(const std::vector<double>& eigenvalues, int k_lo, int k_hi);

/// Finite-difference weights for the d-th derivative at x0 from nodes x (Fornberg).
std::vector<double> fd_weights(const std::vector<double>& x, double x0, int d);

}  // namespace bllab
