#pragma once

#include <array>
#include <ostream>
#include <vector>

#include "bllab/dataset.hpp"
#include "bllab/forward.hpp"

namespace bllab {

enum class DtNProvenance { Direct, SpectralDifference };

/// Linear map from stacked Dirichlet components (f_0..f_{m-1} on the slots,
/// corner values held at zero) to stacked traces (g_m..g_{2m-1}).
struct DtNMatrix {
  double lambda = 0.0;
  CMat matrix;
  DtNProvenance provenance = DtNProvenance::Direct;
};

/// Nodal hat for column `col` of the stacked slot basis.
BoundaryData unit_boundary_data(const RectGrid& grid, int m, int col);

/// Column-by-column assembly from boundary value solves.
DtNMatrix dtn_direct(const DiscreteOperator& op, double lambda, TraceStencil stencil = TraceStencil::OneSided);

/// Traces of u_{q1,f} - u_{q2,f} from direct solves. The difference has zero
/// Dirichlet data, so the compact traces are used.
TraceSet dtn_difference_direct(const DiscreteOperator& op1, const DiscreteOperator& op2, double lambda,
                               const BoundaryData& f);
/// Matrix of the map f -> traces of u_{q1,f} - u_{q2,f}.
DtNMatrix dtn_difference_matrix(const DiscreteOperator& op1, const DiscreteOperator& op2, double lambda);

/// Bilinear boundary form (f, g) -> boundary_functional(Lambda f, g) on the slot
/// basis. Symmetric for real potentials and real lambda.
CMat induced_boundary_form(const RectGrid& grid, int m, const DtNMatrix& d);

struct SeriesResult {
  TraceSet traces;
  int terms = 0;               // requested K
  std::array<int, 2> used{};   // records summed per dataset after completing degenerate groups
  double tail = 0.0;  // boundary norm of the last 10% of terms over that of the sum
};

/// Difference of the two partial-fraction series
/// sum_k <phi_k, -B f> / (lambda_k - lambda) T(phi_k) over records M+1..M+K
/// (K < 0 takes every record). A truncation that would split a degenerate
/// group is moved to the group's end (or start, when the group runs past the data).
SeriesResult dtn_difference_from_spectra(const SpectralDataset& ds1, const SpectralDataset& ds2, double lambda,
                                         const BoundaryData& f, int K = -1);

struct DecayRow {
  double lambda = 0.0;
  double norm = 0.0;
  double slope_so_far = 0.0;  // log-log slope of norm against |lambda| up to this row
};

/// Largest singular value of the difference map per lambda (h-weighted boundary
/// norms on both sides, which cancel).
std::vector<DecayRow> decay_study(const DiscreteOperator& op1, const DiscreteOperator& op2,
                                  const std::vector<double>& schedule);
void write_decay_csv(std::ostream& out, const std::vector<DecayRow>& rows);

}  // namespace bllab
