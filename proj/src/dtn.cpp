#include "bllab/dtn.hpp"

#include <cmath>
#include <iomanip>

#include <Eigen/SVD>

namespace bllab {

namespace {

CVec interior_of(const RectGrid& g, const GridField& u) {
  CVec x(g.interior_count());
  for (int k = 0; k < x.size(); ++k) {
    auto [i, j] = g.interior_node(k);
    x(k) = u.values(g.node(i, j));
  }
  return x;
}

void require_same(const DiscreteOperator& a, const DiscreteOperator& b) {
  if (a.m != b.m || !a.grid.same_as(b.grid)) throw ArgumentError("operators must share m and grid");
}

double slope(const std::vector<DecayRow>& rows) {
  int n = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    if (!(r.norm > 0)) continue;
    double x = std::log(std::abs(r.lambda)), y = std::log(r.norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  double d = n * sxx - sx * sx;
  return d == 0 ? 0.0 : (n * sxy - sx * sy) / d;
}

}  // namespace

BoundaryData unit_boundary_data(const RectGrid& g, int m, int col) {
  BoundaryData f = BoundaryData::zeros(m, g);
  const int b = g.boundary_count();
  if (col < 0 || col >= m * b) throw ArgumentError("boundary basis index out of range");
  f.comp[col / b](col % b) = 1.0;
  return f;
}

DtNMatrix dtn_direct(const DiscreteOperator& op, double lambda, TraceStencil stencil) {
  ResolventSolver solver(op, lambda);
  const RectGrid& g = op.grid;
  const int n = op.m * g.boundary_count();
  DtNMatrix d;
  d.lambda = lambda;
  d.matrix.resize(n, n);
  for (int c = 0; c < n; ++c) {
    GridField u = solver.solve(unit_boundary_data(g, op.m, c));
    d.matrix.col(c) = neumann_traces(g, op.m, u, stencil).stacked();
  }
  return d;
}

TraceSet dtn_difference_direct(const DiscreteOperator& op1, const DiscreteOperator& op2, double lambda,
                               const BoundaryData& f) {
  require_same(op1, op2);
  const RectGrid& g = op1.grid;
  GridField u1 = ResolventSolver(op1, lambda).solve(f);
  GridField u2 = ResolventSolver(op2, lambda).solve(f);
  return compact_traces(g, op1.m, CVec(interior_of(g, u1) - interior_of(g, u2)));
}

DtNMatrix dtn_difference_matrix(const DiscreteOperator& op1, const DiscreteOperator& op2, double lambda) {
  require_same(op1, op2);
  const RectGrid& g = op1.grid;
  ResolventSolver s1(op1, lambda), s2(op2, lambda);
  const int n = op1.m * g.boundary_count();
  DtNMatrix d;
  d.lambda = lambda;
  d.matrix.resize(n, n);
  for (int c = 0; c < n; ++c) {
    BoundaryData f = unit_boundary_data(g, op1.m, c);
    CVec diff = interior_of(g, s1.solve(f)) - interior_of(g, s2.solve(f));
    d.matrix.col(c) = compact_traces(g, op1.m, diff).stacked();
  }
  return d;
}

CMat induced_boundary_form(const RectGrid& g, int m, const DtNMatrix& d) {
  const int n = static_cast<int>(d.matrix.cols());
  const int b = g.boundary_count();
  if (n != m * b) throw ArgumentError("matrix size does not match the grid");
  CMat form(n, n);
  for (int i = 0; i < n; ++i) {
    TraceSet t = TraceSet::zeros(m, g);
    for (int c = 0; c < m; ++c) t.comp[c] = d.matrix.col(i).segment(c * b, b);
    for (int j = 0; j < n; ++j) form(i, j) = boundary_functional(g, m, t, unit_boundary_data(g, m, j));
  }
  return form;
}

namespace {

// A partial sum over part of a degenerate eigenspace depends on the arbitrary
// basis chosen inside it. Extends the first K records to the end of the group
// holding record K, or drops that group when the dataset stops inside it.
int complete_clusters(const SpectralDataset& ds, int K) {
  if (K <= 0 || K > static_cast<int>(ds.records.size())) return K;
  const int last = ds.records[K - 1].k;
  for (const auto& grp : ds.header.degenerate) {
    if (grp.front() > last || grp.back() <= last) continue;
    int end = K;
    while (end < static_cast<int>(ds.records.size()) && ds.records[end].k <= grp.back()) ++end;
    if (end < static_cast<int>(ds.records.size()) || ds.records.back().k == grp.back()) return end;
    int start = K;
    while (start > 0 && ds.records[start - 1].k >= grp.front()) --start;
    return start;
  }
  return K;
}

}  // namespace

SeriesResult dtn_difference_from_spectra(const SpectralDataset& ds1, const SpectralDataset& ds2, double lambda,
                                         const BoundaryData& f, int K) {
  const auto& h1 = ds1.header;
  const auto& h2 = ds2.header;
  if (h1.M != h2.M) throw ArgumentError("datasets must share the mask M");
  if (h1.m != h2.m || h1.nx != h2.nx || h1.ny != h2.ny || h1.lx != h2.lx || h1.ly != h2.ly)
    throw ArgumentError("datasets must share m and grid");
  const RectGrid g = ds1.grid();
  f.check(g);
  int avail = static_cast<int>(std::min(ds1.records.size(), ds2.records.size()));
  if (K < 0) K = avail;
  if (K > avail) throw ArgumentError("requested more terms than both datasets hold");
  double lowest = std::numeric_limits<double>::infinity();
  if (!ds1.records.empty()) lowest = std::min(lowest, ds1.records.front().lambda);
  if (!ds2.records.empty()) lowest = std::min(lowest, ds2.records.front().lambda);
  if (!(lambda <= lowest - 1.0))
    throw ResolventError("lambda must lie at least 1 below the lowest recorded eigenvalue");

  SeriesResult res;
  res.traces = TraceSet::zeros(h1.m, g);
  TraceSet tail = TraceSet::zeros(h1.m, g);
  res.used = {complete_clusters(ds1, K), complete_clusters(ds2, K)};
  // interleaved so that identical datasets cancel term by term
  for (int k = 0; k < std::max(res.used[0], res.used[1]); ++k) {
    for (int side = 0; side < 2; ++side) {
      if (k >= res.used[side]) continue;
      const SpectralRecord& r = side == 0 ? ds1.records[k] : ds2.records[k];
      cplx a = boundary_functional(g, h1.m, r.traces, f) / (r.lambda - lambda);
      if (side == 1) a = -a;
      const bool in_tail = k >= res.used[side] - std::max(1, res.used[side] / 10);
      for (int c = 0; c < h1.m; ++c) {
        res.traces.comp[c] += a * r.traces.comp[c];
        if (in_tail) tail.comp[c] += a * r.traces.comp[c];
      }
    }
  }
  res.terms = K;
  double total = boundary_norm(g, res.traces.stacked());
  res.tail = total > 0 ? boundary_norm(g, tail.stacked()) / total : 0.0;
  return res;
}

std::vector<DecayRow> decay_study(const DiscreteOperator& op1, const DiscreteOperator& op2,
                                  const std::vector<double>& schedule) {
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] < schedule[k - 1])) throw ArgumentError("lambda schedule must be strictly decreasing");
  std::vector<DecayRow> rows;
  for (double lambda : schedule) {
    DtNMatrix d = dtn_difference_matrix(op1, op2, lambda);
    DecayRow r;
    r.lambda = lambda;
    if (d.matrix.size() > 0 && d.matrix.cwiseAbs().maxCoeff() > 0) {
      Eigen::BDCSVD<CMat> svd(d.matrix);
      r.norm = svd.singularValues()(0);
    }
    rows.push_back(r);
    rows.back().slope_so_far = slope(rows);
  }
  return rows;
}

void write_decay_csv(std::ostream& out, const std::vector<DecayRow>& rows) {
  out << "lambda,norm,slope_so_far\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.lambda << ',' << r.norm << ',' << r.slope_so_far << '\n';
}

}  // namespace bllab
