#include "bllab/forward.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SparseCholesky>

namespace bllab {

namespace {

using Tap = StencilTap;

}  // namespace

const std::vector<StencilTap>& interior_stencil(int m) {
  static const std::vector<Tap> lap = {{0, 0, 4}, {1, 0, -1}, {-1, 0, -1}, {0, 1, -1}, {0, -1, -1}};
  static const std::vector<Tap> bilap = {
      {0, 0, 20}, {1, 0, -8}, {-1, 0, -8}, {0, 1, -8}, {0, -1, -8}, {1, 1, 2}, {1, -1, 2},
      {-1, 1, 2}, {-1, -1, 2}, {2, 0, 1},  {-2, 0, 1}, {0, 2, 1},   {0, -2, 1}};
  if (m == 1) return lap;
  if (m == 2) return bilap;
  throw ArgumentError("only m = 1 and m = 2 are discretized");
}

namespace {

const std::vector<Tap>& stencil(int m) { return interior_stencil(m); }

// Ghost position (i,j) just outside the grid -> slot index and mirrored inner node.
struct GhostRef {
  int slot;
  int mi, mj;
};

GhostRef ghost_ref(const RectGrid& g, int i, int j) {
  if (i == -1) return {g.slot_index(0, j), 1, j};
  if (i == g.nx()) return {g.slot_index(g.nx() - 1, j), g.nx() - 2, j};
  if (j == -1) return {g.slot_index(i, 0), i, 1};
  if (j == g.ny()) return {g.slot_index(i, g.ny() - 1), i, g.ny() - 2};
  throw NumericalError("stencil reaches beyond the ghost layer");
}

bool inside(const RectGrid& g, int i, int j) {
  return i >= 0 && j >= 0 && i < g.nx() && j < g.ny();
}

cplx value_at(const RectGrid& g, const GridField& u, int i, int j) {
  if (inside(g, i, j)) return u.values(g.node(i, j));
  GhostRef r = ghost_ref(g, i, j);
  if (r.slot < 0 || u.ghost.size() != g.boundary_count())
    throw ArgumentError("field has no ghost value at the requested position");
  return u.ghost(r.slot);
}

double free_lower_bound(const RectGrid& g, int m) {
  const double h = g.h();
  double sx = std::sin(std::numbers::pi * h / (2 * g.lx()));
  double sy = std::sin(std::numbers::pi * h / (2 * g.ly()));
  double l1 = 4.0 / (h * h) * (sx * sx + sy * sy);
  return std::pow(l1, m);
}

// 5-point -Laplacian of a field at node (i,j), ghosts allowed.
cplx lap_at(const RectGrid& g, const GridField& u, int i, int j) {
  const double h2 = g.h() * g.h();
  return (4.0 * value_at(g, u, i, j) - value_at(g, u, i + 1, j) - value_at(g, u, i - 1, j) -
          value_at(g, u, i, j + 1) - value_at(g, u, i, j - 1)) /
         h2;
}

// -Laplacian on all non-corner nodes (ghost needed on slots).
GridField lap_field(const RectGrid& g, const GridField& u) {
  GridField w;
  w.values = CVec::Zero(g.node_count());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (!g.is_corner(i, j)) w.values(g.node(i, j)) = lap_at(g, u, i, j);
  return w;
}

const std::vector<double>& one_sided(int order, int npts) {
  static std::vector<std::vector<double>> cache(8 * 8);
  auto& w = cache[order * 8 + npts];
  if (w.empty()) {
    std::vector<double> x(npts);
    for (int k = 0; k < npts; ++k) x[k] = k;
    w = fd_weights(x, 0.0, order);
  }
  return w;
}

// r-th outward normal derivative at slot s, second order, from depths 0..r+1.
cplx normal_derivative(const RectGrid& g, const GridField& u, const RectGrid::Slot& s, int r) {
  const auto& w = one_sided(r, r + 2);
  cplx acc = 0.0;
  for (int k = 0; k < r + 2; ++k) acc += w[k] * u.values(g.node(s.i + k * s.di, s.j + k * s.dj));
  double sign = (r % 2) ? -1.0 : 1.0;
  return sign * acc / std::pow(g.h(), r);
}

// Discrete first-order flux pairing, the exact summation-by-parts boundary term.
cplx flux_form_discrete(const RectGrid& g, const GridField& u, const GridField& v) {
  const double h = g.h();
  cplx acc = 0.0;
  for (const auto& s : g.slots()) {
    cplx u0 = u.values(g.node(s.i, s.j)), u1 = u.values(g.node(s.i + s.di, s.j + s.dj));
    cplx v0 = v.values(g.node(s.i, s.j)), v1 = v.values(g.node(s.i + s.di, s.j + s.dj));
    cplx du = (u0 - u1) / h, dv = (v0 - v1) / h;
    acc += h * (u0 * std::conj(dv) - du * std::conj(v0));
  }
  return acc;
}

// Continuum flux pairing int (u dv/dn - du/dn v) with the half-cell collar term.
cplx flux_form_corrected(const RectGrid& g, const GridField& u, const GridField& v) {
  const double h = g.h();
  cplx acc = 0.0;
  for (const auto& s : g.slots()) {
    cplx u0 = u.values(g.node(s.i, s.j)), v0 = v.values(g.node(s.i, s.j));
    cplx du = normal_derivative(g, u, s, 1) - 0.5 * h * normal_derivative(g, u, s, 2);
    cplx dv = normal_derivative(g, v, s, 1) - 0.5 * h * normal_derivative(g, v, s, 2);
    acc += h * (u0 * std::conj(dv) - du * std::conj(v0));
  }
  return acc;
}

}  // namespace

std::vector<double> fd_weights(const std::vector<double>& x, double x0, int d) {
  const int n = static_cast<int>(x.size());
  if (n <= d) throw ArgumentError("too few nodes for the derivative order");
  std::vector<std::vector<double>> c(n, std::vector<double>(d + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, d);
    double c2 = 1.0, c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][d];
  return w;
}

DiscreteOperator assemble(int m, const RVec& q, const RectGrid& grid) {
  if (m != 1 && m != 2) throw ArgumentError("assemble supports m = 1 and m = 2");
  if (grid.nx() < 2 * m + 3 || grid.ny() < 2 * m + 3)
    throw ArgumentError("grid too coarse: need at least 2m+3 nodes per side");
  if (q.size() != grid.interior_count())
    throw ArgumentError("potential must be given on interior nodes");

  const int n = grid.interior_count();
  const int b = grid.boundary_count();
  const double scale = 1.0 / std::pow(grid.h(), 2 * m);
  std::vector<Eigen::Triplet<double>> a, c;
  for (int p = 0; p < n; ++p) {
    auto [i, j] = grid.interior_node(p);
    a.emplace_back(p, p, q(p));
    for (const Tap& t : stencil(m)) {
      int ti = i + t.di, tj = j + t.dj;
      double w = t.w * scale;
      if (grid.is_interior(ti, tj)) {
        a.emplace_back(p, grid.interior_index(ti, tj), w);
      } else if (inside(grid, ti, tj)) {
        int s = grid.slot_index(ti, tj);
        if (s >= 0) {
          c.emplace_back(p, s, w);
        } else {
          auto cs = grid.corners();
          for (int k = 0; k < 4; ++k)
            if (cs[k].first == ti && cs[k].second == tj) c.emplace_back(p, b + k, w);
        }
      } else {
        GhostRef r = ghost_ref(grid, ti, tj);
        a.emplace_back(p, grid.interior_index(r.mi, r.mj), w);
        c.emplace_back(p, b + 4 + r.slot, 2.0 * grid.h() * w);
      }
    }
  }
  DiscreteOperator op;
  op.m = m;
  op.grid = grid;
  op.q = q;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(a.begin(), a.end());
  op.matrix.makeCompressed();
  op.coupling.resize(n, b * m + 4);
  op.coupling.setFromTriplets(c.begin(), c.end());
  op.coupling.makeCompressed();
  op.certified_lambda0 = free_lower_bound(grid, m) + std::min(0.0, q.size() ? q.minCoeff() : 0.0) - 1.0;
  return op;
}

RVec sample_interior(const RectGrid& g, const std::function<double(double, double)>& fn) {
  RVec q(g.interior_count());
  for (int k = 0; k < q.size(); ++k) {
    auto [i, j] = g.interior_node(k);
    q(k) = fn(g.x(i), g.y(j));
  }
  return q;
}

struct ResolventSolver::Impl {
  Eigen::SimplicialLDLT<SpMat> ldlt;
};

ResolventSolver::ResolventSolver(const DiscreteOperator& op, double lambda)
    : op_(&op), lambda_(lambda), impl_(std::make_unique<Impl>()) {
  if (!(lambda <= op.certified_lambda0))
    throw ResolventError("lambda = " + std::to_string(lambda) +
                         " is not below the certified spectral bound " +
                         std::to_string(op.certified_lambda0));
  SpMat shifted = op.matrix;
  for (int k = 0; k < shifted.rows(); ++k) shifted.coeffRef(k, k) -= lambda;
  impl_->ldlt.compute(shifted);
  if (impl_->ldlt.info() != Eigen::Success)
    throw ResolventError("factorization of the shifted operator failed");
}

ResolventSolver::~ResolventSolver() = default;
ResolventSolver::ResolventSolver(ResolventSolver&&) noexcept = default;

CVec ResolventSolver::solve_interior(const CVec& rhs) const {
  RVec re = impl_->ldlt.solve(rhs.real().eval());
  RVec im = impl_->ldlt.solve(rhs.imag().eval());
  CVec x(rhs.size());
  x.real() = re;
  x.imag() = im;
  return x;
}

GridField ResolventSolver::solve(const BoundaryData& f) const {
  const RectGrid& g = op_->grid;
  f.check(g);
  if (f.m != op_->m) throw ArgumentError("boundary data order does not match the operator");
  CVec rhs = -(op_->coupling.cast<cplx>() * f.stacked());
  CVec x = solve_interior(rhs);
  GridField u;
  u.values = CVec::Zero(g.node_count());
  for (int k = 0; k < x.size(); ++k) {
    auto [i, j] = g.interior_node(k);
    u.values(g.node(i, j)) = x(k);
  }
  for (int s = 0; s < g.boundary_count(); ++s) u.values(g.node(g.slot(s).i, g.slot(s).j)) = f.comp[0](s);
  auto cs = g.corners();
  for (int c = 0; c < 4; ++c) u.values(g.node(cs[c].first, cs[c].second)) = f.corner[c];
  if (op_->m == 2) {
    u.ghost.resize(g.boundary_count());
    for (int s = 0; s < g.boundary_count(); ++s) {
      const auto& sl = g.slot(s);
      u.ghost(s) = u.values(g.node(sl.i + sl.di, sl.j + sl.dj)) + 2.0 * g.h() * f.comp[1](s);
    }
  }
  return u;
}

GridField solve_bvp(const DiscreteOperator& op, double lambda, const BoundaryData& f) {
  ResolventSolver rs(op, lambda);
  GridField u = rs.solve(f);
  double res = interior_residual(op, u, lambda);
  if (!(res <= 1e-9))
    throw NumericalError("boundary value solve residual " + std::to_string(res) + " exceeds 1e-9");
  return u;
}

CVec apply_operator(const DiscreteOperator& op, const GridField& u) {
  const RectGrid& g = op.grid;
  const double scale = 1.0 / std::pow(g.h(), 2 * op.m);
  CVec out(g.interior_count());
  for (int p = 0; p < out.size(); ++p) {
    auto [i, j] = g.interior_node(p);
    cplx acc = op.q(p) * u.values(g.node(i, j));
    for (const Tap& t : stencil(op.m)) acc += t.w * scale * value_at(g, u, i + t.di, j + t.dj);
    out(p) = acc;
  }
  return out;
}

double interior_residual(const DiscreteOperator& op, const GridField& u, double lambda, int collar) {
  const RectGrid& g = op.grid;
  CVec au = apply_operator(op, u);
  double num = 0.0, den = 0.0;
  for (int p = 0; p < au.size(); ++p) {
    auto [i, j] = g.interior_node(p);
    if (i < collar || j < collar || i > g.nx() - 1 - collar || j > g.ny() - 1 - collar) continue;
    cplx up = u.values(g.node(i, j));
    cplx r = au(p) - lambda * up;
    double sz = std::abs(op.q(p) * up) + std::abs(lambda * up);
    const double scale = 1.0 / std::pow(g.h(), 2 * op.m);
    for (const Tap& t : stencil(op.m)) sz += std::abs(t.w * scale * value_at(g, u, i + t.di, j + t.dj));
    num = std::max(num, std::abs(r));
    den = std::max(den, sz);
  }
  return den > 0 ? num / den : 0.0;
}

GridField embed_interior(const RectGrid& g, int m, const CVec& x) {
  GridField u;
  u.values = CVec::Zero(g.node_count());
  for (int k = 0; k < x.size(); ++k) {
    auto [i, j] = g.interior_node(k);
    u.values(g.node(i, j)) = x(k);
  }
  if (m >= 2) {
    u.ghost.resize(g.boundary_count());
    for (int s = 0; s < g.boundary_count(); ++s) {
      const auto& sl = g.slot(s);
      u.ghost(s) = u.values(g.node(sl.i + sl.di, sl.j + sl.dj));
    }
  }
  return u;
}

GridField embed_interior(const RectGrid& g, int m, const RVec& x) {
  return embed_interior(g, m, CVec(x.cast<cplx>()));
}

GridField sample_field(const RectGrid& g, const std::function<cplx(double, double)>& fn) {
  GridField u;
  u.values.resize(g.node_count());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) u.values(g.node(i, j)) = fn(g.x(i), g.y(j));
  u.ghost.resize(g.boundary_count());
  for (int s = 0; s < g.boundary_count(); ++s) {
    const auto& sl = g.slot(s);
    u.ghost(s) = fn(g.x(sl.i) - sl.di * g.h(), g.y(sl.j) - sl.dj * g.h());
  }
  return u;
}

BoundaryData dirichlet_data(const RectGrid& g, int m, const GridField& u) {
  if (m > 2) throw ArgumentError("dirichlet_data supports m <= 2");
  BoundaryData f = BoundaryData::zeros(m, g);
  for (int s = 0; s < g.boundary_count(); ++s) f.comp[0](s) = u.values(g.node(g.slot(s).i, g.slot(s).j));
  auto cs = g.corners();
  for (int c = 0; c < 4; ++c) f.corner[c] = u.values(g.node(cs[c].first, cs[c].second));
  if (m == 2) {
    if (u.ghost.size() != g.boundary_count()) throw ArgumentError("m=2 data needs ghost values");
    for (int s = 0; s < g.boundary_count(); ++s) {
      const auto& sl = g.slot(s);
      f.comp[1](s) = (u.ghost(s) - u.values(g.node(sl.i + sl.di, sl.j + sl.dj))) / (2.0 * g.h());
    }
  }
  return f;
}

BoundaryData dirichlet_data(const RectGrid& g, int m, const std::function<cplx(double, double)>& fn) {
  return dirichlet_data(g, m, sample_field(g, fn));
}

TraceSet neumann_traces(const RectGrid& g, int m, const GridField& u, TraceStencil stencil_kind) {
  if (stencil_kind == TraceStencil::Compact) {
    CVec x(g.interior_count());
    for (int k = 0; k < x.size(); ++k) {
      auto [i, j] = g.interior_node(k);
      x(k) = u.values(g.node(i, j));
    }
    return compact_traces(g, m, x);
  }
  TraceSet t = TraceSet::zeros(m, g);
  for (int s = 0; s < g.boundary_count(); ++s)
    for (int r = m; r < 2 * m; ++r) t.comp[r - m](s) = normal_derivative(g, u, g.slot(s), r);
  return t;
}

TraceSet compact_traces(const RectGrid& g, int m, const CVec& x) {
  if (m != 1 && m != 2) throw ArgumentError("compact traces support m = 1 and m = 2");
  auto val = [&](int i, int j) -> cplx {
    return g.is_interior(i, j) ? x(g.interior_index(i, j)) : cplx(0.0);
  };
  const double h = g.h();
  TraceSet t = TraceSet::zeros(m, g);
  for (int s = 0; s < g.boundary_count(); ++s) {
    const auto& sl = g.slot(s);
    // tangential step
    int ti = sl.dj != 0 ? 1 : 0, tj = sl.di != 0 ? 1 : 0;
    cplx u1 = val(sl.i + sl.di, sl.j + sl.dj);
    if (m == 1) {
      t.comp[0](s) = -u1 / h;
    } else {
      cplx u2 = val(sl.i + 2 * sl.di, sl.j + 2 * sl.dj);
      cplx side = val(sl.i + sl.di + ti, sl.j + sl.dj + tj) + val(sl.i + sl.di - ti, sl.j + sl.dj - tj);
      t.comp[0](s) = 2.0 * u1 / (h * h);
      t.comp[1](s) = (8.0 * u1 - 2.0 * side - u2) / (h * h * h);
    }
  }
  return t;
}

TraceSet compact_traces(const RectGrid& g, int m, const RVec& x) {
  return compact_traces(g, m, CVec(x.cast<cplx>()));
}

cplx boundary_functional(const RectGrid& g, int m, const TraceSet& psi, const BoundaryData& f) {
  const double h = g.h();
  if (m == 1) return -h * psi.comp[0].cwiseProduct(f.comp[0]).sum();
  if (m != 2) throw ArgumentError("boundary functional supports m = 1 and m = 2");
  cplx acc = h * (psi.comp[1].cwiseProduct(f.comp[0]).sum() - psi.comp[0].cwiseProduct(f.comp[1]).sum());
  const int adj[4] = {g.slot_index(0, 1), g.slot_index(g.nx() - 1, 1), g.slot_index(0, g.ny() - 2),
                      g.slot_index(g.nx() - 1, g.ny() - 2)};
  for (int c = 0; c < 4; ++c) acc -= f.corner[c] * psi.comp[0](adj[c]);
  return acc;
}

cplx boundary_functional_part(const RectGrid& g, int m, const TraceSet& psi, const BoundaryData& f, int i) {
  if (i < 0 || i >= m) throw ArgumentError("component index out of range");
  const double h = g.h();
  if (m == 1) return -h * psi.comp[0].cwiseProduct(f.comp[0]).sum();
  if (m != 2) throw ArgumentError("boundary functional supports m = 1 and m = 2");
  if (i == 1) return -h * psi.comp[0].cwiseProduct(f.comp[1]).sum();
  cplx acc = h * psi.comp[1].cwiseProduct(f.comp[0]).sum();
  const int adj[4] = {g.slot_index(0, 1), g.slot_index(g.nx() - 1, 1), g.slot_index(0, g.ny() - 2),
                      g.slot_index(g.nx() - 1, g.ny() - 2)};
  for (int c = 0; c < 4; ++c) acc -= f.corner[c] * psi.comp[0](adj[c]);
  return acc;
}

cplx green_pairing(int m, const RectGrid& g, const GridField& u, const GridField& v, GreenQuadrature quad) {
  auto form = [&](const GridField& a, const GridField& b) {
    return quad == GreenQuadrature::Discrete ? flux_form_discrete(g, a, b) : flux_form_corrected(g, a, b);
  };
  if (m == 1) return form(u, v);
  if (m != 2) throw ArgumentError("green_pairing supports m = 1 and m = 2");
  GridField lu = lap_field(g, u), lv = lap_field(g, v);
  return form(lu, v) + form(u, lv);
}

cplx volume_product(const RectGrid& g, const GridField& u, const GridField& v) {
  cplx acc = 0.0;
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) acc += u.values(g.node(i, j)) * std::conj(v.values(g.node(i, j)));
  return acc * g.h() * g.h();
}

double weyl_fit(const std::vector<double>& ev, int k_lo, int k_hi) {
  if (k_lo < 1 || k_hi > static_cast<int>(ev.size()) || k_hi - k_lo + 1 < 5)
    throw ArgumentError("weyl_fit needs at least 5 eigenvalues inside the computed range");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = k_lo; k <= k_hi; ++k) {
    if (!(ev[k - 1] > 0)) throw ArgumentError("weyl_fit needs positive eigenvalues");
    double x = std::log(static_cast<double>(k)), y = std::log(ev[k - 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace bllab
