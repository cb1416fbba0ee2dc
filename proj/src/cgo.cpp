#include "bllab/cgo.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/FFT>

namespace bllab {

namespace {

constexpr cplx I(0.0, 1.0);

double norm_of(const RPoint& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Householder reflection mapping e1 to xi/|xi| (identity for xi = 0 or xi ~ e1).
RMat frame(const RPoint& xi) {
  const int n = static_cast<int>(xi.size());
  RMat h = RMat::Identity(n, n);
  double r = norm_of(xi);
  if (r == 0.0) return h;
  RVec v(n);
  for (int i = 0; i < n; ++i) v(i) = (i == 0 ? 1.0 : 0.0) - xi[i] / r;
  double vv = v.squaredNorm();
  if (vv < 1e-30) return h;
  return h - 2.0 * v * v.transpose() / vv;
}

CPoint rotate(const RMat& h, const CPoint& z) {
  CPoint out(z.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < z.size(); ++j) out[i] += h(i, j) * z[j];
  return out;
}

cplx dot(const CPoint& a, const CPoint& b) {
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

cplx cpow_int(cplx z, int m) {
  cplx r = 1.0;
  for (int k = 0; k < m; ++k) r *= z;
  return r;
}

void check_lambda(double lambda) {
  if (!(lambda < 0.0)) throw ArgumentError("spectral parameter must be negative");
}

void check_margin(int m, double r, double lambda, const std::string& what) {
  if (m < 2) return;
  double lhs = std::pow(std::abs(lambda), 1.0 / m) * (1.0 + std::cos(std::numbers::pi / m));
  if (lhs < r * r)
    throw PreconditionError("admissibility margin fails for " + what + ": |lambda|^(1/m)(1+cos(pi/m)) = " +
                            std::to_string(lhs) + " < r^2 = " + std::to_string(r * r));
}

CPoint canonical_vector(int m, double r, double lambda, int n) {
  CPoint z(n, 0.0);
  z[0] = r / 2;
  if (m == 1) {
    z[1] = I * std::sqrt(r * r / 4 + std::abs(lambda));
  } else {
    auto [a, b] = alpha_beta(r, lambda, m);
    z[1] = cplx(a, b);
  }
  return z;
}

// Derivatives of the shifted symbol, evaluated together for L~.
struct TildeEvaluator {
  std::vector<Symbol> derivs;
  explicit TildeEvaluator(const Symbol& l) {
    for (const auto& alpha : multi_indices_up_to(l.dimension(), l.order())) {
      Symbol d = derivative(l, alpha);
      if (!d.is_zero()) derivs.push_back(std::move(d));
    }
  }
  double operator()(const RPoint& xi) const {
    double acc = 0;
    for (const auto& d : derivs) acc += std::norm(evaluate(d, xi));
    return std::sqrt(acc);
  }
};

}  // namespace

std::pair<double, double> alpha_beta(double r, double lambda, int m) {
  if (m < 2) throw ArgumentError("alpha_beta is defined for m >= 2");
  check_lambda(lambda);
  if (r < 0) throw ArgumentError("alpha_beta needs r >= 0");
  const double l = std::pow(std::abs(lambda), 1.0 / m);
  const double c = std::cos(std::numbers::pi / m);
  const double inner = l * l - 0.5 * l * r * r * c + std::pow(r, 4) / 16.0;
  if (inner < 0) throw PreconditionError("negative inner radicand " + std::to_string(inner));
  const double s = std::sqrt(inner);
  // ra * rb = l^2 sin^2(pi/m); form the larger one directly, the other by division
  const double t = l * c - r * r / 4.0;
  const double prod = std::pow(l * std::sin(std::numbers::pi / m), 2);
  double ra, rb;
  if (t >= 0) {
    ra = s + t;
    rb = ra > 0 ? prod / ra : s - t;
  } else {
    rb = s - t;
    ra = rb > 0 ? prod / rb : s + t;
  }
  const double scale = 1e-14 * (s + l + r * r);
  if (ra < -scale) throw PreconditionError("negative radicand in alpha: " + std::to_string(ra));
  if (rb < -scale) throw PreconditionError("negative radicand in beta: " + std::to_string(rb));
  return {std::sqrt(std::max(ra, 0.0) / 2.0), std::sqrt(std::max(rb, 0.0) / 2.0)};
}

namespace {

CharacteristicPair build_pair(int m, const RPoint& xi, double lambda, bool enforce_margin) {
  if (m < 1) throw ArgumentError("order m must be >= 1");
  if (xi.size() < 2) throw ArgumentError("frequency must have dimension >= 2");
  check_lambda(lambda);
  const int n = static_cast<int>(xi.size());
  const double r = norm_of(xi);
  if (enforce_margin) check_margin(m, r, lambda, "|xi| = " + std::to_string(r));

  CPoint z1 = canonical_vector(m, r, lambda, n);
  CPoint z2 = z1;
  z2[0] = -z1[0];
  z2[1] = std::conj(z1[1]);
  for (int i = 2; i < n; ++i) z2[i] = 0.0;

  RMat h = frame(xi);
  CharacteristicPair p;
  p.m = m;
  p.xi = xi;
  p.lambda = lambda;
  p.zeta1 = rotate(h, z1);
  p.zeta2 = rotate(h, z2);
  return p;
}

}  // namespace

CharacteristicPair make_pair(int m, const RPoint& xi, double lambda) { return build_pair(m, xi, lambda, true); }

ShiftFamily make_shift_family(int m, const RPoint& xi, double lambda, int count) {
  if (count < 0) throw ArgumentError("shift count must be >= 0");
  ShiftFamily f;
  f.pair = make_pair(m, xi, lambda);
  const int n = static_cast<int>(xi.size());
  for (int l = 1; l <= count; ++l) {
    CPoint v;
    try {
      v = canonical_vector(m, 2.0 * l, lambda, n);
    } catch (const PreconditionError& e) {
      throw PreconditionError("shift l = " + std::to_string(l) + ": " + e.what());
    }
    CPoint eta(n);
    for (int i = 0; i < n; ++i) eta[i] = v[i] - f.pair.zeta1[i];
    f.shifts.push_back(eta);
  }
  return f;
}

CharacteristicPair mirror_pair(const CharacteristicPair& p) {
  CharacteristicPair q = p;
  for (auto& x : q.xi) x = -x;
  for (auto& z : q.zeta1) z = -std::conj(z);
  for (auto& z : q.zeta2) z = -std::conj(z);
  return q;
}

cplx grid_symbol(const CPoint& z, double h) {
  cplx s = 0;
  for (const cplx& c : z) {
    cplx t = std::sin(c * (h / 2));
    s += t * t;
  }
  return 4.0 / (h * h) * s;
}

CharacteristicPair refine_to_grid(const CharacteristicPair& p, double h) {
  const int n = static_cast<int>(p.xi.size());
  const double r = norm_of(p.xi);
  RMat hf = frame(p.xi);
  RVec e = hf.col(0), nv = hf.col(1);
  const cplx mu = p.m == 1 ? cplx(p.lambda) : dot(p.zeta1, p.zeta1);

  CPoint half(n);
  for (int i = 0; i < n; ++i) half[i] = p.xi[i] / 2;
  // p = ce e + cn n
  cplx ce = 0, cn = 0;
  for (int i = 0; i < n; ++i) {
    cplx pi = p.zeta1[i] - half[i];
    ce += pi * e(i);
    cn += pi * nv(i);
  }
  std::vector<double> sinc(n);
  for (int i = 0; i < n; ++i) {
    double a = p.xi[i] * h / 2;
    sinc[i] = std::abs(a) < 1e-8 ? 1.0 - a * a / 6 : std::sin(a) / a;
  }
  auto shift = [&](cplx a, cplx b) {
    CPoint q(n);
    for (int i = 0; i < n; ++i) q[i] = a * e(i) + b * nv(i);
    return q;
  };
  const double tol = 1e-15 * (std::abs(mu) + 1.0);
  for (int it = 0; it < 60; ++it) {
    CPoint q = shift(ce, cn);
    CPoint plus(n), minus(n);
    for (int i = 0; i < n; ++i) {
      plus[i] = half[i] + q[i];
      minus[i] = half[i] - q[i];
    }
    cplx f1 = 0.5 * (grid_symbol(plus, h) + grid_symbol(minus, h)) - mu;
    cplx f2 = 0;
    cplx j11 = 0, j12 = 0, j21 = 0, j22 = 0;
    for (int i = 0; i < n; ++i) {
      cplx sp = std::sin(q[i] * h), cp = std::cos(q[i] * h);
      f2 += (2.0 / h) * e(i) * sinc[i] * sp;
      cplx d1 = (2.0 / h) * std::cos(p.xi[i] * h / 2) * sp;  // dE1/dp_i
      cplx d2 = 2.0 * e(i) * sinc[i] * cp;                   // dE2/dp_i
      j11 += d1 * e(i);
      j12 += d1 * nv(i);
      j21 += d2 * e(i);
      j22 += d2 * nv(i);
    }
    if (std::abs(f1) <= tol && std::abs(f2) <= 1e-15 * (1.0 + std::abs(cn) / h)) break;
    cplx det = j11 * j22 - j12 * j21;
    if (std::abs(det) == 0.0) throw NumericalError("singular Jacobian while refining characteristic vectors");
    cplx dce = (f1 * j22 - f2 * j12) / det;
    cplx dcn = (j11 * f2 - j21 * f1) / det;
    ce -= dce;
    cn -= dcn;
    if (std::abs(dce) + std::abs(dcn) <= 1e-16 * (std::abs(ce) + std::abs(cn))) break;
  }
  (void)r;
  CPoint q = shift(ce, cn);
  CharacteristicPair out = p;
  for (int i = 0; i < n; ++i) {
    out.zeta1[i] = half[i] + q[i];
    out.zeta2[i] = -half[i] + std::conj(q[i]);
  }
  double res = grid_symbol_residual(out, h);
  if (!(res <= 1e-10)) throw NumericalError("grid refinement of characteristic vectors did not converge: " + std::to_string(res));
  return out;
}

CPoint refine_vector_to_grid(const CPoint& zeta, int m, double lambda, double h) {
  // The vector is the first member of the pair built on the real part of 2x its first component.
  RPoint xi(zeta.size(), 0.0);
  xi[0] = 2.0 * zeta[0].real();
  CharacteristicPair p = build_pair(m, xi, lambda, false);
  for (std::size_t i = 0; i < zeta.size(); ++i)
    if (std::abs(p.zeta1[i] - zeta[i]) > 1e-9 * (1.0 + std::abs(zeta[i])))
      throw ArgumentError("vector is not a canonical lab-frame characteristic vector");
  return refine_to_grid(p, h).zeta1;
}

double max_symbol_residual(const CharacteristicPair& p) {
  Symbol s = Symbol::polyharmonic(static_cast<int>(p.xi.size()), p.m);
  double r1 = std::abs(evaluate(s, p.zeta1) - p.lambda) / std::abs(p.lambda);
  double r2 = std::abs(evaluate(s, p.zeta2) - p.lambda) / std::abs(p.lambda);
  return std::max(r1, r2);
}

double grid_symbol_residual(const CharacteristicPair& p, double h) {
  double r1 = std::abs(cpow_int(grid_symbol(p.zeta1, h), p.m) - p.lambda) / std::abs(p.lambda);
  double r2 = std::abs(cpow_int(grid_symbol(p.zeta2, h), p.m) - p.lambda) / std::abs(p.lambda);
  return std::max(r1, r2);
}

double exponent_range(const CPoint& zeta, double lx, double ly) {
  return std::abs(zeta[0].imag()) * lx + std::abs(zeta[1].imag()) * ly;
}

AssumptionReport verify_assumptions(int m, const std::vector<RPoint>& xi_samples,
                                    const std::vector<double>& schedule, int shift_count, int steps) {
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] < schedule[k - 1]))
      throw ArgumentError("lambda schedule must be strictly decreasing");
  AssumptionReport rep;
  rep.m = m;
  if (xi_samples.empty()) return rep;
  const int n = static_cast<int>(xi_samples.front().size());
  Symbol p = Symbol::polyharmonic(n, m);

  for (double lambda : schedule) {
    std::vector<CPoint> vecs;
    for (const auto& xi : xi_samples) {
      try {
        CharacteristicPair pr = make_pair(m, xi, lambda);
        vecs.push_back(pr.zeta1);
        vecs.push_back(pr.zeta2);
        ShiftFamily fam = make_shift_family(m, xi, lambda, shift_count);
        for (const auto& eta : fam.shifts) {
          CPoint v(n);
          for (int i = 0; i < n; ++i) v[i] = pr.zeta1[i] + eta[i];
          vecs.push_back(v);
        }
      } catch (const PreconditionError& e) {
        rep.violations.push_back("lambda " + std::to_string(lambda) + ": " + e.what());
      }
    }
    AssumptionRow row;
    row.lambda = lambda;
    row.min_scaled_im = std::numeric_limits<double>::infinity();
    row.bound = m == 1 ? 1.0 / (2.0 * std::sqrt(std::abs(lambda))) : 0.0;
    const double scale = std::pow(std::abs(lambda), -1.0 / (2 * m));
    for (const auto& z : vecs) {
      double im = 0, zn = 0;
      for (const auto& c : z) {
        im += c.imag() * c.imag();
        zn += std::norm(c);
      }
      row.min_scaled_im = std::min(row.min_scaled_im, std::sqrt(im) * scale);
      TildeEvaluator lt(shifted_symbol(p, z));
      // sample real xi on a box around -Re(zeta) that also covers the origin
      RPoint centre(n, 0.0);
      for (int i = 0; i < n; ++i) centre[i] = -z[i].real();
      const double rad = std::sqrt(zn) + 1.0;
      double sup = 1.0 / lt(RPoint(n, 0.0));
      sup = std::max(sup, 1.0 / lt(centre));
      for (int a = -steps; a <= steps; ++a)
        for (int b = -steps; b <= steps; ++b) {
          RPoint s = centre;
          s[0] += rad * a / steps;
          s[1] += rad * b / steps;
          sup = std::max(sup, 1.0 / lt(s));
        }
      row.sup_inv_tilde = std::max(row.sup_inv_tilde, sup);
      ++row.vectors;
    }
    if (m == 1 && row.min_scaled_im < 1.0 - 1e-12)
      rep.violations.push_back("lambda " + std::to_string(lambda) + ": |Im zeta| below sqrt|lambda|");
    if (m > 1 && !(row.min_scaled_im > 0))
      rep.violations.push_back("lambda " + std::to_string(lambda) + ": |Im zeta| not bounded below");
    if (m == 1 && row.sup_inv_tilde > row.bound * (1 + 1e-12))
      rep.violations.push_back("lambda " + std::to_string(lambda) + ": sup 1/L~ exceeds 1/(2 sqrt|lambda|)");
    if (!rep.rows.empty() && row.sup_inv_tilde > 1.05 * rep.rows.back().sup_inv_tilde)
      rep.violations.push_back("lambda " + std::to_string(lambda) + ": sup 1/L~ increased along the schedule");
    rep.rows.push_back(row);
  }
  return rep;
}

namespace {

// Conjugated stencil coefficient e^{i zeta.(x_t - x_p)} for a tap.
cplx phase(const CPoint& zeta, double h, int di, int dj) {
  return std::exp(I * h * (zeta[0] * double(di) + zeta[1] * double(dj)));
}

struct GhostInfo {
  int slot;
  int mi, mj;
};

bool ghost_of(const RectGrid& g, int i, int j, GhostInfo& out) {
  if (i == -1) out = {g.slot_index(0, j), 1, j};
  else if (i == g.nx()) out = {g.slot_index(g.nx() - 1, j), g.nx() - 2, j};
  else if (j == -1) out = {g.slot_index(i, 0), i, 1};
  else if (j == g.ny()) out = {g.slot_index(i, g.ny() - 1), i, g.ny() - 2};
  else return false;
  return true;
}

// Residual of the conjugated equation sum_t a_t E_t (1 + w_t) + (q - lambda)(1 + w_p)
// at interior nodes, and the matching size scale.
void conjugated_residual(const DiscreteOperator& op, double lambda, const CPoint& zeta, const GridField& w,
                         CVec& res, RVec& size) {
  const RectGrid& g = op.grid;
  const double h = g.h();
  const double scale = 1.0 / std::pow(h, 2 * op.m);
  res.resize(g.interior_count());
  size.resize(g.interior_count());
  for (int p = 0; p < g.interior_count(); ++p) {
    auto [i, j] = g.interior_node(p);
    cplx wp = w.values(g.node(i, j));
    cplx acc = (op.q(p) - lambda) * (1.0 + wp);
    double sz = std::abs(op.q(p) - lambda) * std::abs(1.0 + wp);
    for (const auto& t : interior_stencil(op.m)) {
      int ti = i + t.di, tj = j + t.dj;
      cplx wt;
      GhostInfo gi;
      if (ti >= 0 && tj >= 0 && ti < g.nx() && tj < g.ny()) wt = w.values(g.node(ti, tj));
      else if (ghost_of(g, ti, tj, gi)) wt = w.ghost(gi.slot);
      else throw NumericalError("stencil reaches beyond the ghost layer");
      cplx term = t.w * scale * phase(zeta, h, t.di, t.dj) * (1.0 + wt);
      acc += term;
      sz += std::abs(term);
    }
    res(p) = acc;
    size(p) = sz;
  }
}

}  // namespace

CGOSolution build_cgo_bvp(const DiscreteOperator& op, double lambda, const CPoint& zeta, const GridField* w_data) {
  if (!(lambda <= op.certified_lambda0))
    throw ResolventError("lambda = " + std::to_string(lambda) + " is not below the certified spectral bound " +
                         std::to_string(op.certified_lambda0));
  const RectGrid& g = op.grid;
  const double h = g.h();
  const int n = g.interior_count();
  const int b = g.boundary_count();
  const double scale = 1.0 / std::pow(h, 2 * op.m);

  GridField data;
  data.values = CVec::Zero(g.node_count());
  data.ghost = CVec::Zero(b);
  if (w_data) {
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        if (!g.is_interior(i, j)) data.values(g.node(i, j)) = w_data->values(g.node(i, j));
    if (op.m == 2) {
      // ghost of the BVP solution: w_g = wd_g + E(in - g)(w_in - wd_in)
      data.ghost = w_data->ghost;
    }
  }

  std::vector<Eigen::Triplet<cplx>> trip;
  CVec rhs(n);
  for (int p = 0; p < n; ++p) {
    auto [i, j] = g.interior_node(p);
    cplx r = -(op.q(p) - lambda);
    trip.emplace_back(p, p, op.q(p) - lambda);
    for (const auto& t : interior_stencil(op.m)) {
      int ti = i + t.di, tj = j + t.dj;
      cplx a = t.w * scale * phase(zeta, h, t.di, t.dj);
      r -= a;
      if (g.is_interior(ti, tj)) {
        trip.emplace_back(p, g.interior_index(ti, tj), a);
      } else if (ti >= 0 && tj >= 0 && ti < g.nx() && tj < g.ny()) {
        r -= a * data.values(g.node(ti, tj));
      } else {
        GhostInfo gi;
        ghost_of(g, ti, tj, gi);
        // w_ghost = wd_ghost + e^{i zeta.(x_in - x_ghost)} (w_in - wd_in), x_in the mirror node
        cplx link = std::exp(I * h * (zeta[0] * double(gi.mi - ti) + zeta[1] * double(gi.mj - tj)));
        trip.emplace_back(p, g.interior_index(gi.mi, gi.mj), a * link);
        r -= a * data.ghost(gi.slot);
        if (w_data) r += a * link * w_data->values(g.node(gi.mi, gi.mj));
      }
    }
    rhs(p) = r;
  }
  Eigen::SparseMatrix<cplx> mat(n, n);
  mat.setFromTriplets(trip.begin(), trip.end());
  mat.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  lu.compute(mat);
  if (lu.info() != Eigen::Success) throw NumericalError("factorization of the conjugated operator failed");
  CVec x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericalError("conjugated solve failed");

  CGOSolution sol;
  sol.zeta = zeta;
  sol.lambda = lambda;
  sol.w.values = data.values;
  for (int p = 0; p < n; ++p) {
    auto [i, j] = g.interior_node(p);
    sol.w.values(g.node(i, j)) = x(p);
  }
  if (op.m == 2) {
    sol.w.ghost.resize(b);
    for (int s = 0; s < b; ++s) {
      const auto& sl = g.slot(s);
      int gi = sl.i - sl.di, gj = sl.j - sl.dj;
      int mi = sl.i + sl.di, mj = sl.j + sl.dj;
      cplx link = std::exp(I * h * (zeta[0] * double(mi - gi) + zeta[1] * double(mj - gj)));
      cplx wd_in = w_data ? w_data->values(g.node(mi, mj)) : cplx(0.0);
      sol.w.ghost(s) = data.ghost(s) + link * (sol.w.values(g.node(mi, mj)) - wd_in);
    }
  }
  sol.values.values.resize(g.node_count());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      cplx e = std::exp(I * (zeta[0] * g.x(i) + zeta[1] * g.y(j)));
      sol.values.values(g.node(i, j)) = e * (1.0 + sol.w.values(g.node(i, j)));
    }
  if (op.m == 2) {
    sol.values.ghost.resize(b);
    for (int s = 0; s < b; ++s) {
      const auto& sl = g.slot(s);
      double xg = g.x(sl.i) - sl.di * h, yg = g.y(sl.j) - sl.dj * h;
      sol.values.ghost(s) = std::exp(I * (zeta[0] * xg + zeta[1] * yg)) * (1.0 + sol.w.ghost(s));
    }
  }
  double acc = 0;
  for (int p = 0; p < n; ++p) acc += std::norm(x(p));
  sol.remainder_norm = h * std::sqrt(acc);

  CVec res;
  RVec size;
  conjugated_residual(op, lambda, zeta, sol.w, res, size);
  double num = 0, den = 0;
  for (int p = 0; p < n; ++p) {
    auto [i, j] = g.interior_node(p);
    if (i < 2 || j < 2 || i > g.nx() - 3 || j > g.ny() - 3) continue;
    num = std::max(num, std::abs(res(p)));
    den = std::max(den, size(p));
  }
  sol.residual = den > 0 ? num / den : 0.0;
  if (!(sol.residual <= 1e-8)) throw NumericalError("CGO boundary value residual " + std::to_string(sol.residual));
  return sol;
}

double cgo_residual_norm(const DiscreteOperator& op, double lambda, const CPoint& zeta, const GridField& w) {
  CVec res;
  RVec size;
  conjugated_residual(op, lambda, zeta, w, res, size);
  return op.grid.h() * res.norm();
}

PaddedBox make_padded_box(const RectGrid& g, const RVec& q) {
  if (g.nx() != g.ny()) throw ArgumentError("padded box needs a square grid");
  if ((g.nx() - 1) % 2 != 0) throw ArgumentError("padded box needs an odd node count");
  if (q.size() != g.interior_count()) throw ArgumentError("potential must be given on interior nodes");
  PaddedBox box;
  box.n = 2 * (g.nx() - 1);
  box.h = g.h();
  box.offset = (g.nx() - 1) / 2;
  box.origin = -box.offset * g.h();
  box.q = RVec::Zero(box.n * box.n);
  for (int k = 0; k < q.size(); ++k) {
    auto [i, j] = g.interior_node(k);
    box.q((i + box.offset) + box.n * (j + box.offset)) = q(k);
  }
  return box;
}

namespace {

void fft2(Eigen::FFT<double>& fft, CVec& data, int n, bool inverse) {
  std::vector<cplx> in(n), out(n);
  for (int pass = 0; pass < 2; ++pass) {
    for (int line = 0; line < n; ++line) {
      for (int k = 0; k < n; ++k) in[k] = pass == 0 ? data(k + n * line) : data(line + n * k);
      if (inverse) fft.inv(out, in);
      else fft.fwd(out, in);
      for (int k = 0; k < n; ++k) {
        if (pass == 0) data(k + n * line) = out[k];
        else data(line + n * k) = out[k];
      }
    }
  }
}

}  // namespace

FixedPointResult solve_correction_fixed_point(const PaddedBox& box, int m, double lambda, const CPoint& zeta,
                                              double cutoff, double dropout) {
  check_lambda(lambda);
  const int n = box.n;
  const double h = box.h;
  if (dropout < 0) dropout = 1e-6 * std::pow(std::abs(lambda), 1.0 / (2 * m));
  // multiplier on the box lattice
  CVec inv_mult(n * n);
  FixedPointResult res;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) {
      double ka = 2 * std::numbers::pi * (a < n / 2 ? a : a - n) / (n * h);
      double kb = 2 * std::numbers::pi * (b < n / 2 ? b : b - n) / (n * h);
      cplx mult = cpow_int(grid_symbol(CPoint{ka + zeta[0], kb + zeta[1]}, h), m) - lambda;
      bool keep = std::abs(mult) >= dropout && (cutoff < 0 || std::hypot(ka, kb) <= cutoff);
      inv_mult(a + n * b) = keep ? 1.0 / mult : cplx(0.0);
      if (keep) res.inverse_norm = std::max(res.inverse_norm, 1.0 / std::abs(mult));
      else ++res.dropped;
    }

  Eigen::FFT<double> fft;
  CVec w = CVec::Zero(n * n);
  double prev_diff = -1;
  res.contraction = 0;
  for (int it = 1; it <= 200; ++it) {
    CVec g(n * n);
    for (int k = 0; k < n * n; ++k) g(k) = box.q(k) * (1.0 + w(k));
    fft2(fft, g, n, false);
    for (int k = 0; k < n * n; ++k) g(k) = -g(k) * inv_mult(k);
    fft2(fft, g, n, true);
    double diff = h * (g - w).norm();
    w = g;
    res.iterations = it;
    if (prev_diff > 0 && prev_diff > 1e-13) {
      double ratio = diff / prev_diff;
      res.contraction = std::max(res.contraction, ratio);
      if (it >= 5 && ratio >= 1.0)
        throw DivergenceError("fixed point iteration does not contract (factor " + std::to_string(ratio) + ")");
    }
    prev_diff = diff;
    if (diff < 1e-10) break;
  }
  res.w = w;
  return res;
}

GridField restrict_box(const PaddedBox& box, const RectGrid& g, const CVec& w) {
  GridField out;
  out.values.resize(g.node_count());
  auto at = [&](int i, int j) { return w((i + box.offset) + box.n * (j + box.offset)); };
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out.values(g.node(i, j)) = at(i, j);
  out.ghost.resize(g.boundary_count());
  for (int s = 0; s < g.boundary_count(); ++s) {
    const auto& sl = g.slot(s);
    out.ghost(s) = at(sl.i - sl.di, sl.j - sl.dj);
  }
  return out;
}

}  // namespace bllab
