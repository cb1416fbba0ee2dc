#include "bllab/symbol.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace bllab {

namespace {

constexpr double kDropBelow = 1e-300;

void check_dim(const Symbol& s, std::size_t n) {
  if (static_cast<int>(n) != s.dimension())
    throw ArgumentError("symbol dimension " + std::to_string(s.dimension()) +
                        " does not match point dimension " + std::to_string(n));
}

template <class T>
cplx ipow(T z, int k) {
  cplx r = 1.0;
  cplx b = z;
  while (k > 0) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  return r;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

void enumerate(int dim, int pos, int remaining, MultiIndex& cur,
               std::vector<MultiIndex>& out) {
  if (pos == dim) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    cur[pos] = e;
    enumerate(dim, pos + 1, remaining - e, cur, out);
  }
  cur[pos] = 0;
}

template <class Point>
cplx evaluate_impl(const Symbol& s, const Point& z) {
  check_dim(s, z.size());
  cplx acc = 0.0;
  for (const auto& [alpha, a] : s.terms()) {
    cplx t = a;
    for (std::size_t i = 0; i < alpha.size(); ++i)
      if (alpha[i]) t *= ipow(z[i], alpha[i]);
    acc += t;
  }
  return acc;
}

}  // namespace

int total_degree(const MultiIndex& alpha) {
  return std::accumulate(alpha.begin(), alpha.end(), 0);
}

std::vector<MultiIndex> multi_indices_up_to(int dimension, int max_degree) {
  std::vector<MultiIndex> out;
  MultiIndex cur(dimension, 0);
  enumerate(dimension, 0, max_degree, cur, out);
  return out;
}

Symbol::Symbol(int dimension, int order, TermMap terms)
    : dim_(dimension), order_(order) {
  if (dimension < 2) throw ArgumentError("symbol dimension must be >= 2");
  if (order < 0) throw ArgumentError("symbol order must be >= 0");
  for (auto& [alpha, a] : terms) {
    if (static_cast<int>(alpha.size()) != dim_)
      throw ArgumentError("multi-index length mismatch");
    for (int e : alpha)
      if (e < 0) throw ArgumentError("negative exponent in multi-index");
    if (total_degree(alpha) > order_)
      throw ArgumentError("term degree exceeds symbol order");
    if (std::abs(a) >= kDropBelow) terms_.emplace(alpha, a);
  }
}

Symbol Symbol::constant(int dimension, cplx c) {
  return Symbol(dimension, 0, {{MultiIndex(dimension, 0), c}});
}

Symbol Symbol::laplacian(int dimension) { return polyharmonic(dimension, 1); }

Symbol Symbol::polyharmonic(int dimension, int m) {
  if (m < 1) throw ArgumentError("polyharmonic order m must be >= 1");
  // multinomial expansion of (sum xi_i^2)^m
  TermMap terms;
  std::vector<MultiIndex> betas;
  MultiIndex cur(dimension, 0);
  enumerate(dimension, 0, m, cur, betas);
  for (const auto& beta : betas) {
    if (total_degree(beta) != m) continue;
    double c = factorial(m);
    MultiIndex alpha(dimension);
    for (int i = 0; i < dimension; ++i) {
      c /= factorial(beta[i]);
      alpha[i] = 2 * beta[i];
    }
    terms[alpha] = c;
  }
  return Symbol(dimension, 2 * m, std::move(terms));
}

cplx Symbol::coefficient(const MultiIndex& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? cplx(0.0) : it->second;
}

bool Symbol::is_real(double tol) const {
  for (const auto& [alpha, a] : terms_)
    if (std::abs(a.imag()) > tol) return false;
  return true;
}

bool Symbol::is_zero(double tol) const {
  for (const auto& [alpha, a] : terms_)
    if (std::abs(a) > tol) return false;
  return true;
}

bool Symbol::is_elliptic(int samples) const {
  // Directions on the sphere sampled in the (x1, x2) plane plus coordinate axes.
  std::vector<RPoint> dirs;
  for (int k = 0; k < samples; ++k) {
    double t = std::numbers::pi * k / samples;
    RPoint d(dim_, 0.0);
    d[0] = std::cos(t);
    d[1] = std::sin(t);
    dirs.push_back(d);
  }
  for (int i = 0; i < dim_; ++i) {
    RPoint d(dim_, 0.0);
    d[i] = 1.0;
    dirs.push_back(d);
  }
  for (const auto& d : dirs) {
    cplx p = 0.0;
    for (const auto& [alpha, a] : terms_) {
      if (total_degree(alpha) != order_) continue;
      cplx t = a;
      for (int i = 0; i < dim_; ++i) t *= ipow(d[i], alpha[i]);
      p += t;
    }
    if (!(p.real() > 0.0) || std::abs(p.imag()) > 1e-12 * std::abs(p))
      return false;
  }
  return true;
}

cplx evaluate(const Symbol& sym, const CPoint& zeta) {
  return evaluate_impl(sym, zeta);
}

cplx evaluate(const Symbol& sym, const RPoint& xi) {
  return evaluate_impl(sym, xi);
}

Symbol derivative(const Symbol& sym, const MultiIndex& alpha) {
  check_dim(sym, alpha.size());
  Symbol::TermMap out;
  for (const auto& [beta, a] : sym.terms()) {
    bool survives = true;
    double c = 1.0;
    MultiIndex rest(beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i) {
      if (beta[i] < alpha[i]) {
        survives = false;
        break;
      }
      for (int k = 0; k < alpha[i]; ++k) c *= beta[i] - k;
      rest[i] = beta[i] - alpha[i];
    }
    if (survives) out[rest] += a * c;
  }
  int order = std::max(0, sym.order() - total_degree(alpha));
  return Symbol(sym.dimension(), order, std::move(out));
}

double tilde_norm(const Symbol& sym, const RPoint& xi) {
  check_dim(sym, xi.size());
  double acc = 0.0;
  for (const auto& alpha : multi_indices_up_to(sym.dimension(), sym.order()))
    acc += std::norm(evaluate(derivative(sym, alpha), xi));
  return std::sqrt(acc);
}

Symbol shifted_symbol(const Symbol& sym, const CPoint& zeta) {
  check_dim(sym, zeta.size());
  Symbol::TermMap out;
  for (const auto& alpha : multi_indices_up_to(sym.dimension(), sym.order())) {
    if (total_degree(alpha) == 0) continue;  // zero constant term by construction
    double afact = 1.0;
    for (int e : alpha) afact *= factorial(e);
    cplx c = evaluate(derivative(sym, alpha), zeta) / afact;
    if (std::abs(c) >= kDropBelow) out[alpha] = c;
  }
  return Symbol(sym.dimension(), sym.order(), std::move(out));
}

bool approx_equal(const Symbol& a, const Symbol& b, double tol) {
  if (a.dimension() != b.dimension()) return false;
  for (const auto& [alpha, c] : a.terms())
    if (std::abs(c - b.coefficient(alpha)) > tol) return false;
  for (const auto& [alpha, c] : b.terms())
    if (std::abs(c - a.coefficient(alpha)) > tol) return false;
  return true;
}

}  // namespace bllab
