#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bllab/cgo.hpp"

using namespace bllab;

namespace {

const cplx I{0.0, 1.0};

cplx dot(const CPoint& a, const CPoint& b) { return a[0] * b[0] + a[1] * b[1]; }

cplx power(cplx z, int m) {
  cplx r = 1.0;
  for (int k = 0; k < m; ++k) r *= z;
  return r;
}

double xi_gap(const CharacteristicPair& p) {
  double gap = 0;
  for (int k = 0; k < 2; ++k) gap = std::max(gap, std::abs(p.zeta1[k] - std::conj(p.zeta2[k]) - p.xi[k]));
  return gap;
}

RVec bump(const RectGrid& g) {
  return sample_interior(g, [](double x, double y) {
    return 5.0 * std::exp(-40.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
  });
}

}  // namespace

TEST_CASE("alpha_beta closed forms") {
  auto [a0, b0] = alpha_beta(0.0, -16.0, 2);
  CHECK(a0 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(b0 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  for (int m = 2; m <= 5; ++m)
    for (double lambda : {-3.0, -1e3, -1e8}) {
      auto [a, b] = alpha_beta(0.0, lambda, m);
      double expect = std::pow(-lambda, 1.0 / m) * std::cos(std::numbers::pi / m);
      CHECK(std::abs(a * a - b * b - expect) <= 1e-12 * std::pow(-lambda, 1.0 / m));
    }

  // biharmonic form (sqrt(|lambda|/4 + r^4/64) -+ r^2/8)^(1/2)
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(0, 20), ul(1, 8);
  for (int t = 0; t < 50; ++t) {
    double r = ur(rng), lambda = -std::pow(10.0, ul(rng));
    double root = std::sqrt(-lambda / 4 + std::pow(r, 4) / 64);
    auto [a, b] = alpha_beta(r, lambda, 2);
    CHECK(std::abs(a - std::sqrt(root - r * r / 8)) <= 1e-12 * std::max(1.0, b));
    CHECK(std::abs(b - std::sqrt(root + r * r / 8)) <= 1e-12 * std::max(1.0, b));
  }
  CHECK_THROWS(alpha_beta(1.0, 1.0, 2));
  CHECK_THROWS_AS(alpha_beta(1.0, -1.0, 1), ArgumentError);
}

TEST_CASE("make_pair examples") {
  auto p = make_pair(1, {1.0, 0.0}, -4.0);
  CHECK(std::abs(p.zeta1[0] - 0.5) < 1e-14);
  CHECK(std::abs(p.zeta1[1] - I * std::sqrt(4.25)) < 1e-14);
  CHECK(std::abs(p.zeta2[0] + p.zeta1[0]) < 1e-14);
  CHECK(std::abs(p.zeta2[1] + p.zeta1[1]) < 1e-14);

  auto z = make_pair(1, {0.0, 0.0}, -1.0);
  CHECK(std::abs(z.zeta1[1] - I) < 1e-14);
  CHECK(std::abs(z.zeta2[1] + I) < 1e-14);
  CHECK(xi_gap(z) < 1e-14);

  auto b = make_pair(2, {0.0, 0.0}, -16.0);
  CHECK(std::abs(b.zeta1[0]) < 1e-14);
  CHECK(std::abs(b.zeta1[1] - cplx(std::sqrt(2.0), std::sqrt(2.0))) < 1e-14);
  CHECK(std::abs(power(dot(b.zeta1, b.zeta1), 2) + 16.0) < 1e-12);

  CHECK_THROWS_AS(make_pair(1, {1.0, 0.0}, 0.0), ArgumentError);
  CHECK_THROWS_AS(make_pair(2, {30.0, 0.0}, -10.0), PreconditionError);
}

TEST_CASE("characteristic identities on random admissible inputs") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-10, 10), ul(0, 6);
  for (int m = 1; m <= 3; ++m)
    for (int t = 0; t < 300; ++t) {
      RPoint xi{ux(rng), ux(rng)};
      double r2 = xi[0] * xi[0] + xi[1] * xi[1];
      // smallest admissible |lambda| times 10^[0,6]
      double base = m == 1 ? 1.0 : std::pow(r2 / (1 + std::cos(std::numbers::pi / m)), m) + 1.0;
      double lambda = -base * std::pow(10.0, ul(rng));
      auto p = make_pair(m, xi, lambda);
      CHECK(std::abs(power(dot(p.zeta1, p.zeta1), m) - lambda) <= 1e-10 * -lambda);
      CHECK(std::abs(power(dot(p.zeta2, p.zeta2), m) - lambda) <= 1e-10 * -lambda);
      CHECK(xi_gap(p) <= 1e-12 * std::max(1.0, std::sqrt(r2)));
    }
}

TEST_CASE("rotation consistency") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ua(0, 2 * std::numbers::pi);
  for (int m = 1; m <= 3; ++m)
    for (int t = 0; t < 20; ++t) {
      RPoint xi{1.5, -0.7};
      double th = ua(rng), c = std::cos(th), s = std::sin(th);
      auto p = make_pair(m, xi, -1e4);
      auto q = make_pair(m, {c * xi[0] - s * xi[1], s * xi[0] + c * xi[1]}, -1e4);
      for (const auto& [a, b] : {std::pair{p.zeta1, q.zeta1}, std::pair{p.zeta2, q.zeta2}}) {
        CPoint ra{c * a[0] - s * a[1], s * a[0] + c * a[1]};
        CHECK(std::abs(ra[0] - b[0]) + std::abs(ra[1] - b[1]) <= 1e-10 * std::abs(a[1]));
      }
    }
}

TEST_CASE("product of the pair exponentials carries the Fourier phase") {
  RPoint xi{2.0, -3.0};
  auto p = make_pair(1, xi, -50.0);
  for (int k = 0; k < 20; ++k) {
    double x = 0.05 * k, y = 1.0 - 0.04 * k;
    cplx u1 = std::exp(I * (p.zeta1[0] * x + p.zeta1[1] * y));
    cplx u2 = std::exp(I * (p.zeta2[0] * x + p.zeta2[1] * y));
    cplx phase = std::exp(I * (xi[0] * x + xi[1] * y));
    CHECK(std::abs(u1 * std::conj(u2) - phase) <= 1e-12);
  }
}

TEST_CASE("shift family") {
  auto fam = make_shift_family(1, {1.0, 0.0}, -4.0, 1);
  REQUIRE(fam.shifts.size() == 1);
  CHECK(std::abs(fam.shifts[0][0] - 0.5) < 1e-14);
  CHECK(std::abs(fam.shifts[0][1] - I * (std::sqrt(5.0) - std::sqrt(4.25))) < 1e-14);
  CHECK(make_shift_family(2, {1.0, 0.0}, -1e4, 0).shifts.empty());

  auto big = make_shift_family(2, {0.0, 0.0}, -1e6, 3);
  for (const auto& eta : big.shifts) {
    CPoint sum{big.pair.zeta1[0] + eta[0], big.pair.zeta1[1] + eta[1]};
    CHECK(std::abs(power(dot(sum, sum), 2) + 1e6) <= 1e-10 * 1e6);
  }

  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> ux(-4, 4);
  for (int m = 1; m <= 3; ++m)
    for (int t = 0; t < 50; ++t) {
      auto f1 = make_shift_family(m, {ux(rng), ux(rng)}, -1e5, 3);
      auto f2 = make_shift_family(m, {ux(rng), ux(rng)}, -1e5, 3);
      for (int l = 0; l < 3; ++l)
        for (int k = 0; k < 2; ++k) {
          cplx a = f1.pair.zeta1[k] + f1.shifts[l][k], b = f2.pair.zeta1[k] + f2.shifts[l][k];
          CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("mirror pair conjugates the exponentials") {
  auto p = make_pair(2, {1.0, 2.0}, -1e4);
  auto q = mirror_pair(p);
  CHECK(q.xi[0] == -1.0);
  CHECK(q.xi[1] == -2.0);
  CHECK(xi_gap(q) < 1e-12);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(q.zeta1[k] + std::conj(p.zeta1[k])) < 1e-12);
    CHECK(std::abs(q.zeta2[k] + std::conj(p.zeta2[k])) < 1e-12);
  }
}

TEST_CASE("grid refinement lands on the discrete characteristic set") {
  RectGrid g(33, 33);
  for (int m = 1; m <= 2; ++m) {
    auto p = make_pair(m, {std::numbers::pi, 2.0}, m == 1 ? -200.0 : -3000.0);
    auto r = refine_to_grid(p, g.h());
    CHECK(grid_symbol_residual(r, g.h()) <= 1e-10);
    CHECK(xi_gap(r) <= 1e-12);
    // the continuum vectors miss the grid symbol at O(h^2)
    CHECK(grid_symbol_residual(p, g.h()) > 1e-6);
  }
}

TEST_CASE("verify_assumptions") {
  std::vector<RPoint> xs{{1.0, 0.0}, {0.0, 2.0}, {3.0, 4.0}};
  auto lap = verify_assumptions(1, xs, {-1e2, -1e3, -1e4, -1e6});
  CHECK(lap.ok());
  for (const auto& row : lap.rows) {
    CHECK(row.min_scaled_im >= 1.0 - 1e-12);
    CHECK(row.bound == doctest::Approx(1.0 / (2.0 * std::sqrt(-row.lambda))).epsilon(1e-14));
    CHECK(row.sup_inv_tilde <= row.bound * (1 + 1e-12));
  }
  // (3, 4) is outside the m = 3 margin at -1e3
  auto tri = verify_assumptions(3, {{1.0, 0.0}, {0.0, 2.0}}, {-1e3, -1e6, -1e9});
  for (const auto& v : tri.violations) MESSAGE(v);
  CHECK(tri.ok());
  REQUIRE(tri.rows.size() == 3);
  CHECK(tri.rows[1].sup_inv_tilde < tri.rows[0].sup_inv_tilde);
  CHECK(tri.rows[2].sup_inv_tilde < tri.rows[1].sup_inv_tilde);
  CHECK_THROWS_AS(verify_assumptions(1, xs, {-1e3, -1e2}), ArgumentError);
}

TEST_CASE("CGO boundary value problem") {
  // q = 0 and continuum zeta: the discrete solution misses the exponential at O(h^2)
  double rem[2];
  for (int t = 0; t < 2; ++t) {
    RectGrid g(t == 0 ? 17 : 33, t == 0 ? 17 : 33);
    auto op = assemble(1, RVec::Zero(g.interior_count()), g);
    auto p = make_pair(1, {1.0, 0.0}, -100.0);
    auto sol = build_cgo_bvp(op, -100.0, p.zeta1);
    CHECK(sol.residual <= 1e-8);
    rem[t] = sol.remainder_norm;
    // on the grid-consistent vector the exponential is exact
    auto exact = build_cgo_bvp(op, -100.0, refine_to_grid(p, g.h()).zeta1);
    CHECK(exact.remainder_norm <= 1e-10);
  }
  CHECK(rem[0] / rem[1] == doctest::Approx(4.0).epsilon(0.15));

  RectGrid g(33, 33);
  RVec q = bump(g);
  for (int m = 1; m <= 2; ++m) {
    auto op = assemble(m, q, g);
    double prev = 1e300;
    for (double lambda : {-1e2, -1e3, -1e4}) {
      auto p = refine_to_grid(make_pair(m, {1.0, 0.0}, lambda), g.h());
      auto sol = build_cgo_bvp(op, lambda, p.zeta1);
      CHECK(sol.residual <= 1e-8);
      CHECK(sol.remainder_norm < prev);
      prev = sol.remainder_norm;
    }
  }
  auto deep = assemble(1, RVec::Constant(g.interior_count(), -1e4), g);
  CHECK_THROWS_AS(build_cgo_bvp(deep, -100.0, make_pair(1, {1.0, 0.0}, -100.0).zeta1), ResolventError);
}

TEST_CASE("fixed point correction") {
  RectGrid g(33, 33);
  auto zero_box = make_padded_box(g, RVec::Zero(g.interior_count()));
  auto p = refine_to_grid(make_pair(1, {std::numbers::pi, 0.0}, -200.0), g.h());
  auto none = solve_correction_fixed_point(zero_box, 1, -200.0, p.zeta1);
  CHECK(none.iterations == 1);
  CHECK(none.w.norm() == 0.0);

  RVec q = bump(g);
  auto box = make_padded_box(g, q);
  double prev = 1e300;
  for (double lambda : {-200.0, -400.0, -800.0, -1600.0}) {
    auto pl = refine_to_grid(make_pair(1, {std::numbers::pi, 0.0}, lambda), g.h());
    auto fp = solve_correction_fixed_point(box, 1, lambda, pl.zeta1);
    double wnorm = box.h * fp.w.norm(), qnorm = box.h * box.q.norm();
    CHECK(wnorm <= 2.0 * fp.inverse_norm * qnorm);
    CHECK(wnorm <= prev);
    prev = wnorm;
  }

  // agreement with the boundary value solution carrying the fixed-point data
  for (int m = 1; m <= 2; ++m) {
    double lambda = m == 1 ? -200.0 : -3000.0;
    auto op = assemble(m, q, g);
    auto pm = refine_to_grid(make_pair(m, {std::numbers::pi, 0.0}, lambda), g.h());
    auto fp = solve_correction_fixed_point(box, m, lambda, pm.zeta1);
    auto restricted = restrict_box(box, g, fp.w);
    auto sol = build_cgo_bvp(op, lambda, pm.zeta1, &restricted);
    double diff = g.h() * (sol.w.values - restricted.values).norm();
    double budget = cgo_residual_norm(op, lambda, pm.zeta1, restricted) + cgo_residual_norm(op, lambda, pm.zeta1, sol.w);
    CHECK(diff <= 5.0 * budget);
  }

  RectGrid even(34, 34);
  CHECK_THROWS_AS(make_padded_box(even, RVec::Zero(even.interior_count())), ArgumentError);
}
