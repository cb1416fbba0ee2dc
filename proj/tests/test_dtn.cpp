#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bllab/dtn.hpp"

using namespace bllab;

namespace {

const cplx I{0.0, 1.0};

RVec bump(const RectGrid& g, double amp = 5.0) {
  return sample_interior(g, [amp](double x, double y) {
    return amp * std::exp(-40.0 * ((x - 0.4) * (x - 0.4) + (y - 0.55) * (y - 0.55)));
  });
}

CVec apply(const DtNMatrix& d, const BoundaryData& f) { return d.matrix * f.stacked(); }

BoundaryData smooth_data(const RectGrid& g, int m) {
  return dirichlet_data(g, m, [](double x, double y) { return cplx(std::cos(2 * x + y), x * y); });
}

}  // namespace

TEST_CASE("direct DtN") {
  RectGrid g(17, 17);
  auto op1 = assemble(1, bump(g), g), op2 = assemble(1, bump(g), g);
  auto d1 = dtn_direct(op1, -50.0), d2 = dtn_direct(op2, -50.0);
  CHECK(d1.matrix == d2.matrix);
  CHECK(d1.provenance == DtNProvenance::Direct);
  CHECK(d1.matrix.allFinite());
  CHECK(d1.matrix.rows() == g.boundary_count());

  // exponential solution: the map returns its normal derivative at O(h^2)
  const double lambda = -30.0;
  const cplx zeta[2] = {1.0, I * std::sqrt(1.0 - lambda)};
  auto e = [&](double x, double y) { return std::exp(I * (zeta[0] * x + zeta[1] * y)); };
  double err[2];
  for (int t = 0; t < 2; ++t) {
    RectGrid gt(t == 0 ? 33 : 65, t == 0 ? 33 : 65);
    auto op = assemble(1, RVec::Zero(gt.interior_count()), gt);
    CVec got = apply(dtn_direct(op, lambda), dirichlet_data(gt, 1, e));
    double worst = 0;
    for (int s = 0; s < gt.boundary_count(); ++s) {
      const auto& sl = gt.slot(s);
      cplx expect = I * (zeta[0] * sl.nx + zeta[1] * sl.ny) * e(gt.x(sl.i), gt.y(sl.j));
      worst = std::max(worst, std::abs(got(s) - expect));
    }
    err[t] = worst;
  }
  CHECK(err[0] / err[1] > 3.0);

  // energy: <Lambda 1, 1> = int |grad u|^2 - lambda int |u|^2 grows as lambda decreases
  auto op0 = assemble(1, RVec::Zero(g.interior_count()), g);
  auto one = dirichlet_data(g, 1, [](double, double) { return cplx(1.0); });
  double prev = -1e300;
  for (double lambda_k : {-5.0, -50.0, -500.0}) {
    cplx energy = g.h() * apply(dtn_direct(op0, lambda_k), one).sum();
    CHECK(std::abs(energy.imag()) <= 1e-10 * std::abs(energy.real()));
    CHECK(energy.real() > prev);
    prev = energy.real();
  }
  CHECK_THROWS_AS(dtn_direct(op0, 100.0), ResolventError);
}

TEST_CASE("induced boundary form is symmetric") {
  RectGrid g(17, 17);
  for (int m = 1; m <= 2; ++m) {
    auto op = assemble(m, bump(g), g);
    auto d = dtn_difference_matrix(op, assemble(m, RVec::Zero(g.interior_count()), g), -60.0);
    CMat form = induced_boundary_form(g, m, d);
    CHECK((form - form.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * form.cwiseAbs().maxCoeff());
    CMat direct = induced_boundary_form(g, m, dtn_direct(op, -60.0, TraceStencil::Compact));
    CHECK((direct - direct.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * direct.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("spectral series against the direct difference") {
  RectGrid g(17, 17);
  for (int m = 1; m <= 2; ++m) {
    auto op1 = assemble(m, bump(g), g), op2 = assemble(m, RVec::Zero(g.interior_count()), g);
    auto direct = dtn_difference_direct(op1, op2, -80.0, smooth_data(g, m));
    int n = g.interior_count();
    auto ds1 = simulate_measurement(op1, n), ds2 = simulate_measurement(op2, n);
    auto series = dtn_difference_from_spectra(ds1, ds2, -80.0, smooth_data(g, m));
    CHECK(series.terms == n);
    double rel = boundary_norm(g, (series.traces - direct).stacked()) / boundary_norm(g, direct.stacked());
    CHECK(rel <= 1e-7);

    auto same = dtn_difference_from_spectra(ds1, ds1, -80.0, smooth_data(g, m));
    CHECK(same.traces.stacked().cwiseAbs().maxCoeff() == 0.0);

    // truncation error shrinks as more terms enter
    if (m == 1) {
      double prev = 1e300;
      for (int K : {50, 100, 200}) {
        auto part = dtn_difference_from_spectra(ds1, ds2, -80.0, smooth_data(g, m), K);
        double e = boundary_norm(g, (part.traces - direct).stacked());
        CHECK(e <= 1.1 * prev);
        prev = e;
      }
    }
  }
}

TEST_CASE("series argument checks") {
  RectGrid g(11, 11), other(13, 13);
  auto op1 = assemble(1, bump(g), g), op2 = assemble(1, RVec::Zero(g.interior_count()), g);
  auto opo = assemble(1, RVec::Zero(other.interior_count()), other);
  auto ds1 = simulate_measurement(op1, 30), ds2 = simulate_measurement(op2, 30), dso = simulate_measurement(opo, 30);
  auto f = smooth_data(g, 1);
  CHECK_THROWS_AS(dtn_difference_from_spectra(ds1, dso, -50.0, f), ArgumentError);
  CHECK_THROWS_AS(dtn_difference_from_spectra(ds1, mask_low_modes(ds2, 2), -50.0, f), ArgumentError);
  CHECK_THROWS_AS(dtn_difference_from_spectra(ds1, ds2, ds2.records[0].lambda, f), ResolventError);
}

TEST_CASE("decay study") {
  RectGrid g(17, 17);
  for (int m = 1; m <= 2; ++m) {
    auto op1 = assemble(m, bump(g), g), op2 = assemble(m, RVec::Zero(g.interior_count()), g);
    auto rows = decay_study(op1, op2, {-1e2, -1e3, -1e4});
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].norm < rows[0].norm);
    CHECK(rows[2].norm < rows[1].norm);
    CHECK(rows[2].slope_so_far < 0);

    auto zero = decay_study(op1, op1, {-1e2, -1e3});
    for (const auto& r : zero) CHECK(r.norm == 0.0);

    std::ostringstream csv;
    write_decay_csv(csv, rows);
    CHECK(csv.str().rfind("lambda,norm,slope_so_far\n", 0) == 0);
  }
  auto op = assemble(1, bump(g), g);
  CHECK_THROWS_AS(decay_study(op, op, {-1e3, -1e2}), ArgumentError);
}

TEST_CASE("truncation completes degenerate groups") {
  RectGrid g(13, 13);
  auto op = assemble(1, RVec::Zero(g.interior_count()), g);
  auto ds = simulate_measurement(op, g.interior_count());
  auto f = smooth_data(g, 1);
  const auto& grp = ds.header.degenerate.front();  // {2, 3} on the square
  REQUIRE(grp.size() >= 2);
  auto inside = dtn_difference_from_spectra(ds, ds, -50.0, f, grp.front());
  CHECK(inside.terms == grp.front());
  CHECK(inside.used[0] == grp.back());
  CHECK(inside.used[1] == grp.back());
  auto clean = dtn_difference_from_spectra(ds, ds, -50.0, f, 1);
  CHECK(clean.used[0] == 1);

  // a group that runs past the end of the data is dropped whole
  SpectralDataset shorter = ds;
  shorter.records.resize(3);
  shorter.header.degenerate = {{2, 3, 4}};
  CHECK(dtn_difference_from_spectra(shorter, shorter, -50.0, f, 2).used[0] == 1);
  CHECK(dtn_difference_from_spectra(shorter, shorter, -50.0, f, 3).used[0] == 1);

  // simulation flags a group cut by K through index K + 1
  auto two = simulate_measurement(op, 2);
  REQUIRE(two.header.degenerate.size() == 1);
  CHECK(two.header.degenerate.front() == std::vector<int>{2, 3});
  CHECK(dtn_difference_from_spectra(two, two, -50.0, f).used[0] == 1);
}
