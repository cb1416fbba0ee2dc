#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "bllab/dataset.hpp"

using namespace bllab;

namespace {

bool bit_equal(const SpectralDataset& a, const SpectralDataset& b) {
  if (a.records.size() != b.records.size()) return false;
  const auto &ha = a.header, &hb = b.header;
  if (ha.m != hb.m || ha.nx != hb.nx || ha.ny != hb.ny || ha.lx != hb.lx || ha.ly != hb.ly || ha.K != hb.K ||
      ha.M != hb.M || ha.noise_sigma != hb.noise_sigma || ha.noise_seed != hb.noise_seed ||
      ha.degenerate != hb.degenerate)
    return false;
  for (std::size_t r = 0; r < a.records.size(); ++r) {
    const auto &x = a.records[r], &y = b.records[r];
    if (x.k != y.k || x.lambda != y.lambda || x.traces.comp.size() != y.traces.comp.size()) return false;
    for (std::size_t c = 0; c < x.traces.comp.size(); ++c)
      if (x.traces.comp[c] != y.traces.comp[c]) return false;
  }
  return true;
}

SpectralDataset random_dataset(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> un(7, 11), um(1, 2);
  std::uniform_real_distribution<double> ua(-20, 20), us(0, 0.05);
  int n = un(rng), m = um(rng);
  RectGrid g(n, n, 1.0 + 0.1 * (n % 3));
  double a = ua(rng), b = ua(rng);
  auto op = assemble(m, sample_interior(g, [&](double x, double y) { return a * x * y + b * std::cos(3 * x); }), g);
  int K = std::min(g.interior_count(), 12);
  auto ds = simulate_measurement(op, K, us(rng), rng());
  std::uniform_int_distribution<int> umask(0, 3);
  int M = umask(rng);
  return M ? mask_low_modes(ds, M) : ds;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("bllab_test_" + name)).string();
}

}  // namespace

TEST_CASE("round trip of random datasets is bit exact") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 20; ++t) {
    auto ds = random_dataset(rng);
    std::string text = to_text(ds);
    auto back = from_text(text);
    CHECK(bit_equal(ds, back));
    CHECK(to_text(back) == text);
  }
  // signed zeros survive the text form
  std::mt19937_64 rng3(4);
  auto zeros = random_dataset(rng3);
  zeros.records[0].traces.comp[0](0) = -0.0;
  zeros.records[0].traces.comp[0](1) = 0.0;
  auto zback = from_text(to_text(zeros));
  CHECK(std::signbit(zback.records[0].traces.comp[0](0).real()));
  CHECK(!std::signbit(zback.records[0].traces.comp[0](1).real()));

  std::mt19937_64 rng2(99);
  auto ds = random_dataset(rng2);
  std::string path = temp_path("roundtrip.json");
  save(ds, path);
  CHECK(bit_equal(load(path), ds));
  std::filesystem::remove(path);
}

TEST_CASE("simulation is deterministic") {
  RectGrid g(11, 11);
  auto op1 = assemble(1, RVec::Zero(g.interior_count()), g), op2 = op1;
  auto a = simulate_measurement(op1, 20, 0.01, 7), b = simulate_measurement(op2, 20, 0.01, 7);
  CHECK(to_text(a) == to_text(b));
  auto c = simulate_measurement(op2, 20, 0.01, 8);
  CHECK(to_text(a) != to_text(c));
  auto clean = simulate_measurement(op1, 20);
  CHECK(bit_equal(from_text(to_text(clean)), clean));
  // eigenvalues are left exact by the noise
  for (std::size_t r = 0; r < a.records.size(); ++r) CHECK(a.records[r].lambda == clean.records[r].lambda);
}

TEST_CASE("constant potential shifts eigenvalues and keeps traces") {
  RectGrid g(13, 13);
  auto op0 = assemble(1, RVec::Zero(g.interior_count()), g);
  auto opc = assemble(1, RVec::Constant(g.interior_count(), 4.25), g);
  auto d0 = simulate_measurement(op0, 30), dc = simulate_measurement(opc, 30);
  std::vector<bool> degenerate(32, false);
  for (const auto& grp : d0.header.degenerate)
    for (int k : grp) degenerate[k] = true;
  CHECK(d0.header.degenerate.size() > 0);  // the square has symmetric pairs
  for (int k = 1; k <= 30; ++k) {
    const auto *r0 = d0.find(k), *rc = dc.find(k);
    CHECK(rc->lambda - r0->lambda == doctest::Approx(4.25).epsilon(1e-9));
    if (!degenerate[k]) CHECK((rc->traces.comp[0] - r0->traces.comp[0]).norm() <= 1e-8 * r0->traces.comp[0].norm());
  }
}

TEST_CASE("masking") {
  RectGrid g(13, 13);
  auto op = assemble(1, RVec::Zero(g.interior_count()), g);
  auto ds = simulate_measurement(op, 100);
  CHECK(bit_equal(mask_low_modes(ds, 0), ds));
  auto m3 = mask_low_modes(ds, 3);
  CHECK(m3.records.size() == 97);
  CHECK(m3.records.front().k == 4);
  CHECK(m3.header.M == 3);
  for (const auto& r : m3.records) {
    const auto* orig = ds.find(r.k);
    CHECK(orig->lambda == r.lambda);
    CHECK(orig->traces.comp[0] == r.traces.comp[0]);
  }
  CHECK(bit_equal(mask_low_modes(mask_low_modes(ds, 3), 7), mask_low_modes(ds, 7)));
  CHECK(bit_equal(mask_low_modes(mask_low_modes(ds, 7), 3), mask_low_modes(ds, 7)));
  CHECK_THROWS_AS(mask_low_modes(ds, 100), ArgumentError);
  CHECK_THROWS_AS(mask_low_modes(ds, -1), ArgumentError);
}

TEST_CASE("corrupted files are rejected") {
  std::mt19937_64 rng(5);
  auto ds = random_dataset(rng);
  std::string text = to_text(ds);

  CHECK_THROWS_AS(from_text(text.substr(0, text.size() / 2)), FormatError);
  CHECK_THROWS_AS(from_text(text.substr(0, text.size() - 4)), FormatError);
  CHECK_THROWS_AS(from_text(""), FormatError);

  // change one digit of one eigenvalue
  std::string flipped = text;
  auto pos = flipped.find("\"lambda\": ") + 12;
  flipped[pos] = flipped[pos] == '3' ? '4' : '3';
  try {
    from_text(flipped);
    FAIL("corrupted value accepted");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }

  std::string bumped = text;
  bumped.replace(bumped.find("\"version\": 1"), 12, "\"version\": 2");
  try {
    from_text(bumped);
    FAIL("future version accepted");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("unsupported dataset version") != std::string::npos);
  }

  // a dropped record with a recomputed checksum still fails the structural check
  SpectralDataset shorter = ds;
  shorter.records.pop_back();
  CHECK_THROWS_AS(from_text(to_text(shorter)), FormatError);
  CHECK_THROWS_AS(load(temp_path("does_not_exist.json")), FormatError);
}

TEST_CASE("degenerate groups") {
  std::vector<SpectralRecord> recs(5);
  double lams[5] = {1.0, 2.0, 2.0 + 1e-9, 3.0, 3.0};
  for (int k = 0; k < 5; ++k) {
    recs[k].k = k + 1;
    recs[k].lambda = lams[k];
  }
  auto groups = degenerate_groups(recs);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0] == std::vector<int>{2, 3});
  CHECK(groups[1] == std::vector<int>{4, 5});
}
