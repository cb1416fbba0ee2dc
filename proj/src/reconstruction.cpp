#include "bllab/reconstruction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace bllab {

namespace {

constexpr cplx I(0.0, 1.0);

template <class F>
void parallel_for(int count, int jobs, F&& body) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// sum_l c_l f_l accumulated in extended precision: the combination cancels
// to far below the size of its terms.
BoundaryData combine(const std::vector<BoundaryData>& parts, const CVec& c) {
  using lcplx = std::complex<long double>;
  auto lc = [](cplx z) { return lcplx(z.real(), z.imag()); };
  auto dc = [](lcplx z) { return cplx(static_cast<double>(z.real()), static_cast<double>(z.imag())); };
  BoundaryData f = parts.front();
  for (std::size_t i = 0; i < f.comp.size(); ++i)
    for (Eigen::Index s = 0; s < f.comp[i].size(); ++s) {
      lcplx acc = 0;
      for (std::size_t l = 0; l < parts.size(); ++l) acc += lc(c(l)) * lc(parts[l].comp[i](s));
      f.comp[i](s) = dc(acc);
    }
  for (int k = 0; k < 4; ++k) {
    lcplx acc = 0;
    for (std::size_t l = 0; l < parts.size(); ++l) acc += lc(c(l)) * lc(parts[l].corner[k]);
    f.corner[k] = dc(acc);
  }
  return f;
}

double pair_range(const RectGrid& g, const CharacteristicPair& p) {
  return std::max(exponent_range(p.zeta1, g.lx(), g.ly()), exponent_range(p.zeta2, g.lx(), g.ly()));
}

}  // namespace

BoundaryData exponential_data(const RectGrid& g, int m, const CPoint& zeta) {
  const cplx z0 = zeta[0], z1 = zeta[1];
  return dirichlet_data(g, m, [&](double x, double y) { return std::exp(I * (z0 * x + z1 * y)); });
}

BoundaryData conjugate(const BoundaryData& f) {
  BoundaryData out = f;
  for (auto& c : out.comp) c = c.conjugate();
  for (auto& c : out.corner) c = std::conj(c);
  return out;
}

FourierSample fourier_sample(const SpectralDataset& ds_unknown, const SpectralDataset& ds_ref,
                             const CharacteristicPair& pair) {
  const RectGrid g = ds_unknown.grid();
  const int m = ds_unknown.header.m;
  if (pair.m != m) throw ArgumentError("pair order does not match the dataset");
  BoundaryData f = exponential_data(g, m, pair.zeta1);
  BoundaryData data_v = exponential_data(g, m, pair.zeta2);
  SeriesResult series = dtn_difference_from_spectra(ds_unknown, ds_ref, pair.lambda, f);
  FourierSample s;
  s.xi = pair.xi;
  s.lambda = pair.lambda;
  // The q2-solution v enters only through its Dirichlet data.
  s.value = -boundary_functional(g, m, series.traces, conjugate(data_v));
  s.exponent_range = pair_range(g, pair);
  // The value is a difference of two sums over modes of b_k(f) b_k(conj g) / (lambda_k - lambda);
  // rounding is bounded by eps times the same sums of absolute boundary products.
  const BoundaryData gbar = conjugate(data_v);
  auto absolute = [&](const TraceSet& t, const BoundaryData& d) {
    double acc = 0;
    for (int i = 0; i < m; ++i) {
      const CVec& tc = t.comp[m == 1 ? 0 : 1 - i];
      acc += g.h() * tc.cwiseAbs().dot(d.comp[i].cwiseAbs());
    }
    for (int c = 0; m == 2 && c < 4; ++c) acc += std::abs(d.corner[c]) * t.comp[0].cwiseAbs().maxCoeff();
    return acc;
  };
  double bound = 0;
  for (const auto* ds : {&ds_unknown, &ds_ref})
    for (const auto& r : ds->records)
      bound += absolute(r.traces, f) * absolute(r.traces, gbar) / std::abs(r.lambda - pair.lambda);
  s.noise = std::numeric_limits<double>::epsilon() * bound;
  return s;
}

FourierSample fourier_sample(const SpectralDataset& ds_unknown, const SpectralDataset& ds_ref, const RPoint& xi,
                             double lambda) {
  const RectGrid g = ds_unknown.grid();
  CharacteristicPair p = refine_to_grid(make_pair(ds_unknown.header.m, xi, lambda), g.h());
  return fourier_sample(ds_unknown, ds_ref, p);
}

double data_scale(const SpectralDataset& ds_unknown, const SpectralDataset& ds_ref) {
  const std::size_t n = std::min(ds_unknown.records.size(), ds_ref.records.size());
  double shift = 0;
  for (std::size_t k = 0; k < n; ++k) shift += ds_unknown.records[k].lambda - ds_ref.records[k].lambda;
  const RectGrid g = ds_unknown.grid();
  double s = n ? std::abs(shift / n) * g.lx() * g.ly() : 0.0;
  return s > 0 ? s : 1.0;
}

Extrapolation lambda_extrapolate(const std::vector<FourierSample>& sweep, int m) {
  if (sweep.empty()) throw ArgumentError("extrapolation needs at least one sample");
  Extrapolation e;
  auto most = std::min_element(sweep.begin(), sweep.end(),
                               [](const FourierSample& a, const FourierSample& b) { return a.lambda < b.lambda; });
  e.endpoint = most->value;
  if (sweep.size() < 3) {
    e.extrapolant = e.endpoint;
    return e;
  }
  // least squares for a + b s, s = |lambda|^{-1/(2m)}
  double n = 0, ss = 0, sss = 0;
  cplx sv = 0, ssv = 0;
  for (const auto& p : sweep) {
    double s = std::pow(std::abs(p.lambda), -1.0 / (2 * m));
    n += 1;
    ss += s;
    sss += s * s;
    sv += p.value;
    ssv += s * p.value;
  }
  double det = n * sss - ss * ss;
  e.extrapolant = std::abs(det) > 1e-300 ? (sss * sv - ss * ssv) / det : sv / n;
  e.spread = std::abs(e.endpoint - e.extrapolant);
  return e;
}

RVec invert_fourier(const std::vector<FourierSample>& samples, const RectGrid& g, double period) {
  const double step = 2 * std::numbers::pi / period;
  std::map<std::pair<int, int>, cplx> lattice;
  for (const auto& s : samples) {
    double fa = s.xi[0] / step, fb = s.xi[1] / step;
    int a = static_cast<int>(std::lround(fa)), b = static_cast<int>(std::lround(fb));
    if (std::abs(fa - a) > 1e-9 || std::abs(fb - b) > 1e-9)
      throw ArgumentError("sample frequency is not on the synthesis lattice");
    lattice[{a, b}] = s.value;
  }
  for (const auto& [key, v] : lattice)
    if (!lattice.count({-key.first, -key.second}))
      throw ArgumentError("sample lattice is not symmetric: missing the mirror of (" + std::to_string(key.first) +
                          ", " + std::to_string(key.second) + ")");
  // conjugate symmetry from the canonical half
  for (auto& [key, v] : lattice) {
    auto [a, b] = key;
    if (a == 0 && b == 0) v = v.real();
    else if (b < 0 || (b == 0 && a < 0)) v = std::conj(lattice.at({-a, -b}));
  }
  RVec out(g.node_count());
  double max_re = 0, max_im = 0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      cplx acc = 0;
      for (const auto& [key, v] : lattice)
        acc += v * std::exp(-I * step * (key.first * g.x(i) + key.second * g.y(j)));
      acc /= period * period;
      out(g.node(i, j)) = acc.real();
      max_re = std::max(max_re, std::abs(acc.real()));
      max_im = std::max(max_im, std::abs(acc.imag()));
    }
  if (max_im > 1e-6 * std::max(max_re, 1e-300) && max_im > 1e-300)
    throw NumericalError("imaginary residue of the synthesis exceeds 1e-6 relative");
  return out;
}

std::vector<double> default_schedule(int m, double xi_max) {
  std::vector<double> s;
  double start = m == 1 ? -25.0 : -std::pow(xi_max * xi_max / (1.0 + std::cos(std::numbers::pi / m)), m);
  for (int j = 0; j < 6; ++j) s.push_back(start * std::pow(2.0, j));
  return s;
}

double relative_l2(const RVec& estimate, const RVec& truth) {
  double d = truth.norm();
  return d > 0 ? (estimate - truth).norm() / d : estimate.norm();
}

ReconstructionResult reconstruct_full(const SpectralDataset& ds_unknown, const SpectralDataset& ds_ref,
                                      const ReconstructionConfig& cfg, const RVec* truth) {
  const RectGrid g = ds_unknown.grid();
  const int m = ds_unknown.header.m;
  const double period = 2.0 * std::max(g.lx(), g.ly());
  const double step = 2 * std::numbers::pi / period;
  std::vector<double> schedule = cfg.schedule.empty() ? default_schedule(m, cfg.xi_max) : cfg.schedule;
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] < schedule[k - 1])) throw ArgumentError("lambda schedule must be strictly decreasing");

  // canonical half of the lattice, the rest follows by conjugation
  std::vector<std::pair<int, int>> half;
  const int amax = static_cast<int>(std::floor(cfg.xi_max / step + 1e-9));
  for (int b = 0; b <= amax; ++b)
    for (int a = -amax; a <= amax; ++a) {
      if (b == 0 && a < 0) continue;
      if (std::hypot(a, b) * step <= cfg.xi_max * (1 + 1e-12)) half.emplace_back(a, b);
    }

  const double noise_limit = cfg.noise_cap * data_scale(ds_unknown, ds_ref);
  ReconstructionResult res;
  res.sweeps.resize(half.size());
  parallel_for(static_cast<int>(half.size()), cfg.jobs, [&](int idx) {
    SweepDiagnostics& d = res.sweeps[idx];
    d.xi = {half[idx].first * step, half[idx].second * step};
    for (double lambda : schedule) {
      CharacteristicPair p;
      try {
        p = refine_to_grid(make_pair(m, d.xi, lambda), g.h());
      } catch (const PreconditionError&) {
        ++d.skipped;
        continue;
      }
      if (pair_range(g, p) > cfg.range_cap) {
        ++d.skipped;
        continue;
      }
      FourierSample s = fourier_sample(ds_unknown, ds_ref, p);
      if (s.noise > noise_limit) {
        ++d.skipped;
        continue;
      }
      d.sweep.push_back(s);
    }
    if (d.sweep.empty())
      throw PreconditionError("no admissible schedule point for xi = (" + std::to_string(d.xi[0]) + ", " +
                              std::to_string(d.xi[1]) + ")");
    d.result = lambda_extrapolate(d.sweep, m);
  });

  for (const auto& d : res.sweeps) {
    FourierSample s = d.sweep.back();
    s.value = d.result.endpoint;
    res.samples.push_back(s);
    if (d.xi[0] != 0.0 || d.xi[1] != 0.0) {
      FourierSample mirror = s;
      mirror.xi = {-s.xi[0], -s.xi[1]};
      mirror.value = std::conj(s.value);
      res.samples.push_back(mirror);
    }
  }
  res.q_estimate = invert_fourier(res.samples, g, period);
  if (truth) res.relative_error = relative_l2(res.q_estimate, *truth);
  return res;
}

CVec constrained_coefficients(const CMat& h) {
  const int rows = static_cast<int>(h.rows());
  const int cols = static_cast<int>(h.cols());
  if (cols != rows + 1) throw ArgumentError("constrained_coefficients needs one more candidate than constraints");
  if (rows == 0) return CVec::Ones(1);
  // Row and column equilibration leaves the null space unchanged and keeps the
  // backward error proportional to each entry rather than to the largest column.
  RVec col_scale(cols);
  for (int l = 0; l < cols; ++l) {
    double n = h.col(l).norm();
    col_scale(l) = n > 0 ? 1.0 / n : 1.0;
  }
  CMat scaled = h * col_scale.asDiagonal();
  for (int r = 0; r < rows; ++r) {
    double n = scaled.row(r).norm();
    if (n > 0) scaled.row(r) /= n;
  }
  Eigen::JacobiSVD<CMat> svd(scaled, Eigen::ComputeFullV);
  const RVec& sv = svd.singularValues();
  // only exact ties (to rounding) widen the null space beyond one vector
  const double tol = std::numeric_limits<double>::epsilon() * cols * std::max(sv.size() ? sv(0) : 0.0, 1e-300);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  CMat null = col_scale.asDiagonal() * svd.matrixV().rightCols(cols - rank);
  if (null.cols() > 1) {
    Eigen::HouseholderQR<CMat> qr(null);
    null = qr.householderQ() * CMat::Identity(cols, null.cols());
  } else {
    null /= null.norm();
  }
  CVec c;
  for (int i = 0; i < cols; ++i) {
    CVec proj = null * null.row(i).adjoint();
    if (proj.norm() > 1e-8) {
      c = proj / proj.norm();
      break;
    }
  }
  if (rank == cols - 1) {
    // Refinement with residuals accumulated in extended precision; nearly
    // dependent constraints otherwise leave |H c| at eps ||H|| / sigma_min.
    Eigen::JacobiSVD<CMat> plain(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVec& sp = plain.singularValues();
    for (int it = 0; it < 3; ++it) {
      CVec r(rows);
      for (int k = 0; k < rows; ++k) {
        std::complex<long double> acc = 0;
        for (int l = 0; l < cols; ++l)
          acc += std::complex<long double>(h(k, l).real(), h(k, l).imag()) *
                 std::complex<long double>(c(l).real(), c(l).imag());
        r(k) = cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
      }
      CVec delta = CVec::Zero(cols);
      for (int i = 0; i < sp.size(); ++i)
        if (i < rank) delta += plain.matrixV().col(i) * (plain.matrixU().col(i).dot(r) / sp(i));
      c -= delta;
      c /= c.norm();
    }
  }
  for (int i = 0; i < cols; ++i)
    if (std::abs(c(i)) > 1e-12) {
      c *= std::abs(c(i)) / c(i);
      c(i) = std::abs(c(i));
      break;
    }
  return c;
}

cplx volume_pairing(const DiscreteOperator& op1, const DiscreteOperator& op2, const GridField& u,
                    const GridField& v) {
  const RectGrid& g = op1.grid;
  cplx acc = 0;
  for (int p = 0; p < g.interior_count(); ++p) {
    auto [i, j] = g.interior_node(p);
    int n = g.node(i, j);
    acc += (op1.q(p) - op2.q(p)) * u.values(n) * std::conj(v.values(n));
  }
  return acc * g.h() * g.h();
}

CertificateReport incomplete_certificate(DiscreteOperator& op1, DiscreteOperator& op2, const CertificateConfig& cfg) {
  if (op1.m != op2.m || !op1.grid.same_as(op2.grid)) throw ArgumentError("operators must share m and grid");
  const RectGrid& g = op1.grid;
  const int m = op1.m;
  const int K = cfg.K < 0 ? g.interior_count() : cfg.K;
  if (cfg.M < 0 || cfg.M >= K) throw ArgumentError("withheld count must satisfy 0 <= M < K");
  for (std::size_t k = 1; k < cfg.schedule.size(); ++k)
    if (!(cfg.schedule[k] < cfg.schedule[k - 1])) throw ArgumentError("lambda schedule must be strictly decreasing");

  SpectralDataset ds1 = simulate_measurement(op1, K, 0.0, 1, cfg.eig);
  SpectralDataset ds2 = simulate_measurement(op2, K, 0.0, 1, cfg.eig);
  SpectralDataset tail1 = mask_low_modes(ds1, cfg.M), tail2 = mask_low_modes(ds2, cfg.M);

  CertificateReport rep;
  rep.m = m;
  rep.M = cfg.M;
  rep.L = 2 * cfg.M * m + 1;
  for (const auto* ds : {&ds1, &ds2})
    for (const auto& grp : ds->header.degenerate)
      if (grp.front() <= cfg.M) rep.degenerate_withheld.push_back(grp);

  std::vector<const SpectralRecord*> withheld;
  for (int k = 0; k < cfg.M; ++k) {
    withheld.push_back(&ds1.records[k]);
    withheld.push_back(&ds2.records[k]);
  }

  CVec previous;
  for (double lambda : cfg.schedule) {
    CertificateRow row;
    row.lambda = lambda;
    CharacteristicPair pair = refine_to_grid(make_pair(m, cfg.xi, lambda), g.h());
    ShiftFamily fam = make_shift_family(m, cfg.xi, lambda, rep.L);
    std::vector<BoundaryData> cand;
    row.exponent_range = pair_range(g, pair);
    for (const auto& eta : fam.shifts) {
      CPoint v(eta.size());
      for (std::size_t i = 0; i < eta.size(); ++i) v[i] = fam.pair.zeta1[i] + eta[i];
      CPoint z = refine_vector_to_grid(v, m, lambda, g.h());
      row.exponent_range = std::max(row.exponent_range, exponent_range(z, g.lx(), g.ly()));
      cand.push_back(exponential_data(g, m, z));
    }
    CMat h(static_cast<int>(withheld.size()) * m, rep.L);
    for (std::size_t r = 0; r < withheld.size(); ++r)
      for (int i = 0; i < m; ++i)
        for (int l = 0; l < rep.L; ++l)
          h(static_cast<int>(r) * m + i, l) = boundary_functional_part(g, m, withheld[r]->traces, cand[l], i);
    row.c = constrained_coefficients(h);
    row.coefficient_norm = row.c.squaredNorm();
    const double hn = h.norm();
    row.constraint_residual = hn > 0 ? (h * row.c).cwiseAbs().maxCoeff() / (hn * row.c.norm()) : 0.0;

    BoundaryData f = combine(cand, row.c);
    BoundaryData data_v = exponential_data(g, m, pair.zeta2);
    SeriesResult series = dtn_difference_from_spectra(tail1, tail2, lambda, f);
    row.series_value = -boundary_functional(g, m, series.traces, conjugate(data_v));
    GridField u1 = solve_bvp(op1, lambda, f);
    GridField v = solve_bvp(op2, lambda, data_v);
    row.volume_value = volume_pairing(op1, op2, u1, v);
    double scale = std::abs(row.volume_value);
    row.relative_mismatch = scale > 0 ? std::abs(row.series_value - row.volume_value) / scale
                                      : std::abs(row.series_value);
    if (previous.size() == row.c.size()) row.step_from_previous = (row.c - previous).norm();
    previous = row.c;
    rep.rows.push_back(row);
  }

  if (!rep.rows.empty()) {
    const CVec& c = rep.rows.back().c;
    rep.factor_modulus.resize(g.node_count());
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        cplx acc = 0;
        for (int l = 0; l < c.size(); ++l) acc += c(l) * std::exp(I * double(l + 1) * g.x(i));
        rep.factor_modulus(g.node(i, j)) = std::abs(acc);
      }
    const double mx = rep.factor_modulus.maxCoeff();
    for (int n = 0; n < rep.factor_modulus.size(); ++n)
      if (rep.factor_modulus(n) < 0.05 * mx) ++rep.factor_excluded;
  }
  return rep;
}

}  // namespace bllab
