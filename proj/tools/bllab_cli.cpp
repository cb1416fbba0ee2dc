// Command-line front end: configuration in, CSV/JSON tables and a manifest out.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "bllab/cgo.hpp"
#include "bllab/config.hpp"
#include "bllab/dataset.hpp"
#include "bllab/dtn.hpp"
#include "bllab/reconstruction.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bllab;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kSuccess = 0, kConfigError = 2, kNumericalFailure = 3, kToleranceViolation = 4 };

struct ToleranceViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Run {
  std::string command;
  RunConfig cfg;
  json canonical;
  int jobs = 1;
  std::vector<std::string> artifacts;
  json summary = json::object();

  fs::path path(const std::string& name) const { return fs::path(cfg.output) / name; }

  std::ofstream open(const std::string& name) {
    fs::create_directories(cfg.output);
    std::ofstream out(path(name));
    if (!out) throw ArgumentError("cannot write to output directory '" + cfg.output + "'");
    out.precision(17);
    artifacts.push_back(name);
    return out;
  }
};

DiscreteOperator make_operator(const RunConfig& cfg, const PotentialRecipe& recipe) {
  RectGrid g = cfg.grid();
  return assemble(cfg.m, recipe.sample(g), g);
}

std::vector<double> schedule_or(const RunConfig& cfg, std::vector<double> fallback) {
  return cfg.schedule.empty() ? fallback : cfg.schedule;
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

void cmd_simulate(Run& run) {
  const RunConfig& cfg = run.cfg;
  DiscreteOperator op = make_operator(cfg, cfg.potential);
  SpectralDataset ds = simulate_measurement(op, cfg.mode_count(), cfg.noise, cfg.seed);
  if (cfg.mask > 0) ds = mask_low_modes(ds, cfg.mask);
  run.open("dataset.json");  // registers the artifact and creates the directory
  save(ds, run.path("dataset.json").string());
  run.summary = {{"records", ds.records.size()},
                 {"K", ds.header.K},
                 {"M", ds.header.M},
                 {"degenerate_groups", ds.header.degenerate.size()}};
}

void cmd_reconstruct(Run& run) {
  const RunConfig& cfg = run.cfg;
  std::string input = cfg.dataset.empty() ? run.path("dataset.json").string() : cfg.dataset;
  SpectralDataset ds = load(input);
  const auto& hd = ds.header;
  if (hd.m != cfg.m) throw ArgumentError("dataset m = " + std::to_string(hd.m) + " does not match config field 'm'");
  if (hd.nx != cfg.nx || hd.ny != cfg.ny || std::abs(hd.lx - cfg.lx) > 1e-12 || std::abs(hd.ly - cfg.ly) > 1e-12)
    throw ArgumentError("dataset grid descriptor does not match config field 'grid'");

  DiscreteOperator ref = make_operator(cfg, cfg.reference);
  SpectralDataset ds_ref = simulate_measurement(ref, hd.K, 0.0, cfg.seed);
  if (hd.M > 0) ds_ref = mask_low_modes(ds_ref, hd.M);

  ReconstructionConfig rc;
  rc.xi_max = cfg.xi_max;
  rc.schedule = cfg.schedule;
  rc.jobs = run.jobs;
  RectGrid g = cfg.grid();
  RVec truth(g.node_count());
  auto q1 = cfg.potential.function(g), q2 = cfg.reference.function(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) truth(g.node(i, j)) = q1(g.x(i), g.y(j)) - q2(g.x(i), g.y(j));
  ReconstructionResult res = reconstruct_full(ds, ds_ref, rc, truth.norm() > 0 ? &truth : nullptr);

  {
    auto out = run.open("q_estimate.csv");
    out << "x,y,q_estimate,q_config\n";
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        out << g.x(i) << ',' << g.y(j) << ',' << res.q_estimate(g.node(i, j)) << ',' << truth(g.node(i, j)) << '\n';
  }
  {
    auto out = run.open("fourier_samples.csv");
    out << "xi1,xi2,lambda,re,im,exponent_range,noise\n";
    for (const auto& s : res.samples)
      out << s.xi[0] << ',' << s.xi[1] << ',' << s.lambda << ',' << s.value.real() << ',' << s.value.imag() << ','
          << s.exponent_range << ',' << s.noise << '\n';
  }
  int skipped = 0;
  {
    auto out = run.open("sweeps.csv");
    out << "xi1,xi2,lambda,re,im,exponent_range,noise,endpoint_re,endpoint_im,extrapolant_re,extrapolant_im,skipped\n";
    for (const auto& sw : res.sweeps) {
      skipped += sw.skipped;
      for (const auto& s : sw.sweep)
        out << sw.xi[0] << ',' << sw.xi[1] << ',' << s.lambda << ',' << s.value.real() << ',' << s.value.imag()
            << ',' << s.exponent_range << ',' << s.noise << ',' << sw.result.endpoint.real() << ','
            << sw.result.endpoint.imag() << ',' << sw.result.extrapolant.real() << ','
            << sw.result.extrapolant.imag() << ',' << sw.skipped << '\n';
    }
  }
  run.summary = {{"dataset", input},
                 {"samples", res.samples.size()},
                 {"skipped_schedule_points", skipped},
                 {"imaginary_residue", res.imaginary_residue}};
  if (res.relative_error) run.summary["relative_error_vs_config"] = *res.relative_error;
}

void cmd_verify(Run& run) {
  const RunConfig& cfg = run.cfg;
  auto schedule = schedule_or(cfg, {-1e3, -1e4, -1e5, -1e6});
  AssumptionReport rep = verify_assumptions(cfg.m, cfg.xi_samples, schedule, cfg.shift_count);
  auto out = run.open("assumptions.csv");
  out << "lambda,min_scaled_im,sup_inv_tilde,bound,vectors\n";
  for (const auto& r : rep.rows)
    out << r.lambda << ',' << r.min_scaled_im << ',' << r.sup_inv_tilde << ',' << r.bound << ',' << r.vectors << '\n';
  run.summary = {{"violations", rep.violations}};
  if (!rep.ok()) throw ToleranceViolation("assumption check failed: " + rep.violations.front());
}

void cmd_decay(Run& run) {
  const RunConfig& cfg = run.cfg;
  DiscreteOperator op1 = make_operator(cfg, cfg.potential), op2 = make_operator(cfg, cfg.reference);
  auto rows = decay_study(op1, op2, schedule_or(cfg, {-1e2, -1e3, -1e4}));
  auto out = run.open("decay.csv");
  write_decay_csv(out, rows);
  bool decreasing = true;
  for (std::size_t k = 1; k < rows.size(); ++k) decreasing = decreasing && rows[k].norm < rows[k - 1].norm;
  run.summary = {{"strictly_decreasing", decreasing}};
  if (!decreasing) throw ToleranceViolation("difference map norm is not strictly decreasing");
}

void cmd_certify(Run& run) {
  const RunConfig& cfg = run.cfg;
  DiscreteOperator op1 = make_operator(cfg, cfg.potential), op2 = make_operator(cfg, cfg.reference);
  CertificateConfig cc;
  cc.M = cfg.mask;
  cc.xi = cfg.certificate_xi;
  cc.schedule = schedule_or(cfg, {-1e4, -2e4, -3e4});
  cc.K = cfg.modes > 0 ? cfg.modes : -1;
  CertificateReport rep = incomplete_certificate(op1, op2, cc);

  json rows = json::array();
  std::string problem;
  for (const auto& r : rep.rows) {
    json c = json::array();
    for (Eigen::Index l = 0; l < r.c.size(); ++l) c.push_back(complex_json(r.c(l)));
    rows.push_back({{"lambda", r.lambda},
                    {"c", c},
                    {"coefficient_norm", r.coefficient_norm},
                    {"constraint_residual", r.constraint_residual},
                    {"series_value", complex_json(r.series_value)},
                    {"volume_value", complex_json(r.volume_value)},
                    {"relative_mismatch", r.relative_mismatch},
                    {"exponent_range", r.exponent_range},
                    {"step_from_previous", r.step_from_previous}});
    if (problem.empty() && r.constraint_residual > 1e-10) problem = "constraint residual above 1e-10";
    if (problem.empty() && std::abs(r.coefficient_norm - 1.0) > 1e-12) problem = "coefficients are not normalized";
    if (problem.empty() && !(r.relative_mismatch <= 0.05)) problem = "series and volume pairing differ by more than 5%";
  }
  json report = {{"m", rep.m},
                 {"M", rep.M},
                 {"L", rep.L},
                 {"xi", cc.xi},
                 {"degenerate_withheld", rep.degenerate_withheld},
                 {"rows", rows},
                 {"factor_excluded_nodes", rep.factor_excluded},
                 {"factor_modulus_min", rep.factor_modulus.size() ? rep.factor_modulus.minCoeff() : 0.0},
                 {"factor_modulus_max", rep.factor_modulus.size() ? rep.factor_modulus.maxCoeff() : 0.0}};
  auto out = run.open("certificate.json");
  out << report.dump(2) << '\n';
  run.summary = {{"rows", rep.rows.size()}};
  if (!problem.empty()) throw ToleranceViolation(problem);
}

void cmd_weyl(Run& run) {
  const RunConfig& cfg = run.cfg;
  DiscreteOperator op = make_operator(cfg, cfg.potential);
  int K = cfg.modes > 0 ? cfg.modes : std::min(100, (cfg.nx - 2) * (cfg.ny - 2));
  auto pairs = eigen_decompose(op, K);
  std::vector<double> ev;
  for (const auto& p : pairs) ev.push_back(p.lambda);
  {
    auto out = run.open("eigenvalues.csv");
    out << "k,lambda\n";
    for (const auto& p : pairs) out << p.k << ',' << p.lambda << '\n';
  }
  const int k_lo = 10, k_hi = std::min(100, K);
  // an order-2m operator in two dimensions grows like k^{2m/2}
  double slope = weyl_fit(ev, k_lo, k_hi), target = cfg.m, stated = 0.5 * cfg.m;
  double deviation = std::abs(slope - target) / target;
  {
    auto out = run.open("weyl.csv");
    out << "k_lo,k_hi,slope,target,relative_deviation,stated_exponent\n";
    out << k_lo << ',' << k_hi << ',' << slope << ',' << target << ',' << deviation << ',' << stated << '\n';
  }
  run.summary = {{"slope", slope}, {"target", target}, {"stated_exponent", stated}};
  if (deviation > 0.15) throw ToleranceViolation("Weyl slope deviates from m by more than 15%");
}

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

void write_manifest(const Run& run, int status, const std::string& message, double seconds) {
  json manifest = {{"command", run.command},
                   {"config", run.canonical},
                   {"config_hash", config_hash(run.canonical)},
                   {"versions",
                    {{"bllab", kVersion},
                     {"dataset_format", DatasetHeader::kVersion},
                     {"eigen", eigen_version()},
                     {"compiler", __VERSION__}}},
                   {"jobs", run.jobs},
                   {"wall_time_seconds", seconds},
                   {"artifacts", run.artifacts},
                   {"summary", run.summary},
                   {"exit_status", status},
                   {"message", message}};
  fs::create_directories(run.cfg.output);
  std::ofstream out(run.path(run.command + ".manifest.json"));
  out << manifest.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral inverse problem experiments for polyharmonic operators on a grid"};
  app.require_subcommand(1, 1);

  std::string config_path, kind, output;
  std::vector<std::string> overrides;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("--set", overrides, "Override a config field, key=value (dotted keys for nesting)");
  app.add_option("--kind", kind, "Operator kind: laplacian or polyharmonic");
  app.add_option("-o,--output", output, "Output directory");
  app.add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Forward model to a spectral dataset file"},
      {"reconstruct", "Dataset and config to a reconstructed contrast"},
      {"verify-assumptions", "Characteristic vector bounds to CSV"},
      {"decay-study", "Norm of the difference map along the schedule to CSV"},
      {"incomplete-certify", "Certificate for data with withheld modes to JSON"},
      {"weyl", "Eigenvalue growth slope to CSV"},
      {"print-config", "Print the effective configuration"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }
  Run run;
  run.command = app.get_subcommands().front()->get_name();
  run.jobs = jobs;

  try {
    json doc = config_path.empty() ? json::object() : read_json_file(config_path);
    if (!kind.empty()) {
      doc["kind"] = kind;
      if (kind == "laplacian") doc["m"] = 1;
    }
    // explicit overrides come last, so a contradiction reaches validation
    for (const auto& o : overrides) apply_override(doc, o);
    if (!output.empty()) doc["output"] = output;
    run.cfg = parse_config(doc);
    run.canonical = to_json(run.cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (run.command == "print-config") {
    std::cout << run.canonical.dump(2) << '\n';
    return kSuccess;
  }

  auto start = std::chrono::steady_clock::now();
  int status = kSuccess;
  std::string message = "ok";
  try {
    if (run.command == "simulate") cmd_simulate(run);
    else if (run.command == "reconstruct") cmd_reconstruct(run);
    else if (run.command == "verify-assumptions") cmd_verify(run);
    else if (run.command == "decay-study") cmd_decay(run);
    else if (run.command == "incomplete-certify") cmd_certify(run);
    else if (run.command == "weyl") cmd_weyl(run);
  } catch (const ToleranceViolation& e) {
    status = kToleranceViolation;
    message = e.what();
  } catch (const ArgumentError& e) {
    status = kConfigError;
    message = e.what();
  } catch (const PreconditionError& e) {
    status = kConfigError;
    message = e.what();
  } catch (const FormatError& e) {
    status = kConfigError;
    message = e.what();
  } catch (const std::exception& e) {
    status = kNumericalFailure;
    message = e.what();
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    write_manifest(run, status, message, seconds);
  } catch (const std::exception& e) {
    std::cerr << "could not write manifest: " << e.what() << '\n';
    if (status == kSuccess) status = kConfigError;
  }
  if (status != kSuccess) std::cerr << run.command << ": " << message << '\n';
  return status;
}
