#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;
};

std::string cli() {
  const char* p = std::getenv("BLLAB_CLI");
  REQUIRE_MESSAGE(p, "BLLAB_CLI must point at the command line tool");
  return p;
}

Result run(const std::string& args) {
  std::string cmd = "\"" + cli() + "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("bllab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

const std::string small = "--set grid.nx=13 --set grid.ny=13 ";

}  // namespace

TEST_CASE("print-config and help") {
  auto r = run("print-config");
  CHECK(r.status == 0);
  auto j = nlohmann::json::parse(r.output);
  CHECK(j.at("m") == 1);
  CHECK(run("--help").status == 0);
  CHECK(run("no-such-command").status == 2);
}

TEST_CASE("simulate then reconstruct with identical potentials") {
  fs::path out = scratch("null");
  auto sim = run(small + "-o " + out.string() + " simulate");
  REQUIRE(sim.status == 0);
  CHECK(fs::exists(out / "dataset.json"));
  CHECK(fs::exists(out / "simulate.manifest.json"));

  auto rec = run(small + "--set xi_max=6.3 -o " + out.string() + " reconstruct");
  REQUIRE_MESSAGE(rec.status == 0, rec.output);
  std::string header;
  auto rows = read_csv(out / "q_estimate.csv", &header);
  CHECK(header == "x,y,q_estimate,q_config");
  CHECK(rows.size() == 13u * 13u);
  for (const auto& row : rows) CHECK(std::abs(row[2]) <= 1e-12);
  CHECK(fs::exists(out / "fourier_samples.csv"));
  CHECK(fs::exists(out / "sweeps.csv"));

  auto manifest = nlohmann::json::parse(slurp(out / "reconstruct.manifest.json"));
  CHECK(manifest.at("exit_status") == 0);
  CHECK(manifest.at("config_hash").get<std::string>().size() == 16);
  CHECK(manifest.at("artifacts").size() >= 3);
}

TEST_CASE("simulation output is deterministic") {
  fs::path a = scratch("det_a"), b = scratch("det_b");
  std::string args = small + "--set potential.shape=bump --set potential.amplitude=4 --set noise=0.01 --set seed=9 ";
  REQUIRE(run(args + "-o " + a.string() + " simulate").status == 0);
  REQUIRE(run(args + "-j 1 -o " + b.string() + " simulate").status == 0);
  CHECK(slurp(a / "dataset.json") == slurp(b / "dataset.json"));
}

TEST_CASE("assumption table for the laplacian") {
  fs::path out = scratch("assume");
  auto r = run("--kind laplacian -o " + out.string() + " verify-assumptions");
  REQUIRE(r.status == 0);
  std::string header;
  auto rows = read_csv(out / "assumptions.csv", &header);
  CHECK(header == "lambda,min_scaled_im,sup_inv_tilde,bound,vectors");
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row[3] == doctest::Approx(1.0 / (2.0 * std::sqrt(-row[0]))).epsilon(1e-12));
    CHECK(row[2] <= row[3]);
    CHECK(row[1] >= 1.0);
  }
}

TEST_CASE("configuration errors exit with status 2") {
  fs::path out = scratch("errors");
  auto inc = run("--set schedule=[-1e3,-1e2] -o " + out.string() + " verify-assumptions");
  CHECK(inc.status == 2);
  CHECK(inc.output.find("schedule") != std::string::npos);

  auto unknown = run("--set bogus=1 print-config");
  CHECK(unknown.status == 2);
  CHECK(unknown.output.find("bogus") != std::string::npos);

  CHECK(run("--set m=3 print-config").status == 2);
  CHECK(run("--kind laplacian --set m=2 print-config").status == 2);

  fs::path bad = out / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run("-c " + bad.string() + " print-config").status == 2);
}

TEST_CASE("reconstruct refuses a dataset from another grid") {
  fs::path out = scratch("mismatch");
  REQUIRE(run(small + "-o " + out.string() + " simulate").status == 0);
  auto r = run("--set grid.nx=15 --set grid.ny=15 -o " + out.string() + " reconstruct");
  CHECK(r.status == 2);
  CHECK(r.output.find("grid") != std::string::npos);

  fs::path missing = scratch("missing");
  CHECK(run(small + "-o " + missing.string() + " reconstruct").status == 2);
}

TEST_CASE("decay study through the tool") {
  fs::path out = scratch("decay");
  auto r = run(small + "--set potential.shape=bump --set potential.amplitude=5 -o " + out.string() + " decay-study");
  REQUIRE_MESSAGE(r.status == 0, r.output);
  std::string header;
  auto rows = read_csv(out / "decay.csv", &header);
  CHECK(header == "lambda,norm,slope_so_far");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] < rows[0][1]);
  CHECK(rows[2][1] < rows[1][1]);
}
