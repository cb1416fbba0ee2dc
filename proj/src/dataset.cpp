#include "bllab/dataset.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace bllab {

namespace {

using nlohmann::json;

// %.17g, except that negative zero keeps a decimal point: a bare "-0" parses
// back as the integer 0 and would lose its sign.
std::string num(double v) {
  if (v == 0.0 && std::signbit(v)) return "-0.0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

// Canonical token stream hashed by the checksum: header numbers, then each
// record's index, eigenvalue and trace values, all in %.17g.
std::string canonical(const SpectralDataset& ds) {
  const auto& h = ds.header;
  std::string s;
  auto put = [&](const std::string& t) {
    s += t;
    s += ',';
  };
  put(std::to_string(h.version));
  put(std::to_string(h.m));
  put(std::to_string(h.dimension));
  put(std::to_string(h.nx));
  put(std::to_string(h.ny));
  put(num(h.lx));
  put(num(h.ly));
  put(std::to_string(h.K));
  put(std::to_string(h.M));
  put(num(h.noise_sigma));
  put(std::to_string(h.noise_seed));
  for (const auto& g : h.degenerate) {
    s += '[';
    for (int k : g) put(std::to_string(k));
    s += ']';
  }
  for (const auto& r : ds.records) {
    put(std::to_string(r.k));
    put(num(r.lambda));
    for (const auto& c : r.traces.comp)
      for (Eigen::Index i = 0; i < c.size(); ++i) put(num(c(i).real()));
    s += ';';
  }
  return s;
}

}  // namespace

RectGrid SpectralDataset::grid() const { return RectGrid(header.nx, header.ny, header.lx, header.ly); }

const SpectralRecord* SpectralDataset::find(int k) const {
  for (const auto& r : records)
    if (r.k == k) return &r;
  return nullptr;
}

void SpectralDataset::check() const {
  const RectGrid g = grid();
  if (header.M < 0 || header.M >= header.K) throw FormatError("mask must satisfy 0 <= M < K");
  if (static_cast<int>(records.size()) != header.K - header.M)
    throw FormatError("record count does not match K - M");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.k != header.M + 1 + static_cast<int>(i)) throw FormatError("record indices must run M+1..K");
    if (i > 0 && r.lambda < records[i - 1].lambda) throw FormatError("eigenvalues must be non-decreasing");
    if (r.traces.m != header.m || static_cast<int>(r.traces.comp.size()) != header.m)
      throw FormatError("trace component count must equal m");
    for (const auto& c : r.traces.comp)
      if (c.size() != g.boundary_count()) throw FormatError("trace length does not match the grid");
  }
}

std::vector<std::vector<int>> degenerate_groups(const std::vector<SpectralRecord>& records) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  for (std::size_t i = 0; i < records.size(); ++i) {
    bool tie = i > 0 && std::abs(records[i].lambda - records[i - 1].lambda) <
                            1e-6 * (1.0 + std::abs(records[i].lambda));
    if (!tie) {
      if (cur.size() > 1) out.push_back(cur);
      cur.clear();
    }
    cur.push_back(records[i].k);
  }
  if (cur.size() > 1) out.push_back(cur);
  return out;
}

SpectralDataset simulate_measurement(DiscreteOperator& op, int K, double noise_sigma, std::uint64_t seed,
                                     const EigenOptions& opt) {
  if (K < 1) throw ArgumentError("mode count K must be positive");
  if (noise_sigma < 0) throw ArgumentError("noise level must be non-negative");
  const RectGrid& g = op.grid;
  // one extra eigenvalue shows whether the truncation cuts a degenerate group
  const bool probe = K < g.interior_count();
  auto pairs = eigen_decompose(op, probe ? K + 1 : K, opt);
  std::vector<SpectralRecord> spectrum;
  for (const auto& p : pairs) spectrum.push_back({p.k, p.lambda, {}});
  if (probe) pairs.pop_back();
  SpectralDataset ds;
  auto& h = ds.header;
  h.m = op.m;
  h.nx = g.nx();
  h.ny = g.ny();
  h.lx = g.lx();
  h.ly = g.ly();
  h.K = K;
  h.noise_sigma = noise_sigma;
  h.noise_seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (const auto& p : pairs) {
    SpectralRecord r{p.k, p.lambda, compact_traces(g, op.m, p.phi)};
    if (noise_sigma > 0) {
      for (auto& c : r.traces.comp) {
        double rms = c.norm() / std::sqrt(double(std::max<Eigen::Index>(c.size(), 1)));
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) += noise_sigma * rms * normal(rng);
      }
    }
    // traces are real; a signed-zero imaginary part would not survive the file
    for (auto& c : r.traces.comp) c = c.real().cast<cplx>();
    ds.records.push_back(std::move(r));
  }
  h.degenerate = degenerate_groups(spectrum);
  return ds;
}

SpectralDataset mask_low_modes(const SpectralDataset& ds, int M) {
  if (M < 0) throw ArgumentError("mask must be non-negative");
  if (M >= ds.header.K) throw ArgumentError("mask M must be below the mode count K");
  SpectralDataset out;
  out.header = ds.header;
  out.header.M = std::max(M, ds.header.M);
  for (const auto& r : ds.records)
    if (r.k > out.header.M) out.records.push_back(r);
  return out;
}

std::uint64_t dataset_checksum(const SpectralDataset& ds) { return fnv1a64(canonical(ds)); }

std::string to_text(const SpectralDataset& ds) {
  const auto& h = ds.header;
  std::ostringstream os;
  os << "{\n  \"format\": \"bllab-spectral-dataset\",\n  \"version\": " << h.version << ",\n  \"header\": {\n";
  os << "    \"m\": " << h.m << ",\n    \"dimension\": " << h.dimension << ",\n";
  os << "    \"grid\": {\"nx\": " << h.nx << ", \"ny\": " << h.ny << ", \"lx\": " << num(h.lx) << ", \"ly\": " << num(h.ly)
     << "},\n";
  os << "    \"K\": " << h.K << ",\n    \"M\": " << h.M << ",\n";
  os << "    \"noise_sigma\": " << num(h.noise_sigma) << ",\n    \"noise_seed\": " << h.noise_seed << ",\n";
  os << "    \"degenerate\": [";
  for (std::size_t g = 0; g < h.degenerate.size(); ++g) {
    os << (g ? ", [" : "[");
    for (std::size_t i = 0; i < h.degenerate[g].size(); ++i) os << (i ? ", " : "") << h.degenerate[g][i];
    os << "]";
  }
  os << "],\n    \"checksum\": \"" << hex(dataset_checksum(ds)) << "\"\n  },\n  \"records\": [";
  for (std::size_t r = 0; r < ds.records.size(); ++r) {
    const auto& rec = ds.records[r];
    os << (r ? ",\n" : "\n") << "    {\"k\": " << rec.k << ", \"lambda\": " << num(rec.lambda) << ", \"traces\": [";
    for (std::size_t c = 0; c < rec.traces.comp.size(); ++c) {
      os << (c ? ", [" : "[");
      const CVec& v = rec.traces.comp[c];
      for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << num(v(i).real());
      os << "]";
    }
    os << "]}";
  }
  os << "\n  ]\n}\n";
  return os.str();
}

SpectralDataset from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed or truncated dataset: ") + e.what());
  }
  SpectralDataset ds;
  try {
    if (doc.at("format").get<std::string>() != "bllab-spectral-dataset") throw FormatError("not a spectral dataset");
    int version = doc.at("version").get<int>();
    if (version != DatasetHeader::kVersion)
      throw FormatError("unsupported dataset version " + std::to_string(version) + " (expected " +
                        std::to_string(DatasetHeader::kVersion) + ")");
    const json& jh = doc.at("header");
    auto& h = ds.header;
    h.version = version;
    h.m = jh.at("m").get<int>();
    h.dimension = jh.at("dimension").get<int>();
    h.nx = jh.at("grid").at("nx").get<int>();
    h.ny = jh.at("grid").at("ny").get<int>();
    h.lx = jh.at("grid").at("lx").get<double>();
    h.ly = jh.at("grid").at("ly").get<double>();
    h.K = jh.at("K").get<int>();
    h.M = jh.at("M").get<int>();
    h.noise_sigma = jh.at("noise_sigma").get<double>();
    h.noise_seed = jh.at("noise_seed").get<std::uint64_t>();
    h.degenerate = jh.at("degenerate").get<std::vector<std::vector<int>>>();
    for (const json& jr : doc.at("records")) {
      SpectralRecord r;
      r.k = jr.at("k").get<int>();
      r.lambda = jr.at("lambda").get<double>();
      r.traces.m = h.m;
      for (const json& jc : jr.at("traces")) {
        auto vals = jc.get<std::vector<double>>();
        r.traces.comp.push_back(Eigen::Map<RVec>(vals.data(), Eigen::Index(vals.size())).cast<cplx>());
      }
      ds.records.push_back(std::move(r));
    }
    std::string stored = jh.at("checksum").get<std::string>();
    if (stored != hex(dataset_checksum(ds))) throw FormatError("dataset checksum mismatch");
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset field error: ") + e.what());
  }
  try {
    ds.check();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return ds;
}

void save(const SpectralDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << to_text(ds);
  if (!out) throw FormatError("write failed for " + path);
}

SpectralDataset load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

}  // namespace bllab
