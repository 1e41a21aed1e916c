#include "stdistill/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "stdistill/rng.hpp"

namespace stdistill {

namespace {

constexpr char kMagic[6] = {'S', 'T', 'D', 'S', '1', '\n'};

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

void validate(const Dataset& ds, const std::string& context) {
  const auto& g = ds.graph;
  const auto& s = ds.series;
  if (g.num_nodes < 1) throw ParseError(context + ": N must be >= 1");
  if (g.adjacency.size() != g.num_nodes * g.num_nodes)
    throw ParseError(context + ": adjacency size mismatch");
  for (double a : g.adjacency)
    if (a < 0.0) throw ParseError(context + ": adjacency must be non-negative");
  if (s.num_nodes != g.num_nodes)
    throw ParseError(context + ": series/graph node count mismatch");
  if (s.features.size() != s.total_steps * s.num_nodes * s.num_features)
    throw ParseError(context + ": feature payload size mismatch");
  if (s.tod_index.size() != s.total_steps || s.dow_index.size() != s.total_steps)
    throw ParseError(context + ": time index arrays must align with the step axis");
  for (auto v : s.tod_index)
    if (v >= kTimeOfDaySlots)
      throw ParseError(context + ": tod index " + std::to_string(v) + " out of range");
  for (auto v : s.dow_index)
    if (v >= kDayOfWeekSlots)
      throw ParseError(context + ": dow index " + std::to_string(int(v)) + " out of range");
}

struct Reader {
  std::ifstream in;
  std::size_t offset = 0;
  std::string path;

  void read(void* dst, std::size_t n, const char* what) {
    in.read(reinterpret_cast<char*>(dst), std::streamsize(n));
    if (std::size_t(in.gcount()) != n)
      throw ParseError(path + ": truncated while reading " + std::string(what) +
                       " at byte offset " + std::to_string(offset));
    offset += n;
  }
  std::uint64_t read_u64(const char* what) {
    std::uint64_t v;
    read(&v, sizeof v, what);
    return v;
  }
};

Dataset load_binary(const std::string& path) {
  Reader r;
  r.path = path;
  r.in.open(path, std::ios::binary);
  if (!r.in) throw ParseError(path + ": cannot open");
  char magic[6];
  r.read(magic, 6, "magic");
  if (std::memcmp(magic, kMagic, 6) != 0)
    throw ParseError(path + ": bad magic at byte offset 0");
  Dataset ds;
  std::uint64_t n = r.read_u64("N");
  std::uint64_t t = r.read_u64("T_total");
  std::uint64_t f = r.read_u64("F");
  std::uint64_t spd = r.read_u64("steps_per_day");
  (void)r.read_u64("flags");
  ds.graph.num_nodes = n;
  ds.graph.adjacency.resize(n * n);
  r.read(ds.graph.adjacency.data(), n * n * sizeof(double), "adjacency");
  ds.series.total_steps = t;
  ds.series.num_nodes = n;
  ds.series.num_features = f;
  ds.series.steps_per_day = spd;
  ds.series.features.resize(t * n * f);
  r.read(ds.series.features.data(), t * n * f * sizeof(double), "features");
  ds.series.tod_index.resize(t);
  r.read(ds.series.tod_index.data(), t * sizeof(std::uint16_t), "tod_index");
  ds.series.dow_index.resize(t);
  r.read(ds.series.dow_index.data(), t * sizeof(std::uint8_t), "dow_index");
  char extra;
  r.in.read(&extra, 1);
  if (r.in.gcount() != 0)
    throw ParseError(path + ": trailing bytes at offset " + std::to_string(r.offset));
  validate(ds, path);
  return ds;
}

Dataset load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    Dataset ds;
    ds.graph.num_nodes = j.at("N").get<std::size_t>();
    ds.graph.adjacency = j.at("adjacency").get<std::vector<double>>();
    ds.series.total_steps = j.at("T_total").get<std::size_t>();
    ds.series.num_nodes = ds.graph.num_nodes;
    ds.series.num_features = j.at("F").get<std::size_t>();
    ds.series.steps_per_day = j.at("steps_per_day").get<std::size_t>();
    ds.series.features = j.at("features").get<std::vector<double>>();
    ds.series.tod_index = j.at("tod_index").get<std::vector<std::uint16_t>>();
    ds.series.dow_index = j.at("dow_index").get<std::vector<std::uint8_t>>();
    validate(ds, path);
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  if (has_suffix(path, ".json")) return load_json(path);
  return load_binary(path);
}

void write_dataset(const std::string& path, const Dataset& ds) {
  validate(ds, path);
  if (has_suffix(path, ".json")) {
    nlohmann::json j;
    j["N"] = ds.graph.num_nodes;
    j["T_total"] = ds.series.total_steps;
    j["F"] = ds.series.num_features;
    j["steps_per_day"] = ds.series.steps_per_day;
    j["flags"] = 0;
    j["adjacency"] = ds.graph.adjacency;
    j["features"] = ds.series.features;
    j["tod_index"] = ds.series.tod_index;
    j["dow_index"] = ds.series.dow_index;
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out << j.dump();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out.write(kMagic, 6);
  std::uint64_t hdr[5] = {ds.graph.num_nodes, ds.series.total_steps,
                          ds.series.num_features, ds.series.steps_per_day, 0};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  out.write(reinterpret_cast<const char*>(ds.graph.adjacency.data()),
            std::streamsize(ds.graph.adjacency.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(ds.series.features.data()),
            std::streamsize(ds.series.features.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(ds.series.tod_index.data()),
            std::streamsize(ds.series.tod_index.size() * sizeof(std::uint16_t)));
  out.write(reinterpret_cast<const char*>(ds.series.dow_index.data()),
            std::streamsize(ds.series.dow_index.size() * sizeof(std::uint8_t)));
}

// ---------------------------------------------------------------------------
// synthetic generation

namespace {

std::vector<double> build_graph(const SynthConfig& cfg) {
  std::size_t n = cfg.num_nodes;
  std::vector<double> a(n * n, 0.0);
  if (cfg.graph_kind == "ring") {
    for (std::size_t i = 0; i < n; ++i) {
      a[i * n + (i + 1) % n] = 1.0;
      a[i * n + (i + n - 1) % n] = 1.0;
    }
  } else if (cfg.graph_kind == "grid") {
    auto side = std::size_t(std::ceil(std::sqrt(double(n))));
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = i / side, c = i % side;
      auto link = [&](std::size_t rr, std::size_t cc) {
        std::size_t j = rr * side + cc;
        if (j < n) a[i * n + j] = a[j * n + i] = 1.0;
      };
      if (c + 1 < side) link(r, c + 1);
      link(r + 1, c);
    }
  } else {
    throw ConfigError("synth_generate: unknown graph kind '" + cfg.graph_kind + "'");
  }
  return a;
}

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
  if (cfg.num_nodes < 2) throw ConfigError("synth_generate: N must be >= 2");
  if (cfg.days < 1) throw ConfigError("synth_generate: days must be >= 1");
  std::size_t n = cfg.num_nodes, f = cfg.num_features, spd = cfg.steps_per_day;
  std::size_t total = cfg.days * spd;

  Dataset ds;
  ds.graph.num_nodes = n;
  ds.graph.adjacency = build_graph(cfg);
  ds.series.total_steps = total;
  ds.series.num_nodes = n;
  ds.series.num_features = f;
  ds.series.steps_per_day = spd;
  ds.series.features.assign(total * n * f, 0.0);
  ds.series.tod_index.resize(total);
  ds.series.dow_index.resize(total);

  // row-normalized adjacency for the diffusion term
  std::vector<double> mix(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += ds.graph.adjacency[i * n + j];
    if (deg > 0)
      for (std::size_t j = 0; j < n; ++j)
        mix[i * n + j] = ds.graph.adjacency[i * n + j] / deg;
  }

  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto& x = ds.series.features;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t t = 0; t < total; ++t) {
    ds.series.tod_index[t] = std::uint16_t((t % spd) * kTimeOfDaySlots / spd);
    ds.series.dow_index[t] = std::uint8_t((t / spd) % kDayOfWeekSlots);
    double phase_t = two_pi * double(t % spd) / double(spd);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < f; ++k) {
        double amp = 1.0 + 0.1 * double(i) + 0.05 * double(k);
        double v = amp * std::sin(phase_t + two_pi * double(i) / double(n));
        if (t > 0) {
          double diffuse = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            diffuse += mix[i * n + j] * x[((t - 1) * n + j) * f + k];
          v += cfg.diffusion * diffuse;
        }
        if (cfg.noise > 0) v += cfg.noise * noise(rng);
        x[(t * n + i) * f + k] = v;
      }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// windows / splits

std::vector<WindowedSample> make_windows(const STSeries& series,
                                         std::size_t history_len,
                                         std::size_t horizon) {
  if (history_len == 0 || horizon == 0)
    throw ContractError("make_windows: history and horizon must be positive");
  if (history_len + horizon > series.total_steps)
    throw ContractError("make_windows: T + T' = " +
                        std::to_string(history_len + horizon) +
                        " exceeds total steps " + std::to_string(series.total_steps));
  std::size_t n = series.num_nodes, f = series.num_features;
  std::size_t count = series.total_steps - history_len - horizon + 1;
  std::vector<WindowedSample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    WindowedSample w;
    w.window_start = s;
    auto xb = series.features.begin() + std::ptrdiff_t(s * n * f);
    w.x = Tensor::from_data({history_len, n, f},
                            std::vector<double>(xb, xb + std::ptrdiff_t(history_len * n * f)));
    auto yb = series.features.begin() + std::ptrdiff_t((s + history_len) * n * f);
    w.y = Tensor::from_data({horizon, n, f},
                            std::vector<double>(yb, yb + std::ptrdiff_t(horizon * n * f)));
    w.tod.resize(history_len);
    w.dow.resize(history_len);
    for (std::size_t t = 0; t < history_len; ++t) {
      w.tod[t] = series.tod_index[s + t];
      w.dow[t] = series.dow_index[s + t];
    }
    out.push_back(std::move(w));
  }
  return out;
}

SplitView split(std::size_t num_samples) {
  if (num_samples < 5)
    throw ContractError("split: need at least 5 samples, got " +
                        std::to_string(num_samples));
  std::size_t train = num_samples * 6 / 10;
  std::size_t val = num_samples * 2 / 10;
  SplitView v;
  v.train_begin = 0;
  v.train_end = train;
  v.val_begin = train;
  v.val_end = train + val;
  v.test_begin = train + val;
  v.test_end = num_samples;
  return v;
}

// ---------------------------------------------------------------------------
// corruption

Tensor corrupt_noise(const Tensor& x, double gamma, std::uint64_t seed) {
  if (gamma < 0.0 || gamma > 1.0)
    throw ContractError("corrupt_noise: gamma must be in [0,1]");
  if (gamma == 0.0) return Tensor::from_data(x.shape(), x.data());
  Rng rng = make_rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(x.size());
  const auto& d = x.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - gamma) * d[i] + gamma * dist(rng);
  return Tensor::from_data(x.shape(), std::move(out));
}

Tensor corrupt_missing(const Tensor& x, double gamma, std::uint64_t seed) {
  if (gamma < 0.0 || gamma > 1.0)
    throw ContractError("corrupt_missing: gamma must be in [0,1]");
  std::vector<double> out = x.data();
  auto count = std::size_t(std::llround(gamma * double(out.size())));
  if (count > 0) {
    std::vector<std::size_t> idx(out.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng = make_rng(seed);
    // partial Fisher-Yates: first `count` entries are a uniform sample
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out[idx[i]] = 0.0;
    }
  }
  return Tensor::from_data(x.shape(), std::move(out));
}

// ---------------------------------------------------------------------------
// normalizer

void Normalizer::fit(const std::vector<WindowedSample>& train) {
  if (train.empty()) throw ContractError("Normalizer::fit: empty training split");
  std::size_t f = train[0].x.shape().back();
  std::vector<double> sum(f, 0.0), sumsq(f, 0.0);
  std::size_t count = 0;
  for (const auto& w : train) {
    const auto& d = w.x.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      sum[i % f] += d[i];
      sumsq[i % f] += d[i] * d[i];
    }
    count += d.size() / f;
  }
  mean_.resize(f);
  std_.resize(f);
  for (std::size_t j = 0; j < f; ++j) {
    mean_[j] = sum[j] / double(count);
    double var = sumsq[j] / double(count) - mean_[j] * mean_[j];
    std_[j] = std::max(std::sqrt(std::max(var, 0.0)), 1e-8);
  }
  fitted_ = true;
}

void Normalizer::set_stats(std::vector<double> mean, std::vector<double> stddev) {
  mean_ = std::move(mean);
  std_ = std::move(stddev);
  fitted_ = true;
}

void Normalizer::check_fitted() const {
  if (!fitted_) throw StateError("Normalizer: used before fit");
}

Tensor Normalizer::apply(const Tensor& t) const {
  check_fitted();
  std::size_t f = mean_.size();
  std::vector<double> out = t.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (out[i] - mean_[i % f]) / std_[i % f];
  return Tensor::from_data(t.shape(), std::move(out));
}

Tensor Normalizer::invert(const Tensor& t) const {
  check_fitted();
  std::size_t f = mean_.size();
  std::vector<double> out = t.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = out[i] * std_[i % f] + mean_[i % f];
  return Tensor::from_data(t.shape(), std::move(out));
}

}  // namespace stdistill
