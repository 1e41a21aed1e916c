#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "stdistill/dataset.hpp"
#include "stdistill/rng.hpp"

using namespace stdistill;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Dataset tiny_dataset() {
  Dataset ds;
  ds.graph.num_nodes = 2;
  ds.graph.adjacency = {0, 1, 1, 0};
  ds.series.total_steps = 4;
  ds.series.num_nodes = 2;
  ds.series.num_features = 1;
  ds.series.steps_per_day = 4;
  ds.series.features = {1, 2, 3, 4, 5, 6, 7, 8};
  ds.series.tod_index = {0, 72, 144, 216};
  ds.series.dow_index = {0, 0, 0, 0};
  return ds;
}

}  // namespace

TEST_CASE("binary round trip is bit-identical") {
  std::string path = tmp_path("ds_roundtrip.stds");
  Dataset ds = tiny_dataset();
  write_dataset(path, ds);
  Dataset back = load_dataset(path);
  CHECK(back.series.features == ds.series.features);
  CHECK(back.graph.adjacency == ds.graph.adjacency);
  CHECK(back.series.tod_index == ds.series.tod_index);
  CHECK(back.series.dow_index == ds.series.dow_index);
  CHECK(back.series.steps_per_day == 4);
  std::remove(path.c_str());
}

TEST_CASE("json round trip") {
  std::string path = tmp_path("ds_roundtrip.json");
  Dataset ds = tiny_dataset();
  write_dataset(path, ds);
  Dataset back = load_dataset(path);
  CHECK(back.series.features == ds.series.features);
  CHECK(back.graph.adjacency == ds.graph.adjacency);
  std::remove(path.c_str());
}

TEST_CASE("truncated payload reports a parse error with offset") {
  std::string path = tmp_path("ds_trunc.stds");
  Dataset ds = tiny_dataset();
  write_dataset(path, ds);
  // drop the final byte (one feature value short after reload of indices)
  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 1);
  CHECK_THROWS_AS(load_dataset(path), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("bad magic is rejected") {
  std::string path = tmp_path("ds_magic.stds");
  std::ofstream(path, std::ios::binary) << "NOPE!\n";
  CHECK_THROWS_AS(load_dataset(path), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("out-of-range tod index is rejected") {
  Dataset ds = tiny_dataset();
  ds.series.tod_index[1] = 288;
  std::string path = tmp_path("ds_badidx.stds");
  CHECK_THROWS_AS(write_dataset(path, ds), ParseError);
}

TEST_CASE("synthetic generation") {
  SUBCASE("noise-free, diffusion-free signal is exactly periodic") {
    SynthConfig cfg;
    cfg.num_nodes = 3;
    cfg.days = 2;
    cfg.steps_per_day = 8;
    cfg.diffusion = 0.0;
    cfg.noise = 0.0;
    Dataset ds = synth_generate(cfg);
    const auto& x = ds.series.features;
    std::size_t n = cfg.num_nodes;
    for (std::size_t t = 0; t < cfg.steps_per_day; ++t)
      for (std::size_t i = 0; i < n; ++i)
        CHECK(x[t * n + i] ==
              doctest::Approx(x[(t + cfg.steps_per_day) * n + i]).epsilon(1e-12));
  }
  SUBCASE("same seed gives identical series") {
    SynthConfig cfg;
    cfg.num_nodes = 4;
    cfg.days = 1;
    cfg.steps_per_day = 12;
    cfg.seed = 42;
    Dataset a = synth_generate(cfg);
    Dataset b = synth_generate(cfg);
    CHECK(a.series.features == b.series.features);
  }
  SUBCASE("two-step diffusion recurrence on a ring of 3") {
    SynthConfig cfg;
    cfg.num_nodes = 3;
    cfg.days = 1;
    cfg.steps_per_day = 8;
    cfg.diffusion = 0.5;
    cfg.noise = 0.0;
    Dataset ds = synth_generate(cfg);
    // independent recurrence: base(t,i) + rho * mean of both ring neighbors
    // at t-1 (each neighbor weight 1, row-normalized)
    const double two_pi = 2.0 * std::numbers::pi;
    auto base = [&](std::size_t t, std::size_t i) {
      double amp = 1.0 + 0.1 * double(i);
      return amp * std::sin(two_pi * double(t % 8) / 8.0 + two_pi * double(i) / 3.0);
    };
    const auto& x = ds.series.features;
    std::vector<double> expect(3 * 3);
    for (std::size_t i = 0; i < 3; ++i) expect[i] = base(0, i);
    for (std::size_t t = 1; t < 3; ++t)
      for (std::size_t i = 0; i < 3; ++i) {
        double diffuse =
            0.5 * (expect[(t - 1) * 3 + (i + 1) % 3] + expect[(t - 1) * 3 + (i + 2) % 3]);
        expect[t * 3 + i] = base(t, i) + 0.5 * diffuse;
      }
    for (std::size_t k = 0; k < 9; ++k)
      CHECK(x[k] == doctest::Approx(expect[k]).epsilon(1e-12));
  }
  SUBCASE("unknown graph kind is a config error") {
    SynthConfig cfg;
    cfg.graph_kind = "torus";
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
  }
}

TEST_CASE("make_windows") {
  SynthConfig cfg;
  cfg.num_nodes = 2;
  cfg.days = 1;
  cfg.steps_per_day = 10;
  cfg.noise = 0.0;
  Dataset ds = synth_generate(cfg);

  SUBCASE("count and overlap") {
    auto ws = make_windows(ds.series, 3, 2);
    CHECK(ws.size() == 6);
    for (std::size_t k = 0; k < ws.size(); ++k) {
      CHECK(ws[k].window_start == k);
      // sample k's history starts at step k
      CHECK(ws[k].x.data()[0] == ds.series.features[k * 2]);
      // x ends exactly where y begins
      CHECK(ws[k].y.data()[0] == ds.series.features[(k + 3) * 2]);
    }
  }
  SUBCASE("boundary: exactly one window") {
    auto ws = make_windows(ds.series, 7, 3);
    CHECK(ws.size() == 1);
  }
  SUBCASE("window too long is a contract error") {
    CHECK_THROWS_AS(make_windows(ds.series, 8, 3), ContractError);
  }
  SUBCASE("count formula holds across valid (T, T') pairs") {
    for (std::size_t t = 1; t < 9; ++t)
      for (std::size_t h = 1; h + t <= 10; ++h)
        CHECK(make_windows(ds.series, t, h).size() == 10 - t - h + 1);
  }
  SUBCASE("tod index mapping scales to the 288-slot table") {
    auto ws = make_windows(ds.series, 3, 2);
    for (const auto& w : ws)
      for (std::size_t t = 0; t < 3; ++t)
        CHECK(w.tod[t] == ((w.window_start + t) % 10) * 288 / 10);
  }
}

TEST_CASE("split") {
  SUBCASE("10 samples -> 6/2/2") {
    SplitView v = split(10);
    CHECK(v.train_end - v.train_begin == 6);
    CHECK(v.val_end - v.val_begin == 2);
    CHECK(v.test_end - v.test_begin == 2);
  }
  SUBCASE("5 samples -> 3/1/1") {
    SplitView v = split(5);
    CHECK(v.train_end - v.train_begin == 3);
    CHECK(v.val_end - v.val_begin == 1);
    CHECK(v.test_end - v.test_begin == 1);
  }
  SUBCASE("chronological partition with no overlap") {
    for (std::size_t n : {5, 7, 23, 100, 101}) {
      SplitView v = split(n);
      CHECK(v.train_begin == 0);
      CHECK(v.train_end == v.val_begin);
      CHECK(v.val_end == v.test_begin);
      CHECK(v.test_end == n);
    }
  }
  SUBCASE("too few samples") { CHECK_THROWS_AS(split(4), ContractError); }
}

TEST_CASE("corrupt_noise") {
  Tensor x = Tensor::from_data({2, 2, 1}, {1, 2, 3, 4});
  SUBCASE("gamma 0 is the identity, bit-exact") {
    CHECK(corrupt_noise(x, 0.0, 7).data() == x.data());
  }
  SUBCASE("gamma 1 is independent of x") {
    Tensor a = corrupt_noise(x, 1.0, 7);
    Tensor b = corrupt_noise(Tensor::zeros({2, 2, 1}), 1.0, 7);
    CHECK(a.data() == b.data());
  }
  SUBCASE("gamma 0.5 replays the RNG stream") {
    Tensor got = corrupt_noise(x, 0.5, 123);
    Rng rng = make_rng(123);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(got.data()[i] == 0.5 * x.data()[i] + 0.5 * dist(rng));
  }
  SUBCASE("gamma outside range") {
    CHECK_THROWS_AS(corrupt_noise(x, 1.5, 0), ContractError);
  }
}

TEST_CASE("corrupt_missing") {
  Tensor x = Tensor::from_data({4, 2, 1}, {1, 2, 3, 4, 5, 6, 7, 8});
  SUBCASE("gamma 0 unchanged") {
    CHECK(corrupt_missing(x, 0.0, 3).data() == x.data());
  }
  SUBCASE("gamma 1 zeroes everything") {
    Tensor zeroed = corrupt_missing(x, 1.0, 3);
    for (double v : zeroed.data()) CHECK(v == 0.0);
  }
  SUBCASE("gamma 0.25 zeroes exactly 2 entries") {
    Tensor got = corrupt_missing(x, 0.25, 9);
    int zeros = 0;
    for (double v : got.data())
      if (v == 0.0) ++zeros;
    CHECK(zeros == 2);
  }
  SUBCASE("gamma outside range") {
    CHECK_THROWS_AS(corrupt_missing(x, -0.1, 0), ContractError);
  }
}

TEST_CASE("normalizer") {
  SynthConfig cfg;
  cfg.num_nodes = 3;
  cfg.days = 2;
  cfg.steps_per_day = 10;
  cfg.seed = 5;
  Dataset ds = synth_generate(cfg);
  auto ws = make_windows(ds.series, 4, 2);
  SplitView v = split(ws.size());
  std::vector<WindowedSample> train(ws.begin(), ws.begin() + std::ptrdiff_t(v.train_end));

  Normalizer norm;
  SUBCASE("unfit normalizer is a state error") {
    CHECK_THROWS_AS(norm.apply(ws[0].x), StateError);
  }
  norm.fit(train);
  SUBCASE("invert(apply(x)) = x") {
    Tensor x = ws[0].x;
    Tensor back = norm.invert(norm.apply(x));
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(back.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-10));
  }
  SUBCASE("normalized training data has zero mean, unit variance") {
    double s = 0, sq = 0;
    std::size_t count = 0;
    for (const auto& w : train) {
      Tensor xn = norm.apply(w.x);
      for (double val : xn.data()) {
        s += val;
        sq += val * val;
        ++count;
      }
    }
    double m = s / double(count);
    CHECK(m == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(std::sqrt(sq / double(count) - m * m) == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("constant series: std floored, apply yields zeros") {
    std::vector<WindowedSample> constant;
    WindowedSample w;
    w.x = Tensor::full({2, 2, 1}, 3.0);
    w.y = Tensor::full({1, 2, 1}, 3.0);
    constant.push_back(w);
    Normalizer n2;
    n2.fit(constant);
    Tensor xn = n2.apply(w.x);
    for (double val : xn.data()) CHECK(val == 0.0);
  }
}
