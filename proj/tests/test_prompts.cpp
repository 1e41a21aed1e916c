#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stdistill/prompts.hpp"
#include "stdistill/rng.hpp"

using namespace stdistill;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
  std::vector<double> data(shape_numel(shape));
  fill_uniform(rng, data, -1.0, 1.0);
  return Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

// Independent triple-loop contraction + softmax over the node axis.
std::vector<double> brute_force_transitional(const std::vector<double>& core,
                                             const std::vector<double>& temporal,
                                             const std::vector<double>& spatial,
                                             std::size_t d, std::size_t nt,
                                             std::size_t n) {
  std::vector<double> raw(nt * n * d, 0.0);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < d; ++r) {
        double acc = 0.0;
        for (std::size_t p = 0; p < d; ++p)
          for (std::size_t q = 0; q < d; ++q)
            acc += core[(p * d + q) * d + r] * temporal[t * d + p] * spatial[i * d + q];
        raw[(t * n + i) * d + r] = acc;
      }
  std::vector<double> out(raw.size());
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t r = 0; r < d; ++r) {
      double mx = -1e300;
      for (std::size_t i = 0; i < n; ++i)
        mx = std::max(mx, raw[(t * n + i) * d + r]);
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        z += std::exp(raw[(t * n + i) * d + r] - mx);
      for (std::size_t i = 0; i < n; ++i)
        out[(t * n + i) * d + r] = std::exp(raw[(t * n + i) * d + r] - mx) / z;
    }
  return out;
}

}  // namespace

TEST_CASE("zero core gives uniform transitional prompt") {
  TuckerFactors f;
  f.core = Tensor::zeros({2, 2, 2});
  f.temporal = Tensor::full({3, 2}, 1.0);
  f.spatial = Tensor::full({4, 2}, 1.0);
  Tensor out = transitional_prompt(f);
  CHECK(out.shape() == Shape{3, 4, 2});
  for (double v : out.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("hand-computed d=1 contraction") {
  TuckerFactors f;
  f.core = Tensor::from_data({1, 1, 1}, {2.0});
  f.temporal = Tensor::from_data({1, 1}, {3.0});
  f.spatial = Tensor::from_data({2, 1}, {1.0, -1.0});
  Tensor out = transitional_prompt(f);
  // raw = [6, -6]; softmax over the two nodes
  double e6 = std::exp(6.0), em6 = std::exp(-6.0);
  CHECK(out.data()[0] == doctest::Approx(e6 / (e6 + em6)).epsilon(1e-15));
  CHECK(out.data()[1] == doctest::Approx(em6 / (e6 + em6)).epsilon(1e-15));
}

TEST_CASE("transitional prompt matches brute-force oracle") {
  Rng rng = make_rng(17);
  for (auto [d, nt, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{2, 3, 4},
                          {4, 5, 7},
                          {8, 24, 16}}) {
    TuckerFactors f;
    f.core = random_tensor({d, d, d}, rng);
    f.temporal = random_tensor({nt, d}, rng);
    f.spatial = random_tensor({n, d}, rng);
    Tensor got = transitional_prompt(f);
    auto want = brute_force_transitional(f.core.data(), f.temporal.data(),
                                         f.spatial.data(), d, nt, n);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(got.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    // node-axis normalization
    for (std::size_t t = 0; t < nt; ++t)
      for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += got.data()[(t * n + i) * d + r];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
      }
  }
}

TEST_CASE("inconsistent Tucker dims are a shape error") {
  TuckerFactors f;
  f.core = Tensor::zeros({2, 2, 2});
  f.temporal = Tensor::zeros({3, 5});
  f.spatial = Tensor::zeros({4, 2});
  CHECK_THROWS_AS(transitional_prompt(f), ShapeError);
}

namespace {

PromptBank make_bank(std::size_t n, std::size_t f, std::size_t t, std::size_t nt,
                     std::size_t d, std::uint64_t seed = 0) {
  PromptConfig cfg;
  cfg.num_nodes = n;
  cfg.num_features = f;
  cfg.history_len = t;
  cfg.steps_per_day = nt;
  cfg.dim = d;
  return PromptBank(cfg, seed);
}

}  // namespace

TEST_CASE("fuse with all-zero projections is zero with shape T x N x 5d") {
  PromptBank bank = make_bank(3, 1, 2, 4, 2);
  for (int i = 0; i < 5; ++i) {
    std::fill(bank.fc_w[i].raw_data().begin(), bank.fc_w[i].raw_data().end(), 0.0);
    std::fill(bank.fc_b[i].raw_data().begin(), bank.fc_b[i].raw_data().end(), 0.0);
  }
  Tensor x = Tensor::full({2, 3, 1}, 5.0);
  Tensor fused = bank.fuse(x, bank.transitional(), {0, 1}, {0, 0}, 0);
  CHECK(fused.shape() == Shape{2, 3, 10});
  for (double v : fused.data()) CHECK(v == 0.0);
}

TEST_CASE("fuse at N=1, T=1, d=2 equals hand concatenation") {
  PromptBank bank = make_bank(1, 1, 1, 2, 2);
  Tensor x = Tensor::from_data({1, 1, 1}, {2.0});
  Tensor e_beta = bank.transitional();  // 2 x 1 x 2, single node -> all ones
  Tensor fused = bank.fuse(x, e_beta, {7}, {3}, 0);
  REQUIRE(fused.shape() == Shape{1, 1, 10});
  auto project = [](const Tensor& in, const Tensor& w, const Tensor& b,
                    std::size_t width) {
    std::vector<double> out(2, 0.0);
    for (std::size_t j = 0; j < 2; ++j) {
      out[j] = b.data()[j];
      for (std::size_t i = 0; i < width; ++i)
        out[j] += in.data()[i] * w.data()[i * 2 + j];
    }
    return out;
  };
  std::vector<double> expect;
  auto push = [&](std::vector<double> v) {
    expect.insert(expect.end(), v.begin(), v.end());
  };
  push(project(x, bank.fc_w[0], bank.fc_b[0], 1));
  push(project(bank.e_alpha, bank.fc_w[1], bank.fc_b[1], 2));
  push(project(reshape(gather(e_beta, {0}, 0), {2}), bank.fc_w[2], bank.fc_b[2], 2));
  push(project(gather(bank.e_tod, {7}, 0), bank.fc_w[3], bank.fc_b[3], 2));
  push(project(gather(bank.e_dow, {3}, 0), bank.fc_w[4], bank.fc_b[4], 2));
  for (std::size_t i = 0; i < 10; ++i)
    CHECK(fused.data()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("fuse is equivariant to consistent node permutation") {
  PromptBank bank = make_bank(3, 1, 2, 4, 2, 11);
  Tensor x = Tensor::from_data({2, 3, 1}, {1, 2, 3, 4, 5, 6});
  Tensor fused = bank.fuse(x, bank.transitional(), {0, 1}, {2, 2}, 1);

  // rotate nodes: new node i = old node (i+1) % 3
  std::vector<std::size_t> perm = {1, 2, 0};
  PromptBank bank2 = make_bank(3, 1, 2, 4, 2, 11);
  auto permute_rows = [&](Tensor& t) {
    auto& d = t.raw_data();
    std::size_t cols = t.size() / 3;
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < cols; ++c)
        out[i * cols + c] = d[perm[i] * cols + c];
    d = out;
  };
  permute_rows(bank2.e_alpha);
  permute_rows(bank2.tucker.spatial);
  Tensor x2 = Tensor::from_data({2, 3, 1}, {2, 3, 1, 5, 6, 4});
  Tensor fused2 = bank2.fuse(x2, bank2.transitional(), {0, 1}, {2, 2}, 1);

  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < 10; ++c)
        CHECK(fused2.data()[(t * 3 + i) * 10 + c] ==
              doctest::Approx(fused.data()[(t * 3 + perm[i]) * 10 + c]).epsilon(1e-12));
}

TEST_CASE("gradients reach every prompt table and Tucker factor") {
  PromptBank bank = make_bank(3, 2, 2, 5, 3, 23);
  Rng rng = make_rng(4);
  Tensor x = random_tensor({2, 3, 2}, rng);
  Tensor fused = bank.fuse(x, bank.transitional(), {10, 20}, {1, 2}, 3);
  backward(mean(square(fused)));
  for (auto& [name, p] : bank.parameters()) {
    double norm = 0.0;
    for (double g : p.grad()) norm += g * g;
    INFO(name);
    CHECK(norm > 0.0);
  }
}

TEST_CASE("unused prompt rows get exactly zero gradient") {
  PromptBank bank = make_bank(2, 1, 1, 4, 2, 3);
  Rng rng = make_rng(8);
  Tensor x = random_tensor({1, 2, 1}, rng);
  Tensor fused = bank.fuse(x, bank.transitional(), {5}, {2}, 0);
  backward(mean(square(fused)));
  // row 5 of e_tod was used; all others must have zero grad
  const auto& g = bank.e_tod.grad();
  std::size_t d = 2;
  for (std::size_t row = 0; row < kTimeOfDaySlots; ++row)
    for (std::size_t c = 0; c < d; ++c) {
      if (row == 5) continue;
      CHECK(g[row * d + c] == 0.0);
    }
  double used = 0.0;
  for (std::size_t c = 0; c < d; ++c) used += std::abs(g[5 * d + c]);
  CHECK(used > 0.0);
}

TEST_CASE("out-of-range time index is an index error") {
  PromptBank bank = make_bank(2, 1, 1, 4, 2);
  Tensor x = Tensor::zeros({1, 2, 1});
  CHECK_THROWS_AS(bank.fuse(x, bank.transitional(), {288}, {0}, 0), IndexError);
  CHECK_THROWS_AS(bank.fuse(x, bank.transitional(), {0}, {7}, 0), IndexError);
}
