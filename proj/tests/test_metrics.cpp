#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stdistill/metrics.hpp"
#include "stdistill/rng.hpp"

using namespace stdistill;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  std::vector<double> data(shape_numel(shape));
  fill_uniform(rng, data, -3.0, 3.0);
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace

TEST_CASE("hand-computed metric values") {
  Tensor yhat = Tensor::from_data({2}, {2.0, 4.0});
  Tensor y = Tensor::from_data({2}, {1.0, 1.0});
  CHECK(mae(yhat, y) == 2.0);
  CHECK(rmse(yhat, y) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  // APE: |1|/1 and |3|/1 -> mean 2 -> 200%
  CHECK(mape(yhat, y).value() == doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("perfect prediction gives zero everywhere") {
  Tensor y = Tensor::from_data({3}, {1.0, -2.0, 0.5});
  CHECK(mae(y, y) == 0.0);
  CHECK(rmse(y, y) == 0.0);
  CHECK(mape(y, y).value() == 0.0);
}

TEST_CASE("mape masks near-zero targets") {
  SUBCASE("half masked") {
    Tensor yhat = Tensor::from_data({2}, {1.0, 1.5});
    Tensor y = Tensor::from_data({2}, {0.0, 1.0});
    // only the second target counts: |0.5|/1 -> 50%
    CHECK(mape(yhat, y).value() == doctest::Approx(50.0).epsilon(1e-12));
  }
  SUBCASE("all masked is undefined") {
    Tensor yhat = Tensor::from_data({2}, {1.0, 2.0});
    Tensor y = Tensor::from_data({2}, {0.0, 5e-5});
    CHECK_FALSE(mape(yhat, y).has_value());
  }
  SUBCASE("mask boundary is strict") {
    Tensor y = Tensor::from_data({1}, {kMapeMask});
    CHECK_FALSE(mape(Tensor::from_data({1}, {1.0}), y).has_value());
    Tensor y2 = Tensor::from_data({1}, {kMapeMask * 1.0001});
    CHECK(mape(Tensor::from_data({1}, {1.0}), y2).has_value());
  }
}

TEST_CASE("rmse dominates mae") {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    Tensor yhat = random_tensor({3, 4, 2}, rng);
    Tensor y = random_tensor({3, 4, 2}, rng);
    CHECK(rmse(yhat, y) >= mae(yhat, y) - 1e-15);
  }
}

TEST_CASE("metrics reject mismatched shapes") {
  CHECK_THROWS_AS(mae(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
  CHECK_THROWS_AS(rmse(Tensor::zeros({2, 1}), Tensor::zeros({2})), ShapeError);
}

TEST_CASE("accumulator matches whole-batch computation") {
  Rng rng = make_rng(29);
  std::vector<Tensor> preds, targets;
  MetricAccumulator acc;
  std::vector<double> all_p, all_y;
  for (int i = 0; i < 5; ++i) {
    Tensor p = random_tensor({2, 3, 1}, rng);
    Tensor t = random_tensor({2, 3, 1}, rng);
    acc.add(p, t);
    all_p.insert(all_p.end(), p.data().begin(), p.data().end());
    all_y.insert(all_y.end(), t.data().begin(), t.data().end());
    preds.push_back(p);
    targets.push_back(t);
  }
  EvalReport rep = acc.report();
  CHECK(rep.num_windows == 5);
  Tensor big_p = Tensor::from_data({30}, all_p);
  Tensor big_y = Tensor::from_data({30}, all_y);
  CHECK(rep.aggregate.mae == doctest::Approx(mae(big_p, big_y)).epsilon(1e-12));
  CHECK(rep.aggregate.rmse == doctest::Approx(rmse(big_p, big_y)).epsilon(1e-12));
  CHECK(rep.aggregate.mape.value() ==
        doctest::Approx(mape(big_p, big_y).value()).epsilon(1e-12));

  // per-horizon slice h must equal metrics over just the h-th rows
  REQUIRE(rep.per_horizon.size() == 2);
  for (std::size_t h = 0; h < 2; ++h) {
    std::vector<double> hp, hy;
    for (std::size_t w = 0; w < 5; ++w)
      for (std::size_t k = 0; k < 3; ++k) {
        hp.push_back(preds[w].data()[h * 3 + k]);
        hy.push_back(targets[w].data()[h * 3 + k]);
      }
    Tensor tp = Tensor::from_data({15}, hp);
    Tensor ty = Tensor::from_data({15}, hy);
    CHECK(rep.per_horizon[h].mae == doctest::Approx(mae(tp, ty)).epsilon(1e-12));
    CHECK(rep.per_horizon[h].rmse == doctest::Approx(rmse(tp, ty)).epsilon(1e-12));
  }
}

TEST_CASE("report serialization") {
  MetricAccumulator acc;
  acc.add(Tensor::from_data({1, 1, 1}, {2.0}), Tensor::from_data({1, 1, 1}, {1.0}));
  EvalReport rep = acc.report();

  SUBCASE("json carries the numbers") {
    nlohmann::json j = rep.to_json();
    CHECK(j["aggregate"]["mae"].get<double>() == 1.0);
    CHECK(j["num_windows"].get<std::size_t>() == 1);
    CHECK(j["per_horizon"].size() == 1);
  }
  SUBCASE("undefined mape serializes as a marker, not a number") {
    MetricAccumulator masked;
    masked.add(Tensor::from_data({1, 1, 1}, {2.0}),
               Tensor::from_data({1, 1, 1}, {0.0}));
    nlohmann::json j = masked.report().to_json();
    CHECK(j["aggregate"]["mape"].is_string());
  }
  SUBCASE("csv has one line per horizon plus header and aggregate") {
    std::string csv = rep.to_csv();
    CHECK(csv.find("horizon") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 2);
  }
}
