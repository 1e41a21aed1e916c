#include "stdistill/metrics.hpp"

#include <cmath>
#include <sstream>

namespace stdistill {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

}  // namespace

double mae(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target, "mae");
  const auto& p = prediction.data();
  const auto& y = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - y[i]);
  return acc / double(p.size());
}

double rmse(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target, "rmse");
  const auto& p = prediction.data();
  const auto& y = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double e = p[i] - y[i];
    acc += e * e;
  }
  return std::sqrt(acc / double(p.size()));
}

std::optional<double> mape(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target, "mape");
  const auto& p = prediction.data();
  const auto& y = target.data();
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::abs(y[i]) <= kMapeMask) continue;
    acc += std::abs((p[i] - y[i]) / y[i]);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return 100.0 * acc / double(count);
}

void MetricAccumulator::add(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target, "MetricAccumulator::add");
  const Shape& s = prediction.shape();
  if (s.size() != 3)
    throw ShapeError("MetricAccumulator::add: expected T' x N x F, got " +
                     shape_str(s));
  if (horizon_.empty()) horizon_.resize(s[0]);
  if (horizon_.size() != s[0])
    throw ShapeError("MetricAccumulator::add: horizon changed between windows");
  const auto& p = prediction.data();
  const auto& y = target.data();
  std::size_t inner = s[1] * s[2];
  for (std::size_t h = 0; h < s[0]; ++h) {
    Cell& cell = horizon_[h];
    for (std::size_t i = h * inner; i < (h + 1) * inner; ++i) {
      double e = p[i] - y[i];
      double a = std::abs(e);
      cell.abs_sum += a;
      cell.sq_sum += e * e;
      ++cell.count;
      total_.abs_sum += a;
      total_.sq_sum += e * e;
      ++total_.count;
      if (std::abs(y[i]) > kMapeMask) {
        double ape = std::abs(e / y[i]);
        cell.ape_sum += ape;
        ++cell.ape_count;
        total_.ape_sum += ape;
        ++total_.ape_count;
      }
    }
  }
  ++num_windows_;
}

namespace {

MetricTriple to_triple(double abs_sum, double sq_sum, double ape_sum,
                       std::size_t count, std::size_t ape_count) {
  MetricTriple t;
  t.mae = count ? abs_sum / double(count) : 0.0;
  t.rmse = count ? std::sqrt(sq_sum / double(count)) : 0.0;
  if (ape_count) t.mape = 100.0 * ape_sum / double(ape_count);
  return t;
}

nlohmann::json triple_json(const MetricTriple& t) {
  nlohmann::json j;
  j["mae"] = t.mae;
  j["rmse"] = t.rmse;
  if (t.mape)
    j["mape"] = *t.mape;
  else
    j["mape"] = "undefined";
  return j;
}

}  // namespace

EvalReport MetricAccumulator::report() const {
  EvalReport r;
  r.num_windows = num_windows_;
  r.aggregate = to_triple(total_.abs_sum, total_.sq_sum, total_.ape_sum,
                          total_.count, total_.ape_count);
  for (const Cell& c : horizon_)
    r.per_horizon.push_back(
        to_triple(c.abs_sum, c.sq_sum, c.ape_sum, c.count, c.ape_count));
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["aggregate"] = triple_json(aggregate);
  j["num_windows"] = num_windows;
  j["per_horizon"] = nlohmann::json::array();
  for (const auto& t : per_horizon) j["per_horizon"].push_back(triple_json(t));
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "horizon,mae,rmse,mape\n";
  for (std::size_t h = 0; h < per_horizon.size(); ++h) {
    const auto& t = per_horizon[h];
    os << (h + 1) << "," << t.mae << "," << t.rmse << ",";
    if (t.mape)
      os << *t.mape;
    else
      os << "undefined";
    os << "\n";
  }
  return os.str();
}

}  // namespace stdistill
