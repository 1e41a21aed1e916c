#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stdistill/tensor.hpp"

namespace stdistill {

// Targets with |y| <= this (original units) are excluded from MAPE.
inline constexpr double kMapeMask = 1e-4;

struct MetricTriple {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> mape;  // percent; empty when every target is masked
};

double mae(const Tensor& prediction, const Tensor& target);
double rmse(const Tensor& prediction, const Tensor& target);
std::optional<double> mape(const Tensor& prediction, const Tensor& target);

struct EvalReport {
  MetricTriple aggregate;
  std::vector<MetricTriple> per_horizon;
  std::size_t num_windows = 0;

  nlohmann::json to_json() const;
  std::string to_csv() const;  // flat per-horizon table
};

// Streams per-window (prediction, target) pairs in original units and folds
// them into aggregate plus per-horizon metrics. Window order does not affect
// the result beyond float addition order, which is fixed chronological.
class MetricAccumulator {
 public:
  void add(const Tensor& prediction, const Tensor& target);  // T' x N x F
  EvalReport report() const;

 private:
  struct Cell {
    double abs_sum = 0.0, sq_sum = 0.0, ape_sum = 0.0;
    std::size_t count = 0, ape_count = 0;
  };
  Cell total_;
  std::vector<Cell> horizon_;
  std::size_t num_windows_ = 0;
};

}  // namespace stdistill
