#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stdistill/tensor.hpp"

namespace stdistill {

// Slot counts of the fixed temporal prompt tables: 288 five-minute intervals
// per day and 7 weekdays. Datasets at other resolutions are index-scaled.
inline constexpr std::size_t kTimeOfDaySlots = 288;
inline constexpr std::size_t kDayOfWeekSlots = 7;

struct STGraph {
  std::size_t num_nodes = 0;
  std::vector<double> adjacency;  // num_nodes x num_nodes, row-major, non-negative
};

struct STSeries {
  std::size_t total_steps = 0;
  std::size_t num_nodes = 0;
  std::size_t num_features = 0;
  std::size_t steps_per_day = 0;
  std::vector<double> features;        // total_steps x num_nodes x num_features
  std::vector<std::uint16_t> tod_index;  // in [0, 288)
  std::vector<std::uint8_t> dow_index;   // in [0, 7)
};

struct WindowedSample {
  Tensor x;    // history_len x N x F
  Tensor y;    // horizon x N x F
  std::vector<std::size_t> tod;  // per history step
  std::vector<std::size_t> dow;
  std::size_t window_start = 0;
};

// Per-feature z-score statistics, fit on the training portion only.
class Normalizer {
 public:
  void fit(const std::vector<WindowedSample>& train);
  Tensor apply(const Tensor& t) const;   // last axis = feature axis
  Tensor invert(const Tensor& t) const;
  bool fitted() const { return fitted_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }
  void set_stats(std::vector<double> mean, std::vector<double> stddev);

 private:
  void check_fitted() const;
  bool fitted_ = false;
  std::vector<double> mean_;
  std::vector<double> std_;
};

struct SynthConfig {
  std::size_t num_nodes = 20;
  std::size_t days = 30;
  std::size_t steps_per_day = 48;
  std::size_t num_features = 1;
  std::string graph_kind = "ring";  // ring | grid
  double diffusion = 0.3;           // neighbor coupling strength
  double noise = 0.1;               // Gaussian observation noise
  std::uint64_t seed = 0;
};

struct Dataset {
  STGraph graph;
  STSeries series;
};

Dataset load_dataset(const std::string& path);
void write_dataset(const std::string& path, const Dataset& ds);

Dataset synth_generate(const SynthConfig& cfg);

std::vector<WindowedSample> make_windows(const STSeries& series,
                                         std::size_t history_len,
                                         std::size_t horizon);

struct SplitView {
  // index ranges into the chronological window list: [begin, end)
  std::size_t train_begin = 0, train_end = 0;
  std::size_t val_begin = 0, val_end = 0;
  std::size_t test_begin = 0, test_end = 0;
};

SplitView split(std::size_t num_samples);

Tensor corrupt_noise(const Tensor& x, double gamma, std::uint64_t seed);
Tensor corrupt_missing(const Tensor& x, double gamma, std::uint64_t seed);

}  // namespace stdistill
