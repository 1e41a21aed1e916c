#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stdistill/dataset.hpp"
#include "stdistill/optim.hpp"
#include "stdistill/student.hpp"
#include "stdistill/tensor.hpp"

namespace stdistill {

// Window-aligned teacher forecasts in original units. Used only as constants
// by the distillation loss; teachers never join the student's backward pass.
struct TeacherPredictions {
  std::size_t num_windows = 0;
  std::size_t horizon = 0;
  std::size_t num_nodes = 0;
  std::size_t num_features = 0;
  std::vector<double> data;  // num_windows x horizon x N x F

  Tensor window(std::size_t i) const;
  void validate_against(const std::vector<WindowedSample>& windows) const;
};

TeacherPredictions load_teacher(const std::string& path,
                                const std::vector<WindowedSample>& windows);
void save_teacher(const std::string& path, const TeacherPredictions& preds);

// Y^T = Y + bias + error_scale * eps; a noise-controlled stand-in teacher.
TeacherPredictions synth_teacher(const std::vector<WindowedSample>& windows,
                                 double error_scale, double bias,
                                 std::uint64_t seed);

struct RefTeacherConfig {
  std::size_t hidden = 16;   // per-node channel width after adjacency mixing
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

// Minimal graph-convolution teacher: per-step dense adjacency mixing (the
// deliberate O(N^2) term) followed by a per-node temporal MLP head.
class RefTeacher {
 public:
  RefTeacher(const STGraph& graph, std::size_t num_features,
             std::size_t history_len, std::size_t horizon,
             const RefTeacherConfig& cfg);

  // x: T x N x F in normalized units -> T' x N x F in normalized units
  Tensor predict_window(const Tensor& x) const;

  ParamList parameters();
  const Normalizer& normalizer() const { return norm_; }
  Normalizer& normalizer() { return norm_; }

 private:
  std::size_t num_nodes_, num_features_, history_len_, horizon_;
  Tensor a_norm_;  // row-normalized adjacency, constant
  Tensor w_mix_, b_mix_;
  Mlp head_;
  Normalizer norm_;
};

struct RefTeacherResult {
  RefTeacher teacher;
  TeacherPredictions predictions;  // all windows, original units
  double train_mae = 0.0;          // final epoch, normalized units
};

RefTeacherResult train_ref_teacher(const std::vector<WindowedSample>& windows,
                                   const SplitView& split, const STGraph& graph,
                                   const RefTeacherConfig& cfg);

}  // namespace stdistill
