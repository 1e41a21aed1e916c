#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stdistill/dataset.hpp"
#include "stdistill/tensor.hpp"

namespace stdistill {

struct TuckerFactors {
  Tensor core;      // d x d x d
  Tensor temporal;  // N_t x d
  Tensor spatial;   // N x d
};

// Contracts the Tucker factors into the per-(timestamp, node, channel)
// transitional table, then normalizes over the node axis per (t, channel):
//   raw[t,n,r] = sum_p sum_q core[p,q,r] * temporal[t,p] * spatial[n,q]
//   out[.,.,r] = softmax over n of raw[.,.,r]
// Output shape: N_t x N x d; every node-axis slice sums to 1.
Tensor transitional_prompt(const TuckerFactors& factors);

struct PromptConfig {
  std::size_t num_nodes = 0;
  std::size_t num_features = 1;
  std::size_t history_len = 12;
  std::size_t steps_per_day = 288;  // N_t, the within-day timestamp count
  std::size_t dim = 64;             // d: prompt width, Tucker dim, FC width
};

// Learnable context tables plus the five fusion projections. Forward passes
// rebuild the transitional prompt from its factors, so node-axis
// normalization holds after every parameter update.
class PromptBank {
 public:
  PromptBank(const PromptConfig& cfg, std::uint64_t seed);

  const PromptConfig& config() const { return cfg_; }

  // Tucker contraction + node softmax; depends only on parameters, so
  // callers may compute it once per batch and reuse it across windows.
  Tensor transitional() const;

  // x: T x N x F history (normalized units). Output: T x N x 5d, the
  // channel-axis concatenation of the five projected context streams.
  Tensor fuse(const Tensor& x, const Tensor& e_beta,
              const std::vector<std::size_t>& tod,
              const std::vector<std::size_t>& dow,
              std::size_t window_start) const;

  std::vector<std::pair<std::string, Tensor>> parameters();

  // Ablation support: zero the table and its fusion projection (weight and
  // bias) and stop gradient flow, so the stream contributes exactly nothing.
  void disable_spatial();
  void disable_temporal();
  void disable_transitional();

  Tensor e_alpha;  // N x d
  Tensor e_tod;    // 288 x d
  Tensor e_dow;    // 7 x d
  TuckerFactors tucker;
  Tensor fc_w[5];  // fc1..fc5 weights: F->d, d->d, d->d, d->d, d->d
  Tensor fc_b[5];

 private:
  PromptConfig cfg_;
};

}  // namespace stdistill
