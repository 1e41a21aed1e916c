#pragma once

#include <string>

#include "stdistill/tensor.hpp"

namespace stdistill {

enum class BaseLoss { MAE, MSE };

BaseLoss base_loss_from_string(const std::string& s);
std::string to_string(BaseLoss kind);

struct LossConfig {
  double lambda = 0.3;   // KD weight
  double beta1 = 1e-3;   // IB multipliers
  double beta2 = 1e-3;
  double delta = 0.1;    // teacher bound threshold
  BaseLoss base_loss = BaseLoss::MAE;
  bool bounded = true;   // false: plain distillation to the teacher (w/o-TB)
};

Tensor predictive_loss(const Tensor& prediction, const Tensor& target,
                       BaseLoss kind);

// Teacher-bounded distillation loss, gated at batch granularity:
//   s = l(prediction, target), t = l(teacher, target)
//   returns s when s + delta >= t, else an exact zero (no gradient).
// The gate condition is evaluated on detached values.
Tensor bounded_kd_loss(const Tensor& prediction, const Tensor& teacher,
                       const Tensor& target, double delta, BaseLoss kind);

struct TotalLoss {
  Tensor value;  // graph scalar: l_pre + lambda * l_kd + (beta1 + beta2) * kl
  double l_pre = 0.0;
  double l_kd = 0.0;
  double kl = 0.0;
};

// kl must carry the closed-form KL (its own 1/2 factor included).
TotalLoss total_loss(const Tensor& prediction, const Tensor& target,
                     const Tensor& teacher, const Tensor& kl,
                     const LossConfig& cfg);

}  // namespace stdistill
