#include "stdistill/loss.hpp"

#include <cmath>

namespace stdistill {

BaseLoss base_loss_from_string(const std::string& s) {
  if (s == "mae" || s == "MAE") return BaseLoss::MAE;
  if (s == "mse" || s == "MSE") return BaseLoss::MSE;
  throw ConfigError("base_loss: unknown kind '" + s + "'");
}

std::string to_string(BaseLoss kind) {
  return kind == BaseLoss::MAE ? "mae" : "mse";
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

// loss value on raw buffers, outside the graph
double detached_loss(const Tensor& a, const Tensor& b, BaseLoss kind) {
  const auto& da = a.data();
  const auto& db = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    double e = da[i] - db[i];
    acc += kind == BaseLoss::MAE ? std::abs(e) : e * e;
  }
  return acc / double(da.size());
}

}  // namespace

Tensor predictive_loss(const Tensor& prediction, const Tensor& target,
                       BaseLoss kind) {
  check_same_shape(prediction, target, "predictive_loss");
  Tensor diff = sub(prediction, target);
  return kind == BaseLoss::MAE ? mean(abs(diff)) : mean(square(diff));
}

Tensor bounded_kd_loss(const Tensor& prediction, const Tensor& teacher,
                       const Tensor& target, double delta, BaseLoss kind) {
  check_same_shape(prediction, teacher, "bounded_kd_loss");
  check_same_shape(prediction, target, "bounded_kd_loss");
  if (delta < 0) throw ContractError("bounded_kd_loss: delta must be >= 0");
  double s = detached_loss(prediction, target, kind);
  double t = detached_loss(teacher, target, kind);
  if (s + delta >= t) return predictive_loss(prediction, target, kind);
  return Tensor::scalar(0.0);
}

TotalLoss total_loss(const Tensor& prediction, const Tensor& target,
                     const Tensor& teacher, const Tensor& kl,
                     const LossConfig& cfg) {
  if (kl.size() != 1 || kl.item() < 0)
    throw ContractError("total_loss: kl must be a non-negative scalar");
  TotalLoss out;
  Tensor pre = predictive_loss(prediction, target, cfg.base_loss);
  Tensor kd = cfg.bounded
                  ? bounded_kd_loss(prediction, teacher, target, cfg.delta,
                                    cfg.base_loss)
                  : predictive_loss(prediction, teacher, cfg.base_loss);
  out.l_pre = pre.item();
  out.l_kd = kd.item();
  out.kl = kl.item();
  out.value = add(pre, add(mul(kd, Tensor::scalar(cfg.lambda)),
                           mul(kl, Tensor::scalar(cfg.beta1 + cfg.beta2))));
  return out;
}

}  // namespace stdistill
