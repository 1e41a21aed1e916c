#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "stdistill/tensor.hpp"

namespace stdistill {

using ParamList = std::vector<std::pair<std::string, Tensor>>;

inline void zero_grads(ParamList& params) {
  for (auto& [name, p] : params) p.zero_grad();
}

// Scales all gradients so their global L2 norm is at most max_norm.
inline double clip_grad_norm(ParamList& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, p] : params)
    for (double g : p.grad()) sq += g * g;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    double scale = max_norm / norm;
    for (auto& [name, p] : params)
      for (double& g : p.raw_grad()) g *= scale;
  }
  return norm;
}

// theta <- theta - lr * grad
class SgdOptimizer {
 public:
  void step(ParamList& params, double lr) {
    for (auto& [name, p] : params) {
      auto& data = p.raw_data();
      const auto& grad = p.grad();
      for (std::size_t i = 0; i < data.size(); ++i) data[i] -= lr * grad[i];
    }
  }
};

// Adaptive-moment gradient descent with bias correction.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamList& params, double lr) {
    if (m_.empty()) {
      for (auto& [name, p] : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
      }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, double(t_));
    double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& data = params[k].second.raw_data();
      const auto& grad = params[k].second.grad();
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < data.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
        data[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
      }
    }
  }

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace stdistill
