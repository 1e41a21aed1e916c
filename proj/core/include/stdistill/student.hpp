#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stdistill/prompts.hpp"
#include "stdistill/tensor.hpp"

namespace stdistill {

// Per-node Gaussian latent parameters; sigma = exp(logvar / 2).
struct LatentDist {
  Tensor mu;      // N x d_z
  Tensor logvar;  // N x d_z, clamped to [-10, 10]
};

// Mean over all latent coordinates of (1/2)(-logvar + exp(logvar) + mu^2 - 1),
// the closed-form KL to a standard normal prior. Always >= 0.
Tensor kl_divergence(const LatentDist& dist);

// Plain MLP with rectifier activations between layers; the last layer is
// linear.
struct Mlp {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  Mlp() = default;
  // dims = {in, hidden..., out}; parameter names derive from `name`.
  Mlp(const std::vector<std::size_t>& dims, std::uint64_t seed,
      const std::string& name);
  Tensor forward(const Tensor& x) const;  // x: rows x in
  void collect_parameters(const std::string& name,
                          std::vector<std::pair<std::string, Tensor>>& out);
};

struct StudentConfig {
  std::size_t num_nodes = 0;
  std::size_t num_features = 1;
  std::size_t history_len = 12;
  std::size_t horizon = 12;
  std::size_t steps_per_day = 288;
  std::size_t dim = 64;        // d: prompt width and MLP hidden width
  std::size_t latent_dim = 64; // d_z
};

struct StudentForward {
  Tensor prediction;  // horizon x N x F, normalized units
  LatentDist latent;
  Tensor kl;          // scalar
};

// Variational-IB student: prompt fusion, MLP encoder to a per-node Gaussian
// latent, reparameterized sampling, MLP decoder to the forecast. The student
// is strictly node-local; spatial context enters only through the prompts.
class StudentModel {
 public:
  StudentModel(const StudentConfig& cfg, std::uint64_t seed);

  const StudentConfig& config() const { return cfg_; }

  LatentDist encode(const Tensor& fused) const;  // fused: T x N x 5d
  // train_mode: Z = mu + sigma .* eps; eval: Z = mu, eps ignored.
  Tensor reparameterize(const LatentDist& dist, const Tensor& eps,
                        bool train_mode) const;
  Tensor decode(const Tensor& z) const;          // z: N x d_z -> T' x N x F

  // Full pipeline for one window. e_beta is the current transitional prompt
  // (compute once per batch via prompts().transitional()).
  StudentForward forward(const Tensor& x, const Tensor& e_beta,
                         const std::vector<std::size_t>& tod,
                         const std::vector<std::size_t>& dow,
                         std::size_t window_start, const Tensor& eps,
                         bool train_mode) const;

  PromptBank& prompts() { return prompts_; }
  const PromptBank& prompts() const { return prompts_; }

  std::vector<std::pair<std::string, Tensor>> parameters();

  // Ablation: freeze the latent to its mean and skip the KL term upstream.
  void set_deterministic_latent(bool v) { deterministic_latent_ = v; }
  bool deterministic_latent() const { return deterministic_latent_; }

 private:
  StudentConfig cfg_;
  PromptBank prompts_;
  Mlp encoder_;  // T*5d -> d -> d -> 2*d_z
  Mlp decoder_;  // d_z -> d -> d -> T'*F
  bool deterministic_latent_ = false;
};

}  // namespace stdistill
