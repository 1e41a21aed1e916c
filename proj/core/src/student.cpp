#include "stdistill/student.hpp"

#include <cmath>

#include "stdistill/rng.hpp"

namespace stdistill {

Tensor kl_divergence(const LatentDist& dist) {
  Tensor term = add(sub(exp(dist.logvar), dist.logvar),
                    sub(square(dist.mu), Tensor::full(dist.mu.shape(), 1.0)));
  return mul(mean(term), Tensor::scalar(0.5));
}

Mlp::Mlp(const std::vector<std::size_t>& dims, std::uint64_t seed,
         const std::string& name) {
  if (dims.size() < 2) throw ContractError("Mlp: need at least in/out dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    std::string wname = name + ".l" + std::to_string(i) + ".w";
    std::vector<double> w(dims[i] * dims[i + 1]);
    Rng rng = make_param_rng(seed, wname);
    double scale = 1.0 / std::sqrt(double(dims[i]));
    fill_uniform(rng, w, -scale, scale);
    weights.push_back(Tensor::from_data({dims[i], dims[i + 1]}, std::move(w), true));
    biases.push_back(Tensor::zeros({dims[i + 1]}, true));
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    h = affine(h, weights[i], biases[i]);
    if (i + 1 < weights.size()) h = relu(h);
  }
  return h;
}

void Mlp::collect_parameters(const std::string& name,
                             std::vector<std::pair<std::string, Tensor>>& out) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.emplace_back(name + ".l" + std::to_string(i) + ".w", weights[i]);
    out.emplace_back(name + ".l" + std::to_string(i) + ".b", biases[i]);
  }
}

StudentModel::StudentModel(const StudentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      prompts_(PromptConfig{cfg.num_nodes, cfg.num_features, cfg.history_len,
                            cfg.steps_per_day, cfg.dim},
               seed),
      encoder_({cfg.history_len * 5 * cfg.dim, cfg.dim, cfg.dim, 2 * cfg.latent_dim},
               seed, "encoder"),
      decoder_({cfg.latent_dim, cfg.dim, cfg.dim, cfg.horizon * cfg.num_features},
               seed, "decoder") {}

LatentDist StudentModel::encode(const Tensor& fused) const {
  std::size_t t = cfg_.history_len, n = cfg_.num_nodes, c = 5 * cfg_.dim;
  if (fused.shape() != Shape{t, n, c})
    throw ShapeError("encode: expected fused input of shape [" + std::to_string(t) +
                     "," + std::to_string(n) + "," + std::to_string(c) + "], got " +
                     shape_str(fused.shape()));
  // per-node flattened history: N x (T * 5d)
  Tensor per_node = reshape(permute(fused, {1, 0, 2}), {n, t * c});
  Tensor enc = encoder_.forward(per_node);  // N x 2*d_z
  std::vector<std::size_t> lo(cfg_.latent_dim), hi(cfg_.latent_dim);
  for (std::size_t i = 0; i < cfg_.latent_dim; ++i) {
    lo[i] = i;
    hi[i] = cfg_.latent_dim + i;
  }
  LatentDist dist;
  dist.mu = gather(enc, lo, 1);
  dist.logvar = clamp(gather(enc, hi, 1), -10.0, 10.0);
  return dist;
}

Tensor StudentModel::reparameterize(const LatentDist& dist, const Tensor& eps,
                                    bool train_mode) const {
  if (!train_mode || deterministic_latent_) return dist.mu;
  if (eps.shape() != dist.mu.shape())
    throw ShapeError("reparameterize: eps shape " + shape_str(eps.shape()) +
                     " does not match mu shape " + shape_str(dist.mu.shape()));
  Tensor sigma = exp(mul(dist.logvar, Tensor::scalar(0.5)));
  return add(dist.mu, mul(sigma, eps));
}

Tensor StudentModel::decode(const Tensor& z) const {
  std::size_t n = cfg_.num_nodes;
  if (z.shape() != Shape{n, cfg_.latent_dim})
    throw ShapeError("decode: expected latent of shape [" + std::to_string(n) + "," +
                     std::to_string(cfg_.latent_dim) + "], got " +
                     shape_str(z.shape()));
  Tensor out = decoder_.forward(z);  // N x (T' * F)
  return permute(reshape(out, {n, cfg_.horizon, cfg_.num_features}), {1, 0, 2});
}

StudentForward StudentModel::forward(const Tensor& x, const Tensor& e_beta,
                                     const std::vector<std::size_t>& tod,
                                     const std::vector<std::size_t>& dow,
                                     std::size_t window_start, const Tensor& eps,
                                     bool train_mode) const {
  Tensor fused = prompts_.fuse(x, e_beta, tod, dow, window_start);
  StudentForward out;
  out.latent = encode(fused);
  Tensor z = reparameterize(out.latent, eps, train_mode);
  out.prediction = decode(z);
  out.kl = kl_divergence(out.latent);
  return out;
}

std::vector<std::pair<std::string, Tensor>> StudentModel::parameters() {
  auto out = prompts_.parameters();
  encoder_.collect_parameters("encoder", out);
  decoder_.collect_parameters("decoder", out);
  return out;
}

}  // namespace stdistill
