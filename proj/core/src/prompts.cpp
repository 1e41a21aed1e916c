#include "stdistill/prompts.hpp"

#include <algorithm>
#include <cmath>

#include "stdistill/rng.hpp"

namespace stdistill {

Tensor transitional_prompt(const TuckerFactors& factors) {
  const Shape& cs = factors.core.shape();
  if (cs.size() != 3 || cs[0] != cs[1] || cs[1] != cs[2])
    throw ShapeError("transitional_prompt: core must be d x d x d, got " +
                     shape_str(cs));
  std::size_t d = cs[0];
  if (factors.temporal.ndim() != 2 || factors.temporal.shape()[1] != d ||
      factors.spatial.ndim() != 2 || factors.spatial.shape()[1] != d)
    throw ShapeError("transitional_prompt: factor dims disagree with Tucker dim " +
                     std::to_string(d));
  std::size_t nt = factors.temporal.shape()[0];
  std::size_t n = factors.spatial.shape()[0];

  // temporal (N_t x d) . core viewed as (d, d*d)  ->  (N_t, d*d), col = q*d + r
  Tensor core2 = reshape(factors.core, {d, d * d});
  Tensor tc = matmul(factors.temporal, core2);
  std::vector<Tensor> slices;
  slices.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    Tensor row = reshape(gather(tc, {t}, 0), {d, d});       // [q, r]
    slices.push_back(reshape(matmul(factors.spatial, row), {1, n, d}));
  }
  Tensor raw = concat(slices, 0);  // N_t x N x d
  return softmax(raw, 1);
}

namespace {

Tensor init_table(Shape shape, std::size_t dim, std::uint64_t seed,
                  const std::string& name) {
  std::vector<double> data(shape_numel(shape));
  Rng rng = make_param_rng(seed, name);
  double scale = 1.0 / std::sqrt(double(dim));
  fill_uniform(rng, data, -scale, scale);
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

Tensor init_fc_weight(std::size_t in, std::size_t out, std::uint64_t seed,
                      const std::string& name) {
  std::vector<double> data(in * out);
  Rng rng = make_param_rng(seed, name);
  double scale = 1.0 / std::sqrt(double(in));
  fill_uniform(rng, data, -scale, scale);
  return Tensor::from_data({in, out}, std::move(data), true);
}

void freeze_zero(Tensor& t) {
  t.set_requires_grad(false);
  std::fill(t.raw_data().begin(), t.raw_data().end(), 0.0);
}

}  // namespace

PromptBank::PromptBank(const PromptConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  std::size_t d = cfg.dim, n = cfg.num_nodes;
  e_alpha = init_table({n, d}, d, seed, "prompt.alpha");
  e_tod = init_table({kTimeOfDaySlots, d}, d, seed, "prompt.tod");
  e_dow = init_table({kDayOfWeekSlots, d}, d, seed, "prompt.dow");
  tucker.core = init_table({d, d, d}, d, seed, "prompt.tucker.core");
  tucker.temporal = init_table({cfg.steps_per_day, d}, d, seed, "prompt.tucker.temporal");
  tucker.spatial = init_table({n, d}, d, seed, "prompt.tucker.spatial");
  std::size_t fc_in[5] = {cfg.num_features, d, d, d, d};
  for (int i = 0; i < 5; ++i) {
    std::string base = "fuse.fc" + std::to_string(i + 1);
    fc_w[i] = init_fc_weight(fc_in[i], d, seed, base + ".w");
    fc_b[i] = Tensor::zeros({d}, true);
  }
}

Tensor PromptBank::transitional() const { return transitional_prompt(tucker); }

Tensor PromptBank::fuse(const Tensor& x, const Tensor& e_beta,
                        const std::vector<std::size_t>& tod,
                        const std::vector<std::size_t>& dow,
                        std::size_t window_start) const {
  const Shape& xs = x.shape();
  if (xs.size() != 3 || xs[1] != cfg_.num_nodes || xs[2] != cfg_.num_features)
    throw ShapeError("fuse: expected history of shape [T," +
                     std::to_string(cfg_.num_nodes) + "," +
                     std::to_string(cfg_.num_features) + "], got " + shape_str(xs));
  std::size_t t = xs[0], n = xs[1], f = xs[2], d = cfg_.dim;
  if (tod.size() != t || dow.size() != t)
    throw ShapeError("fuse: time index arrays must have one entry per history step");

  Tensor zeros_tnd = Tensor::zeros({t, n, d});

  // per-(step, node) projection of the raw features
  Tensor s1 = reshape(affine(reshape(x, {t * n, f}), fc_w[0], fc_b[0]), {t, n, d});

  // spatial prompt, shared across steps
  Tensor s2 = add(zeros_tnd, reshape(affine(e_alpha, fc_w[1], fc_b[1]), {1, n, d}));

  // transitional prompt rows at each step's within-day timestamp
  std::vector<std::size_t> day_steps(t);
  for (std::size_t i = 0; i < t; ++i)
    day_steps[i] = (window_start + i) % cfg_.steps_per_day;
  Tensor beta_rows = gather(e_beta, day_steps, 0);  // T x N x d
  Tensor s3 = reshape(affine(reshape(beta_rows, {t * n, d}), fc_w[2], fc_b[2]), {t, n, d});

  // temporal prompts, shared across nodes
  Tensor s4 = add(zeros_tnd,
                  reshape(affine(gather(e_tod, tod, 0), fc_w[3], fc_b[3]), {t, 1, d}));
  Tensor s5 = add(zeros_tnd,
                  reshape(affine(gather(e_dow, dow, 0), fc_w[4], fc_b[4]), {t, 1, d}));

  return concat({s1, s2, s3, s4, s5}, 2);
}

std::vector<std::pair<std::string, Tensor>> PromptBank::parameters() {
  std::vector<std::pair<std::string, Tensor>> out = {
      {"prompt.alpha", e_alpha},
      {"prompt.tod", e_tod},
      {"prompt.dow", e_dow},
      {"prompt.tucker.core", tucker.core},
      {"prompt.tucker.temporal", tucker.temporal},
      {"prompt.tucker.spatial", tucker.spatial},
  };
  for (int i = 0; i < 5; ++i) {
    std::string base = "fuse.fc" + std::to_string(i + 1);
    out.emplace_back(base + ".w", fc_w[i]);
    out.emplace_back(base + ".b", fc_b[i]);
  }
  return out;
}

void PromptBank::disable_spatial() {
  freeze_zero(e_alpha);
  freeze_zero(fc_w[1]);
  freeze_zero(fc_b[1]);
}

void PromptBank::disable_temporal() {
  freeze_zero(e_tod);
  freeze_zero(e_dow);
  freeze_zero(fc_w[3]);
  freeze_zero(fc_b[3]);
  freeze_zero(fc_w[4]);
  freeze_zero(fc_b[4]);
}

void PromptBank::disable_transitional() {
  freeze_zero(tucker.core);
  freeze_zero(tucker.temporal);
  freeze_zero(tucker.spatial);
  freeze_zero(fc_w[2]);
  freeze_zero(fc_b[2]);
}

}  // namespace stdistill
