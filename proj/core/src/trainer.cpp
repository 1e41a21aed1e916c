#include "stdistill/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stdistill/optim.hpp"
#include "stdistill/rng.hpp"

namespace stdistill {

double lr_at(const TrainConfig& cfg, std::size_t epoch) {
  double lr = cfg.lr;
  for (std::size_t m : cfg.lr_milestones)
    if (epoch >= m) lr *= cfg.lr_decay;
  return lr;
}

std::vector<std::string> ablation_variants() {
  return {"full",      "w/o-KD",    "w/o-IB", "w/o-TB",
          "w/o-S-Pro", "w/o-T-Pro", "w/o-Tran-Pro", "MLP"};
}

TrainConfig ablate(const std::string& variant, TrainConfig base) {
  if (variant == "full") return base;
  if (variant == "w/o-KD") {
    base.ablation.no_kd = true;
  } else if (variant == "w/o-IB") {
    base.ablation.no_ib = true;
  } else if (variant == "w/o-TB") {
    base.ablation.no_tb = true;
  } else if (variant == "w/o-S-Pro") {
    base.ablation.no_s_pro = true;
  } else if (variant == "w/o-T-Pro") {
    base.ablation.no_t_pro = true;
  } else if (variant == "w/o-Tran-Pro") {
    base.ablation.no_tran_pro = true;
  } else if (variant == "MLP") {
    base.ablation.no_kd = true;
    base.ablation.no_ib = true;
    base.ablation.no_s_pro = true;
    base.ablation.no_t_pro = true;
    base.ablation.no_tran_pro = true;
  } else {
    throw ConfigError("ablate: unknown variant '" + variant + "'");
  }
  return base;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["lr_milestones"] = lr_milestones;
  j["lr_decay"] = lr_decay;
  j["seed"] = seed;
  j["lambda"] = loss.lambda;
  j["beta1"] = loss.beta1;
  j["beta2"] = loss.beta2;
  j["delta"] = loss.delta;
  j["base_loss"] = to_string(loss.base_loss);
  j["bounded"] = loss.bounded;
  j["no_kd"] = ablation.no_kd;
  j["no_ib"] = ablation.no_ib;
  j["no_tb"] = ablation.no_tb;
  j["no_s_pro"] = ablation.no_s_pro;
  j["no_t_pro"] = ablation.no_t_pro;
  j["no_tran_pro"] = ablation.no_tran_pro;
  j["patience"] = patience;
  j["plain_sgd"] = plain_sgd;
  j["clip_norm"] = clip_norm;
  j["history_len"] = history_len;
  j["horizon"] = horizon;
  j["dim"] = dim;
  j["latent_dim"] = latent_dim;
  j["steps_per_day"] = steps_per_day;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs");
  c.batch_size = j.at("batch_size");
  c.lr = j.at("lr");
  c.lr_milestones = j.at("lr_milestones").get<std::vector<std::size_t>>();
  c.lr_decay = j.at("lr_decay");
  c.seed = j.at("seed");
  c.loss.lambda = j.at("lambda");
  c.loss.beta1 = j.at("beta1");
  c.loss.beta2 = j.at("beta2");
  c.loss.delta = j.at("delta");
  c.loss.base_loss = base_loss_from_string(j.at("base_loss"));
  c.loss.bounded = j.at("bounded");
  c.ablation.no_kd = j.at("no_kd");
  c.ablation.no_ib = j.at("no_ib");
  c.ablation.no_tb = j.at("no_tb");
  c.ablation.no_s_pro = j.at("no_s_pro");
  c.ablation.no_t_pro = j.at("no_t_pro");
  c.ablation.no_tran_pro = j.at("no_tran_pro");
  c.patience = j.at("patience");
  c.plain_sgd = j.at("plain_sgd");
  c.clip_norm = j.at("clip_norm");
  c.history_len = j.at("history_len");
  c.horizon = j.at("horizon");
  c.dim = j.at("dim");
  c.latent_dim = j.at("latent_dim");
  c.steps_per_day = j.at("steps_per_day");
  return c;
}

nlohmann::json EpochLog::to_json() const {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["lr"] = lr;
  j["l_pre"] = l_pre;
  j["l_kd"] = l_kd;
  j["l_ib"] = l_ib;
  j["train_loss"] = train_loss;
  j["val_mae"] = val_mae;
  return j;
}

namespace {

void snapshot_params(ParamList& params, std::vector<std::vector<double>>& out) {
  out.clear();
  for (auto& [name, p] : params) out.push_back(p.data());
}

void restore_params(ParamList& params, const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i].second.raw_data() = snap[i];
}

}  // namespace

TrainResult train(const std::vector<WindowedSample>& windows,
                  const SplitView& split, const TeacherPredictions* teacher,
                  const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  if (cfg.ablation.no_kd) cfg.loss.lambda = 0.0;
  if (cfg.ablation.no_ib) {
    cfg.loss.beta1 = 0.0;
    cfg.loss.beta2 = 0.0;
  }
  if (cfg.ablation.no_tb) cfg.loss.bounded = false;

  bool use_kd = !cfg.ablation.no_kd && cfg.loss.lambda != 0.0;
  if (use_kd) {
    if (!teacher)
      throw AlignmentError("train: teacher predictions required unless no_kd");
    teacher->validate_against(windows);
  }
  if (windows.empty()) throw ContractError("train: no windows");

  const Shape& xs = windows[0].x.shape();
  const Shape& ys = windows[0].y.shape();
  if (xs[0] != cfg.history_len || ys[0] != cfg.horizon)
    throw ContractError("train: window shapes disagree with config history/horizon");

  StudentConfig scfg;
  scfg.num_nodes = xs[1];
  scfg.num_features = xs[2];
  scfg.history_len = cfg.history_len;
  scfg.horizon = cfg.horizon;
  scfg.steps_per_day = cfg.steps_per_day;
  scfg.dim = cfg.dim;
  scfg.latent_dim = cfg.latent_dim;

  TrainResult result;
  result.config = cfg;
  result.model = std::make_shared<StudentModel>(scfg, cfg.seed);
  StudentModel& model = *result.model;
  if (cfg.ablation.no_ib) model.set_deterministic_latent(true);
  if (cfg.ablation.no_s_pro) model.prompts().disable_spatial();
  if (cfg.ablation.no_t_pro) model.prompts().disable_temporal();
  if (cfg.ablation.no_tran_pro) model.prompts().disable_transitional();

  std::vector<WindowedSample> train_view(
      windows.begin() + std::ptrdiff_t(split.train_begin),
      windows.begin() + std::ptrdiff_t(split.train_end));
  result.normalizer.fit(train_view);
  const Normalizer& norm = result.normalizer;

  // normalized inputs/targets, cached once (teacher output is frozen, so its
  // predictions are prepared outside the epoch loop as well)
  std::vector<Tensor> xn, yn, tn;
  xn.reserve(windows.size());
  yn.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    xn.push_back(norm.apply(windows[i].x));
    yn.push_back(norm.apply(windows[i].y));
    if (use_kd) tn.push_back(norm.apply(teacher->window(i)));
  }

  ParamList all_params = model.parameters();
  ParamList params;  // trainable subset
  for (auto& [name, p] : all_params)
    if (p.requires_grad()) params.emplace_back(name, p);

  AdamOptimizer adam;
  SgdOptimizer sgd;
  Rng eps_rng = make_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  bool sample_latent = !cfg.ablation.no_ib;
  bool use_ib = cfg.loss.beta1 + cfg.loss.beta2 != 0.0;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_snapshot;
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = lr_at(cfg, epoch);
    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    std::size_t batches = 0;
    for (std::size_t b = split.train_begin; b < split.train_end;
         b += cfg.batch_size) {
      std::size_t end = std::min(b + cfg.batch_size, split.train_end);
      Tensor e_beta = model.prompts().transitional();
      std::vector<Tensor> preds, targets, teachers, kls;
      for (std::size_t i = b; i < end; ++i) {
        Tensor eps;
        if (sample_latent) {
          std::vector<double> e(scfg.num_nodes * scfg.latent_dim);
          fill_normal(eps_rng, e);
          eps = Tensor::from_data({scfg.num_nodes, scfg.latent_dim}, std::move(e));
        }
        StudentForward f = model.forward(xn[i], e_beta, windows[i].tod,
                                         windows[i].dow, windows[i].window_start,
                                         eps, true);
        preds.push_back(reshape(f.prediction, {1, f.prediction.size()}));
        targets.push_back(reshape(yn[i], {1, yn[i].size()}));
        if (use_kd) teachers.push_back(reshape(tn[i], {1, tn[i].size()}));
        if (use_ib) kls.push_back(reshape(f.kl, {1}));
      }
      Tensor pred = concat(preds, 0);
      Tensor target = concat(targets, 0);

      Tensor pre = predictive_loss(pred, target, cfg.loss.base_loss);
      Tensor total = pre;
      double l_kd_val = 0.0, l_ib_val = 0.0;
      if (use_kd) {
        Tensor teach = concat(teachers, 0);
        Tensor kd = cfg.loss.bounded
                        ? bounded_kd_loss(pred, teach, target, cfg.loss.delta,
                                          cfg.loss.base_loss)
                        : predictive_loss(pred, teach, cfg.loss.base_loss);
        l_kd_val = kd.item();
        total = add(total, mul(kd, Tensor::scalar(cfg.loss.lambda)));
      }
      if (use_ib) {
        Tensor kl = mean(concat(kls, 0));
        l_ib_val = (cfg.loss.beta1 + cfg.loss.beta2) * kl.item();
        total = add(total,
                    mul(kl, Tensor::scalar(cfg.loss.beta1 + cfg.loss.beta2)));
      }
      double loss_val = total.item();
      if (!std::isfinite(loss_val)) {
        std::ostringstream os;
        os << "train: non-finite loss at epoch " << epoch << ", batch "
           << batches << " (l_pre=" << pre.item() << ", l_kd=" << l_kd_val
           << ", l_ib=" << l_ib_val << ")";
        throw StateError(os.str());
      }
      zero_grads(params);
      backward(total);
      if (cfg.clip_norm > 0) clip_grad_norm(params, cfg.clip_norm);
      if (cfg.plain_sgd)
        sgd.step(params, lr);
      else
        adam.step(params, lr);

      log.l_pre += pre.item();
      log.l_kd += l_kd_val;
      log.l_ib += l_ib_val;
      log.train_loss += loss_val;
      ++batches;
    }
    if (batches) {
      log.l_pre /= double(batches);
      log.l_kd /= double(batches);
      log.l_ib /= double(batches);
      log.train_loss /= double(batches);
    }
    log.val_mae = evaluate(model, norm, windows, split.val_begin, split.val_end)
                      .aggregate.mae;
    result.log.push_back(log);

    if (log.val_mae < best_val) {
      best_val = log.val_mae;
      result.best_epoch = epoch;
      snapshot_params(params, best_snapshot);
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  if (!best_snapshot.empty()) restore_params(params, best_snapshot);
  return result;
}

EvalReport evaluate(const StudentModel& model, const Normalizer& norm,
                    const std::vector<WindowedSample>& windows,
                    std::size_t begin, std::size_t end,
                    const std::optional<CorruptionSpec>& corruption) {
  if (begin >= end || end > windows.size())
    throw ContractError("evaluate: empty or out-of-range split [" +
                        std::to_string(begin) + "," + std::to_string(end) + ")");
  Tensor e_beta = model.prompts().transitional();
  MetricAccumulator acc;
  for (std::size_t i = begin; i < end; ++i) {
    const WindowedSample& w = windows[i];
    Tensor x_in;
    if (corruption && corruption->gamma > 0.0) {
      std::uint64_t cseed = corruption->seed ^ (w.window_start * 0x100000001b3ull);
      if (corruption->mode == "noise") {
        x_in = corrupt_noise(norm.apply(w.x), corruption->gamma, cseed);
      } else if (corruption->mode == "missing") {
        x_in = norm.apply(corrupt_missing(w.x, corruption->gamma, cseed));
      } else {
        throw ConfigError("evaluate: unknown corruption mode '" +
                          corruption->mode + "'");
      }
    } else {
      x_in = norm.apply(w.x);
    }
    StudentForward f =
        model.forward(x_in, e_beta, w.tod, w.dow, w.window_start, Tensor(), false);
    acc.add(norm.invert(f.prediction.detach()), w.y);
  }
  return acc.report();
}

Checkpoint make_checkpoint(const TrainResult& result, std::string rng_state) {
  Checkpoint ckpt;
  for (auto& [name, p] : result.model->parameters())
    ckpt.tensors.emplace_back(name, p.detach());
  ckpt.meta["config"] = result.config.to_json();
  ckpt.meta["epoch"] = result.best_epoch;
  ckpt.meta["rng_state"] = rng_state;
  ckpt.meta["normalizer"] = {{"mean", result.normalizer.mean()},
                             {"std", result.normalizer.stddev()}};
  const StudentConfig& sc = result.model->config();
  ckpt.meta["num_nodes"] = sc.num_nodes;
  ckpt.meta["num_features"] = sc.num_features;
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : result.log) log.push_back(e.to_json());
  ckpt.meta["log"] = log;
  return ckpt;
}

TrainResult restore_checkpoint(const Checkpoint& ckpt) {
  TrainResult result;
  result.config = TrainConfig::from_json(ckpt.meta.at("config"));
  StudentConfig scfg;
  scfg.num_nodes = ckpt.meta.at("num_nodes");
  scfg.num_features = ckpt.meta.at("num_features");
  scfg.history_len = result.config.history_len;
  scfg.horizon = result.config.horizon;
  scfg.steps_per_day = result.config.steps_per_day;
  scfg.dim = result.config.dim;
  scfg.latent_dim = result.config.latent_dim;
  result.model = std::make_shared<StudentModel>(scfg, result.config.seed);
  if (result.config.ablation.no_ib) result.model->set_deterministic_latent(true);
  for (auto& [name, p] : result.model->parameters()) {
    const Tensor& stored = ckpt.find(name);
    if (stored.shape() != p.shape())
      throw AlignmentError("checkpoint: tensor '" + name + "' has shape " +
                           shape_str(stored.shape()) + ", model expects " +
                           shape_str(p.shape()));
    p.raw_data() = stored.data();
  }
  result.normalizer.set_stats(
      ckpt.meta.at("normalizer").at("mean").get<std::vector<double>>(),
      ckpt.meta.at("normalizer").at("std").get<std::vector<double>>());
  result.best_epoch = ckpt.meta.at("epoch");
  for (const auto& e : ckpt.meta.at("log")) {
    EpochLog l;
    l.epoch = e.at("epoch");
    l.lr = e.at("lr");
    l.l_pre = e.at("l_pre");
    l.l_kd = e.at("l_kd");
    l.l_ib = e.at("l_ib");
    l.train_loss = e.at("train_loss");
    l.val_mae = e.at("val_mae");
    result.log.push_back(l);
  }
  return result;
}

}  // namespace stdistill
