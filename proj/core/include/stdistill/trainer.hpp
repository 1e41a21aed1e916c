#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stdistill/checkpoint.hpp"
#include "stdistill/dataset.hpp"
#include "stdistill/loss.hpp"
#include "stdistill/metrics.hpp"
#include "stdistill/student.hpp"
#include "stdistill/teacher.hpp"

namespace stdistill {

struct AblationFlags {
  bool no_kd = false;       // lambda = 0, teacher unused
  bool no_ib = false;       // beta = 0, deterministic latent
  bool no_tb = false;       // plain distillation loss instead of bounded
  bool no_s_pro = false;    // spatial prompt off
  bool no_t_pro = false;    // time-of-day / day-of-week prompts off
  bool no_tran_pro = false; // transitional prompt off
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 0.002;
  std::vector<std::size_t> lr_milestones = {1, 50, 100};
  double lr_decay = 0.5;
  std::uint64_t seed = 0;
  LossConfig loss;
  AblationFlags ablation;
  std::size_t patience = 15;   // early stop on val MAE; 0 disables
  bool plain_sgd = false;      // theta -= lr * grad, for exactness checks
  double clip_norm = 5.0;      // 0 disables

  std::size_t history_len = 12;
  std::size_t horizon = 12;
  std::size_t dim = 64;
  std::size_t latent_dim = 64;
  std::size_t steps_per_day = 288;  // N_t of the transitional prompt

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Base lr with one decay per milestone already reached (epoch >= milestone).
double lr_at(const TrainConfig& cfg, std::size_t epoch);

// Table-style variant names: "full", "w/o-KD", "w/o-IB", "w/o-TB",
// "w/o-S-Pro", "w/o-T-Pro", "w/o-Tran-Pro", "MLP".
TrainConfig ablate(const std::string& variant, TrainConfig base);
std::vector<std::string> ablation_variants();

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double l_pre = 0.0;
  double l_kd = 0.0;
  double l_ib = 0.0;     // (beta1 + beta2) * KL contribution
  double train_loss = 0.0;
  double val_mae = 0.0;  // original units

  nlohmann::json to_json() const;
};

struct TrainResult {
  std::shared_ptr<StudentModel> model;
  Normalizer normalizer;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  TrainConfig config;
};

// Algorithm-1 training loop over pre-built windows. teacher may be null only
// when cfg.ablation.no_kd is set; otherwise it must align with the windows.
TrainResult train(const std::vector<WindowedSample>& windows,
                  const SplitView& split, const TeacherPredictions* teacher,
                  const TrainConfig& cfg);

struct CorruptionSpec {
  std::string mode;  // "noise" (normalized inputs) or "missing" (raw inputs)
  double gamma = 0.0;
  std::uint64_t seed = 0;
};

// Deterministic eval-mode evaluation (Z = mu) in original units. Corruption
// is applied to inputs only, never targets.
EvalReport evaluate(const StudentModel& model, const Normalizer& norm,
                    const std::vector<WindowedSample>& windows,
                    std::size_t begin, std::size_t end,
                    const std::optional<CorruptionSpec>& corruption = {});

Checkpoint make_checkpoint(const TrainResult& result, std::string rng_state = "");
TrainResult restore_checkpoint(const Checkpoint& ckpt);

}  // namespace stdistill
