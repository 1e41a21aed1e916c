// Experiment front-end: data synthesis, teacher preparation, training,
// evaluation, robustness sweeps, ablations, and the scalability benchmark.
//
// Exit codes: 0 ok, 1 runtime/data error, 2 usage error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stdistill/checkpoint.hpp"
#include "stdistill/dataset.hpp"
#include "stdistill/metrics.hpp"
#include "stdistill/teacher.hpp"
#include "stdistill/trainer.hpp"

using namespace stdistill;
using nlohmann::json;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("STDISTILL_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("STDISTILL_SEED is not an integer: " + std::string(env));
    }
  }
  return 0;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << text;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }
}

// Precedence: CLI flag > config file > built-in default. The caller overlays
// explicitly-passed flags after this merge.
TrainConfig merge_config(const std::string& config_path) {
  TrainConfig base;
  json merged = base.to_json();
  if (!config_path.empty()) {
    json file = load_json_file(config_path);
    for (auto& [key, value] : file.items()) {
      if (!merged.contains(key))
        throw ConfigError("unknown config key: " + key);
      merged[key] = value;
    }
  }
  return TrainConfig::from_json(merged);
}

struct LoadedData {
  Dataset dataset;
  std::vector<WindowedSample> windows;
  SplitView view;
};

LoadedData load_windows(const std::string& path, std::size_t history,
                        std::size_t horizon) {
  LoadedData d;
  d.dataset = load_dataset(path);
  d.windows = make_windows(d.dataset.series, history, horizon);
  d.view = split(d.windows.size());
  return d;
}

std::pair<std::size_t, std::size_t> split_range(const SplitView& v,
                                                const std::string& name) {
  if (name == "train") return {v.train_begin, v.train_end};
  if (name == "val") return {v.val_begin, v.val_end};
  if (name == "test") return {v.test_begin, v.test_end};
  throw ConfigError("unknown split: " + name);
}

std::vector<double> parse_gammas(const std::string& text) {
  // "start:stop:step", inclusive endpoints within float tolerance
  std::vector<double> out;
  double a, b, s;
  char c1, c2;
  std::istringstream in(text);
  if (!(in >> a >> c1 >> b >> c2 >> s) || c1 != ':' || c2 != ':' || s <= 0)
    throw ConfigError("bad gamma range (want start:stop:step): " + text);
  for (double g = a; g <= b + 1e-9; g += s) out.push_back(g);
  return out;
}

// ---- subcommand state ----

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
};

struct TeacherArgs {
  std::string mode;
  std::string data;
  std::string input;
  std::string out;
  std::size_t history = 12, horizon = 12;
  double sigma = 0.0, bias = 0.0;
  RefTeacherConfig ref;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string data;
  std::string teacher;
  std::string config_path;
  std::string out_dir;
  std::string variant;  // ablate only
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split_name = "test";
  std::string out;
  std::string mode;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  bool csv = false;
};

struct RobustArgs {
  std::string checkpoint;
  std::string data;
  std::string mode = "noise";
  std::string gammas = "0:0.3:0.05";
  std::string out;
  std::uint64_t seed = 0;
};

struct BenchArgs {
  std::vector<std::size_t> sizes = {50, 100, 200, 400, 800};
  std::size_t reps = 100;
  std::size_t history = 12, horizon = 3;
  std::size_t dim = 8;
  std::size_t teacher_hidden = 16;
  std::uint64_t seed = 0;
  std::string out;
};

// Attach the TrainConfig surface to a subcommand; returns the option pointers
// so the caller can apply only the flags the user actually passed.
struct ConfigFlags {
  TrainConfig staged;  // flag values land here
  std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> apply;

  void overlay(TrainConfig& cfg) const {
    for (const auto& [opt, fn] : apply)
      if (opt->count() > 0) fn(cfg);
  }
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  TrainConfig& s = f.staged;
  auto track = [&](CLI::Option* opt, std::function<void(TrainConfig&)> fn) {
    f.apply.emplace_back(opt, std::move(fn));
  };
  track(cmd->add_option("--epochs", s.epochs, "training epochs"),
        [&s](TrainConfig& c) { c.epochs = s.epochs; });
  track(cmd->add_option("--batch", s.batch_size, "minibatch size"),
        [&s](TrainConfig& c) { c.batch_size = s.batch_size; });
  track(cmd->add_option("--lr", s.lr, "base learning rate"),
        [&s](TrainConfig& c) { c.lr = s.lr; });
  track(cmd->add_option("--lr-milestones", s.lr_milestones,
                        "epochs at which lr decays"),
        [&s](TrainConfig& c) { c.lr_milestones = s.lr_milestones; });
  track(cmd->add_option("--lr-decay", s.lr_decay, "multiplicative lr decay"),
        [&s](TrainConfig& c) { c.lr_decay = s.lr_decay; });
  track(cmd->add_option("--seed", s.seed, "RNG seed"),
        [&s](TrainConfig& c) { c.seed = s.seed; });
  track(cmd->add_option("--lambda", s.loss.lambda, "distillation weight"),
        [&s](TrainConfig& c) { c.loss.lambda = s.loss.lambda; });
  track(cmd->add_option("--beta1", s.loss.beta1, "bottleneck weight 1"),
        [&s](TrainConfig& c) { c.loss.beta1 = s.loss.beta1; });
  track(cmd->add_option("--beta2", s.loss.beta2, "bottleneck weight 2"),
        [&s](TrainConfig& c) { c.loss.beta2 = s.loss.beta2; });
  track(cmd->add_option("--delta", s.loss.delta, "teacher bound threshold"),
        [&s](TrainConfig& c) { c.loss.delta = s.loss.delta; });
  track(cmd->add_option("--patience", s.patience, "early-stop patience (0 off)"),
        [&s](TrainConfig& c) { c.patience = s.patience; });
  track(cmd->add_flag("--plain-sgd", s.plain_sgd, "plain gradient descent"),
        [&s](TrainConfig& c) { c.plain_sgd = s.plain_sgd; });
  track(cmd->add_option("--clip-norm", s.clip_norm, "grad clip (0 off)"),
        [&s](TrainConfig& c) { c.clip_norm = s.clip_norm; });
  track(cmd->add_option("--history", s.history_len, "input window length T"),
        [&s](TrainConfig& c) { c.history_len = s.history_len; });
  track(cmd->add_option("--horizon", s.horizon, "forecast horizon T'"),
        [&s](TrainConfig& c) { c.horizon = s.horizon; });
  track(cmd->add_option("--dim", s.dim, "embedding/hidden width d"),
        [&s](TrainConfig& c) { c.dim = s.dim; });
  track(cmd->add_option("--latent-dim", s.latent_dim, "latent width d_z"),
        [&s](TrainConfig& c) { c.latent_dim = s.latent_dim; });
}

// ---- subcommand bodies ----

int run_synth(const SynthArgs& a) {
  Dataset ds = synth_generate(a.cfg);
  write_dataset(a.out, ds);
  json report;
  report["command"] = "synth";
  report["out"] = a.out;
  report["nodes"] = a.cfg.num_nodes;
  report["days"] = a.cfg.days;
  report["steps_per_day"] = a.cfg.steps_per_day;
  report["features"] = a.cfg.num_features;
  report["graph"] = a.cfg.graph_kind;
  report["diffusion"] = a.cfg.diffusion;
  report["noise"] = a.cfg.noise;
  report["seed"] = a.cfg.seed;
  std::cout << report.dump() << "\n";
  return 0;
}

int run_teacher(const TeacherArgs& a) {
  LoadedData d = load_windows(a.data, a.history, a.horizon);
  TeacherPredictions preds;
  json report;
  report["command"] = "teacher";
  report["mode"] = a.mode;
  report["data"] = a.data;

  if (a.mode == "synthetic") {
    preds = synth_teacher(d.windows, a.sigma, a.bias, a.seed);
    report["sigma"] = a.sigma;
    report["bias"] = a.bias;
    report["seed"] = a.seed;
  } else if (a.mode == "ref") {
    RefTeacherConfig cfg = a.ref;
    cfg.seed = a.seed;
    RefTeacherResult res = train_ref_teacher(d.windows, d.view, d.dataset.graph, cfg);
    preds = std::move(res.predictions);
    MetricAccumulator acc;
    for (std::size_t i = d.view.test_begin; i < d.view.test_end; ++i)
      acc.add(preds.window(i), d.windows[i].y);
    report["train_mae_normalized"] = res.train_mae;
    report["test"] = acc.report().to_json();
    report["epochs"] = cfg.epochs;
    report["hidden"] = cfg.hidden;
    report["seed"] = a.seed;
  } else if (a.mode == "import") {
    if (a.input.empty()) throw ConfigError("teacher import needs an input file");
    preds = load_teacher(a.input, d.windows);  // validates alignment
    report["input"] = a.input;
    MetricAccumulator acc;
    for (std::size_t i = 0; i < d.windows.size(); ++i)
      acc.add(preds.window(i), d.windows[i].y);
    report["all_windows"] = acc.report().to_json();
  } else {
    throw ConfigError("unknown teacher mode: " + a.mode);
  }

  if (!a.out.empty()) {
    save_teacher(a.out, preds);
    report["out"] = a.out;
  }
  report["num_windows"] = preds.num_windows;
  std::cout << report.dump() << "\n";
  return 0;
}

int run_train(const TrainArgs& a, TrainConfig cfg) {
  if (!a.variant.empty()) cfg = ablate(a.variant, cfg);
  LoadedData d = load_windows(a.data, cfg.history_len, cfg.horizon);

  TeacherPredictions teacher;
  const TeacherPredictions* teacher_ptr = nullptr;
  if (!cfg.ablation.no_kd) {
    if (a.teacher.empty())
      throw ConfigError("train needs --teacher unless the KD term is ablated");
    teacher = load_teacher(a.teacher, d.windows);
    teacher_ptr = &teacher;
  }

  TrainResult res = train(d.windows, d.view, teacher_ptr, cfg);

  std::filesystem::create_directories(a.out_dir);
  std::string ckpt_path = a.out_dir + "/checkpoint.stck";
  save_checkpoint(ckpt_path, make_checkpoint(res));

  std::string log_text;
  for (const auto& e : res.log) log_text += e.to_json().dump() + "\n";
  write_text(a.out_dir + "/log.jsonl", log_text);

  EvalReport val = evaluate(*res.model, res.normalizer, d.windows,
                            d.view.val_begin, d.view.val_end);
  EvalReport test = evaluate(*res.model, res.normalizer, d.windows,
                             d.view.test_begin, d.view.test_end);
  json report;
  report["command"] = a.variant.empty() ? "train" : "ablate";
  if (!a.variant.empty()) report["variant"] = a.variant;
  report["config"] = cfg.to_json();
  report["data"] = a.data;
  if (!a.teacher.empty()) report["teacher"] = a.teacher;
  report["checkpoint"] = ckpt_path;
  report["best_epoch"] = res.best_epoch;
  report["epochs_run"] = res.log.size();
  report["val"] = val.to_json();
  report["test"] = test.to_json();
  write_text(a.out_dir + "/report.json", report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  TrainResult res = restore_checkpoint(load_checkpoint(a.checkpoint));
  LoadedData d =
      load_windows(a.data, res.config.history_len, res.config.horizon);
  auto [begin, end] = split_range(d.view, a.split_name);
  std::optional<CorruptionSpec> corruption;
  if (!a.mode.empty()) corruption = CorruptionSpec{a.mode, a.gamma, a.seed};
  EvalReport rep = evaluate(*res.model, res.normalizer, d.windows, begin, end,
                            corruption);
  if (a.csv) {
    std::string csv = rep.to_csv();
    if (!a.out.empty())
      write_text(a.out, csv);
    else
      std::cout << csv;
    return 0;
  }
  json report;
  report["command"] = "eval";
  report["checkpoint"] = a.checkpoint;
  report["data"] = a.data;
  report["split"] = a.split_name;
  if (corruption) {
    report["corruption_mode"] = a.mode;
    report["gamma"] = a.gamma;
    report["corruption_seed"] = a.seed;
  }
  report["config"] = res.config.to_json();
  report["metrics"] = rep.to_json();
  if (!a.out.empty()) write_text(a.out, report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  return 0;
}

int run_robust(const RobustArgs& a) {
  TrainResult res = restore_checkpoint(load_checkpoint(a.checkpoint));
  LoadedData d =
      load_windows(a.data, res.config.history_len, res.config.horizon);
  json report;
  report["command"] = "robust";
  report["checkpoint"] = a.checkpoint;
  report["data"] = a.data;
  report["mode"] = a.mode;
  report["seed"] = a.seed;
  report["config"] = res.config.to_json();
  report["reports"] = json::array();
  for (double gamma : parse_gammas(a.gammas)) {
    std::optional<CorruptionSpec> corruption;
    if (gamma > 0.0) corruption = CorruptionSpec{a.mode, gamma, a.seed};
    EvalReport rep = evaluate(*res.model, res.normalizer, d.windows,
                              d.view.test_begin, d.view.test_end, corruption);
    json entry;
    entry["gamma"] = gamma;
    entry["metrics"] = rep.to_json();
    report["reports"].push_back(entry);
  }
  if (!a.out.empty()) write_text(a.out, report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  return 0;
}

int run_bench(const BenchArgs& a) {
  using clock = std::chrono::steady_clock;
  json report;
  report["command"] = "bench";
  report["reps"] = a.reps;
  report["seed"] = a.seed;
  report["rows"] = json::array();
  std::cout << "nodes  student_ms  teacher_ms  ratio\n";
  for (std::size_t n : a.sizes) {
    SynthConfig scfg;
    scfg.num_nodes = n;
    scfg.days = 1;
    scfg.steps_per_day = a.history + a.horizon + 4;
    scfg.seed = a.seed;
    Dataset ds = synth_generate(scfg);
    auto windows = make_windows(ds.series, a.history, a.horizon);
    Normalizer norm;
    norm.fit(windows);

    StudentConfig stu;
    stu.num_nodes = n;
    stu.num_features = 1;
    stu.history_len = a.history;
    stu.horizon = a.horizon;
    stu.steps_per_day = scfg.steps_per_day;
    stu.dim = a.dim;
    stu.latent_dim = a.dim;
    StudentModel student(stu, a.seed);

    RefTeacherConfig tcfg;
    tcfg.hidden = a.teacher_hidden;
    tcfg.seed = a.seed;
    RefTeacher teacher(ds.graph, 1, a.history, a.horizon, tcfg);

    // time frozen inference: no backward tape on either side
    for (auto& [name, p] : student.parameters()) p.set_requires_grad(false);
    for (auto& [name, p] : teacher.parameters()) p.set_requires_grad(false);

    Tensor xn = norm.apply(windows[0].x);
    const auto& w = windows[0];
    Tensor e_beta = student.prompts().transitional();

    // best-of-5 blocks of `reps` iterations each: the minimum block mean is
    // robust to scheduler interference and frequency ramps
    auto time_loop = [&](auto&& body) {
      for (std::size_t i = 0; i < 10; ++i) body();  // warmup
      double best = std::numeric_limits<double>::infinity();
      for (int block = 0; block < 5; ++block) {
        auto start = clock::now();
        for (std::size_t i = 0; i < a.reps; ++i) body();
        auto stop = clock::now();
        best = std::min(
            best, std::chrono::duration<double, std::milli>(stop - start).count() /
                      double(a.reps));
      }
      return best;
    };
    double student_ms = time_loop([&] {
      student.forward(xn, e_beta, w.tod, w.dow, w.window_start, Tensor(), false);
    });
    double teacher_ms = time_loop([&] { teacher.predict_window(xn); });

    json row;
    row["nodes"] = n;
    row["student_ms"] = student_ms;
    row["teacher_ms"] = teacher_ms;
    row["ratio"] = teacher_ms / student_ms;
    report["rows"].push_back(row);
    std::printf("%5zu  %10.4f  %10.4f  %6.3f\n", n, student_ms, teacher_ms,
                teacher_ms / student_ms);
  }
  if (!a.out.empty()) write_text(a.out, report.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatio-temporal distillation experiment runner"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  TeacherArgs teacher_args;
  TrainArgs train_args, ablate_args;
  ConfigFlags train_flags, ablate_flags;
  EvalArgs eval_args;
  RobustArgs robust_args;
  BenchArgs bench_args;

  try {
    std::uint64_t seed0 = default_seed();
    synth_args.cfg.seed = seed0;
    teacher_args.seed = seed0;
    eval_args.seed = seed0;
    robust_args.seed = seed0;
    bench_args.seed = seed0;
    train_flags.staged.seed = seed0;
    ablate_flags.staged.seed = seed0;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--nodes", synth_args.cfg.num_nodes, "graph size");
    synth->add_option("--days", synth_args.cfg.days, "days of data");
    synth->add_option("--steps-per-day", synth_args.cfg.steps_per_day,
                      "samples per day");
    synth->add_option("--features", synth_args.cfg.num_features, "channels");
    synth->add_option("--graph", synth_args.cfg.graph_kind, "ring or grid");
    synth->add_option("--diffusion", synth_args.cfg.diffusion,
                      "neighbor coupling strength");
    synth->add_option("--noise", synth_args.cfg.noise, "Gaussian noise scale");
    synth->add_option("--seed", synth_args.cfg.seed, "RNG seed");
    synth->add_option("-o,--out", synth_args.out, "output dataset path")
        ->required();

    CLI::App* teacher =
        app.add_subcommand("teacher", "prepare teacher predictions");
    teacher->add_option("mode", teacher_args.mode, "ref | synthetic | import")
        ->required();
    teacher->add_option("input", teacher_args.input,
                        "prediction file (import mode)");
    teacher->add_option("--data", teacher_args.data, "dataset path")->required();
    teacher->add_option("--history", teacher_args.history, "window length T");
    teacher->add_option("--horizon", teacher_args.horizon, "horizon T'");
    teacher->add_option("--sigma", teacher_args.sigma,
                        "synthetic error scale");
    teacher->add_option("--bias", teacher_args.bias, "synthetic bias");
    teacher->add_option("--epochs", teacher_args.ref.epochs, "ref epochs");
    teacher->add_option("--hidden", teacher_args.ref.hidden, "ref width");
    teacher->add_option("--lr", teacher_args.ref.lr, "ref learning rate");
    teacher->add_option("--seed", teacher_args.seed, "RNG seed");
    teacher->add_option("-o,--out", teacher_args.out,
                        "output prediction path");

    CLI::App* train_cmd = app.add_subcommand("train", "train a student model");
    train_cmd->add_option("--data", train_args.data, "dataset path")->required();
    train_cmd->add_option("--teacher", train_args.teacher,
                          "teacher prediction path");
    train_cmd->add_option("--config", train_args.config_path,
                          "JSON config file");
    train_cmd->add_option("-o,--out", train_args.out_dir, "output directory")
        ->required();
    add_config_flags(train_cmd, train_flags);

    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "train one ablation variant");
    ablate_cmd->add_option("--variant", ablate_args.variant,
                           "full | w/o-KD | w/o-IB | w/o-TB | w/o-S-Pro | "
                           "w/o-T-Pro | w/o-Tran-Pro | MLP")
        ->required();
    ablate_cmd->add_option("--data", ablate_args.data, "dataset path")
        ->required();
    ablate_cmd->add_option("--teacher", ablate_args.teacher,
                           "teacher prediction path");
    ablate_cmd->add_option("--config", ablate_args.config_path,
                           "JSON config file");
    ablate_cmd->add_option("-o,--out", ablate_args.out_dir, "output directory")
        ->required();
    add_config_flags(ablate_cmd, ablate_flags);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path")
        ->required();
    eval_cmd->add_option("--data", eval_args.data, "dataset path")->required();
    eval_cmd->add_option("--split", eval_args.split_name, "train | val | test");
    eval_cmd->add_option("--mode", eval_args.mode,
                         "input corruption: noise | missing");
    eval_cmd->add_option("--gamma", eval_args.gamma, "corruption strength");
    eval_cmd->add_option("--seed", eval_args.seed, "corruption seed");
    eval_cmd->add_flag("--csv", eval_args.csv, "emit a per-horizon CSV table");
    eval_cmd->add_option("-o,--out", eval_args.out, "report path");

    CLI::App* robust_cmd =
        app.add_subcommand("robust", "corruption sweep on the test split");
    robust_cmd
        ->add_option("--checkpoint", robust_args.checkpoint, "checkpoint path")
        ->required();
    robust_cmd->add_option("--data", robust_args.data, "dataset path")
        ->required();
    robust_cmd->add_option("--mode", robust_args.mode, "noise | missing");
    robust_cmd->add_option("--gammas", robust_args.gammas,
                           "start:stop:step sweep");
    robust_cmd->add_option("--seed", robust_args.seed, "corruption seed");
    robust_cmd->add_option("-o,--out", robust_args.out, "report path");

    CLI::App* bench_cmd =
        app.add_subcommand("bench", "student vs teacher inference latency");
    bench_cmd->add_option("--sizes", bench_args.sizes, "graph sizes to time");
    bench_cmd->add_option("--reps", bench_args.reps, "timed repetitions");
    bench_cmd->add_option("--history", bench_args.history, "window length T");
    bench_cmd->add_option("--horizon", bench_args.horizon, "horizon T'");
    bench_cmd->add_option("--dim", bench_args.dim, "student width d");
    bench_cmd->add_option("--hidden", bench_args.teacher_hidden,
                          "teacher width");
    bench_cmd->add_option("--seed", bench_args.seed, "RNG seed");
    bench_cmd->add_option("-o,--out", bench_args.out, "report path");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }

    if (synth->parsed()) return run_synth(synth_args);
    if (teacher->parsed()) return run_teacher(teacher_args);
    if (train_cmd->parsed()) {
      TrainConfig cfg = merge_config(train_args.config_path);
      if (train_args.config_path.empty()) cfg.seed = seed0;
      train_flags.overlay(cfg);
      return run_train(train_args, cfg);
    }
    if (ablate_cmd->parsed()) {
      TrainConfig cfg = merge_config(ablate_args.config_path);
      if (ablate_args.config_path.empty()) cfg.seed = seed0;
      ablate_flags.overlay(cfg);
      return run_train(ablate_args, cfg);
    }
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (robust_cmd->parsed()) return run_robust(robust_args);
    if (bench_cmd->parsed()) return run_bench(bench_args);
    return 2;
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
