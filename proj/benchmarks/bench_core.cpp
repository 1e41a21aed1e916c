// Microbenchmarks for the hot paths: tensor primitives, prompt fusion, and
// student vs reference-teacher window inference across graph sizes.

#include <benchmark/benchmark.h>

#include "stdistill/rng.hpp"
#include "stdistill/teacher.hpp"
#include "stdistill/trainer.hpp"

using namespace stdistill;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  std::vector<double> data(shape_numel(shape));
  fill_uniform(rng, data, -1.0, 1.0);
  return Tensor::from_data(std::move(shape), std::move(data));
}

void BM_matmul(benchmark::State& state) {
  std::size_t n = std::size_t(state.range(0));
  Rng rng = make_rng(1);
  Tensor a = random_tensor({n, n}, rng);
  Tensor b = random_tensor({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_matmul)->Range(16, 256)->Complexity();

void BM_softmax_nodes(benchmark::State& state) {
  std::size_t n = std::size_t(state.range(0));
  Rng rng = make_rng(2);
  Tensor x = random_tensor({12, n, 8}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(softmax(x, 1));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_softmax_nodes)->Range(64, 1024)->Complexity();

void BM_transitional_prompt(benchmark::State& state) {
  std::size_t n = std::size_t(state.range(0));
  Rng rng = make_rng(3);
  TuckerFactors f;
  f.core = random_tensor({8, 8, 8}, rng);
  f.temporal = random_tensor({48, 8}, rng);
  f.spatial = random_tensor({n, 8}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(transitional_prompt(f));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_transitional_prompt)->Range(64, 1024)->Complexity();

struct InferenceFixture {
  Dataset ds;
  std::vector<WindowedSample> windows;
  Normalizer norm;
  Tensor xn;

  explicit InferenceFixture(std::size_t n) {
    SynthConfig cfg;
    cfg.num_nodes = n;
    cfg.days = 1;
    cfg.steps_per_day = 19;  // one window at T=12, T'=3
    cfg.seed = 4;
    ds = synth_generate(cfg);
    windows = make_windows(ds.series, 12, 3);
    norm.fit(windows);
    xn = norm.apply(windows[0].x);
  }
};

void BM_student_inference(benchmark::State& state) {
  std::size_t n = std::size_t(state.range(0));
  InferenceFixture fix(n);
  StudentConfig cfg;
  cfg.num_nodes = n;
  cfg.history_len = 12;
  cfg.horizon = 3;
  cfg.steps_per_day = 19;
  cfg.dim = 8;
  cfg.latent_dim = 8;
  StudentModel model(cfg, 1);
  Tensor e_beta = model.prompts().transitional();
  const auto& w = fix.windows[0];
  for (auto _ : state)
    benchmark::DoNotOptimize(
        model.forward(fix.xn, e_beta, w.tod, w.dow, w.window_start, Tensor(),
                      false));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_student_inference)->RangeMultiplier(2)->Range(50, 800)->Complexity();

void BM_teacher_inference(benchmark::State& state) {
  std::size_t n = std::size_t(state.range(0));
  InferenceFixture fix(n);
  RefTeacherConfig cfg;
  cfg.hidden = 16;
  RefTeacher teacher(fix.ds.graph, 1, 12, 3, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(teacher.predict_window(fix.xn));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_teacher_inference)->RangeMultiplier(2)->Range(50, 800)->Complexity();

void BM_train_step(benchmark::State& state) {
  SynthConfig scfg;
  scfg.num_nodes = 20;
  scfg.days = 1;
  scfg.steps_per_day = 48;
  scfg.seed = 5;
  Dataset ds = synth_generate(scfg);
  auto windows = make_windows(ds.series, 12, 3);
  SplitView view = split(windows.size());
  TeacherPredictions teacher = synth_teacher(windows, 0.1, 0.0, 5);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.history_len = 12;
  cfg.horizon = 3;
  cfg.dim = 8;
  cfg.latent_dim = 8;
  cfg.steps_per_day = 48;
  cfg.patience = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(train(windows, view, &teacher, cfg));
}
BENCHMARK(BM_train_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
