#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stdistill/metrics.hpp"
#include "stdistill/rng.hpp"
#include "stdistill/teacher.hpp"

using namespace stdistill;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<WindowedSample> demo_windows(std::size_t t = 4, std::size_t h = 2) {
  SynthConfig cfg;
  cfg.num_nodes = 3;
  cfg.days = 1;
  cfg.steps_per_day = 16;
  cfg.seed = 7;
  Dataset ds = synth_generate(cfg);
  return make_windows(ds.series, t, h);
}

}  // namespace

TEST_CASE("synth_teacher") {
  auto ws = demo_windows();
  SUBCASE("zero error and bias reproduces the targets") {
    TeacherPredictions p = synth_teacher(ws, 0.0, 0.0, 1);
    CHECK(p.num_windows == ws.size());
    CHECK(p.horizon == 2);
    CHECK(p.num_nodes == 3);
    for (std::size_t i = 0; i < ws.size(); ++i)
      CHECK(p.window(i).data() == ws[i].y.data());
  }
  SUBCASE("pure bias shifts every value") {
    TeacherPredictions p = synth_teacher(ws, 0.0, 0.25, 1);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      Tensor w = p.window(i);
      for (std::size_t k = 0; k < w.size(); ++k)
        CHECK(w.data()[k] == doctest::Approx(ws[i].y.data()[k] + 0.25).epsilon(1e-15));
    }
  }
  SUBCASE("same seed is deterministic, different seed is not") {
    TeacherPredictions a = synth_teacher(ws, 0.5, 0.0, 9);
    TeacherPredictions b = synth_teacher(ws, 0.5, 0.0, 9);
    TeacherPredictions c = synth_teacher(ws, 0.5, 0.0, 10);
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
  }
  SUBCASE("larger error scale gives larger teacher MAE") {
    TeacherPredictions small = synth_teacher(ws, 0.1, 0.0, 3);
    TeacherPredictions big = synth_teacher(ws, 2.0, 0.0, 3);
    double mae_small = 0.0, mae_big = 0.0;
    for (std::size_t i = 0; i < ws.size(); ++i) {
      mae_small += mae(small.window(i), ws[i].y);
      mae_big += mae(big.window(i), ws[i].y);
    }
    CHECK(mae_big > mae_small);
  }
}

TEST_CASE("teacher file round trip") {
  auto ws = demo_windows();
  TeacherPredictions p = synth_teacher(ws, 0.3, 0.1, 5);
  std::string path = tmp_path("teacher_roundtrip.sttp");
  save_teacher(path, p);
  TeacherPredictions back = load_teacher(path, ws);
  CHECK(back.num_windows == p.num_windows);
  CHECK(back.horizon == p.horizon);
  CHECK(back.num_nodes == p.num_nodes);
  CHECK(back.num_features == p.num_features);
  CHECK(back.data == p.data);
  std::remove(path.c_str());
}

TEST_CASE("bad teacher file magic is a parse error") {
  std::string path = tmp_path("teacher_magic.sttp");
  std::ofstream(path, std::ios::binary) << "WRONG\n";
  auto ws = demo_windows();
  CHECK_THROWS_AS(load_teacher(path, ws), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("misaligned teacher is an alignment error naming the mismatch") {
  auto ws = demo_windows();
  TeacherPredictions p = synth_teacher(ws, 0.0, 0.0, 1);

  SUBCASE("window count") {
    p.num_windows -= 1;
    p.data.resize(p.num_windows * p.horizon * p.num_nodes * p.num_features);
    CHECK_THROWS_WITH_AS(p.validate_against(ws), doctest::Contains("windows"),
                         AlignmentError);
  }
  SUBCASE("horizon") {
    auto short_ws = demo_windows(4, 1);
    CHECK_THROWS_AS(p.validate_against(short_ws), AlignmentError);
  }
  SUBCASE("load_teacher validates alignment") {
    std::string path = tmp_path("teacher_misalign.sttp");
    save_teacher(path, p);
    auto short_ws = demo_windows(4, 1);
    CHECK_THROWS_AS(load_teacher(path, short_ws), AlignmentError);
    std::remove(path.c_str());
  }
}

TEST_CASE("ref teacher") {
  SynthConfig scfg;
  scfg.num_nodes = 5;
  scfg.days = 2;
  scfg.steps_per_day = 24;
  scfg.seed = 13;
  scfg.noise = 0.05;
  Dataset ds = synth_generate(scfg);
  auto ws = make_windows(ds.series, 4, 2);
  SplitView v = split(ws.size());

  RefTeacherConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 15;
  cfg.seed = 1;

  SUBCASE("training beats an untrained copy and a naive baseline") {
    RefTeacherResult res = train_ref_teacher(ws, v, ds.graph, cfg);
    CHECK(res.predictions.num_windows == ws.size());

    // trained test MAE (original units)
    double trained = 0.0;
    for (std::size_t i = v.test_begin; i < v.test_end; ++i)
      trained += mae(res.predictions.window(i), ws[i].y);
    trained /= double(v.test_end - v.test_begin);

    // untrained teacher with the same normalizer
    RefTeacher raw(ds.graph, 1, 4, 2, cfg);
    raw.normalizer() = res.teacher.normalizer();
    double untrained = 0.0;
    for (std::size_t i = v.test_begin; i < v.test_end; ++i) {
      Tensor yhat = raw.normalizer().invert(
          raw.predict_window(raw.normalizer().apply(ws[i].x)));
      untrained += mae(yhat, ws[i].y);
    }
    untrained /= double(v.test_end - v.test_begin);
    CHECK(trained < untrained);
  }
  SUBCASE("deterministic across identical runs") {
    RefTeacherResult a = train_ref_teacher(ws, v, ds.graph, cfg);
    RefTeacherResult b = train_ref_teacher(ws, v, ds.graph, cfg);
    CHECK(a.predictions.data == b.predictions.data);
    CHECK(a.train_mae == b.train_mae);
  }
  SUBCASE("prediction shape and finiteness") {
    RefTeacherResult res = train_ref_teacher(ws, v, ds.graph, cfg);
    CHECK(res.predictions.horizon == 2);
    CHECK(res.predictions.num_nodes == 5);
    CHECK(res.predictions.num_features == 1);
    for (double x : res.predictions.data) CHECK(std::isfinite(x));
    res.predictions.validate_against(ws);  // must not throw
  }
}
