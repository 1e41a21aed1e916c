#include "stdistill/teacher.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "stdistill/loss.hpp"
#include "stdistill/optim.hpp"
#include "stdistill/rng.hpp"

namespace stdistill {

namespace {
constexpr char kMagic[6] = {'S', 'T', 'T', 'P', '1', '\n'};
}

Tensor TeacherPredictions::window(std::size_t i) const {
  if (i >= num_windows)
    throw IndexError("TeacherPredictions: window " + std::to_string(i) +
                     " out of range");
  std::size_t stride = horizon * num_nodes * num_features;
  return Tensor::from_data(
      {horizon, num_nodes, num_features},
      std::vector<double>(data.begin() + std::ptrdiff_t(i * stride),
                          data.begin() + std::ptrdiff_t((i + 1) * stride)));
}

void TeacherPredictions::validate_against(
    const std::vector<WindowedSample>& windows) const {
  if (num_windows != windows.size())
    throw AlignmentError("teacher predictions: expected " +
                         std::to_string(windows.size()) + " windows, found " +
                         std::to_string(num_windows));
  if (!windows.empty()) {
    const Shape& ys = windows[0].y.shape();
    if (ys != Shape{horizon, num_nodes, num_features})
      throw AlignmentError("teacher predictions: expected window shape " +
                           shape_str(ys) + ", found [" + std::to_string(horizon) +
                           "," + std::to_string(num_nodes) + "," +
                           std::to_string(num_features) + "]");
  }
  if (data.size() != num_windows * horizon * num_nodes * num_features)
    throw AlignmentError("teacher predictions: payload size mismatch");
}

TeacherPredictions load_teacher(const std::string& path,
                                const std::vector<WindowedSample>& windows) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  char magic[6];
  in.read(magic, 6);
  if (in.gcount() != 6 || std::memcmp(magic, kMagic, 6) != 0)
    throw ParseError(path + ": bad magic");
  std::uint64_t hdr[4];
  in.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  if (in.gcount() != sizeof hdr) throw ParseError(path + ": truncated header");
  TeacherPredictions p;
  p.num_windows = hdr[0];
  p.horizon = hdr[1];
  p.num_nodes = hdr[2];
  p.num_features = hdr[3];
  p.data.resize(p.num_windows * p.horizon * p.num_nodes * p.num_features);
  in.read(reinterpret_cast<char*>(p.data.data()),
          std::streamsize(p.data.size() * sizeof(double)));
  if (std::size_t(in.gcount()) != p.data.size() * sizeof(double))
    throw ParseError(path + ": truncated payload");
  p.validate_against(windows);
  return p;
}

void save_teacher(const std::string& path, const TeacherPredictions& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out.write(kMagic, 6);
  std::uint64_t hdr[4] = {p.num_windows, p.horizon, p.num_nodes, p.num_features};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  out.write(reinterpret_cast<const char*>(p.data.data()),
            std::streamsize(p.data.size() * sizeof(double)));
}

TeacherPredictions synth_teacher(const std::vector<WindowedSample>& windows,
                                 double error_scale, double bias,
                                 std::uint64_t seed) {
  if (error_scale < 0)
    throw ContractError("synth_teacher: error_scale must be >= 0");
  if (windows.empty()) throw ContractError("synth_teacher: no windows");
  const Shape& ys = windows[0].y.shape();
  TeacherPredictions p;
  p.num_windows = windows.size();
  p.horizon = ys[0];
  p.num_nodes = ys[1];
  p.num_features = ys[2];
  p.data.reserve(p.num_windows * ys[0] * ys[1] * ys[2]);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (const auto& w : windows)
    for (double v : w.y.data()) {
      double e = error_scale > 0 ? error_scale * dist(rng) : 0.0;
      p.data.push_back(v + bias + e);
    }
  return p;
}

// ---------------------------------------------------------------------------
// reference graph-convolution teacher

RefTeacher::RefTeacher(const STGraph& graph, std::size_t num_features,
                       std::size_t history_len, std::size_t horizon,
                       const RefTeacherConfig& cfg)
    : num_nodes_(graph.num_nodes),
      num_features_(num_features),
      history_len_(history_len),
      horizon_(horizon),
      head_({history_len * cfg.hidden, cfg.hidden, horizon * num_features},
            cfg.seed, "teacher.head") {
  std::size_t n = num_nodes_;
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += graph.adjacency[i * n + j];
    // self-loop keeps isolated nodes well defined
    if (deg == 0.0) {
      a[i * n + i] = 1.0;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = graph.adjacency[i * n + j] / deg;
  }
  a_norm_ = Tensor::from_data({n, n}, std::move(a));
  std::vector<double> w(num_features * cfg.hidden);
  Rng rng = make_param_rng(cfg.seed, "teacher.mix.w");
  double scale = 1.0 / std::sqrt(double(num_features));
  fill_uniform(rng, w, -scale, scale);
  w_mix_ = Tensor::from_data({num_features, cfg.hidden}, std::move(w), true);
  b_mix_ = Tensor::zeros({cfg.hidden}, true);
}

Tensor RefTeacher::predict_window(const Tensor& x) const {
  if (x.shape() != Shape{history_len_, num_nodes_, num_features_})
    throw ShapeError("RefTeacher: expected history of shape [" +
                     std::to_string(history_len_) + "," + std::to_string(num_nodes_) +
                     "," + std::to_string(num_features_) + "], got " +
                     shape_str(x.shape()));
  std::vector<Tensor> per_step;
  per_step.reserve(history_len_);
  for (std::size_t t = 0; t < history_len_; ++t) {
    Tensor xt = reshape(gather(x, {t}, 0), {num_nodes_, num_features_});
    Tensor mixed = matmul(a_norm_, xt);  // dense N^2 mixing, on purpose
    per_step.push_back(relu(affine(mixed, w_mix_, b_mix_)));
  }
  Tensor h = concat(per_step, 1);  // N x (T * hidden)
  Tensor out = head_.forward(h);   // N x (T' * F)
  return permute(reshape(out, {num_nodes_, horizon_, num_features_}), {1, 0, 2});
}

ParamList RefTeacher::parameters() {
  ParamList out = {{"teacher.mix.w", w_mix_}, {"teacher.mix.b", b_mix_}};
  head_.collect_parameters("teacher.head", out);
  return out;
}

RefTeacherResult train_ref_teacher(const std::vector<WindowedSample>& windows,
                                   const SplitView& split, const STGraph& graph,
                                   const RefTeacherConfig& cfg) {
  if (split.train_end <= split.train_begin)
    throw ContractError("train_ref_teacher: empty training split");
  const Shape& xs = windows[0].x.shape();
  const Shape& ys = windows[0].y.shape();
  RefTeacherResult res{
      RefTeacher(graph, xs[2], xs[0], ys[0], cfg), TeacherPredictions{}, 0.0};
  RefTeacher& teacher = res.teacher;

  std::vector<WindowedSample> train(windows.begin() + std::ptrdiff_t(split.train_begin),
                                    windows.begin() + std::ptrdiff_t(split.train_end));
  teacher.normalizer().fit(train);
  const Normalizer& norm = teacher.normalizer();

  ParamList params = teacher.parameters();
  AdamOptimizer opt;
  double last_epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = split.train_begin; b < split.train_end; b += cfg.batch_size) {
      std::size_t end = std::min(b + cfg.batch_size, split.train_end);
      std::vector<Tensor> preds, targets;
      for (std::size_t i = b; i < end; ++i) {
        Tensor yhat = teacher.predict_window(norm.apply(windows[i].x));
        preds.push_back(reshape(yhat, {yhat.size()}));
        Tensor yn = norm.apply(windows[i].y);
        targets.push_back(reshape(yn, {yn.size()}));
      }
      Tensor loss = predictive_loss(concat(preds, 0), concat(targets, 0), BaseLoss::MAE);
      zero_grads(params);
      backward(loss);
      clip_grad_norm(params, 5.0);
      opt.step(params, cfg.lr);
      epoch_loss += loss.item();
      ++batches;
    }
    last_epoch_loss = epoch_loss / double(batches);
  }
  res.train_mae = last_epoch_loss;

  TeacherPredictions& p = res.predictions;
  p.num_windows = windows.size();
  p.horizon = ys[0];
  p.num_nodes = ys[1];
  p.num_features = ys[2];
  p.data.reserve(p.num_windows * ys[0] * ys[1] * ys[2]);
  for (const auto& w : windows) {
    Tensor yhat = norm.invert(teacher.predict_window(norm.apply(w.x)).detach());
    const auto& d = yhat.data();
    p.data.insert(p.data.end(), d.begin(), d.end());
  }
  p.validate_against(windows);
  return res;
}

}  // namespace stdistill
