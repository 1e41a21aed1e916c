#include "stdistill/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace stdistill {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

Tensor make_op_result(Shape shape, std::vector<double> data,
                      std::vector<Tensor> inputs,
                      std::function<void(detail::TensorNode&)> backward_fn) {
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool track = false;
  for (const auto& t : inputs) track = track || t.requires_grad();
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (const auto& t : inputs) node->parents.push_back(t.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  node->data.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size())
    throw ShapeError("from_data: shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->data.size(), 0.0);
}

double Tensor::item() const {
  if (size() != 1)
    throw ContractError("item: tensor of shape " + shape_str(shape()) +
                        " is not a scalar");
  return node_->data[0];
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = node_->shape;
  node->data = node_->data;
  return Tensor(std::move(node));
}

// ---------------------------------------------------------------------------
// broadcasting helpers

namespace {

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  std::size_t nd = std::max(a.size(), b.size());
  Shape out(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    std::size_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    std::size_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a) +
                       " with " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `in` laid over the broadcast result shape; 0 where broadcast.
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> st(out.size(), 0);
  std::size_t stride = 1;
  std::size_t off = out.size() - in.size();
  for (std::size_t i = in.size(); i-- > 0;) {
    st[i + off] = (in[i] == 1 && out[i + off] != 1) ? 0 : stride;
    stride *= in[i];
  }
  return st;
}

struct BroadcastIter {
  // Walks the output space once, keeping flat offsets into both inputs.
  const Shape& out;
  std::vector<std::size_t> sa, sb, idx;
  std::size_t oa = 0, ob = 0;
  BroadcastIter(const Shape& out_, const Shape& a, const Shape& b)
      : out(out_), sa(broadcast_strides(a, out_)), sb(broadcast_strides(b, out_)),
        idx(out_.size(), 0) {}
  void advance() {
    for (std::size_t i = out.size(); i-- > 0;) {
      ++idx[i];
      oa += sa[i];
      ob += sb[i];
      if (idx[i] < out[i]) return;
      oa -= sa[i] * out[i];
      ob -= sb[i] * out[i];
      idx[i] = 0;
    }
  }
};

template <typename Fwd, typename BwdA, typename BwdB>
Tensor binary_broadcast(const char* op, const Tensor& a, const Tensor& b, Fwd fwd,
                        BwdA bwd_a, BwdB bwd_b) {
  Shape out_shape = broadcast_shape(a.shape(), b.shape(), op);
  std::size_t n = shape_numel(out_shape);
  std::vector<double> out(n);
  const auto& da = a.data();
  const auto& db = b.data();
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(da[i], db[i]);
  } else {
    BroadcastIter it(out_shape, a.shape(), b.shape());
    for (std::size_t i = 0; i < n; ++i, it.advance())
      out[i] = fwd(da[it.oa], db[it.ob]);
  }
  Tensor ta = a, tb = b;
  Shape osh = out_shape;
  return make_op_result(
      std::move(out_shape), std::move(out), {a, b},
      [ta, tb, osh, bwd_a, bwd_b](detail::TensorNode& self) {
        auto na = ta.node();
        auto nb = tb.node();
        na->ensure_grad();
        nb->ensure_grad();
        std::size_t n = self.data.size();
        if (na->shape == nb->shape) {
          for (std::size_t i = 0; i < n; ++i) {
            double g = self.grad[i];
            na->grad[i] += bwd_a(g, na->data[i], nb->data[i]);
            nb->grad[i] += bwd_b(g, na->data[i], nb->data[i]);
          }
        } else {
          BroadcastIter it(osh, na->shape, nb->shape);
          for (std::size_t i = 0; i < n; ++i, it.advance()) {
            double g = self.grad[i];
            na->grad[it.oa] += bwd_a(g, na->data[it.oa], nb->data[it.ob]);
            nb->grad[it.ob] += bwd_b(g, na->data[it.oa], nb->data[it.ob]);
          }
        }
      });
}

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& x, Fwd fwd, Bwd bwd) {
  std::size_t n = x.size();
  std::vector<double> out(n);
  const auto& dx = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(dx[i]);
  Tensor tx = x;
  return make_op_result(x.shape(), std::move(out), {x},
                        [tx, bwd](detail::TensorNode& self) {
                          auto nx = tx.node();
                          nx->ensure_grad();
                          for (std::size_t i = 0; i < self.data.size(); ++i)
                            nx->grad[i] += bwd(self.grad[i], nx->data[i], self.data[i]);
                        });
}

// (outer, axis, inner) decomposition for axis-wise ops.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit axis_split(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size())
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(s));
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_broadcast(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_broadcast(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_broadcast(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::exp(v); },
      [](double g, double, double y) { return g * y; });
}

Tensor log(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::log(std::max(v, 1e-12)); },
      [](double g, double v, double) { return v <= 1e-12 ? 0.0 : g / v; });
}

Tensor abs(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::abs(v); },
      [](double g, double v, double) {
        // subgradient 0 at the kink
        return v > 0 ? g : (v < 0 ? -g : 0.0);
      });
}

Tensor square(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v * v; },
      [](double g, double v, double) { return 2.0 * v * g; });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double g, double v, double) { return v > 0 ? g : 0.0; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary_op(
      x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](double g, double v, double) { return (v >= lo && v <= hi) ? g : 0.0; });
}

// ---------------------------------------------------------------------------
// linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0])
    throw ShapeError("matmul: shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()) + " do not conform");
  std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double av = da[i * k + p];
      if (av == 0.0) continue;
      const double* brow = &db[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  Tensor ta = a, tb = b;
  return make_op_result(
      {m, n}, std::move(out), {a, b}, [ta, tb, m, k, n](detail::TensorNode& self) {
        auto na = ta.node();
        auto nb = tb.node();
        na->ensure_grad();
        nb->ensure_grad();
        // dA += G * B^T ; dB += A^T * G
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double g = self.grad[i * n + j];
            if (g == 0.0) continue;
            for (std::size_t p = 0; p < k; ++p) {
              na->grad[i * k + p] += g * nb->data[p * n + j];
              nb->grad[p * n + j] += na->data[i * k + p] * g;
            }
          }
      });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1 ||
      x.shape()[1] != w.shape()[0] || w.shape()[1] != b.shape()[0])
    throw ShapeError("affine: shapes " + shape_str(x.shape()) + " x " +
                     shape_str(w.shape()) + " + " + shape_str(b.shape()) +
                     " do not conform");
  std::size_t m = x.shape()[0], k = x.shape()[1], n = w.shape()[1];
  std::vector<double> out(m * n);
  const auto& dx = x.data();
  const auto& dw = w.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = &out[i * n];
    for (std::size_t j = 0; j < n; ++j) orow[j] = db[j];
    for (std::size_t p = 0; p < k; ++p) {
      double xv = dx[i * k + p];
      if (xv == 0.0) continue;
      const double* wrow = &dw[p * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += xv * wrow[j];
    }
  }
  Tensor tx = x, tw = w, tb = b;
  return make_op_result(
      {m, n}, std::move(out), {x, w, b},
      [tx, tw, tb, m, k, n](detail::TensorNode& self) {
        auto nx = tx.node();
        auto nw = tw.node();
        auto nb = tb.node();
        nx->ensure_grad();
        nw->ensure_grad();
        nb->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double g = self.grad[i * n + j];
            if (g == 0.0) continue;
            nb->grad[j] += g;
            for (std::size_t p = 0; p < k; ++p) {
              nx->grad[i * k + p] += g * nw->data[p * n + j];
              nw->grad[p * n + j] += nx->data[i * k + p] * g;
            }
          }
      });
}

// ---------------------------------------------------------------------------
// structure ops

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape& ref = parts[0].shape();
  AxisSplit sp = axis_split(ref, axis, "concat");
  std::size_t total_axis = 0;
  for (const auto& p : parts) {
    if (p.ndim() != ref.size())
      throw ShapeError("concat: rank mismatch " + shape_str(p.shape()) + " vs " +
                       shape_str(ref));
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (i != axis && p.shape()[i] != ref[i])
        throw ShapeError("concat: shape mismatch " + shape_str(p.shape()) +
                         " vs " + shape_str(ref) + " on axis " + std::to_string(i));
    total_axis += p.shape()[axis];
  }
  Shape out_shape = ref;
  out_shape[axis] = total_axis;
  std::vector<double> out(shape_numel(out_shape));
  std::size_t row = total_axis * sp.inner;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::size_t pn = p.shape()[axis] * sp.inner;
    const auto& pd = p.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy(pd.begin() + o * pn, pd.begin() + (o + 1) * pn,
                out.begin() + o * row + offset);
    offset += pn;
  }
  std::vector<Tensor> inputs = parts;
  return make_op_result(
      std::move(out_shape), std::move(out), parts,
      [inputs, sp, row](detail::TensorNode& self) {
        std::size_t offset = 0;
        for (const auto& p : inputs) {
          auto np = p.node();
          np->ensure_grad();
          std::size_t pn = np->data.size() / sp.outer;
          for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t i = 0; i < pn; ++i)
              np->grad[o * pn + i] += self.grad[o * row + offset + i];
          offset += pn;
        }
      });
}

Tensor gather(const Tensor& x, const std::vector<std::size_t>& indices,
              std::size_t axis) {
  AxisSplit sp = axis_split(x.shape(), axis, "gather");
  for (std::size_t idx : indices)
    if (idx >= sp.n)
      throw IndexError("gather: index " + std::to_string(idx) +
                       " out of range for axis size " + std::to_string(sp.n));
  Shape out_shape = x.shape();
  out_shape[axis] = indices.size();
  std::vector<double> out(shape_numel(out_shape));
  const auto& dx = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t j = 0; j < indices.size(); ++j)
      std::copy(dx.begin() + (o * sp.n + indices[j]) * sp.inner,
                dx.begin() + (o * sp.n + indices[j] + 1) * sp.inner,
                out.begin() + (o * indices.size() + j) * sp.inner);
  Tensor tx = x;
  std::vector<std::size_t> idxs = indices;
  return make_op_result(
      std::move(out_shape), std::move(out), {x},
      [tx, idxs, sp](detail::TensorNode& self) {
        auto nx = tx.node();
        nx->ensure_grad();
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t j = 0; j < idxs.size(); ++j)
            for (std::size_t i = 0; i < sp.inner; ++i)
              nx->grad[(o * sp.n + idxs[j]) * sp.inner + i] +=
                  self.grad[(o * idxs.size() + j) * sp.inner + i];
      });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  AxisSplit sp = axis_split(x.shape(), axis, "softmax");
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < sp.n; ++j)
        mx = std::max(mx, dx[(o * sp.n + j) * sp.inner + i]);
      double z = 0.0;
      for (std::size_t j = 0; j < sp.n; ++j) {
        double e = std::exp(dx[(o * sp.n + j) * sp.inner + i] - mx);
        out[(o * sp.n + j) * sp.inner + i] = e;
        z += e;
      }
      for (std::size_t j = 0; j < sp.n; ++j)
        out[(o * sp.n + j) * sp.inner + i] /= z;
    }
  Tensor tx = x;
  return make_op_result(
      x.shape(), std::move(out), {x}, [tx, sp](detail::TensorNode& self) {
        auto nx = tx.node();
        nx->ensure_grad();
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t i = 0; i < sp.inner; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < sp.n; ++j) {
              std::size_t k = (o * sp.n + j) * sp.inner + i;
              dot += self.grad[k] * self.data[k];
            }
            for (std::size_t j = 0; j < sp.n; ++j) {
              std::size_t k = (o * sp.n + j) * sp.inner + i;
              nx->grad[k] += self.data[k] * (self.grad[k] - dot);
            }
          }
      });
}

// ---------------------------------------------------------------------------
// reductions

Tensor sum(const Tensor& x) {
  double s = std::accumulate(x.data().begin(), x.data().end(), 0.0);
  Tensor tx = x;
  return make_op_result({}, {s}, {x}, [tx](detail::TensorNode& self) {
    auto nx = tx.node();
    nx->ensure_grad();
    double g = self.grad[0];
    for (double& v : nx->grad) v += g;
  });
}

Tensor mean(const Tensor& x) {
  std::size_t n = x.size();
  if (n == 0) throw ContractError("mean: empty tensor");
  double s = std::accumulate(x.data().begin(), x.data().end(), 0.0) / double(n);
  Tensor tx = x;
  return make_op_result({}, {s}, {x}, [tx, n](detail::TensorNode& self) {
    auto nx = tx.node();
    nx->ensure_grad();
    double g = self.grad[0] / double(n);
    for (double& v : nx->grad) v += g;
  });
}

namespace {

Tensor axis_reduce(const Tensor& x, std::size_t axis, bool take_mean, const char* op) {
  AxisSplit sp = axis_split(x.shape(), axis, op);
  Shape out_shape;
  for (std::size_t i = 0; i < x.ndim(); ++i)
    if (i != axis) out_shape.push_back(x.shape()[i]);
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  const auto& dx = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t j = 0; j < sp.n; ++j)
      for (std::size_t i = 0; i < sp.inner; ++i)
        out[o * sp.inner + i] += dx[(o * sp.n + j) * sp.inner + i];
  double scale = take_mean ? 1.0 / double(sp.n) : 1.0;
  if (take_mean)
    for (double& v : out) v *= scale;
  Tensor tx = x;
  return make_op_result(
      std::move(out_shape), std::move(out), {x},
      [tx, sp, scale](detail::TensorNode& self) {
        auto nx = tx.node();
        nx->ensure_grad();
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t j = 0; j < sp.n; ++j)
            for (std::size_t i = 0; i < sp.inner; ++i)
              nx->grad[(o * sp.n + j) * sp.inner + i] +=
                  self.grad[o * sp.inner + i] * scale;
      });
}

}  // namespace

Tensor sum(const Tensor& x, std::size_t axis) { return axis_reduce(x, axis, false, "sum"); }
Tensor mean(const Tensor& x, std::size_t axis) { return axis_reduce(x, axis, true, "mean"); }

Tensor reshape(const Tensor& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.size())
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(new_shape));
  Tensor tx = x;
  return make_op_result(std::move(new_shape), x.data(), {x},
                        [tx](detail::TensorNode& self) {
                          auto nx = tx.node();
                          nx->ensure_grad();
                          for (std::size_t i = 0; i < self.data.size(); ++i)
                            nx->grad[i] += self.grad[i];
                        });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  if (axes.size() != x.ndim())
    throw ShapeError("permute: axes count " + std::to_string(axes.size()) +
                     " does not match rank of " + shape_str(x.shape()));
  std::vector<bool> seen(axes.size(), false);
  for (std::size_t a : axes) {
    if (a >= axes.size() || seen[a])
      throw ShapeError("permute: invalid axis permutation for " +
                       shape_str(x.shape()));
    seen[a] = true;
  }
  const Shape& in = x.shape();
  Shape out_shape(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = in[axes[i]];

  std::vector<std::size_t> in_strides(in.size(), 1);
  for (std::size_t i = in.size(); i-- > 1;)
    in_strides[i - 1] = in_strides[i] * in[i];
  // stride in input space for each output axis
  std::vector<std::size_t> map_strides(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) map_strides[i] = in_strides[axes[i]];

  std::size_t n = x.size();
  std::vector<double> out(n);
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(axes.size(), 0);
  std::size_t off = 0;
  const auto& dx = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = dx[off];
    src[i] = off;
    for (std::size_t a = axes.size(); a-- > 0;) {
      ++idx[a];
      off += map_strides[a];
      if (idx[a] < out_shape[a]) break;
      off -= map_strides[a] * out_shape[a];
      idx[a] = 0;
    }
  }
  Tensor tx = x;
  return make_op_result(std::move(out_shape), std::move(out), {x},
                        [tx, src](detail::TensorNode& self) {
                          auto nx = tx.node();
                          nx->ensure_grad();
                          for (std::size_t i = 0; i < src.size(); ++i)
                            nx->grad[src[i]] += self.grad[i];
                        });
}

// ---------------------------------------------------------------------------
// backward

void backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw ContractError("backward: loss of shape " + shape_str(loss.shape()) +
                        " is not a scalar");
  // iterative post-order DFS for topological order
  std::vector<detail::TensorNode*> topo;
  std::unordered_set<detail::TensorNode*> visited;
  struct Frame {
    detail::TensorNode* node;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  detail::TensorNode* root = loss.node().get();
  if (!visited.count(root)) stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->parents.size()) {
      detail::TensorNode* child = f.node->parents[f.next_child++].get();
      if (!visited.count(child)) {
        visited.insert(child);
        stack.push_back({child, 0});
      }
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }
  for (detail::TensorNode* n : topo) n->ensure_grad();
  root->grad[0] += 1.0;
  for (std::size_t i = topo.size(); i-- > 0;)
    if (topo[i]->backward_fn) topo[i]->backward_fn(*topo[i]);
}

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& point, double h) {
  Tensor p = Tensor::from_data(point.shape(), point.data(), true);
  Tensor loss = f(p);
  if (loss.size() != 1) throw ContractError("grad_check: f must be scalar-valued");
  backward(loss);
  std::vector<double> analytic = p.grad();
  double max_err = 0.0;
  std::vector<double> vals = point.data();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    double orig = vals[i];
    vals[i] = orig + h;
    double fp = f(Tensor::from_data(point.shape(), vals)).item();
    vals[i] = orig - h;
    double fm = f(Tensor::from_data(point.shape(), vals)).item();
    vals[i] = orig;
    double fd = (fp - fm) / (2.0 * h);
    double err = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i]));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace stdistill
