#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stdistill/errors.hpp"

namespace stdistill {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

namespace detail {

// One node of the recorded computation graph. Ops link result nodes to their
// input nodes together with a rule that accumulates gradient into the inputs.
// Construction order is topological by definition; backward() walks it in
// reverse.
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // sized lazily, same length as data
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// Dense float64 tensor with optional reverse-mode gradient tracking.
// Every op returns a fresh tensor; there are no aliasing views.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  const std::vector<double>& data() const { return node_->data; }
  // Direct mutation is for optimizer updates and loaders only; it bypasses
  // the tape, so never call it on a tensor that is part of a live graph.
  std::vector<double>& raw_data() { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  const std::vector<double>& grad() const;
  std::vector<double>& raw_grad() { node_->ensure_grad(); return node_->grad; }
  void zero_grad();

  double item() const;
  double at(std::size_t flat_index) const { return node_->data.at(flat_index); }

  // Copy of the values with no graph history and no grad requirement.
  Tensor detach() const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_op_result(Shape shape, std::vector<double> data,
                               std::vector<Tensor> inputs,
                               std::function<void(detail::TensorNode&)> backward_fn);
};

// Elementwise with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);          // 2-D only
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);                               // arg floored at 1e-12
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor gather(const Tensor& x, const std::vector<std::size_t>& indices,
              std::size_t axis);
Tensor softmax(const Tensor& x, std::size_t axis);

Tensor sum(const Tensor& x);                               // full reduction -> scalar
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis);

Tensor reshape(const Tensor& x, Shape new_shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);

// Reverse-mode pass from a scalar loss. Populates grad on every
// requires_grad tensor reachable from it; fan-out accumulates additively.
void backward(const Tensor& loss);

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& point, double h = 1e-6);

}  // namespace stdistill
