#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pcc/common.hpp"

namespace pcc {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// The closed op set. Everything the networks and losses need is composed
// from these; each one has an individually verifiable backward rule.
enum class Op : std::uint8_t {
  Constant,
  Param,
  MatMul,
  Add,
  MulScalar,
  ConcatLast,
  Reshape,
  Relu,
  MaxAxis,
  MeanAxis,
  Square,
  Sqrt,
  GatherRows,
  TileRows,
};

const char* op_name(Op op);

namespace detail {

struct Node {
  std::int64_t id = -1;
  Op op = Op::Constant;
  Shape shape;
  std::vector<real> value;
  std::vector<real> grad;  // allocated lazily; same length as value when present
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Saved context for backward:
  std::vector<std::int64_t> aux;  // argmax flat offsets / gather row indices
  real coeff = 0.0;               // mul-scalar factor
  int axis = -1;                  // reduction axis
  std::int64_t factor = 0;        // tile-rows repeat count

  std::int64_t numel() const { return static_cast<std::int64_t>(value.size()); }
  void ensure_grad();
};

}  // namespace detail

// Value-semantics handle onto a graph node. Copies alias the same node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<real> data);
  static Tensor scalar(real v);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, real v);
  // Leaf with requires_grad set: a trainable parameter.
  static Tensor param(Shape shape, std::vector<real> data);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::int64_t numel() const;
  std::int64_t rows() const;  // first extent
  std::int64_t cols() const;  // product of the rest

  std::span<const real> values() const;
  // Leaf-only in-place mutation (optimizer updates, grad-check perturbation).
  std::span<real> mutable_values();
  std::span<const real> grad() const;  // zeros if backward never reached this node
  void zero_grad();
  bool requires_grad() const;
  std::int64_t node_id() const;
  real item() const;  // value of a one-element tensor

  // Constant copy of the values, cut loose from the graph.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> n) {
    return Tensor(std::move(n));
  }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

// ---- forward ops ----

Tensor matmul(const Tensor& a, const Tensor& b);
// Same-shape elementwise add, or broadcast when either side has one element.
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, real b);
Tensor mul(const Tensor& a, real c);
Tensor sub(const Tensor& a, const Tensor& b);  // add(a, mul(b, -1))
Tensor concat_last(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& a, Shape shape);
Tensor relu(const Tensor& a);

struct MaxResult {
  Tensor values;
  std::vector<std::int64_t> indices;  // argmax position along the reduced axis
};
MaxResult max_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);
Tensor square(const Tensor& a);
Tensor sqrt_elem(const Tensor& a);
// Row selection on the first axis; indices may repeat. Gradients scatter-add
// into the selected rows; the indices themselves carry no gradient.
Tensor gather_rows(const Tensor& a, std::span<const std::int64_t> rows);
// Repeats each row `factor` times consecutively: row i lands at i*factor+c.
Tensor tile_rows(const Tensor& a, std::int64_t factor);

// Reverse-mode sweep from a one-element loss. Accumulates into .grad of every
// reachable node that requires grad; repeated calls keep accumulating until
// zero_grad.
void backward(const Tensor& loss);

// ---- gradient tracking mode ----

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// ---- finite-difference gradient checker (64-bit only) ----

struct GradCheckFailure {
  int param = 0;
  std::int64_t element = 0;
  real analytic = 0, numeric = 0, rel_err = 0;
};

struct GradCheckReport {
  std::int64_t checked = 0;
  std::int64_t failed = 0;
  real max_rel_err = 0;
  std::vector<GradCheckFailure> failures;  // capped at 16
  bool pass() const { return failed == 0; }
};

// `eval` must rebuild the scalar loss from the current parameter values on
// every call and be deterministic (verified by double evaluation). Elements
// where both gradients are below `floor` are compared absolutely, since the
// central difference is pure cancellation noise there.
GradCheckReport grad_check(const std::function<Tensor()>& eval,
                           std::span<Tensor> params, real eps, real tolerance,
                           real floor = 1e-6);

}  // namespace pcc
