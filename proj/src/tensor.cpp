#include "pcc/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcc {

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::MulScalar: return "mul-scalar";
    case Op::ConcatLast: return "concat-last-axis";
    case Op::Reshape: return "reshape";
    case Op::Relu: return "relu";
    case Op::MaxAxis: return "max-over-axis";
    case Op::MeanAxis: return "mean-over-axis";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::GatherRows: return "gather-rows";
    case Op::TileRows: return "tile-rows";
  }
  return "?";
}

namespace detail {
void Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}
}  // namespace detail

using detail::Node;

namespace {

std::atomic<std::int64_t> g_next_id{0};
thread_local bool g_grad_enabled = true;

std::shared_ptr<Node> new_node(Op op, Shape shape, std::vector<real> value) {
  auto n = std::make_shared<Node>();
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  n->op = op;
  n->shape = std::move(shape);
  n->value = std::move(value);
  for (auto e : n->shape)
    if (e <= 0)
      throw ContractViolation("non-positive extent in shape " +
                              shape_str(n->shape));
  if (shape_numel(n->shape) != n->numel())
    throw ContractViolation("tensor data length does not match shape " +
                            shape_str(n->shape));
  return n;
}

void check_finite(const Node& n) {
  for (real v : n.value) {
    if (!std::isfinite(v))
      throw NumericFault(std::string("non-finite value out of op '") +
                             op_name(n.op) + "' (node " +
                             std::to_string(n.id) + ")",
                         op_name(n.op), n.id);
  }
}

// outer/inner decomposition of a reduction axis in row-major layout
struct AxisSplit {
  std::int64_t outer, axis, inner;
};

AxisSplit split_axis(const Shape& s, int axis) {
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw ContractViolation("reduction axis " + std::to_string(axis) +
                            " out of range for shape " + shape_str(s));
  AxisSplit r{1, s[axis], 1};
  for (int i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Shape drop_axis(const Shape& s, int axis) {
  Shape out;
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (i != axis) out.push_back(s[i]);
  return out;
}

}  // namespace

namespace {
Tensor op_output(Op op, Shape shape, std::vector<real> value,
                 const std::vector<Tensor>& inputs) {
  auto n = new_node(op, std::move(shape), std::move(value));
  check_finite(*n);
  if (g_grad_enabled) {
    bool req = false;
    for (const auto& t : inputs) req = req || t.requires_grad();
    if (req) {
      n->requires_grad = true;
      for (const auto& t : inputs) n->inputs.push_back(t.shared_node());
    }
  }
  return Tensor::wrap(std::move(n));
}
}  // namespace

// --- Tensor basics ---

Tensor Tensor::constant(Shape shape, std::vector<real> data) {
  auto n = new_node(Op::Constant, std::move(shape), std::move(data));
  check_finite(*n);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(real v) { return constant({1}, {v}); }

Tensor Tensor::zeros(Shape shape) {
  std::vector<real> d(static_cast<std::size_t>(shape_numel(shape)), 0.0);
  return constant(std::move(shape), std::move(d));
}

Tensor Tensor::full(Shape shape, real v) {
  std::vector<real> d(static_cast<std::size_t>(shape_numel(shape)), v);
  return constant(std::move(shape), std::move(d));
}

Tensor Tensor::param(Shape shape, std::vector<real> data) {
  auto n = new_node(Op::Param, std::move(shape), std::move(data));
  check_finite(*n);
  n->requires_grad = true;
  n->ensure_grad();
  return Tensor(std::move(n));
}

const Shape& Tensor::shape() const {
  if (!node_) throw ContractViolation("use of undefined tensor");
  return node_->shape;
}

std::int64_t Tensor::numel() const { return node_ ? node_->numel() : 0; }

std::int64_t Tensor::rows() const {
  const auto& s = shape();
  if (s.empty()) throw ContractViolation("rows() on rank-0 tensor");
  return s[0];
}

std::int64_t Tensor::cols() const {
  const auto& s = shape();
  if (s.empty()) throw ContractViolation("cols() on rank-0 tensor");
  std::int64_t c = 1;
  for (std::size_t i = 1; i < s.size(); ++i) c *= s[i];
  return c;
}

std::span<const real> Tensor::values() const {
  if (!node_) throw ContractViolation("use of undefined tensor");
  return node_->value;
}

std::span<real> Tensor::mutable_values() {
  if (!node_) throw ContractViolation("use of undefined tensor");
  if (!node_->inputs.empty())
    throw ContractViolation("in-place mutation of a non-leaf graph node");
  return node_->value;
}

std::span<const real> Tensor::grad() const {
  if (!node_) throw ContractViolation("use of undefined tensor");
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_) return;
  node_->ensure_grad();
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::int64_t Tensor::node_id() const { return node_ ? node_->id : -1; }

real Tensor::item() const {
  if (numel() != 1) throw ContractViolation("item() on non-scalar tensor");
  return node_->value[0];
}

Tensor Tensor::detach() const {
  if (!node_) return Tensor();
  return constant(node_->shape, node_->value);
}

// --- ops ---

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    throw ContractViolation("matmul shape mismatch: " + shape_str(sa) + " x " +
                            shape_str(sb));
  const std::int64_t n = sa[0], k = sa[1], m = sb[1];
  std::vector<real> out(static_cast<std::size_t>(n * m), 0.0);
  const real* pa = a.values().data();
  const real* pb = b.values().data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n * k * m > 1000000)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    real* po = out.data() + i * m;
    const real* ra = pa + i * k;
    for (std::int64_t t = 0; t < k; ++t) {
      const real av = ra[t];
      const real* rb = pb + t * m;
      for (std::int64_t j = 0; j < m; ++j) po[j] += av * rb[j];
    }
  }
  return op_output(Op::MatMul, {n, m}, std::move(out), {a, b});
}

Tensor add(const Tensor& a, const Tensor& b) {
  const bool a1 = a.numel() == 1, b1 = b.numel() == 1;
  if (!(a.shape() == b.shape() || a1 || b1))
    throw ContractViolation("add shape mismatch: " + shape_str(a.shape()) +
                            " vs " + shape_str(b.shape()) +
                            " (only one-element broadcast is allowed)");
  const Tensor& big = (b1 && !a1) ? a : (a1 && !b1 ? b : a);
  std::vector<real> out(big.values().begin(), big.values().end());
  if (a1 && !b1) {
    const real v = a.values()[0];
    for (auto& x : out) x += v;  // out holds b
  } else if (b1 && !a1) {
    const real v = b.values()[0];
    for (auto& x : out) x += v;  // out holds a
  } else {
    auto vb = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  }
  return op_output(Op::Add, big.shape(), std::move(out), {a, b});
}

Tensor add(const Tensor& a, real b) { return add(a, Tensor::scalar(b)); }

Tensor mul(const Tensor& a, real c) {
  std::vector<real> out(a.values().begin(), a.values().end());
  for (auto& x : out) x *= c;
  auto t = op_output(Op::MulScalar, a.shape(), std::move(out), {a});
  t.node()->coeff = c;
  return t;
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, mul(b, -1.0)); }

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractViolation("concat of zero tensors");
  const Shape& s0 = parts[0].shape();
  if (s0.empty()) throw ContractViolation("concat of rank-0 tensors");
  Shape lead(s0.begin(), s0.end() - 1);
  std::int64_t last = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size() ||
        !std::equal(lead.begin(), lead.end(), s.begin()))
      throw ContractViolation("concat-last-axis shape mismatch: " +
                              shape_str(s0) + " vs " + shape_str(s));
    last += s.back();
  }
  const std::int64_t nrows = shape_numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(last);
  std::vector<real> out(static_cast<std::size_t>(nrows * last));
  std::int64_t col0 = 0;
  for (const auto& p : parts) {
    const std::int64_t c = p.shape().back();
    const real* src = p.values().data();
    for (std::int64_t r = 0; r < nrows; ++r)
      std::memcpy(out.data() + r * last + col0, src + r * c,
                  sizeof(real) * static_cast<std::size_t>(c));
    col0 += c;
  }
  return op_output(Op::ConcatLast, std::move(out_shape), std::move(out), parts);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw ContractViolation("reshape " + shape_str(a.shape()) + " -> " +
                            shape_str(shape) + " changes element count");
  std::vector<real> out(a.values().begin(), a.values().end());
  return op_output(Op::Reshape, std::move(shape), std::move(out), {a});
}

Tensor relu(const Tensor& a) {
  std::vector<real> out(a.values().begin(), a.values().end());
  for (auto& x : out)
    if (x < 0) x = 0;
  return op_output(Op::Relu, a.shape(), std::move(out), {a});
}

MaxResult max_axis(const Tensor& a, int axis) {
  const auto sp = split_axis(a.shape(), axis);
  const std::int64_t n_out = sp.outer * sp.inner;
  std::vector<real> out(static_cast<std::size_t>(n_out));
  std::vector<std::int64_t> arg(static_cast<std::size_t>(n_out));
  std::vector<std::int64_t> flat(static_cast<std::size_t>(n_out));
  const real* src = a.values().data();
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    for (std::int64_t i = 0; i < sp.inner; ++i) {
      real best = src[(o * sp.axis) * sp.inner + i];
      std::int64_t best_j = 0;
      for (std::int64_t j = 1; j < sp.axis; ++j) {
        const real v = src[(o * sp.axis + j) * sp.inner + i];
        if (v > best) {  // ties keep the lowest index
          best = v;
          best_j = j;
        }
      }
      const std::int64_t oi = o * sp.inner + i;
      out[oi] = best;
      arg[oi] = best_j;
      flat[oi] = (o * sp.axis + best_j) * sp.inner + i;
    }
  }
  auto t =
      op_output(Op::MaxAxis, drop_axis(a.shape(), axis), std::move(out), {a});
  t.node()->aux = std::move(flat);
  t.node()->axis = axis;
  return {t, std::move(arg)};
}

Tensor mean_axis(const Tensor& a, int axis) {
  const auto sp = split_axis(a.shape(), axis);
  const std::int64_t n_out = sp.outer * sp.inner;
  std::vector<real> out(static_cast<std::size_t>(n_out), 0.0);
  const real* src = a.values().data();
  for (std::int64_t o = 0; o < sp.outer; ++o)
    for (std::int64_t j = 0; j < sp.axis; ++j) {
      const real* row = src + (o * sp.axis + j) * sp.inner;
      real* dst = out.data() + o * sp.inner;
      for (std::int64_t i = 0; i < sp.inner; ++i) dst[i] += row[i];
    }
  const real inv = 1.0 / static_cast<real>(sp.axis);
  for (auto& x : out) x *= inv;
  auto t =
      op_output(Op::MeanAxis, drop_axis(a.shape(), axis), std::move(out), {a});
  t.node()->axis = axis;
  return t;
}

Tensor square(const Tensor& a) {
  std::vector<real> out(a.values().begin(), a.values().end());
  for (auto& x : out) x *= x;
  return op_output(Op::Square, a.shape(), std::move(out), {a});
}

Tensor sqrt_elem(const Tensor& a) {
  std::vector<real> out(a.values().begin(), a.values().end());
  for (auto& x : out) {
    if (x < 0)
      throw ContractViolation("sqrt of negative input");
    x = std::sqrt(x);
  }
  return op_output(Op::Sqrt, a.shape(), std::move(out), {a});
}

Tensor gather_rows(const Tensor& a, std::span<const std::int64_t> rows) {
  const auto& s = a.shape();
  if (s.empty()) throw ContractViolation("gather-rows on rank-0 tensor");
  const std::int64_t n = s[0];
  const std::int64_t c = a.cols();
  for (auto r : rows)
    if (r < 0 || r >= n)
      throw ContractViolation("gather-rows index " + std::to_string(r) +
                              " out of range [0," + std::to_string(n) + ")");
  Shape out_shape = s;
  out_shape[0] = static_cast<std::int64_t>(rows.size());
  std::vector<real> out(rows.size() * static_cast<std::size_t>(c));
  const real* src = a.values().data();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::memcpy(out.data() + static_cast<std::int64_t>(i) * c,
                src + rows[i] * c, sizeof(real) * static_cast<std::size_t>(c));
  auto t = op_output(Op::GatherRows, std::move(out_shape), std::move(out), {a});
  t.node()->aux.assign(rows.begin(), rows.end());
  return t;
}

Tensor tile_rows(const Tensor& a, std::int64_t factor) {
  if (factor < 1) throw ContractViolation("tile-rows factor must be >= 1");
  const auto& s = a.shape();
  if (s.empty()) throw ContractViolation("tile-rows on rank-0 tensor");
  const std::int64_t n = s[0];
  const std::int64_t c = a.cols();
  Shape out_shape = s;
  out_shape[0] = n * factor;
  std::vector<real> out(static_cast<std::size_t>(n * factor * c));
  const real* src = a.values().data();
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t t = 0; t < factor; ++t)
      std::memcpy(out.data() + (i * factor + t) * c, src + i * c,
                  sizeof(real) * static_cast<std::size_t>(c));
  auto t = op_output(Op::TileRows, std::move(out_shape), std::move(out), {a});
  t.node()->factor = factor;
  return t;
}

// --- backward ---

namespace {

void backward_one(Node* n) {
  switch (n->op) {
    case Op::Constant:
    case Op::Param:
      return;
    case Op::MatMul: {
      Node* a = n->inputs[0].get();
      Node* b = n->inputs[1].get();
      const std::int64_t rows = a->shape[0], k = a->shape[1], m = b->shape[1];
      const real* g = n->grad.data();
      if (a->requires_grad) {
        a->ensure_grad();
        real* ga = a->grad.data();
        const real* pb = b->value.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (rows * k * m > 1000000)
#endif
        for (std::int64_t i = 0; i < rows; ++i)
          for (std::int64_t t = 0; t < k; ++t) {
            real acc = 0;
            const real* rg = g + i * m;
            const real* rb = pb + t * m;
            for (std::int64_t j = 0; j < m; ++j) acc += rg[j] * rb[j];
            ga[i * k + t] += acc;
          }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        real* gb = b->grad.data();
        const real* pa = a->value.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (rows * k * m > 1000000)
#endif
        for (std::int64_t t = 0; t < k; ++t)
          for (std::int64_t i = 0; i < rows; ++i) {
            const real av = pa[i * k + t];
            const real* rg = g + i * m;
            real* rb = gb + t * m;
            for (std::int64_t j = 0; j < m; ++j) rb[j] += av * rg[j];
          }
      }
      return;
    }
    case Op::Add: {
      Node* a = n->inputs[0].get();
      Node* b = n->inputs[1].get();
      const real* g = n->grad.data();
      auto route = [&](Node* x) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        if (x->numel() == 1 && n->numel() != 1) {
          real acc = 0;
          for (std::int64_t i = 0; i < n->numel(); ++i) acc += g[i];
          x->grad[0] += acc;
        } else {
          for (std::int64_t i = 0; i < n->numel(); ++i) x->grad[i] += g[i];
        }
      };
      route(a);
      route(b);
      return;
    }
    case Op::MulScalar: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      const real c = n->coeff;
      for (std::int64_t i = 0; i < n->numel(); ++i) a->grad[i] += c * n->grad[i];
      return;
    }
    case Op::ConcatLast: {
      const std::int64_t last = n->shape.back();
      std::int64_t nrows = 1;
      for (std::size_t i = 0; i + 1 < n->shape.size(); ++i) nrows *= n->shape[i];
      std::int64_t col0 = 0;
      for (auto& in : n->inputs) {
        const std::int64_t c = in->shape.back();
        if (in->requires_grad) {
          in->ensure_grad();
          for (std::int64_t r = 0; r < nrows; ++r) {
            const real* g = n->grad.data() + r * last + col0;
            real* dst = in->grad.data() + r * c;
            for (std::int64_t j = 0; j < c; ++j) dst[j] += g[j];
          }
        }
        col0 += c;
      }
      return;
    }
    case Op::Reshape: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      for (std::int64_t i = 0; i < n->numel(); ++i) a->grad[i] += n->grad[i];
      return;
    }
    case Op::Relu: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      for (std::int64_t i = 0; i < n->numel(); ++i)
        if (a->value[i] > 0) a->grad[i] += n->grad[i];  // slope 0 at exactly 0
      return;
    }
    case Op::MaxAxis: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      for (std::int64_t i = 0; i < n->numel(); ++i)
        a->grad[n->aux[i]] += n->grad[i];
      return;
    }
    case Op::MeanAxis: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      const auto sp = split_axis(a->shape, n->axis);
      const real inv = 1.0 / static_cast<real>(sp.axis);
      for (std::int64_t o = 0; o < sp.outer; ++o)
        for (std::int64_t j = 0; j < sp.axis; ++j) {
          real* dst = a->grad.data() + (o * sp.axis + j) * sp.inner;
          const real* g = n->grad.data() + o * sp.inner;
          for (std::int64_t i = 0; i < sp.inner; ++i) dst[i] += inv * g[i];
        }
      return;
    }
    case Op::Square: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      for (std::int64_t i = 0; i < n->numel(); ++i)
        a->grad[i] += 2.0 * a->value[i] * n->grad[i];
      return;
    }
    case Op::Sqrt: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      // Subgradient 0 at exactly 0; keeps training finite when a distance
      // term hits an exact coincidence.
      for (std::int64_t i = 0; i < n->numel(); ++i)
        if (n->value[i] > 0) a->grad[i] += 0.5 / n->value[i] * n->grad[i];
      return;
    }
    case Op::GatherRows: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      const std::int64_t c = n->numel() / std::max<std::int64_t>(
                                              1, static_cast<std::int64_t>(
                                                     n->aux.size()));
      for (std::size_t i = 0; i < n->aux.size(); ++i) {
        const real* g = n->grad.data() + static_cast<std::int64_t>(i) * c;
        real* dst = a->grad.data() + n->aux[i] * c;
        for (std::int64_t j = 0; j < c; ++j) dst[j] += g[j];
      }
      return;
    }
    case Op::TileRows: {
      Node* a = n->inputs[0].get();
      if (!a->requires_grad) return;
      a->ensure_grad();
      const std::int64_t nin = a->shape[0];
      const std::int64_t c = a->numel() / nin;
      for (std::int64_t i = 0; i < nin; ++i)
        for (std::int64_t t = 0; t < n->factor; ++t) {
          const real* g = n->grad.data() + (i * n->factor + t) * c;
          real* dst = a->grad.data() + i * c;
          for (std::int64_t j = 0; j < c; ++j) dst[j] += g[j];
        }
      return;
    }
  }
}

}  // namespace

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ContractViolation("backward requires a one-element loss tensor");
  Node* root = loss.node();
  if (!std::isfinite(root->value[0]))
    throw NumericFault("backward on non-finite loss", op_name(root->op),
                       root->id);
  if (!root->requires_grad) return;  // nothing reachable requires grad

  // Node ids increase with creation and every input predates its output, so
  // sorting reachable nodes by id descending is an exact reverse topological
  // order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root};
  seen.insert(root);
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& in : n->inputs)
      if (in->requires_grad && seen.insert(in.get()).second)
        stack.push_back(in.get());
  }
  std::sort(order.begin(), order.end(),
            [](Node* a, Node* b) { return a->id > b->id; });

  // Fresh sweep: interior grads restart at zero, leaf (parameter) grads keep
  // accumulating across calls.
  for (Node* n : order)
    if (!n->inputs.empty()) {
      n->ensure_grad();
      std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (Node* n : order) backward_one(n);
}

// --- grad mode ---

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

// --- finite differences ---

GradCheckReport grad_check(const std::function<Tensor()>& eval,
                           std::span<Tensor> params, real eps, real tolerance,
                           real floor) {
  GradCheckReport report;

  // Determinism probe: two evaluations must agree bit-for-bit.
  real base;
  {
    NoGradGuard ng;
    base = eval().item();
    const real again = eval().item();
    if (std::memcmp(&base, &again, sizeof(real)) != 0)
      throw NumericFault("grad_check: function is not deterministic", "grad-check",
                         -1);
  }

  for (auto& p : params) p.zero_grad();
  Tensor loss = eval();
  backward(loss);
  std::vector<std::vector<real>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    auto g = p.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  NoGradGuard ng;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto vals = params[pi].mutable_values();
    for (std::int64_t e = 0; e < static_cast<std::int64_t>(vals.size()); ++e) {
      const real keep = vals[e];
      vals[e] = keep + eps;
      const real up = eval().item();
      vals[e] = keep - eps;
      const real down = eval().item();
      vals[e] = keep;
      const real numeric = (up - down) / (2.0 * eps);
      const real a = analytic[pi][static_cast<std::size_t>(e)];
      ++report.checked;
      real rel;
      const real mag = std::max(std::abs(a), std::abs(numeric));
      if (mag <= floor) {
        rel = std::abs(a - numeric) <= floor ? 0.0 : 1.0;
      } else {
        rel = std::abs(a - numeric) / mag;
      }
      report.max_rel_err = std::max(report.max_rel_err, rel);
      if (rel > tolerance) {
        ++report.failed;
        if (report.failures.size() < 16)
          report.failures.push_back(
              {static_cast<int>(pi), e, a, numeric, rel});
      }
    }
  }
  return report;
}

}  // namespace pcc
