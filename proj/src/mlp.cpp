#include "pcc/mlp.hpp"

#include <cmath>

namespace pcc {

Tensor ParamStore::create(const std::string& name, Shape shape,
                          std::vector<real> data) {
  require(!params_.count(name), "duplicate parameter '" + name + "'");
  Tensor t = Tensor::param(std::move(shape), std::move(data));
  params_.emplace(name, t);
  return t;
}

Tensor ParamStore::create_glorot(const std::string& name, std::int64_t fan_in,
                                 std::int64_t fan_out, Rng& rng) {
  const real limit = std::sqrt(6.0 / static_cast<real>(fan_in + fan_out));
  std::vector<real> data(static_cast<std::size_t>(fan_in * fan_out));
  for (auto& v : data) v = rng.uniform(-limit, limit);
  return create(name, {fan_in, fan_out}, std::move(data));
}

Tensor ParamStore::create_zeros(const std::string& name, Shape shape) {
  std::vector<real> data(static_cast<std::size_t>(shape_numel(shape)), 0.0);
  return create(name, std::move(shape), std::move(data));
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  require(it != params_.end(), "unknown parameter '" + name + "'");
  return it->second;
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [_, t] : params_) out.push_back(t);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

std::int64_t ParamStore::total_elements() const {
  std::int64_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

Tensor Linear::apply(const Tensor& x) const {
  return add(matmul(x, W), tile_rows(b, x.shape()[0]));
}

Linear make_linear(ParamStore& store, const std::string& prefix,
                   std::int64_t in, std::int64_t out, Rng& rng) {
  Linear l;
  l.W = store.create_glorot(prefix + "/W", in, out, rng);
  // small nonzero biases keep relu pre-activations off the exact kink for
  // constant rows (e.g. padded patch members)
  std::vector<real> b(static_cast<std::size_t>(out));
  for (auto& v : b) v = rng.uniform(-0.01, 0.01);
  l.b = store.create(prefix + "/b", {1, out}, std::move(b));
  return l;
}

Tensor Mlp::apply(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].apply(h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

Mlp make_mlp(ParamStore& store, const std::string& prefix, std::int64_t in,
             const std::vector<std::int64_t>& widths, Rng& rng) {
  require(!widths.empty(), "mlp needs at least one layer");
  Mlp m;
  std::int64_t cur = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    m.layers.push_back(make_linear(
        store, prefix + "/l" + std::to_string(i), cur, widths[i], rng));
    cur = widths[i];
  }
  return m;
}

}  // namespace pcc
