#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcc/random.hpp"
#include "pcc/tensor.hpp"

namespace pcc {

// Named trainable tensors with deterministic iteration order. One store per
// network; checkpoint namespaces are applied by the owner.
class ParamStore {
 public:
  Tensor create(const std::string& name, Shape shape, std::vector<real> data);
  // Glorot-uniform weight, drawn from `rng` in creation order.
  Tensor create_glorot(const std::string& name, std::int64_t fan_in,
                       std::int64_t fan_out, Rng& rng);
  Tensor create_zeros(const std::string& name, Shape shape);

  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) != 0; }
  const std::map<std::string, Tensor>& all() const { return params_; }
  std::vector<Tensor> tensors() const;

  void zero_grad();
  std::int64_t total_elements() const;

 private:
  std::map<std::string, Tensor> params_;
};

// y = x W + b applied to N x in rows.
struct Linear {
  Tensor W;  // in x out
  Tensor b;  // 1 x out
  Tensor apply(const Tensor& x) const;
  std::int64_t out_width() const { return W.shape()[1]; }
};

Linear make_linear(ParamStore& store, const std::string& prefix,
                   std::int64_t in, std::int64_t out, Rng& rng);

// Shared per-row MLP: Linear+relu on all but the last layer, last is linear.
struct Mlp {
  std::vector<Linear> layers;
  Tensor apply(const Tensor& x) const;
  std::int64_t out_width() const { return layers.back().out_width(); }
};

Mlp make_mlp(ParamStore& store, const std::string& prefix, std::int64_t in,
             const std::vector<std::int64_t>& widths, Rng& rng);

}  // namespace pcc
