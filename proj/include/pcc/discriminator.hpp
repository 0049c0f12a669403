#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pcc/mlp.hpp"
#include "pcc/tensor.hpp"

namespace pcc {

struct DiscriminatorConfig {
  std::int64_t n_seeds = 256;  // N_s patch scores
  std::array<real, 3> radii{0.1, 0.2, 0.4};
  std::array<std::int64_t, 3> max_samples{32, 64, 128};
  std::vector<std::int64_t> point_widths{64, 128};      // per-patch MLP
  std::vector<std::int64_t> integrate_widths{256, 128};  // across radii
  // FPS seed start: a fixed row index, or the lexicographically smallest
  // point (order-independent, used by permutation tests).
  enum class SeedStart { FixedIndex, LexicographicMin };
  SeedStart seed_start = SeedStart::FixedIndex;
  std::int64_t fps_start = 0;
};

// Patch critic: FPS seeds, multi-radius ball grouping around each seed,
// per-radius max-pooled features, then one regression score per seed.
// Scores are raw (least-squares objective, no squashing).
class Discriminator {
 public:
  Discriminator(DiscriminatorConfig cfg, std::uint64_t param_seed);

  const DiscriminatorConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // N_s raw scores for a cloud tensor with at least N_s rows. Gradients flow
  // into the cloud through the gathered patch coordinates; the seed and
  // membership selections are fixed by the forward pass.
  Tensor discriminate(const Tensor& cloud) const;

 private:
  DiscriminatorConfig cfg_;
  ParamStore store_;
  std::array<Mlp, 3> patch_mlps_;
  Mlp integrate_;
  Linear score_;
};

}  // namespace pcc
