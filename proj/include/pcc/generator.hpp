#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "pcc/mlp.hpp"
#include "pcc/pointcloud.hpp"
#include "pcc/tensor.hpp"

namespace pcc {

struct GeneratorConfig {
  std::int64_t n_coarse = 512;     // N_c
  std::int64_t latent_width = 1024;
  std::vector<std::int64_t> enc1_widths{128, 256};
  std::vector<std::int64_t> enc2_widths{512, 1024};  // last must equal latent
  std::vector<std::int64_t> coarse_hidden{1024, 1024};
  // lifting module
  std::vector<std::int64_t> lift_feature_widths{256, 128};  // last is C3
  std::int64_t lift_contraction_width = 128;                // C2 = 4x this
  std::vector<std::int64_t> disp_hidden{256, 128, 64};
  real grid_code_range = 0.05;
  std::int64_t fps_start = 0;
  // ablation switches
  bool use_mean_shape = true;
  bool use_mirror = true;
  bool use_contraction_expansion = true;

  std::int64_t lift_input_width() const {
    return 3 + latent_width + (use_mean_shape ? latent_width : 0) + 2;
  }
};

// Per-category mean latent embeddings used as shape priors.
struct MeanShapeTable {
  std::int64_t width = 0;
  std::map<int, std::vector<real>> by_category;

  bool empty() const { return by_category.empty(); }
  // Falls back to the average over all categories for unknown ids.
  Tensor get(int category) const;
};

// Arithmetic mean of `encoder` embeddings of the complete clouds, grouped by
// category. Every id in `required_categories` (when given) must occur.
MeanShapeTable build_mean_shapes(
    const std::vector<const PointCloud*>& complete_clouds,
    const std::function<Tensor(const Tensor&)>& encoder,
    const std::vector<int>& required_categories = {});

struct CompletionResult {
  Tensor coarse;  // N_c x 3
  Tensor fine;    // target x 3
  int iterations = 0;
  std::vector<std::int64_t> sizes;  // row count after each lift
};

class Generator {
 public:
  Generator(GeneratorConfig cfg, std::uint64_t param_seed);

  const GeneratorConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // Permutation-invariant global feature of an N x 3 cloud tensor.
  Tensor encode(const Tensor& cloud) const;
  Tensor coarse_decode(const Tensor& latent) const;
  // FPS subsample of the partial (union with its mirror unless disabled)
  // stacked with the coarse output: 2 N_c x 3.
  Tensor merge_inputs(const PointCloud& partial, const Tensor& coarse) const;
  // One refinement step: tile x2, condition, displace. M x 3 -> 2M x 3.
  Tensor lift(const Tensor& points, const Tensor& latent,
              const Tensor& mean_shape) const;

  CompletionResult complete(const PointCloud& partial,
                            std::int64_t target_resolution,
                            const Tensor& mean_shape) const;
  // The post-encoder half of complete(), reused by latent interpolation.
  CompletionResult decode_latent(const Tensor& latent,
                                 const PointCloud& partial_conditioning,
                                 std::int64_t target_resolution,
                                 const Tensor& mean_shape) const;

  // Latent-space blend between two partials. Conditioning (skip points and
  // mean shape) stays fixed to `a` for every step, so the sweep isolates the
  // latent path; the alpha=0 endpoint equals complete(a) exactly.
  std::vector<CompletionResult> interpolate_latent(
      const PointCloud& a, const PointCloud& b, int steps,
      std::int64_t target_resolution, const Tensor& mean_shape_a) const;

  // Number of lift iterations for a target resolution (1..4), or -1.
  int iterations_for(std::int64_t target_resolution) const;

 private:
  GeneratorConfig cfg_;
  ParamStore store_;
  Mlp enc1_, enc2_, coarse_, lift_in_, disp_;
  Linear contract_, expand_;
};

}  // namespace pcc
