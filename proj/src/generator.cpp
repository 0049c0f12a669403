#include "pcc/generator.hpp"

#include <algorithm>
#include <cmath>

#include "pcc/geometry.hpp"

namespace pcc {

Tensor MeanShapeTable::get(int category) const {
  require(width > 0 && !by_category.empty(), "mean shape table is empty");
  auto it = by_category.find(category);
  if (it != by_category.end()) return Tensor::constant({width}, it->second);
  std::vector<real> avg(static_cast<std::size_t>(width), 0.0);
  for (const auto& [_, v] : by_category)
    for (std::int64_t i = 0; i < width; ++i) avg[i] += v[i];
  for (auto& x : avg) x /= static_cast<real>(by_category.size());
  return Tensor::constant({width}, std::move(avg));
}

MeanShapeTable build_mean_shapes(
    const std::vector<const PointCloud*>& complete_clouds,
    const std::function<Tensor(const Tensor&)>& encoder,
    const std::vector<int>& required_categories) {
  require(!complete_clouds.empty(), "build_mean_shapes with no instances");
  NoGradGuard ng;
  std::map<int, std::pair<std::vector<real>, std::int64_t>> acc;
  std::int64_t width = 0;
  for (const PointCloud* c : complete_clouds) {
    require(c->category.has_value(), "instance without category label");
    Tensor f = encoder(cloud_tensor(*c));
    width = f.numel();
    auto& [sum, count] = acc[*c->category];
    if (sum.empty()) sum.assign(static_cast<std::size_t>(width), 0.0);
    auto vals = f.values();
    for (std::int64_t i = 0; i < width; ++i) sum[i] += vals[i];
    ++count;
  }
  for (int cat : required_categories)
    require(acc.count(cat) != 0, "category " + std::to_string(cat) +
                                     " has no instances for the mean shape");
  MeanShapeTable table;
  table.width = width;
  for (auto& [cat, sc] : acc) {
    auto& [sum, count] = sc;
    for (auto& v : sum) v /= static_cast<real>(count);
    table.by_category[cat] = std::move(sum);
  }
  return table;
}

Generator::Generator(GeneratorConfig cfg, std::uint64_t param_seed)
    : cfg_(cfg) {
  require(!cfg_.enc1_widths.empty() && !cfg_.enc2_widths.empty(),
          "encoder width lists must be non-empty");
  require(cfg_.enc2_widths.back() == cfg_.latent_width,
          "last encoder width must equal the latent width");
  require(cfg_.n_coarse >= 1, "n_coarse must be positive");
  Rng rng(param_seed);
  const std::int64_t c1 = cfg_.enc1_widths.back();
  enc1_ = make_mlp(store_, "enc1", 3, cfg_.enc1_widths, rng);
  enc2_ = make_mlp(store_, "enc2", 2 * c1, cfg_.enc2_widths, rng);

  std::vector<std::int64_t> coarse_widths = cfg_.coarse_hidden;
  coarse_widths.push_back(3 * cfg_.n_coarse);
  coarse_ = make_mlp(store_, "coarse", cfg_.latent_width, coarse_widths, rng);

  lift_in_ = make_mlp(store_, "lift/in", cfg_.lift_input_width(),
                      cfg_.lift_feature_widths, rng);
  const std::int64_t c3 = cfg_.lift_feature_widths.back();
  if (cfg_.use_contraction_expansion) {
    contract_ = make_linear(store_, "lift/contract", c3,
                            cfg_.lift_contraction_width, rng);
    expand_ = make_linear(store_, "lift/expand",
                          4 * cfg_.lift_contraction_width, 4 * c3, rng);
  }
  std::vector<std::int64_t> disp_widths = cfg_.disp_hidden;
  disp_widths.push_back(3);
  disp_ = make_mlp(store_, "lift/disp", c3, disp_widths, rng);
}

Tensor Generator::encode(const Tensor& cloud) const {
  require(cloud.defined() && cloud.shape().size() == 2 &&
              cloud.shape()[1] == 3 && cloud.shape()[0] >= 1,
          "encode expects a non-empty Nx3 tensor");
  const std::int64_t n = cloud.shape()[0];
  Tensor per_point = enc1_.apply(cloud);                    // N x c1
  Tensor pooled = max_axis(per_point, 0).values;            // c1
  Tensor tiled = tile_rows(reshape(pooled, {1, per_point.shape()[1]}), n);
  Tensor both = concat_last({per_point, tiled});            // N x 2c1
  Tensor second = enc2_.apply(both);                        // N x latent
  return max_axis(second, 0).values;                        // latent
}

Tensor Generator::coarse_decode(const Tensor& latent) const {
  require(latent.defined() && latent.numel() == cfg_.latent_width,
          "latent width mismatch");
  Tensor row = reshape(latent, {1, cfg_.latent_width});
  Tensor flat = coarse_.apply(row);  // 1 x 3N_c
  return reshape(flat, {cfg_.n_coarse, 3});
}

Tensor Generator::merge_inputs(const PointCloud& partial,
                               const Tensor& coarse) const {
  require(partial.size() >= 1, "merge_inputs with empty partial");
  require(coarse.defined() && coarse.shape() ==
              Shape{cfg_.n_coarse, 3},
          "merge_inputs coarse must be N_c x 3");

  std::vector<real> pool = partial.xyz;
  if (cfg_.use_mirror) {
    const std::int64_t n = partial.size();
    pool.reserve(pool.size() * 2);
    for (std::int64_t i = 0; i < n; ++i) {
      pool.push_back(partial.xyz[3 * i]);
      pool.push_back(partial.xyz[3 * i + 1]);
      pool.push_back(-partial.xyz[3 * i + 2]);
    }
  }
  const std::int64_t pool_n = static_cast<std::int64_t>(pool.size()) / 3;
  const std::int64_t start =
      cfg_.fps_start < pool_n ? cfg_.fps_start : 0;
  const auto fps = farthest_point_sample(
      std::span<const real>(pool), std::min(cfg_.n_coarse, pool_n), start);

  std::vector<real> sub(static_cast<std::size_t>(cfg_.n_coarse) * 3);
  for (std::int64_t i = 0; i < cfg_.n_coarse; ++i) {
    // cycle the FPS order when the pool is smaller than N_c
    const std::int64_t src =
        fps.indices[static_cast<std::size_t>(i) % fps.indices.size()];
    for (int d = 0; d < 3; ++d) sub[3 * i + d] = pool[3 * src + d];
  }
  Tensor sampled = Tensor::constant({cfg_.n_coarse, 3}, std::move(sub));

  Tensor stacked = concat_last({reshape(sampled, {1, 3 * cfg_.n_coarse}),
                                reshape(coarse, {1, 3 * cfg_.n_coarse})});
  return reshape(stacked, {2 * cfg_.n_coarse, 3});
}

Tensor Generator::lift(const Tensor& points, const Tensor& latent,
                       const Tensor& mean_shape) const {
  require(points.defined() && points.shape().size() == 2 &&
              points.shape()[1] == 3,
          "lift expects an Mx3 tensor");
  const std::int64_t m = points.shape()[0];
  require(m >= 1, "lift of empty point set");
  if (cfg_.use_contraction_expansion)
    require(m % 2 == 0, "contraction needs an even row count");

  Tensor tiled = tile_rows(points, 2);  // 2M x 3, row-interleaved copies
  std::vector<Tensor> parts{tiled};
  if (cfg_.use_mean_shape) {
    require(mean_shape.defined() && mean_shape.numel() == cfg_.latent_width,
            "mean shape width mismatch");
    parts.push_back(
        tile_rows(reshape(mean_shape, {1, cfg_.latent_width}), 2 * m));
  }
  require(latent.numel() == cfg_.latent_width, "latent width mismatch");
  parts.push_back(tile_rows(reshape(latent, {1, cfg_.latent_width}), 2 * m));
  parts.push_back(Tensor::constant(
      {2 * m, 2}, grid_codes(m, 2, cfg_.grid_code_range)));

  Tensor f_s = concat_last(parts);       // 2M x C1
  Tensor base = lift_in_.apply(f_s);     // 2M x C3
  Tensor refined = base;
  if (cfg_.use_contraction_expansion) {
    const std::int64_t c3 = cfg_.lift_feature_widths.back();
    Tensor f_c = relu(reshape(contract_.apply(base),
                              {m / 2, 4 * cfg_.lift_contraction_width}));
    Tensor f_e = reshape(expand_.apply(f_c), {2 * m, c3});
    refined = add(base, f_e);  // residual point features
  }
  Tensor disp = disp_.apply(refined);  // 2M x 3
  return add(tiled, disp);
}

int Generator::iterations_for(std::int64_t target_resolution) const {
  std::int64_t size = 2 * cfg_.n_coarse;
  for (int k = 1; k <= 4; ++k) {
    size *= 2;
    if (size == target_resolution) return k;
  }
  return -1;
}

CompletionResult Generator::decode_latent(const Tensor& latent,
                                          const PointCloud& partial,
                                          std::int64_t target_resolution,
                                          const Tensor& mean_shape) const {
  const int iters = iterations_for(target_resolution);
  if (iters < 0) {
    std::string supported;
    std::int64_t size = 2 * cfg_.n_coarse;
    for (int k = 1; k <= 4; ++k) {
      size *= 2;
      supported += (k > 1 ? ", " : "") + std::to_string(size);
    }
    throw ContractViolation("unsupported resolution " +
                            std::to_string(target_resolution) + " (supported: " +
                            supported + ")");
  }
  CompletionResult out;
  out.coarse = coarse_decode(latent);
  Tensor cur = merge_inputs(partial, out.coarse);
  for (int k = 0; k < iters; ++k) {
    cur = lift(cur, latent, mean_shape);
    out.sizes.push_back(cur.shape()[0]);
  }
  out.fine = cur;
  out.iterations = iters;
  return out;
}

CompletionResult Generator::complete(const PointCloud& partial,
                                     std::int64_t target_resolution,
                                     const Tensor& mean_shape) const {
  require(partial.size() >= 1, "complete with empty partial input");
  Tensor latent = encode(cloud_tensor(partial));
  return decode_latent(latent, partial, target_resolution, mean_shape);
}

std::vector<CompletionResult> Generator::interpolate_latent(
    const PointCloud& a, const PointCloud& b, int steps,
    std::int64_t target_resolution, const Tensor& mean_shape_a) const {
  require(steps >= 2, "interpolation needs at least 2 steps");
  Tensor fa = encode(cloud_tensor(a));
  Tensor fb = encode(cloud_tensor(b));
  std::vector<CompletionResult> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    const real alpha = static_cast<real>(s) / static_cast<real>(steps - 1);
    // delta form keeps the blend exact at the endpoints and when fa == fb
    Tensor f = alpha == 0.0
                   ? fa
                   : (alpha == 1.0 ? fb : add(fa, mul(sub(fb, fa), alpha)));
    out.push_back(decode_latent(f, a, target_resolution, mean_shape_a));
  }
  return out;
}

}  // namespace pcc
