#include "pcc/discriminator.hpp"

#include "pcc/geometry.hpp"

namespace pcc {

Discriminator::Discriminator(DiscriminatorConfig cfg, std::uint64_t param_seed)
    : cfg_(cfg) {
  require(cfg_.n_seeds >= 1, "n_seeds must be positive");
  for (auto r : cfg_.radii) require(r > 0, "radii must be positive");
  for (auto s : cfg_.max_samples) require(s >= 1, "max_samples must be >= 1");
  Rng rng(param_seed);
  for (int r = 0; r < 3; ++r)
    patch_mlps_[r] = make_mlp(store_, "patch" + std::to_string(r), 3,
                              cfg_.point_widths, rng);
  const std::int64_t per_radius = cfg_.point_widths.back();
  integrate_ = make_mlp(store_, "integrate", 3 * per_radius,
                        cfg_.integrate_widths, rng);
  score_ = make_linear(store_, "score", cfg_.integrate_widths.back(), 1, rng);
}

Tensor Discriminator::discriminate(const Tensor& cloud) const {
  require(cloud.defined() && cloud.shape().size() == 2 &&
              cloud.shape()[1] == 3,
          "discriminate expects an Nx3 tensor");
  const std::int64_t n = cloud.shape()[0];
  require(n >= cfg_.n_seeds,
          "cloud has " + std::to_string(n) + " points but the discriminator needs at least " +
              std::to_string(cfg_.n_seeds));

  auto vals = cloud.values();
  std::int64_t start = cfg_.fps_start;
  if (cfg_.seed_start == DiscriminatorConfig::SeedStart::LexicographicMin) {
    start = 0;
    for (std::int64_t i = 1; i < n; ++i) {
      const real* a = vals.data() + 3 * i;
      const real* b = vals.data() + 3 * start;
      if (std::lexicographical_compare(a, a + 3, b, b + 3)) start = i;
    }
  } else {
    require(start >= 0 && start < n, "fps_start out of range");
  }
  const auto seeds = farthest_point_sample(vals, cfg_.n_seeds, start);

  Tensor seed_pts = gather_rows(cloud, seeds.indices);  // N_s x 3

  std::vector<Tensor> pooled;
  pooled.reserve(3);
  for (int r = 0; r < 3; ++r) {
    const std::int64_t samples = cfg_.max_samples[r];
    const auto groups =
        ball_query(vals, seeds.indices, cfg_.radii[r], samples);
    std::vector<std::int64_t> flat;
    flat.reserve(static_cast<std::size_t>(cfg_.n_seeds * samples));
    for (const auto& g : groups)
      flat.insert(flat.end(), g.members.begin(), g.members.end());
    Tensor gathered = gather_rows(cloud, flat);          // (N_s*S) x 3
    Tensor centered = sub(gathered, tile_rows(seed_pts, samples));
    Tensor feats = patch_mlps_[r].apply(centered);       // (N_s*S) x C
    Tensor grouped =
        reshape(feats, {cfg_.n_seeds, samples, feats.shape()[1]});
    pooled.push_back(max_axis(grouped, 1).values);       // N_s x C
  }

  Tensor merged = concat_last(pooled);                   // N_s x 3C
  Tensor integrated = relu(integrate_.apply(merged));
  Tensor scores = score_.apply(integrated);              // N_s x 1
  return reshape(scores, {cfg_.n_seeds});
}

}  // namespace pcc
