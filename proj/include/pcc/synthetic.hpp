#pragma once

#include <cstdint>
#include <string>

#include "pcc/pointcloud.hpp"
#include "pcc/random.hpp"

namespace pcc {

// Desk-scale stand-ins for scan categories. Every shape is centered at the
// origin, has its farthest point at radius 0.5, and is reflection-symmetric
// about the xy-plane.
enum class Category : int {
  PlaneSlab = 0,
  Cylinder = 1,
  BoxFrame = 2,
  SphereShell = 3,
};

constexpr int kCategoryCount = 4;

const char* category_name(Category c);
Category category_from_name(const std::string& name);

// Uniform surface sample, deterministic per seed. Points come out in mirror
// pairs (p, mirror(p)), so the sampled set is exactly symmetric about the
// xy-plane; an odd tail point is placed on z = 0.
PointCloud gen_synthetic(Category category, std::int64_t n_points,
                         std::uint64_t seed);

enum class VisibilityMode {
  HalfSpace,     // keep the points facing the viewpoint
  BinOcclusion,  // hidden-point-removal style: depth order within view bins
};

// Keeps round(keep_fraction * N) points most visible from `viewpoint`,
// original order preserved. `seed` is reserved for stochastic visibility
// modes; both current modes are deterministic.
PointCloud make_partial(const PointCloud& cloud, const Vec3& viewpoint,
                        real keep_fraction, std::uint64_t seed,
                        VisibilityMode mode = VisibilityMode::HalfSpace);

// Removes the p percent of points nearest to a seed-chosen anchor point,
// cutting a contiguous hole rather than thinning uniformly.
PointCloud occlude(const PointCloud& partial, real p_percent,
                   std::uint64_t seed);

}  // namespace pcc
