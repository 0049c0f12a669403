#include "pcc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcc {

namespace {

constexpr real kPi = 3.14159265358979323846;

// picks a component proportional to its weight
std::size_t pick_weighted(Rng& rng, std::span<const real> weights) {
  real total = 0;
  for (real w : weights) total += w;
  const real u = rng.uniform() * total;
  real acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

struct SlabShape {
  real a, b, t;  // half extents, corner at radius 0.5
  static SlabShape draw(Rng& rng) {
    const real a0 = 1.0;
    const real b0 = rng.uniform(0.45, 0.8);
    const real t0 = rng.uniform(0.03, 0.09);
    const real s = 0.5 / std::sqrt(a0 * a0 + b0 * b0 + t0 * t0);
    return {a0 * s, b0 * s, t0 * s};
  }
  Vec3 sample(Rng& rng) const {
    const real areas[6] = {4 * a * b, 4 * a * b, 4 * a * t,
                           4 * a * t, 4 * b * t, 4 * b * t};
    const auto f = pick_weighted(rng, areas);
    const real u = rng.uniform(-1, 1), v = rng.uniform(-1, 1);
    switch (f) {
      case 0: return {u * a, v * b, t};
      case 1: return {u * a, v * b, -t};
      case 2: return {u * a, b, v * t};
      case 3: return {u * a, -b, v * t};
      case 4: return {a, u * b, v * t};
      default: return {-a, u * b, v * t};
    }
  }
  Vec3 tail() const { return {a, 0, 0}; }
};

struct CylinderShape {
  real r, h;  // radius, half height; rim corner at radius 0.5
  static CylinderShape draw(Rng& rng) {
    const real r0 = rng.uniform(0.35, 0.7);
    const real h0 = 1.0;
    const real s = 0.5 / std::sqrt(r0 * r0 + h0 * h0);
    return {r0 * s, h0 * s};
  }
  Vec3 sample(Rng& rng) const {
    const real areas[3] = {2 * kPi * r * 2 * h, kPi * r * r, kPi * r * r};
    const auto f = pick_weighted(rng, areas);
    const real theta = rng.uniform(0, 2 * kPi);
    if (f == 0) {
      return {r * std::cos(theta), r * std::sin(theta), rng.uniform(-h, h)};
    }
    const real rr = r * std::sqrt(rng.uniform());
    const real z = f == 1 ? h : -h;
    return {rr * std::cos(theta), rr * std::sin(theta), z};
  }
  Vec3 tail() const { return {r, 0, 0}; }
};

struct BoxFrameShape {
  real a, b, c;  // half extents of the wireframe box
  static BoxFrameShape draw(Rng& rng) {
    const real a0 = 1.0;
    const real b0 = rng.uniform(0.55, 0.9);
    const real c0 = rng.uniform(0.35, 0.75);
    const real s = 0.5 / std::sqrt(a0 * a0 + b0 * b0 + c0 * c0);
    return {a0 * s, b0 * s, c0 * s};
  }
  Vec3 sample(Rng& rng) const {
    // 12 edges: 4 per axis, weighted by length
    const real lens[3] = {8 * a, 8 * b, 8 * c};
    const auto axis = pick_weighted(rng, lens);
    const real sx = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const real sy = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const real u = rng.uniform(-1, 1);
    switch (axis) {
      case 0: return {u * a, sx * b, sy * c};
      case 1: return {sx * a, u * b, sy * c};
      default: return {sx * a, sy * b, u * c};
    }
  }
  Vec3 tail() const { return {a, b, 0}; }
};

struct SphereShellShape {
  static SphereShellShape draw(Rng&) { return {}; }
  Vec3 sample(Rng& rng) const {
    const real z = rng.uniform(-1, 1);
    const real theta = rng.uniform(0, 2 * kPi);
    const real rr = std::sqrt(std::max<real>(0, 1 - z * z));
    return {0.5 * rr * std::cos(theta), 0.5 * rr * std::sin(theta), 0.5 * z};
  }
  Vec3 tail() const { return {0.5, 0, 0}; }
};

template <class ShapeT>
PointCloud sample_symmetric(ShapeT shape, std::int64_t n, Rng& rng) {
  PointCloud out;
  out.xyz.reserve(static_cast<std::size_t>(n) * 3);
  const std::int64_t pairs = n / 2;
  for (std::int64_t i = 0; i < pairs; ++i) {
    const Vec3 p = shape.sample(rng);
    out.push(p);
    out.push({p[0], p[1], -p[2]});
  }
  if (n % 2 != 0) out.push(shape.tail());
  return out;
}

}  // namespace

const char* category_name(Category c) {
  switch (c) {
    case Category::PlaneSlab: return "plane-slab";
    case Category::Cylinder: return "cylinder";
    case Category::BoxFrame: return "box-frame";
    case Category::SphereShell: return "sphere-shell";
  }
  return "?";
}

Category category_from_name(const std::string& name) {
  for (int i = 0; i < kCategoryCount; ++i)
    if (name == category_name(static_cast<Category>(i)))
      return static_cast<Category>(i);
  throw ContractViolation("unknown category '" + name +
                          "' (plane-slab, cylinder, box-frame, sphere-shell)");
}

PointCloud gen_synthetic(Category category, std::int64_t n_points,
                         std::uint64_t seed) {
  require(n_points >= 16, "gen_synthetic needs n_points >= 16");
  Rng rng(seed);
  PointCloud c;
  switch (category) {
    case Category::PlaneSlab:
      c = sample_symmetric(SlabShape::draw(rng), n_points, rng);
      break;
    case Category::Cylinder:
      c = sample_symmetric(CylinderShape::draw(rng), n_points, rng);
      break;
    case Category::BoxFrame:
      c = sample_symmetric(BoxFrameShape::draw(rng), n_points, rng);
      break;
    case Category::SphereShell:
      c = sample_symmetric(SphereShellShape::draw(rng), n_points, rng);
      break;
    default:
      throw ContractViolation("unknown category id");
  }
  c.category = static_cast<int>(category);
  return c;
}

namespace {

Vec3 normalized(const Vec3& v) {
  const real n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  require(n > 0, "degenerate zero viewpoint");
  return {v[0] / n, v[1] / n, v[2] / n};
}

PointCloud take_subset(const PointCloud& cloud,
                       std::vector<std::int64_t> keep_idx) {
  std::sort(keep_idx.begin(), keep_idx.end());
  PointCloud out;
  out.category = cloud.category;
  out.id = cloud.id;
  out.xyz.reserve(keep_idx.size() * 3);
  for (auto i : keep_idx) out.push(cloud.point(i));
  return out;
}

}  // namespace

PointCloud make_partial(const PointCloud& cloud, const Vec3& viewpoint,
                        real keep_fraction, std::uint64_t seed,
                        VisibilityMode mode) {
  (void)seed;
  require(keep_fraction > 0 && keep_fraction <= 1,
          "keep_fraction must be in (0, 1]");
  const std::int64_t n = cloud.size();
  require(n >= 1, "make_partial of empty cloud");
  const auto keep = static_cast<std::int64_t>(
      std::llround(keep_fraction * static_cast<real>(n)));
  require(keep >= 1, "keep_fraction leaves no points");
  const Vec3 v = normalized(viewpoint);

  std::vector<real> facing(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const Vec3 p = cloud.point(i);
    facing[i] = p[0] * v[0] + p[1] * v[1] + p[2] * v[2];
  }

  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  if (mode == VisibilityMode::HalfSpace) {
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
      if (facing[a] != facing[b]) return facing[a] > facing[b];
      return a < b;
    });
  } else {
    // Camera far along the view direction; points that have a closer point in
    // the same angular bin are occluded.
    const Vec3 cam = {2 * v[0], 2 * v[1], 2 * v[2]};
    // orthonormal basis of the view plane
    Vec3 u = std::abs(v[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const real du = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    for (int d = 0; d < 3; ++d) u[d] -= du * v[d];
    u = normalized(u);
    const Vec3 w = {v[1] * u[2] - v[2] * u[1], v[2] * u[0] - v[0] * u[2],
                    v[0] * u[1] - v[1] * u[0]};
    const auto grid = static_cast<std::int64_t>(
        std::max<real>(4, std::ceil(std::sqrt(static_cast<real>(n) / 2.0))));
    std::vector<std::int64_t> bin(static_cast<std::size_t>(n));
    std::vector<real> depth(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      const Vec3 p = cloud.point(i);
      Vec3 d = {p[0] - cam[0], p[1] - cam[1], p[2] - cam[2]};
      depth[i] = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      d = normalized(d);
      const real bu = d[0] * u[0] + d[1] * u[1] + d[2] * u[2];
      const real bw = d[0] * w[0] + d[1] * w[1] + d[2] * w[2];
      // directions fall within ~15 degrees of -v; quantize the tangent plane
      const auto qu = std::clamp<std::int64_t>(
          static_cast<std::int64_t>((bu + 0.35) / 0.7 * static_cast<real>(grid)),
          0, grid - 1);
      const auto qw = std::clamp<std::int64_t>(
          static_cast<std::int64_t>((bw + 0.35) / 0.7 * static_cast<real>(grid)),
          0, grid - 1);
      bin[i] = qu * grid + qw;
    }
    std::vector<std::int64_t> occluders(static_cast<std::size_t>(n), 0);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j)
        if (bin[i] == bin[j] && depth[j] < depth[i]) ++occluders[i];
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
      if (occluders[a] != occluders[b]) return occluders[a] < occluders[b];
      if (facing[a] != facing[b]) return facing[a] > facing[b];
      return a < b;
    });
  }

  order.resize(static_cast<std::size_t>(keep));
  return take_subset(cloud, std::move(order));
}

PointCloud occlude(const PointCloud& partial, real p_percent,
                   std::uint64_t seed) {
  require(p_percent > 0 && p_percent < 100,
          "occlusion percentage must be strictly between 0 and 100");
  const std::int64_t n = partial.size();
  const auto k_remove = static_cast<std::int64_t>(
      std::llround(static_cast<real>(n) * p_percent / 100.0));
  require(n - k_remove >= 1, "occlusion would remove every point");

  Rng rng(seed);
  const std::int64_t anchor = rng.index(n);
  const Vec3 ap = partial.point(anchor);

  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<real> d2(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const Vec3 p = partial.point(i);
    const real dx = p[0] - ap[0], dy = p[1] - ap[1], dz = p[2] - ap[2];
    d2[i] = dx * dx + dy * dy + dz * dz;
  }
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    if (d2[a] != d2[b]) return d2[a] < d2[b];
    return a < b;
  });
  std::vector<std::int64_t> keep(order.begin() + k_remove, order.end());
  return take_subset(partial, std::move(keep));
}

}  // namespace pcc
