#include "pcc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcc {

namespace {

inline real dist2(const real* a, const real* b) {
  const real dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

inline std::int64_t npoints(std::span<const real> xyz) {
  require(xyz.size() % 3 == 0, "flat xyz length must be a multiple of 3");
  return static_cast<std::int64_t>(xyz.size()) / 3;
}

}  // namespace

IndexSelection farthest_point_sample(std::span<const real> xyz, std::int64_t k,
                                     std::int64_t start_index) {
  const std::int64_t n = npoints(xyz);
  require(n >= 1, "farthest_point_sample on empty cloud");
  require(k >= 1 && k <= n, "farthest_point_sample k=" + std::to_string(k) +
                                " out of range for n=" + std::to_string(n));
  require(start_index >= 0 && start_index < n,
          "farthest_point_sample start index out of range");

  IndexSelection sel;
  sel.source_size = n;
  sel.indices.reserve(static_cast<std::size_t>(k));
  std::vector<real> min_d2(static_cast<std::size_t>(n),
                           std::numeric_limits<real>::infinity());
  std::int64_t cur = start_index;
  sel.indices.push_back(cur);
  for (std::int64_t picked = 1; picked < k; ++picked) {
    const real* p = xyz.data() + 3 * cur;
    std::int64_t best = -1;
    real best_d = -1.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const real d = std::min(min_d2[i], dist2(xyz.data() + 3 * i, p));
      min_d2[i] = d;
      if (d > best_d) {  // strict: ties keep the lowest index
        best_d = d;
        best = i;
      }
    }
    cur = best;
    sel.indices.push_back(cur);
  }
  return sel;
}

IndexSelection farthest_point_sample(const PointCloud& c, std::int64_t k,
                                     std::int64_t start_index) {
  return farthest_point_sample(std::span<const real>(c.xyz), k, start_index);
}

namespace {

// Uniform grid over the `to` cloud with CSR cell storage.
struct HashGrid {
  real origin[3];
  real cell = 1.0;
  std::int64_t dims[3] = {1, 1, 1};
  std::vector<std::int64_t> cell_start;  // size ncells+1
  std::vector<std::int64_t> entries;     // point indices, ascending per cell

  std::int64_t cell_of(const real* p) const {
    std::int64_t c[3];
    for (int d = 0; d < 3; ++d) {
      auto v = static_cast<std::int64_t>(std::floor((p[d] - origin[d]) / cell));
      c[d] = std::clamp<std::int64_t>(v, 0, dims[d] - 1);
    }
    return (c[0] * dims[1] + c[1]) * dims[2] + c[2];
  }

  void coords_of(const real* p, std::int64_t c[3]) const {
    for (int d = 0; d < 3; ++d) {
      auto v = static_cast<std::int64_t>(std::floor((p[d] - origin[d]) / cell));
      c[d] = std::clamp<std::int64_t>(v, 0, dims[d] - 1);
    }
  }
};

HashGrid build_grid(std::span<const real> xyz) {
  const std::int64_t n = static_cast<std::int64_t>(xyz.size()) / 3;
  HashGrid g;
  real lo[3] = {xyz[0], xyz[1], xyz[2]};
  real hi[3] = {xyz[0], xyz[1], xyz[2]};
  for (std::int64_t i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], xyz[3 * i + d]);
      hi[d] = std::max(hi[d], xyz[3 * i + d]);
    }
  real extent = 0;
  for (int d = 0; d < 3; ++d) {
    g.origin[d] = lo[d];
    extent = std::max(extent, hi[d] - lo[d]);
  }
  // target a handful of points per cell; clamp grid dims to keep memory flat
  const real target = std::cbrt(static_cast<real>(n) / 2.0);
  g.cell = extent > 0 ? extent / std::max<real>(1.0, target) : 1.0;
  std::int64_t ncells = 1;
  for (int d = 0; d < 3; ++d) {
    g.dims[d] = extent > 0
                    ? std::clamp<std::int64_t>(
                          static_cast<std::int64_t>((hi[d] - lo[d]) / g.cell) + 1,
                          1, 64)
                    : 1;
    ncells *= g.dims[d];
  }
  // recompute cell so the clamped dims still cover the bbox
  for (int d = 0; d < 3; ++d)
    if (hi[d] - lo[d] > 0)
      g.cell = std::max(g.cell, (hi[d] - lo[d]) / static_cast<real>(g.dims[d]) *
                                    (1.0 + 1e-12));

  std::vector<std::int64_t> count(static_cast<std::size_t>(ncells) + 1, 0);
  std::vector<std::int64_t> cell_of(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    cell_of[i] = g.cell_of(xyz.data() + 3 * i);
    ++count[cell_of[i] + 1];
  }
  for (std::size_t c = 1; c < count.size(); ++c) count[c] += count[c - 1];
  g.cell_start = count;
  g.entries.resize(static_cast<std::size_t>(n));
  std::vector<std::int64_t> fill(g.cell_start.begin(), g.cell_start.end() - 1);
  for (std::int64_t i = 0; i < n; ++i) g.entries[fill[cell_of[i]]++] = i;
  // ascending index order within each cell holds because we filled in order
  return g;
}

// min squared distance from p to the axis-aligned box of cell (ci,cj,ck)
inline real cell_min_dist2(const HashGrid& g, const real* p, std::int64_t ci,
                           std::int64_t cj, std::int64_t ck) {
  real d2 = 0;
  const std::int64_t c[3] = {ci, cj, ck};
  for (int d = 0; d < 3; ++d) {
    const real lo = g.origin[d] + static_cast<real>(c[d]) * g.cell;
    const real hi = lo + g.cell;
    if (p[d] < lo) {
      const real v = lo - p[d];
      d2 += v * v;
    } else if (p[d] > hi) {
      const real v = p[d] - hi;
      d2 += v * v;
    }
  }
  return d2;
}

}  // namespace

NnResult nearest_neighbor(std::span<const real> from_xyz,
                          std::span<const real> to_xyz) {
  const std::int64_t n = npoints(from_xyz);
  const std::int64_t m = npoints(to_xyz);
  require(n >= 1 && m >= 1, "nearest_neighbor on empty cloud");

  const HashGrid grid = build_grid(to_xyz);
  NnResult out;
  out.index.resize(static_cast<std::size_t>(n));
  out.distance.resize(static_cast<std::size_t>(n));

  for (std::int64_t qi = 0; qi < n; ++qi) {
    const real* q = from_xyz.data() + 3 * qi;
    std::int64_t qc[3];
    grid.coords_of(q, qc);
    real best_d2 = std::numeric_limits<real>::infinity();
    std::int64_t best = -1;

    const std::int64_t max_ring =
        std::max({grid.dims[0], grid.dims[1], grid.dims[2]});
    for (std::int64_t ring = 0; ring < max_ring; ++ring) {
      // Lower bound for any cell in this ring. `<=` comparison keeps the scan
      // going when an equal-distance candidate with a lower index could still
      // appear in a farther cell.
      if (best >= 0) {
        const real lb = static_cast<real>(ring - 1) * grid.cell;
        if (lb > 0 && lb * lb > best_d2) break;
      }
      bool any_cell = false;
      const std::int64_t i0 = qc[0] - ring, i1 = qc[0] + ring;
      const std::int64_t j0 = qc[1] - ring, j1 = qc[1] + ring;
      const std::int64_t k0 = qc[2] - ring, k1 = qc[2] + ring;
      for (std::int64_t ci = std::max<std::int64_t>(0, i0);
           ci <= std::min(grid.dims[0] - 1, i1); ++ci) {
        for (std::int64_t cj = std::max<std::int64_t>(0, j0);
             cj <= std::min(grid.dims[1] - 1, j1); ++cj) {
          for (std::int64_t ck = std::max<std::int64_t>(0, k0);
               ck <= std::min(grid.dims[2] - 1, k1); ++ck) {
            // shell only: skip interior cells already visited
            const bool on_shell = ci == i0 || ci == i1 || cj == j0 ||
                                  cj == j1 || ck == k0 || ck == k1;
            if (!on_shell) continue;
            any_cell = true;
            if (best >= 0 && cell_min_dist2(grid, q, ci, cj, ck) > best_d2)
              continue;
            const std::int64_t cell = (ci * grid.dims[1] + cj) * grid.dims[2] + ck;
            for (std::int64_t e = grid.cell_start[cell];
                 e < grid.cell_start[cell + 1]; ++e) {
              const std::int64_t idx = grid.entries[e];
              const real d2 = dist2(q, to_xyz.data() + 3 * idx);
              // `best < 0` accepts the first candidate even if the squared
              // distance overflowed to inf; the caller's ops surface the
              // numeric fault with better context
              if (best < 0 || d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                best_d2 = d2;
                best = idx;
              }
            }
          }
        }
      }
      if (!any_cell) break;  // rings are exhausted; later ones are empty too
    }
    out.index[qi] = best;
    out.distance[qi] = std::sqrt(best_d2);
  }
  return out;
}

NnResult nearest_neighbor(const PointCloud& from, const PointCloud& to) {
  return nearest_neighbor(std::span<const real>(from.xyz),
                          std::span<const real>(to.xyz));
}

std::vector<PatchGroup> ball_query(std::span<const real> xyz,
                                   std::span<const std::int64_t> seeds,
                                   real radius, std::int64_t max_samples) {
  const std::int64_t n = npoints(xyz);
  require(radius > 0, "ball_query radius must be positive");
  require(max_samples >= 1, "ball_query max_samples must be >= 1");
  const real r2 = radius * radius;
  std::vector<PatchGroup> out;
  out.reserve(seeds.size());
  for (auto s : seeds) {
    require(s >= 0 && s < n, "ball_query seed index out of range");
    PatchGroup g;
    g.seed = s;
    const real* sp = xyz.data() + 3 * s;
    for (std::int64_t i = 0;
         i < n && g.in_radius < max_samples; ++i) {
      if (dist2(xyz.data() + 3 * i, sp) <= r2) {
        g.members.push_back(i);
        ++g.in_radius;
      }
    }
    while (static_cast<std::int64_t>(g.members.size()) < max_samples)
      g.members.push_back(s);
    out.push_back(std::move(g));
  }
  return out;
}

PointCloud mirror_xy(const PointCloud& c) {
  PointCloud out = c;
  mirror_xy_inplace(out.xyz);
  return out;
}

void mirror_xy_inplace(std::span<real> xyz) {
  for (std::size_t i = 2; i < xyz.size(); i += 3) xyz[i] = -xyz[i];
}

std::vector<real> grid_codes(std::int64_t n_points, std::int64_t n_copies,
                             real g) {
  require(n_copies >= 2, "grid_codes needs at least 2 copies");
  require(n_points >= 1, "grid_codes needs at least 1 point");
  std::vector<real> codes(static_cast<std::size_t>(n_points * n_copies * 2));
  std::vector<real> lattice(static_cast<std::size_t>(n_copies));
  for (std::int64_t c = 0; c < n_copies; ++c)
    lattice[c] = -g + 2.0 * g * static_cast<real>(c) /
                          static_cast<real>(n_copies - 1);
  for (std::int64_t i = 0; i < n_points; ++i)
    for (std::int64_t c = 0; c < n_copies; ++c) {
      codes[2 * (i * n_copies + c)] = lattice[c];
      codes[2 * (i * n_copies + c) + 1] = lattice[c];
    }
  return codes;
}

}  // namespace pcc
