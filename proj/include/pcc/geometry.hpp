#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcc/common.hpp"
#include "pcc/pointcloud.hpp"

namespace pcc {

struct IndexSelection {
  std::vector<std::int64_t> indices;
  std::int64_t source_size = 0;
};

// Greedy max-min selection. First pick is start_index; each later pick
// maximizes the minimum distance to everything picked so far, ties to the
// lowest index. Truncating the result to k' < k equals running with k'.
IndexSelection farthest_point_sample(std::span<const real> xyz, std::int64_t k,
                                     std::int64_t start_index = 0);
IndexSelection farthest_point_sample(const PointCloud& c, std::int64_t k,
                                     std::int64_t start_index = 0);

struct NnResult {
  std::vector<std::int64_t> index;  // into `to`, ties to the lowest index
  std::vector<real> distance;       // Euclidean
};

// Exact nearest neighbor of every `from` point within `to`, via a uniform
// spatial hash grid. Agrees with an O(nm) scan bit-for-bit, including the
// tie rule.
NnResult nearest_neighbor(std::span<const real> from_xyz,
                          std::span<const real> to_xyz);
NnResult nearest_neighbor(const PointCloud& from, const PointCloud& to);

struct PatchGroup {
  std::int64_t seed = 0;                // row index of the seed point
  std::vector<std::int64_t> members;    // exactly max_samples entries
  std::int64_t in_radius = 0;           // how many are genuine (not padding)
};

// Per seed, up to max_samples points with distance <= radius, in ascending
// index order, padded with the seed index.
std::vector<PatchGroup> ball_query(std::span<const real> xyz,
                                   std::span<const std::int64_t> seeds,
                                   real radius, std::int64_t max_samples);

// (x, y, z) -> (x, y, -z), order preserved; exact involution.
PointCloud mirror_xy(const PointCloud& c);
void mirror_xy_inplace(std::span<real> xyz);

// 2D codes distinguishing the copies made by tile-rows: copy c of every point
// gets the c-th vertex of a diagonal lattice in [-g, g]^2. Row layout matches
// tile-rows (row i*n_copies + c belongs to copy c).
std::vector<real> grid_codes(std::int64_t n_points, std::int64_t n_copies,
                             real g = 0.05);

}  // namespace pcc
