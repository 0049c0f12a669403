#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "pcc/geometry.hpp"
#include "test_util.hpp"

using namespace pcc;
using pcc::test::brute_fps;
using pcc::test::brute_nearest;
using pcc::test::random_cloud;

TEST_CASE("fps with k equal to n selects every index") {
  Rng rng(1);
  const PointCloud c = random_cloud(rng, 17);
  const auto sel = farthest_point_sample(c, 17, 3);
  std::set<std::int64_t> unique(sel.indices.begin(), sel.indices.end());
  CHECK(unique.size() == 17);
  CHECK(*unique.begin() == 0);
  CHECK(*unique.rbegin() == 16);
}

TEST_CASE("fps on collinear points follows the greedy hand run") {
  PointCloud c;
  for (int x = 0; x <= 4; ++x) c.push({static_cast<real>(x), 0, 0});
  const auto sel = farthest_point_sample(c, 3, 0);
  CHECK(sel.indices == std::vector<std::int64_t>{0, 4, 2});
}

TEST_CASE("fps equals the independent greedy oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 2 + rng.index(120);
    const auto k = 1 + rng.index(n);
    const auto start = rng.index(n);
    const PointCloud c = random_cloud(rng, n);
    const auto sel = farthest_point_sample(c, k, start);
    CHECK(sel.indices == brute_fps(c.xyz, k, start));
  }
}

TEST_CASE("fps is prefix-greedy") {
  Rng rng(8);
  const PointCloud c = random_cloud(rng, 60);
  const auto full = farthest_point_sample(c, 40, 5);
  const auto head = farthest_point_sample(c, 12, 5);
  for (int i = 0; i < 12; ++i) CHECK(full.indices[i] == head.indices[i]);
}

TEST_CASE("fps spreads at least as well as random subsets on average") {
  Rng rng(9);
  const PointCloud c = random_cloud(rng, 100);
  auto min_pairwise = [&](const std::vector<std::int64_t>& idx) {
    real best = std::numeric_limits<real>::infinity();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        const Vec3 a = c.point(idx[i]), b = c.point(idx[j]);
        const real dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
    return best;
  };
  const auto sel = farthest_point_sample(c, 10, 0);
  const real fps_spread = min_pairwise(sel.indices);
  real random_mean = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    std::set<std::int64_t> pick;
    while (pick.size() < 10) pick.insert(rng.index(100));
    random_mean +=
        min_pairwise(std::vector<std::int64_t>(pick.begin(), pick.end()));
  }
  random_mean /= trials;
  CHECK(fps_spread >= random_mean);
}

TEST_CASE("fps rejects k beyond n") {
  Rng rng(2);
  const PointCloud c = random_cloud(rng, 5);
  CHECK_THROWS_AS(farthest_point_sample(c, 6, 0), ContractViolation);
}

TEST_CASE("nearest neighbor basics and duplicate tie rule") {
  PointCloud a, b;
  a.push({0, 0, 0});
  b.push({1, 0, 0});
  b.push({0, 2, 0});
  const auto nn = nearest_neighbor(a, b);
  CHECK(nn.index[0] == 0);
  CHECK(nn.distance[0] == doctest::Approx(1.0));

  PointCloud dup;
  dup.push({0.25, 0.25, 0.25});
  dup.push({0.25, 0.25, 0.25});
  const auto self = nearest_neighbor(dup, dup);
  CHECK(self.index[0] == 0);
  CHECK(self.index[1] == 0);  // duplicate coordinates map to the lowest index
  CHECK(self.distance[0] == 0.0);
}

TEST_CASE("accelerated nearest neighbor equals brute force exactly") {
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = 1 + rng.index(220);
    const auto m = 1 + rng.index(320);
    const PointCloud a = random_cloud(rng, n);
    PointCloud b = random_cloud(rng, m);
    // inject exact duplicates to exercise the tie rule
    if (m > 4)
      for (int d = 0; d < 3; ++d) b.xyz[3 * (m - 1) + d] = b.xyz[d];
    const auto fast = nearest_neighbor(a, b);
    const auto slow = brute_nearest(a.xyz, b.xyz);
    for (std::int64_t i = 0; i < n; ++i) {
      CHECK(fast.index[i] == slow.index[i]);
      CHECK(fast.distance[i] == doctest::Approx(slow.distance[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("nearest neighbor rejects empty input") {
  PointCloud a, b;
  a.push({0, 0, 0});
  CHECK_THROWS_AS(nearest_neighbor(a, b), ContractViolation);
}

TEST_CASE("ball query with a huge radius fills every group") {
  Rng rng(4);
  const PointCloud c = random_cloud(rng, 20);
  const std::vector<std::int64_t> seeds{0, 5, 19};
  const auto groups = ball_query(c.xyz, seeds, 10.0, 8);
  for (const auto& g : groups) {
    CHECK(g.members.size() == 8);
    CHECK(g.in_radius == 8);  // min(N, max_samples) genuine members
  }
  const auto wide = ball_query(c.xyz, seeds, 10.0, 64);
  for (const auto& g : wide) {
    CHECK(g.in_radius == 20);
    CHECK(g.members.size() == 64);  // padded with the seed
    for (std::size_t i = 20; i < 64; ++i) CHECK(g.members[i] == g.seed);
  }
}

TEST_CASE("ball query with a tiny radius keeps only the seed") {
  PointCloud c;
  c.push({0, 0, 0});
  c.push({1, 0, 0});
  c.push({0, 1, 0});
  const std::vector<std::int64_t> seeds{1};
  const auto groups = ball_query(c.xyz, seeds, 1e-6, 4);
  CHECK(groups[0].in_radius == 1);
  CHECK(groups[0].members == std::vector<std::int64_t>{1, 1, 1, 1});
}

TEST_CASE("ball query membership equals the brute-force distance filter") {
  Rng rng(5);
  const PointCloud c = random_cloud(rng, 150);
  const std::vector<std::int64_t> seeds{0, 10, 77, 149};
  const real radius = 0.2;
  const auto groups = ball_query(c.xyz, seeds, radius, 1000);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    std::vector<std::int64_t> expect;
    const Vec3 sp = c.point(seeds[s]);
    for (std::int64_t i = 0; i < c.size(); ++i) {
      const Vec3 p = c.point(i);
      const real dx = p[0] - sp[0], dy = p[1] - sp[1], dz = p[2] - sp[2];
      if (dx * dx + dy * dy + dz * dz <= radius * radius) expect.push_back(i);
    }
    CHECK(std::vector<std::int64_t>(
              groups[s].members.begin(),
              groups[s].members.begin() + groups[s].in_radius) == expect);
  }
}

TEST_CASE("mirror reflects z and is an exact involution") {
  PointCloud c;
  c.push({1, 2, 3});
  c.push({0.5, -0.25, 0});
  const PointCloud m = mirror_xy(c);
  CHECK(m.point(0)[0] == 1.0);
  CHECK(m.point(0)[1] == 2.0);
  CHECK(m.point(0)[2] == -3.0);
  CHECK(m.point(1)[2] == 0.0);  // z = 0 stays fixed
  const PointCloud mm = mirror_xy(m);
  for (std::size_t i = 0; i < c.xyz.size(); ++i) CHECK(mm.xyz[i] == c.xyz[i]);
}

TEST_CASE("mirror preserves pairwise distances") {
  Rng rng(6);
  const PointCloud c = random_cloud(rng, 40);
  const PointCloud m = mirror_xy(c);
  for (int i = 0; i < 40; ++i)
    for (int j = i + 1; j < 40; ++j) {
      auto d = [](const Vec3& a, const Vec3& b) {
        const real dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
        return std::sqrt(dx * dx + dy * dy + dz * dz);
      };
      CHECK(std::abs(d(c.point(i), c.point(j)) - d(m.point(i), m.point(j))) <=
            1e-12);
    }
}

TEST_CASE("grid codes: two copies sit on the diagonal corners") {
  const auto codes = grid_codes(3, 2, 0.05);
  REQUIRE(codes.size() == 12);
  for (int i = 0; i < 3; ++i) {
    CHECK(codes[2 * (2 * i)] == -0.05);      // copy 0
    CHECK(codes[2 * (2 * i) + 1] == -0.05);
    CHECK(codes[2 * (2 * i + 1)] == 0.05);   // copy 1
    CHECK(codes[2 * (2 * i + 1) + 1] == 0.05);
  }
}

TEST_CASE("grid codes are constant per copy and distinct across copies") {
  const std::int64_t n = 5, copies = 4;
  const auto codes = grid_codes(n, copies, 0.05);
  for (std::int64_t c = 0; c < copies; ++c) {
    const real expect = codes[2 * c];
    for (std::int64_t i = 0; i < n; ++i) {
      CHECK(codes[2 * (i * copies + c)] == expect);
      CHECK(codes[2 * (i * copies + c) + 1] == expect);
    }
    for (std::int64_t c2 = c + 1; c2 < copies; ++c2)
      CHECK(codes[2 * c] != codes[2 * c2]);
  }
  CHECK_THROWS_AS(grid_codes(4, 1), ContractViolation);
}
