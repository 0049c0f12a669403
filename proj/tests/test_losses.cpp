#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pcc/losses.hpp"
#include "test_util.hpp"

using namespace pcc;
using pcc::test::brute_chamfer_p;
using pcc::test::brute_chamfer_t;
using pcc::test::brute_nearest;
using pcc::test::random_cloud;
using pcc::test::random_values;

namespace {

// smallest gap between best and runner-up squared NN distance, both ways;
// finite differences are unreliable when an assignment flip is this close
real nn_assignment_margin(const PointCloud& x, const PointCloud& y) {
  auto one_way = [](const PointCloud& from, const PointCloud& to) {
    real margin = std::numeric_limits<real>::infinity();
    for (std::int64_t i = 0; i < from.size(); ++i) {
      real best = std::numeric_limits<real>::infinity(), second = best;
      for (std::int64_t j = 0; j < to.size(); ++j) {
        const Vec3 a = from.point(i), b = to.point(j);
        const real dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
        const real d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < best) {
          second = best;
          best = d2;
        } else if (d2 < second) {
          second = d2;
        }
      }
      if (to.size() > 1) margin = std::min(margin, second - best);
      margin = std::min(margin, best);  // sqrt kink at exact coincidence
    }
    return margin;
  };
  return std::min(one_way(x, y), one_way(y, x));
}

struct DiagonalFeatures {
  std::vector<real> data;  // rows x cols with exact mean/diagonal covariance
  std::vector<real> mean;
  std::vector<real> sigma;
};

// Rows = mean + U diag(sigma * sqrt(M-1)) with orthonormal zero-sum columns,
// so the sample mean and the (unbiased) sample covariance are exact.
DiagonalFeatures make_diagonal_features(Rng& rng, std::int64_t rows,
                                        std::int64_t cols) {
  DiagonalFeatures out;
  std::vector<std::vector<real>> basis;
  for (std::int64_t c = 0; c < cols; ++c) {
    std::vector<real> v;
    for (;;) {
      v = random_values(rng, rows);
      real mean = 0;
      for (real x : v) mean += x;
      mean /= static_cast<real>(rows);
      for (auto& x : v) x -= mean;
      for (const auto& prev : basis) {
        real dot = 0;
        for (std::int64_t r = 0; r < rows; ++r) dot += v[r] * prev[r];
        for (std::int64_t r = 0; r < rows; ++r) v[r] -= dot * prev[r];
      }
      real norm2 = 0;
      for (real x : v) norm2 += x * x;
      if (norm2 > 1e-8) {
        const real inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
        break;
      }
    }
    basis.push_back(std::move(v));
  }
  out.mean = random_values(rng, cols, -2, 2);
  out.sigma = random_values(rng, cols, 0.2, 1.5);
  out.data.assign(static_cast<std::size_t>(rows * cols), 0.0);
  const real scale = std::sqrt(static_cast<real>(rows - 1));
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c)
      out.data[r * cols + c] =
          out.mean[c] + out.sigma[c] * scale * basis[c][r];
  return out;
}

}  // namespace

TEST_CASE("chamfer of identical clouds is zero in both variants") {
  Rng rng(1);
  const PointCloud c = random_cloud(rng, 32);
  Tensor t = cloud_tensor(c);
  CHECK(chamfer(t, t, ChamferVariant::CdT).item() == 0.0);
  CHECK(chamfer(t, t, ChamferVariant::CdP).item() == 0.0);
}

TEST_CASE("single-point clouds: CD-T = 2, CD-P = 1 at unit separation") {
  Tensor x = Tensor::constant({1, 3}, {0, 0, 0});
  Tensor y = Tensor::constant({1, 3}, {1, 0, 0});
  CHECK(chamfer(x, y, ChamferVariant::CdT).item() == doctest::Approx(2.0));
  CHECK(chamfer(x, y, ChamferVariant::CdP).item() == doctest::Approx(1.0));
}

TEST_CASE("chamfer equals the brute-force double loop within 1e-10") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud a = random_cloud(rng, 64);
    const PointCloud b = random_cloud(rng, 64);
    const real cd_t = chamfer(cloud_tensor(a), cloud_tensor(b),
                              ChamferVariant::CdT).item();
    const real cd_p = chamfer(cloud_tensor(a), cloud_tensor(b),
                              ChamferVariant::CdP).item();
    CHECK(std::abs(cd_t - brute_chamfer_t(a.xyz, b.xyz)) <= 1e-10);
    CHECK(std::abs(cd_p - brute_chamfer_p(a.xyz, b.xyz)) <= 1e-10);
  }
}

TEST_CASE("chamfer is symmetric, exactly") {
  Rng rng(3);
  const PointCloud a = random_cloud(rng, 40);
  const PointCloud b = random_cloud(rng, 25);
  for (auto variant : {ChamferVariant::CdT, ChamferVariant::CdP}) {
    const real xy = chamfer(cloud_tensor(a), cloud_tensor(b), variant).item();
    const real yx = chamfer(cloud_tensor(b), cloud_tensor(a), variant).item();
    CHECK(xy == yx);
  }
}

TEST_CASE("CD-T vanishes exactly when the clouds are mutual subsets") {
  Rng rng(4);
  PointCloud a = random_cloud(rng, 20);
  PointCloud b = a;
  // b = a plus duplicates of a's points: both are subsets of each other
  for (int i = 0; i < 5; ++i) b.push(a.point(i));
  CHECK(chamfer(cloud_tensor(a), cloud_tensor(b), ChamferVariant::CdT).item() ==
        0.0);
  b.push({0.9, 0.9, 0.9});
  CHECK(chamfer(cloud_tensor(a), cloud_tensor(b), ChamferVariant::CdT).item() >
        0.0);
}

TEST_CASE("chamfer rejects empty or mis-shaped inputs") {
  Tensor bad = Tensor::zeros({3, 2});
  Tensor ok = Tensor::zeros({3, 3});
  CHECK_THROWS_AS(chamfer(bad, ok, ChamferVariant::CdT), ContractViolation);
}

TEST_CASE("chamfer gradients match finite differences (both variants)") {
  Rng rng(5);
  for (auto variant : {ChamferVariant::CdT, ChamferVariant::CdP}) {
    int done = 0;
    std::uint64_t salt = 0;
    while (done < 4) {
      Rng local(rng.raw() + salt++);
      const PointCloud a = random_cloud(local, 16);
      const PointCloud b = random_cloud(local, 16);
      if (nn_assignment_margin(a, b) < 1e-3) continue;  // FD-invalid region
      Tensor x = Tensor::param({16, 3}, a.xyz);
      Tensor y = Tensor::param({16, 3}, b.xyz);
      auto eval = [&] { return chamfer(x, y, variant).value; };
      std::vector<Tensor> params{x, y};
      const auto report = grad_check(eval, params, 1e-5, 1e-4);
      CHECK(report.pass());
      CHECK(report.checked == 96);
      ++done;
    }
  }
}

TEST_CASE("reconstruction loss composes CD-P terms") {
  Rng rng(6);
  const PointCloud q = random_cloud(rng, 24);
  Tensor gt = cloud_tensor(q);
  SUBCASE("zero when coarse = fine = gt") {
    LossValue lv = reconstruction_loss(gt, gt, gt, 0.7);
    CHECK(lv.item() == 0.0);
  }
  SUBCASE("lambda_f = 0 drops the fine term") {
    const PointCloud c = random_cloud(rng, 8);
    const PointCloud f = random_cloud(rng, 32);
    LossValue lv = reconstruction_loss(cloud_tensor(c), cloud_tensor(f), gt, 0);
    LossValue coarse_only = chamfer(cloud_tensor(c), gt, ChamferVariant::CdP);
    CHECK(lv.item() == doctest::Approx(coarse_only.item()).epsilon(1e-15));
  }
  SUBCASE("lambda_f = 1 on hand-built one-point clouds") {
    Tensor coarse = Tensor::constant({1, 3}, {0, 0, 0});
    Tensor fine = Tensor::constant({1, 3}, {0, 0, 2});
    Tensor target = Tensor::constant({1, 3}, {1, 0, 0});
    // CD-P(coarse, gt) = 1; CD-P(fine, gt) = sqrt(5)
    LossValue lv = reconstruction_loss(coarse, fine, target, 1.0);
    CHECK(lv.item() == doctest::Approx(1.0 + std::sqrt(5.0)).epsilon(1e-12));
    CHECK(lv.components.at("rec_coarse") == doctest::Approx(1.0));
    CHECK(lv.components.at("rec_fine") ==
          doctest::Approx(std::sqrt(5.0)));
  }
  SUBCASE("negative lambda_f is rejected") {
    CHECK_THROWS_AS(reconstruction_loss(gt, gt, gt, -0.1), ContractViolation);
  }
}

TEST_CASE("LS-GAN generator loss hits its anchors") {
  CHECK(lsgan_generator(Tensor::constant({4}, {1, 1, 1, 1})).item() == 0.0);
  CHECK(lsgan_generator(Tensor::constant({3}, {0, 0, 0})).item() ==
        doctest::Approx(0.5));
  CHECK(lsgan_generator(Tensor::constant({2}, {0, 1})).item() ==
        doctest::Approx(0.25));
}

TEST_CASE("LS-GAN discriminator loss hits its anchors") {
  auto scores = [](std::vector<real> v) {
    const auto n = static_cast<std::int64_t>(v.size());
    return Tensor::constant({n}, std::move(v));
  };
  CHECK(lsgan_discriminator(scores({0, 0}), scores({1, 1})).item() == 0.0);
  CHECK(lsgan_discriminator(scores({1, 1}), scores({0, 0})).item() ==
        doctest::Approx(1.0));
  CHECK(lsgan_discriminator(scores({0.5}), scores({0.5})).item() ==
        doctest::Approx(0.25));
  CHECK_THROWS_AS(lsgan_discriminator(scores({1, 2}), scores({1})),
                  ContractViolation);
}

TEST_CASE("LS-GAN losses are minimized exactly at their targets") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = random_values(rng, 6, -2, 2);
    Tensor s = Tensor::constant({6}, v);
    const real g = lsgan_generator(s).item();
    CHECK(g >= 0.0);
    const bool all_one = std::all_of(v.begin(), v.end(),
                                     [](real x) { return x == 1.0; });
    if (!all_one) CHECK(g > 0.0);
  }
}

TEST_CASE("total loss weights components per the schedule defaults") {
  LossValue gan;
  gan.value = Tensor::scalar(0.5);
  LossValue rec;
  rec.value = Tensor::scalar(0.01);
  CHECK(total_loss(gan, rec, 1.0, 200.0).item() == doctest::Approx(2.5));
  CHECK(total_loss(gan, rec, 0.0, 200.0).item() == doctest::Approx(2.0));
  CHECK_THROWS_AS(total_loss(gan, rec, -1.0, 1.0), ContractViolation);
}

TEST_CASE("fpd of a set against itself is ~0") {
  Rng rng(8);
  const auto feats = random_values(rng, 40 * 6);
  const real v = fpd(feats, 40, feats, 40, 6);
  CHECK(v <= 1e-6);
  CHECK(v >= -1e-6);
}

TEST_CASE("fpd matches the 1-D closed form") {
  Rng rng(9);
  const auto fx = make_diagonal_features(rng, 24, 1);
  const auto fy = make_diagonal_features(rng, 30, 1);
  const real expect = (fx.mean[0] - fy.mean[0]) * (fx.mean[0] - fy.mean[0]) +
                      (fx.sigma[0] - fy.sigma[0]) * (fx.sigma[0] - fy.sigma[0]);
  CHECK(fpd(fx.data, 24, fy.data, 30, 1) ==
        doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("fpd matches the per-dimension closed form for diagonal Gaussians") {
  Rng rng(10);
  for (std::int64_t cols : {2, 5, 8}) {
    const auto fx = make_diagonal_features(rng, 40, cols);
    const auto fy = make_diagonal_features(rng, 36, cols);
    real expect = 0;
    for (std::int64_t c = 0; c < cols; ++c) {
      const real dm = fx.mean[c] - fy.mean[c];
      const real ds = fx.sigma[c] - fy.sigma[c];
      expect += dm * dm + ds * ds;
    }
    const real got = fpd(fx.data, 40, fy.data, 36, cols);
    CHECK(std::abs(got - expect) <= 1e-5);
  }
}

TEST_CASE("fpd rejects non-finite features") {
  std::vector<real> bad{1, std::numeric_limits<real>::quiet_NaN(), 3, 4};
  std::vector<real> ok{1, 2, 3, 4};
  CHECK_THROWS_AS(fpd(bad, 2, ok, 2, 2), ContractViolation);
}

TEST_CASE("gaussian stats are symmetric and consistent") {
  Rng rng(11);
  const auto feats = random_values(rng, 50 * 4);
  const auto s = gaussian_stats(feats, 50, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(s.cov[i * 4 + j] == s.cov[j * 4 + i]);
  // diagonal entries are variances (non-negative)
  for (int i = 0; i < 4; ++i) CHECK(s.cov[i * 4 + i] >= 0.0);
}
