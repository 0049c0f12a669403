#include "pcc/losses.hpp"

#include <cmath>
#include <iostream>

#include <Eigen/Dense>

#include "pcc/geometry.hpp"

namespace pcc {

namespace {

void check_cloud_tensor(const Tensor& t, const char* which) {
  require(t.defined() && t.shape().size() == 2 && t.shape()[1] == 3 &&
              t.shape()[0] >= 1,
          std::string("chamfer: ") + which + " must be a non-empty Nx3 tensor");
}

// mean over points of the distance term in one direction, as a graph scalar
Tensor directed_term(const Tensor& from, const Tensor& to,
                     ChamferVariant variant) {
  const auto nn = nearest_neighbor(from.values(), to.values());
  Tensor matched = gather_rows(to, nn.index);
  Tensor diff = sub(from, matched);
  // |d|^2 per point = 3 * mean over coordinates of d^2
  Tensor d2 = mul(mean_axis(square(diff), 1), 3.0);
  if (variant == ChamferVariant::CdP) d2 = sqrt_elem(d2);
  return mean_axis(d2, 0);
}

}  // namespace

LossValue chamfer(const Tensor& x, const Tensor& y, ChamferVariant variant) {
  check_cloud_tensor(x, "x");
  check_cloud_tensor(y, "y");
  Tensor fwd = directed_term(x, y, variant);
  Tensor bwd = directed_term(y, x, variant);
  Tensor total = add(fwd, bwd);
  if (variant == ChamferVariant::CdP) total = mul(total, 0.5);
  LossValue out;
  out.value = total;
  out.components["forward"] = fwd.item();
  out.components["backward"] = bwd.item();
  return out;
}

LossValue reconstruction_loss(const Tensor& coarse, const Tensor& fine,
                              const Tensor& gt, real lambda_f) {
  require(lambda_f >= 0, "lambda_f must be non-negative");
  LossValue cd_coarse = chamfer(coarse, gt, ChamferVariant::CdP);
  LossValue cd_fine = chamfer(fine, gt, ChamferVariant::CdP);
  LossValue out;
  out.value = add(cd_coarse.value, mul(cd_fine.value, lambda_f));
  out.components["rec_coarse"] = cd_coarse.item();
  out.components["rec_fine"] = cd_fine.item();
  out.components["lambda_f"] = lambda_f;
  return out;
}

LossValue lsgan_generator(const Tensor& d_fake) {
  require(d_fake.defined() && d_fake.numel() >= 1, "empty score tensor");
  Tensor flat = reshape(d_fake, {d_fake.numel()});
  Tensor term = mul(mean_axis(square(add(flat, -1.0)), 0), 0.5);
  LossValue out;
  out.value = term;
  out.components["gan_g"] = term.item();
  return out;
}

LossValue lsgan_discriminator(const Tensor& d_fake, const Tensor& d_real) {
  require(d_fake.defined() && d_real.defined(), "undefined score tensor");
  require(d_fake.numel() == d_real.numel(),
          "score length mismatch: " + std::to_string(d_fake.numel()) + " vs " +
              std::to_string(d_real.numel()));
  Tensor fake = reshape(d_fake, {d_fake.numel()});
  Tensor realv = reshape(d_real, {d_real.numel()});
  Tensor fake_term = mean_axis(square(fake), 0);
  Tensor real_term = mean_axis(square(add(realv, -1.0)), 0);
  LossValue out;
  out.value = mul(add(fake_term, real_term), 0.5);
  out.components["d_fake"] = fake_term.item();
  out.components["d_real"] = real_term.item();
  return out;
}

LossValue total_loss(const LossValue& gan, const LossValue& rec, real lambda,
                     real beta) {
  require(lambda >= 0 && beta >= 0, "loss weights must be non-negative");
  LossValue out;
  out.value = add(mul(gan.value, lambda), mul(rec.value, beta));
  out.components = rec.components;
  for (const auto& [k, v] : gan.components) out.components[k] = v;
  out.components["lambda"] = lambda;
  out.components["beta"] = beta;
  return out;
}

GaussianStats gaussian_stats(const std::vector<real>& features,
                             std::int64_t rows, std::int64_t cols) {
  require(rows >= 1 && cols >= 1, "gaussian_stats needs a non-empty matrix");
  require(static_cast<std::int64_t>(features.size()) == rows * cols,
          "gaussian_stats size mismatch");
  GaussianStats s;
  s.dim = cols;
  s.samples = rows;
  s.mean.assign(static_cast<std::size_t>(cols), 0.0);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) s.mean[c] += features[r * cols + c];
  for (auto& m : s.mean) m /= static_cast<real>(rows);
  s.cov.assign(static_cast<std::size_t>(cols * cols), 0.0);
  if (rows > 1) {
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t i = 0; i < cols; ++i) {
        const real di = features[r * cols + i] - s.mean[i];
        for (std::int64_t j = i; j < cols; ++j)
          s.cov[i * cols + j] += di * (features[r * cols + j] - s.mean[j]);
      }
    const real inv = 1.0 / static_cast<real>(rows - 1);
    for (std::int64_t i = 0; i < cols; ++i)
      for (std::int64_t j = i; j < cols; ++j) {
        s.cov[i * cols + j] *= inv;
        s.cov[j * cols + i] = s.cov[i * cols + j];
      }
  }
  return s;
}

real fpd(const std::vector<real>& features_x, std::int64_t rows_x,
         const std::vector<real>& features_y, std::int64_t rows_y,
         std::int64_t cols) {
  for (real v : features_x)
    require(std::isfinite(v), "non-finite feature value");
  for (real v : features_y)
    require(std::isfinite(v), "non-finite feature value");
  if (rows_x < cols + 1 || rows_y < cols + 1)
    std::cerr << "[fpd] warning: sample count (" << rows_x << ", " << rows_y
              << ") below feature dim + 1 (" << cols + 1
              << "); covariance estimate is rank-deficient\n";

  const GaussianStats sx = gaussian_stats(features_x, rows_x, cols);
  const GaussianStats sy = gaussian_stats(features_y, rows_y, cols);

  real mean_term = 0;
  for (std::int64_t c = 0; c < cols; ++c) {
    const real d = sx.mean[c] - sy.mean[c];
    mean_term += d * d;
  }

  using Mat = Eigen::MatrixXd;
  Mat a = Eigen::Map<const Mat>(sx.cov.data(), cols, cols);
  Mat b = Eigen::Map<const Mat>(sy.cov.data(), cols, cols);
  const Mat prod = a * b;
  const Mat sym = 0.5 * (prod + prod.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  real root_trace = 0;
  for (std::int64_t i = 0; i < cols; ++i) {
    const real ev = eig.eigenvalues()[i];
    if (ev > 0) root_trace += std::sqrt(ev);
  }
  return mean_term + a.trace() + b.trace() - 2.0 * root_trace;
}

}  // namespace pcc
