#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcc/tensor.hpp"

namespace pcc {

// Scalar graph-connected loss plus named sub-values for logging.
struct LossValue {
  Tensor value;
  std::map<std::string, real> components;
  real item() const { return value.item(); }
};

enum class ChamferVariant { CdT, CdP };

// Bidirectional nearest-neighbor distance between two N x 3 tensors.
//   CD-T: mean_x min_y |x-y|^2 + mean_y min_x |x-y|^2
//   CD-P: (mean_x min_y |x-y| + mean_y min_x |x-y|) / 2
// Backward treats the nearest-neighbor assignment as constant.
LossValue chamfer(const Tensor& x, const Tensor& y, ChamferVariant variant);

// CD-P(coarse, gt) + lambda_f * CD-P(fine, gt)
LossValue reconstruction_loss(const Tensor& coarse, const Tensor& fine,
                              const Tensor& gt, real lambda_f);

// mean over patch scores of (d - 1)^2 / 2
LossValue lsgan_generator(const Tensor& d_fake);
// (mean d_fake^2 + mean (d_real - 1)^2) / 2
LossValue lsgan_discriminator(const Tensor& d_fake, const Tensor& d_real);

// lambda * gan + beta * rec
LossValue total_loss(const LossValue& gan, const LossValue& rec, real lambda,
                     real beta);

struct GaussianStats {
  std::vector<real> mean;               // C
  std::vector<real> cov;                // C x C, row-major, symmetric
  std::int64_t dim = 0;
  std::int64_t samples = 0;
};

// Sample mean and unbiased covariance of M x C feature rows.
GaussianStats gaussian_stats(const std::vector<real>& features,
                             std::int64_t rows, std::int64_t cols);

// Squared 2-Wasserstein distance between Gaussian fits of two feature sets:
// |m1-m2|^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)). The matrix root uses a symmetric
// eigendecomposition of (S1 S2 + S2 S1)/2 with negative eigenvalues clamped
// to zero. Warns to stderr when either sample count is below C+1.
real fpd(const std::vector<real>& features_x, std::int64_t rows_x,
         const std::vector<real>& features_y, std::int64_t rows_y,
         std::int64_t cols);

}  // namespace pcc
