#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace falkdet {

struct GaussianKernelParams {
  double sigma;

  explicit GaussianKernelParams(double sigma_) : sigma(sigma_) {
    if (!(sigma > 0.0))
      throw std::invalid_argument("GaussianKernelParams: sigma must be > 0");
  }
};

// K(x, y) = exp(-||x - y||^2 / (2 sigma^2))
double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const GaussianKernelParams& params);

// Dense kernel block between two point sets (one row per point).
// Evaluated in row tiles of at most tile_rows rows of A so peak scratch
// memory is bounded by the tile area. When A and B alias the same storage
// the result gets an exact unit diagonal and is symmetrized.
Eigen::MatrixXd kernel_block(const Eigen::Ref<const Eigen::MatrixXd>& A,
                             const Eigen::Ref<const Eigen::MatrixXd>& B,
                             const GaussianKernelParams& params,
                             int tile_rows = 256);

// Streaming building block used by the solver: fills `out` (rows x B.rows())
// with kernel values between the given rows of A and all rows of B.
// `b_sq_norms` caches the per-row squared norms of B.
void kernel_tile_into(const Eigen::Ref<const Eigen::MatrixXd>& A_tile,
                      const Eigen::Ref<const Eigen::MatrixXd>& B,
                      const Eigen::Ref<const Eigen::VectorXd>& b_sq_norms,
                      const GaussianKernelParams& params,
                      Eigen::MatrixXd& out);

}  // namespace falkdet
