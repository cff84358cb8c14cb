#include "falkdet/kernel.hpp"

#include <algorithm>

namespace falkdet {

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const GaussianKernelParams& params) {
  if (x.size() != y.size())
    throw std::invalid_argument("gaussian_kernel: dimension mismatch");
  if (x.size() < 1)
    throw std::invalid_argument("gaussian_kernel: empty vectors");
  const double d2 = (x - y).squaredNorm();
  return std::exp(-d2 / (2.0 * params.sigma * params.sigma));
}

void kernel_tile_into(const Eigen::Ref<const Eigen::MatrixXd>& A_tile,
                      const Eigen::Ref<const Eigen::MatrixXd>& B,
                      const Eigen::Ref<const Eigen::VectorXd>& b_sq_norms,
                      const GaussianKernelParams& params,
                      Eigen::MatrixXd& out) {
  const Eigen::Index r = A_tile.rows();
  const Eigen::Index c = B.rows();
  out.resize(r, c);
  // ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b, clamped at 0 against rounding
  out.noalias() = A_tile * B.transpose();
  const Eigen::VectorXd a_sq = A_tile.rowwise().squaredNorm();
  const double inv = -1.0 / (2.0 * params.sigma * params.sigma);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) {
      const double d2 = std::max(0.0, a_sq(i) + b_sq_norms(j) - 2.0 * out(i, j));
      out(i, j) = std::exp(inv * d2);
    }
}

Eigen::MatrixXd kernel_block(const Eigen::Ref<const Eigen::MatrixXd>& A,
                             const Eigen::Ref<const Eigen::MatrixXd>& B,
                             const GaussianKernelParams& params,
                             int tile_rows) {
  if (A.cols() != B.cols())
    throw std::invalid_argument("kernel_block: dimension mismatch");
  if (tile_rows < 1) tile_rows = 1;
  const bool self = A.data() == B.data() && A.rows() == B.rows() &&
                    A.outerStride() == B.outerStride();

  Eigen::MatrixXd K(A.rows(), B.rows());
  const Eigen::VectorXd b_sq = B.rowwise().squaredNorm();
  Eigen::MatrixXd tile;
  for (Eigen::Index r0 = 0; r0 < A.rows(); r0 += tile_rows) {
    const Eigen::Index nr = std::min<Eigen::Index>(tile_rows, A.rows() - r0);
    kernel_tile_into(A.middleRows(r0, nr), B, b_sq, params, tile);
    K.middleRows(r0, nr) = tile;
  }
  if (self) {
    K = ((K + K.transpose()) * 0.5).eval();
    K.diagonal().setOnes();
  }
  return K;
}

}  // namespace falkdet
