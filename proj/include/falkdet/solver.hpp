#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "falkdet/kernel.hpp"

namespace falkdet {

struct SolverConfig {
  int max_cg_iterations = 30;
  double cg_tolerance = 1e-7;
  double cholesky_jitter = -1.0;  // < 0: auto, 1e-10 * trace(K_MM)/M
  int tile_rows = 256;
};

struct TrainMeta {
  int n = 0;
  int cg_iterations = 0;
  double final_residual = 0.0;  // relative preconditioned residual
  bool converged = true;
  std::vector<double> residual_trace;  // one entry per CG iteration
};

struct FalkonModel {
  Eigen::MatrixXf centers;  // M x d
  Eigen::VectorXd alpha;    // M
  GaussianKernelParams kernel{1.0};
  double lambda = 1e-6;
  TrainMeta meta;

  int m() const { return static_cast<int>(centers.rows()); }
  int dim() const { return static_cast<int>(centers.cols()); }
};

// Accounting hook for the solver's memory contract: every sizeable buffer the
// solver requests is reported here before allocation.
namespace alloc_stats {
void reset();
void note(std::size_t bytes);
std::size_t max_single_allocation();
}  // namespace alloc_stats

// Dense KRR oracle: solves (K_nn + lambda*n*I) alpha = y. Small n only.
Eigen::VectorXd krr_direct_full(const Eigen::Ref<const Eigen::MatrixXf>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                double lambda, const GaussianKernelParams& kernel);

// Dense Nystrom oracle: solves (K_nM^T K_nM + lambda*n*K_MM) alpha = K_nM^T y.
Eigen::VectorXd nystrom_krr_direct(const Eigen::Ref<const Eigen::MatrixXf>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& y,
                                   const Eigen::Ref<const Eigen::MatrixXf>& centers,
                                   double lambda, const GaussianKernelParams& kernel);

// FALKON preconditioner: B = (1/sqrt(n)) T^-1 A^-1 with T = chol(K_MM + jitter I),
// A = chol(T T^T / M + lambda I). Both factors stored upper-triangular.
struct FalkonPreconditioner {
  Eigen::MatrixXd T;
  Eigen::MatrixXd A;
  double inv_sqrt_n = 1.0;
  double jitter_used = 0.0;

  Eigen::VectorXd apply_B(const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_Bt(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd dense_B() const;  // for oracle tests
};

FalkonPreconditioner build_preconditioner(const Eigen::MatrixXd& kmm, double lambda,
                                          int n, double jitter);

// The preconditioned normal-equation operator v -> B^T (K_nM^T K_nM + lambda n K_MM) B v,
// streamed over row tiles of X. Unit-testable against a dense assembly.
Eigen::VectorXd apply_preconditioned_operator(
    const Eigen::Ref<const Eigen::MatrixXf>& X,
    const Eigen::Ref<const Eigen::MatrixXf>& centers, const Eigen::MatrixXd& kmm,
    double lambda, const GaussianKernelParams& kernel,
    const FalkonPreconditioner& prec, const Eigen::VectorXd& v, int tile_rows = 256);

FalkonModel falkon_train(const Eigen::Ref<const Eigen::MatrixXf>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::Ref<const Eigen::MatrixXf>& centers,
                         double lambda, const GaussianKernelParams& kernel,
                         const SolverConfig& config = {});

Eigen::VectorXd falkon_predict(const FalkonModel& model,
                               const Eigen::Ref<const Eigen::MatrixXf>& queries,
                               int tile_rows = 256);

}  // namespace falkdet
