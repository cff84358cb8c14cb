#include "falkdet/solver.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace falkdet {

namespace alloc_stats {
namespace {
std::atomic<std::size_t> g_max{0};
}
void reset() { g_max.store(0); }
void note(std::size_t bytes) {
  std::size_t cur = g_max.load();
  while (bytes > cur && !g_max.compare_exchange_weak(cur, bytes)) {
  }
}
std::size_t max_single_allocation() { return g_max.load(); }
}  // namespace alloc_stats

namespace {

Eigen::MatrixXd tracked_matrix(Eigen::Index rows, Eigen::Index cols) {
  alloc_stats::note(static_cast<std::size_t>(rows) * cols * sizeof(double));
  return Eigen::MatrixXd(rows, cols);
}

Eigen::VectorXd tracked_vector(Eigen::Index n) {
  alloc_stats::note(static_cast<std::size_t>(n) * sizeof(double));
  return Eigen::VectorXd(n);
}

}  // namespace

Eigen::VectorXd krr_direct_full(const Eigen::Ref<const Eigen::MatrixXf>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                double lambda, const GaussianKernelParams& kernel) {
  const Eigen::Index n = X.rows();
  if (n < 1 || y.size() != n)
    throw std::invalid_argument("krr_direct_full: bad inputs");
  const Eigen::MatrixXd Xd = X.cast<double>();
  const Eigen::MatrixXd K = kernel_block(Xd, Xd, kernel);

  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd S = K;
    S.diagonal().array() += lambda * static_cast<double>(n) + jitter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd alpha = ldlt.solve(y);
      const double ynorm = y.norm();
      if (ynorm == 0.0) return Eigen::VectorXd::Zero(n);
      if ((S * alpha - y).norm() / ynorm <= 1e-8) return alpha;
    }
    jitter = jitter == 0.0 ? 1e-12 * K.trace() / n : jitter * 10.0;
  }
  throw std::runtime_error("krr_direct_full: system ill-conditioned beyond jitter repair");
}

Eigen::VectorXd nystrom_krr_direct(const Eigen::Ref<const Eigen::MatrixXf>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& y,
                                   const Eigen::Ref<const Eigen::MatrixXf>& centers,
                                   double lambda, const GaussianKernelParams& kernel) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = centers.rows();
  if (n < 1 || m < 1 || y.size() != n || X.cols() != centers.cols())
    throw std::invalid_argument("nystrom_krr_direct: bad inputs");

  const Eigen::MatrixXd Xd = X.cast<double>();
  const Eigen::MatrixXd Cd = centers.cast<double>();
  const Eigen::MatrixXd knm = kernel_block(Xd, Cd, kernel);
  const Eigen::MatrixXd kmm = kernel_block(Cd, Cd, kernel);
  const Eigen::MatrixXd H =
      knm.transpose() * knm + lambda * static_cast<double>(n) * kmm;
  const Eigen::VectorXd rhs = knm.transpose() * y;
  if (rhs.norm() == 0.0) return Eigen::VectorXd::Zero(m);

  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd S = H;
    S.diagonal().array() += jitter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd alpha = ldlt.solve(rhs);
      if ((S * alpha - rhs).norm() / rhs.norm() <= 1e-8) return alpha;
    }
    jitter = jitter == 0.0 ? 1e-12 * H.trace() / m : jitter * 10.0;
  }
  throw std::runtime_error("nystrom_krr_direct: rank-deficient beyond jitter repair");
}

Eigen::VectorXd FalkonPreconditioner::apply_B(const Eigen::VectorXd& v) const {
  Eigen::VectorXd w = A.triangularView<Eigen::Upper>().solve(v);
  w = T.triangularView<Eigen::Upper>().solve(w);
  return inv_sqrt_n * w;
}

Eigen::VectorXd FalkonPreconditioner::apply_Bt(const Eigen::VectorXd& v) const {
  Eigen::VectorXd w = T.transpose().triangularView<Eigen::Lower>().solve(v);
  w = A.transpose().triangularView<Eigen::Lower>().solve(w);
  return inv_sqrt_n * w;
}

Eigen::MatrixXd FalkonPreconditioner::dense_B() const {
  const Eigen::Index m = T.rows();
  const Eigen::MatrixXd Ainv =
      A.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(m, m));
  return inv_sqrt_n * T.triangularView<Eigen::Upper>().solve(Ainv);
}

FalkonPreconditioner build_preconditioner(const Eigen::MatrixXd& kmm, double lambda,
                                          int n, double jitter) {
  const Eigen::Index m = kmm.rows();
  FalkonPreconditioner prec;
  prec.inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

  Eigen::MatrixXd reg = kmm;
  reg.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt_t(reg);
  if (llt_t.info() != Eigen::Success)
    throw std::runtime_error("build_preconditioner: K_MM Cholesky failed");
  prec.T = llt_t.matrixU();

  Eigen::MatrixXd inner = tracked_matrix(m, m);
  inner.noalias() = prec.T * prec.T.transpose() / static_cast<double>(m);
  inner.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt_a(inner);
  if (llt_a.info() != Eigen::Success)
    throw std::runtime_error("build_preconditioner: inner Cholesky failed");
  prec.A = llt_a.matrixU();
  prec.jitter_used = jitter;
  return prec;
}

namespace {

// z = K_nM^T (K_nM u), streamed over row tiles of X
Eigen::VectorXd streamed_normal_product(const Eigen::Ref<const Eigen::MatrixXf>& X,
                                        const Eigen::MatrixXd& centers_d,
                                        const Eigen::VectorXd& c_sq,
                                        const GaussianKernelParams& kernel,
                                        const Eigen::VectorXd& u, int tile_rows,
                                        const Eigen::VectorXd* y_accum,
                                        Eigen::VectorXd* yt_out) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = centers_d.rows();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd tile;
  Eigen::MatrixXd x_tile;
  alloc_stats::note(static_cast<std::size_t>(tile_rows) * (m + X.cols()) * sizeof(double));
  if (yt_out) yt_out->setZero(m);
  for (Eigen::Index r0 = 0; r0 < n; r0 += tile_rows) {
    const Eigen::Index nr = std::min<Eigen::Index>(tile_rows, n - r0);
    x_tile = X.middleRows(r0, nr).cast<double>();
    kernel_tile_into(x_tile, centers_d, c_sq, kernel, tile);
    if (u.size() > 0) z.noalias() += tile.transpose() * (tile * u);
    if (yt_out && y_accum)
      yt_out->noalias() += tile.transpose() * y_accum->segment(r0, nr);
  }
  return z;
}

}  // namespace

Eigen::VectorXd apply_preconditioned_operator(
    const Eigen::Ref<const Eigen::MatrixXf>& X,
    const Eigen::Ref<const Eigen::MatrixXf>& centers, const Eigen::MatrixXd& kmm,
    double lambda, const GaussianKernelParams& kernel,
    const FalkonPreconditioner& prec, const Eigen::VectorXd& v, int tile_rows) {
  const Eigen::MatrixXd centers_d = centers.cast<double>();
  const Eigen::VectorXd c_sq = centers_d.rowwise().squaredNorm();
  const Eigen::VectorXd u = prec.apply_B(v);
  Eigen::VectorXd z = streamed_normal_product(X, centers_d, c_sq, kernel, u,
                                              tile_rows, nullptr, nullptr);
  z.noalias() += lambda * static_cast<double>(X.rows()) * (kmm * u);
  return prec.apply_Bt(z);
}

FalkonModel falkon_train(const Eigen::Ref<const Eigen::MatrixXf>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::Ref<const Eigen::MatrixXf>& centers,
                         double lambda, const GaussianKernelParams& kernel,
                         const SolverConfig& config) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = centers.rows();
  if (n < 1 || m < 1) throw std::invalid_argument("falkon_train: empty inputs");
  if (y.size() != n) throw std::invalid_argument("falkon_train: y size mismatch");
  if (X.cols() != centers.cols())
    throw std::invalid_argument("falkon_train: dimension mismatch");
  if (config.max_cg_iterations < 1 || config.cg_tolerance < 0)
    throw std::invalid_argument("falkon_train: bad solver config");

  FalkonModel model;
  model.centers = centers;
  model.kernel = kernel;
  model.lambda = lambda;
  model.meta.n = static_cast<int>(n);

  alloc_stats::note(static_cast<std::size_t>(m) * centers.cols() * sizeof(double));
  const Eigen::MatrixXd centers_d = centers.cast<double>();
  const Eigen::VectorXd c_sq = centers_d.rowwise().squaredNorm();
  Eigen::MatrixXd kmm = tracked_matrix(m, m);
  kmm = kernel_block(centers_d, centers_d, kernel);

  // jitter escalation: 1e-10 * trace/M, x10 up to 3 times
  double jitter = config.cholesky_jitter >= 0 ? config.cholesky_jitter
                                              : 1e-10 * kmm.trace() / static_cast<double>(m);
  FalkonPreconditioner prec;
  bool built = false;
  for (int attempt = 0; attempt < 4 && !built; ++attempt) {
    try {
      prec = build_preconditioner(kmm, lambda, static_cast<int>(n), jitter);
      built = true;
    } catch (const std::runtime_error&) {
      jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    }
  }
  if (!built)
    throw std::runtime_error("falkon_train: Cholesky failed after jitter escalation");

  // b = B^T K_nM^T y, streamed
  Eigen::VectorXd kty = tracked_vector(m);
  const Eigen::VectorXd y_copy = y;
  streamed_normal_product(X, centers_d, c_sq, kernel, Eigen::VectorXd(), config.tile_rows,
                          &y_copy, &kty);
  const Eigen::VectorXd b = prec.apply_Bt(kty);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    model.alpha = Eigen::VectorXd::Zero(m);
    model.meta.cg_iterations = 0;
    model.meta.final_residual = 0.0;
    model.meta.converged = true;
    return model;
  }

  auto apply_op = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd u = prec.apply_B(v);
    Eigen::VectorXd z = streamed_normal_product(X, centers_d, c_sq, kernel, u,
                                                config.tile_rows, nullptr, nullptr);
    z.noalias() += lambda * static_cast<double>(n) * (kmm * u);
    return prec.apply_Bt(z);
  };

  // CG with minimal-residual smoothing: the reported/returned iterate is the
  // smoothed one, whose residual norm is non-increasing by construction.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  Eigen::VectorXd x_s = x;
  Eigen::VectorXd r_s = r;
  double rr = r.squaredNorm();
  bool converged = false;
  int it = 0;
  for (; it < config.max_cg_iterations; ++it) {
    const Eigen::VectorXd Ap = apply_op(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0)) break;  // loss of positive definiteness, keep best iterate
    const double step = rr / pAp;
    x += step * p;
    r -= step * Ap;

    const Eigen::VectorXd dr = r - r_s;
    const double dn = dr.squaredNorm();
    if (dn > 0) {
      const double eta = std::clamp(-r_s.dot(dr) / dn, 0.0, 1.0);
      x_s += eta * (x - x_s);
      r_s += eta * (r - r_s);
    }
    const double rel = r_s.norm() / b_norm;
    model.meta.residual_trace.push_back(rel);
    if (rel <= config.cg_tolerance) {
      ++it;
      converged = true;
      break;
    }
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }

  model.alpha = prec.apply_B(x_s);
  model.meta.cg_iterations = it;
  model.meta.final_residual =
      model.meta.residual_trace.empty() ? 1.0 : model.meta.residual_trace.back();
  model.meta.converged = converged || model.meta.final_residual <= config.cg_tolerance;
  return model;
}

Eigen::VectorXd falkon_predict(const FalkonModel& model,
                               const Eigen::Ref<const Eigen::MatrixXf>& queries,
                               int tile_rows) {
  if (queries.cols() != model.centers.cols())
    throw std::invalid_argument("falkon_predict: dimension mismatch");
  const Eigen::Index nq = queries.rows();
  const Eigen::MatrixXd centers_d = model.centers.cast<double>();
  const Eigen::VectorXd c_sq = centers_d.rowwise().squaredNorm();
  Eigen::VectorXd scores(nq);
  Eigen::MatrixXd tile;
  for (Eigen::Index r0 = 0; r0 < nq; r0 += tile_rows) {
    const Eigen::Index nr = std::min<Eigen::Index>(tile_rows, nq - r0);
    const Eigen::MatrixXd q_tile = queries.middleRows(r0, nr).cast<double>();
    kernel_tile_into(q_tile, centers_d, c_sq, model.kernel, tile);
    scores.segment(r0, nr).noalias() = tile * model.alpha;
  }
  return scores;
}

}  // namespace falkdet
