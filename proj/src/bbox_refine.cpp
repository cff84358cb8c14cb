#include "falkdet/bbox_refine.hpp"

#include <cmath>

namespace falkdet {

BoxDeltas compute_targets(const Box& proposal, const Box& gt) {
  BoxDeltas t;
  t.tx = (gt.cx() - proposal.cx()) / proposal.width();
  t.ty = (gt.cy() - proposal.cy()) / proposal.height();
  t.tw = std::log(gt.width() / proposal.width());
  t.th = std::log(gt.height() / proposal.height());
  return t;
}

Box apply_deltas(const Box& box, const BoxDeltas& d,
                 std::optional<std::pair<double, double>> image_bounds) {
  const double cx = box.cx() + d.tx * box.width();
  const double cy = box.cy() + d.ty * box.height();
  const double w = box.width() * std::exp(d.tw);
  const double h = box.height() * std::exp(d.th);
  double x1 = cx - 0.5 * w, y1 = cy - 0.5 * h;
  double x2 = cx + 0.5 * w, y2 = cy + 0.5 * h;
  if (image_bounds) {
    const auto [bw, bh] = *image_bounds;
    x1 = std::clamp(x1, 0.0, bw);
    x2 = std::clamp(x2, 0.0, bw);
    y1 = std::clamp(y1, 0.0, bh);
    y2 = std::clamp(y2, 0.0, bh);
    if (!(x2 > x1)) x2 = x1 + 1e-6;
    if (!(y2 > y1)) y2 = y1 + 1e-6;
  }
  return Box(x1, y1, x2, y2);
}

RlsModel rls_train(const Eigen::Ref<const Eigen::MatrixXf>& features,
                   const std::vector<BoxDeltas>& targets, double ridge) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n < 1) throw std::invalid_argument("rls_train: need at least one sample");
  if (static_cast<Eigen::Index>(targets.size()) != n)
    throw std::invalid_argument("rls_train: features/targets size mismatch");
  if (!(ridge > 0)) throw std::invalid_argument("rls_train: ridge must be > 0");

  Eigen::MatrixXd X(n, d + 1);  // bias-augmented
  X.leftCols(d) = features.cast<double>();
  X.col(d).setOnes();
  Eigen::MatrixXd T(n, 4);
  for (Eigen::Index i = 0; i < n; ++i)
    T.row(i) << targets[i].tx, targets[i].ty, targets[i].tw, targets[i].th;

  Eigen::MatrixXd G = X.transpose() * X;
  G.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("rls_train: ridge system factorization failed");
  const Eigen::MatrixXd W = ldlt.solve(X.transpose() * T);

  // residual check against the normal equations
  const double rhs_norm = (X.transpose() * T).norm();
  const double res = (G * W - X.transpose() * T).norm();
  if (rhs_norm > 0 && res / rhs_norm > 1e-8)
    throw std::runtime_error("rls_train: normal-equation residual too large");

  RlsModel model;
  model.weights = W.topRows(d);
  model.bias = W.row(d).transpose();
  model.ridge = ridge;
  return model;
}

BoxDeltas rls_predict(const RlsModel& model,
                      const Eigen::Ref<const Eigen::VectorXf>& feature) {
  if (feature.size() != model.weights.rows())
    throw std::invalid_argument("rls_predict: feature dimension mismatch");
  const Eigen::Vector4d p =
      model.weights.transpose() * feature.cast<double>() + model.bias;
  return BoxDeltas{p(0), p(1), p(2), p(3)};
}

}  // namespace falkdet
