#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "falkdet/dataset_types.hpp"

namespace falkdet {

// R-CNN style refinement deltas: center offsets in box-size units, log size ratios.
struct BoxDeltas {
  double tx = 0, ty = 0, tw = 0, th = 0;
};

BoxDeltas compute_targets(const Box& proposal, const Box& gt);

// Exact inverse of compute_targets; result optionally clipped to [0,w]x[0,h].
Box apply_deltas(const Box& box, const BoxDeltas& deltas,
                 std::optional<std::pair<double, double>> image_bounds = std::nullopt);

struct RlsModel {
  Eigen::MatrixXd weights;  // d x 4, columns (tx, ty, tw, th)
  Eigen::Vector4d bias;
  double ridge = 1.0;
};

// Linear ridge regression on bias-augmented features.
RlsModel rls_train(const Eigen::Ref<const Eigen::MatrixXf>& features,
                   const std::vector<BoxDeltas>& targets, double ridge);

BoxDeltas rls_predict(const RlsModel& model,
                      const Eigen::Ref<const Eigen::VectorXf>& feature);

}  // namespace falkdet
