#pragma once

#include <cstdint>
#include <filesystem>

#include "falkdet/dataset_types.hpp"

namespace falkdet {

struct LabelingConfig {
  double tau_pos = 0.6;
  double tau_neg = 0.3;
};

struct LabeledRegion {
  int image_index = 0;
  int feat_row = 0;
  Box box;
  int label = -1;       // class id, -1 for background
  int matched_gt = -1;  // index into the image's ground_truths, -1 when negative

  bool positive() const { return label >= 0; }
};

// IoU-threshold labeling: positive above tau_pos (matched to the argmax GT),
// negative below tau_neg, ambiguous band discarded. Ground-truth boxes with a
// feature row are injected as positives when no proposal already covers them.
std::vector<LabeledRegion> assign_labels(const DetectionDataset& dataset,
                                         const LabelingConfig& config);

DetectionDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const DetectionDataset& dataset, const std::filesystem::path& dir);

struct SyntheticConfig {
  int classes = 5;
  int dim = 64;
  int images = 20;
  int positives_per_class_per_image = 1;
  int background_per_image = 100;
  double imbalance = 0;  // > 0 overrides background_per_image so that N/P ~= imbalance
  double margin = 10.0;  // prototype separation, in feature units
  double cluster_sigma = 1.0;
  double hard_fraction = 0.0;  // fraction of background features near a class prototype
  int jitter_per_gt = 1;       // extra overlapping positive proposals per GT
};

DetectionDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Prototype of class c in feature space (deterministic, config-only).
Eigen::VectorXf class_prototype(const SyntheticConfig& config, int class_id);

}  // namespace falkdet
