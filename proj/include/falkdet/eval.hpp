#pragma once

#include <vector>

#include "falkdet/bootstrap.hpp"

namespace falkdet {

struct Detection {
  int image_index = 0;
  int class_id = 0;
  Box box;
  double confidence = 0.0;
};

struct DetectConfig {
  double score_thresh = 0.0;
  double nms_iou = 0.3;
};

// Greedy NMS. Returns kept indices into the input, ordered by descending
// confidence (ties: smaller area first, then input order).
std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     double iou_thresh);

// Score every proposal with each class model, threshold, refine, per-class NMS.
std::vector<Detection> detect(const ClassifierEnsemble& ensemble,
                              const DetectionDataset& dataset,
                              const DetectConfig& config = {});

struct ClassAP {
  bool defined = false;  // false when the class has no ground truth
  double ap = 0.0;
  int tp = 0, fp = 0, num_gt = 0;
  std::vector<std::pair<double, double>> pr;  // (recall, precision) samples
};

// PASCAL VOC 2007 11-point interpolated AP for one class.
// gts: (image_index, box) pairs for this class.
ClassAP voc07_ap(std::vector<Detection> detections,
                 const std::vector<std::pair<int, Box>>& gts, double match_iou = 0.5);

struct APReport {
  std::vector<ClassAP> per_class;
  double map = 0.0;  // mean over classes with >= 1 GT
};

APReport evaluate_map(const std::vector<Detection>& detections,
                      const DetectionDataset& dataset, double match_iou = 0.5);

}  // namespace falkdet
