#include "falkdet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace falkdet {

std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     double iou_thresh) {
  if (boxes.size() != scores.size())
    throw std::invalid_argument("nms: boxes/scores size mismatch");
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (boxes[a].area() != boxes[b].area()) return boxes[a].area() < boxes[b].area();
    return a < b;
  });

  std::vector<int> kept;
  for (int i : order) {
    bool suppressed = false;
    for (int k : kept)
      if (iou(boxes[i], boxes[k]) > iou_thresh) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<Detection> detect(const ClassifierEnsemble& ensemble,
                              const DetectionDataset& dataset,
                              const DetectConfig& config) {
  if (dataset.d > 0 && !ensemble.models.empty())
    for (const auto& m : ensemble.models)
      if (m && m->classifier.dim() != dataset.d)
        throw std::invalid_argument("detect: feature dimension mismatch");

  // gather every proposal's feature row once, in dataset order
  std::vector<std::pair<int, int>> slots;  // (image_index, proposal_index)
  for (int ii = 0; ii < static_cast<int>(dataset.images.size()); ++ii)
    for (int pi = 0; pi < static_cast<int>(dataset.images[ii].proposals.size()); ++pi)
      slots.emplace_back(ii, pi);
  Eigen::MatrixXf feats(static_cast<Eigen::Index>(slots.size()), dataset.d);
  for (size_t s = 0; s < slots.size(); ++s)
    feats.row(static_cast<Eigen::Index>(s)) =
        dataset.features.row(dataset.images[slots[s].first].proposals[slots[s].second].feat_row);

  std::vector<Detection> out;
  for (int c = 0; c < ensemble.num_classes(); ++c) {
    if (!ensemble.models[c]) continue;
    const ClassModel& cm = *ensemble.models[c];
    const Eigen::VectorXd scores =
        slots.empty() ? Eigen::VectorXd() : falkon_predict(cm.classifier, feats);

    // bucket the surviving candidates per image, refine, then per-image NMS
    size_t s = 0;
    for (int ii = 0; ii < static_cast<int>(dataset.images.size()); ++ii) {
      std::vector<Box> boxes;
      std::vector<double> confs;
      for (size_t pi = 0; pi < dataset.images[ii].proposals.size(); ++pi, ++s) {
        const double score = scores(static_cast<Eigen::Index>(s));
        if (score <= config.score_thresh) continue;
        Box box = dataset.images[ii].proposals[pi].box;
        if (cm.refiner) {
          const auto& row = dataset.features.row(dataset.images[ii].proposals[pi].feat_row);
          box = apply_deltas(box, rls_predict(*cm.refiner, row.transpose()));
        }
        boxes.push_back(box);
        confs.push_back(score);
      }
      for (int k : nms(boxes, confs, config.nms_iou))
        out.push_back(Detection{ii, c, boxes[k], confs[k]});
    }
  }
  return out;
}

ClassAP voc07_ap(std::vector<Detection> detections,
                 const std::vector<std::pair<int, Box>>& gts, double match_iou) {
  ClassAP result;
  result.num_gt = static_cast<int>(gts.size());
  if (result.num_gt == 0) return result;  // AP undefined
  result.defined = true;

  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.confidence > b.confidence;
                   });

  std::vector<bool> matched(gts.size(), false);
  std::vector<bool> is_tp(detections.size(), false);
  for (size_t i = 0; i < detections.size(); ++i) {
    double best = 0.0;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (matched[g] || gts[g].first != detections[i].image_index) continue;
      const double v = iou(detections[i].box, gts[g].second);
      if (v >= match_iou && v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      matched[best_gt] = true;
      is_tp[i] = true;
    }
  }

  std::vector<double> recalls, precisions;
  int tp = 0, fp = 0;
  for (size_t i = 0; i < detections.size(); ++i) {
    is_tp[i] ? ++tp : ++fp;
    recalls.push_back(static_cast<double>(tp) / result.num_gt);
    precisions.push_back(static_cast<double>(tp) / (tp + fp));
    result.pr.emplace_back(recalls.back(), precisions.back());
  }
  result.tp = tp;
  result.fp = fp;

  double ap = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double r = k / 10.0;
    double pmax = 0.0;
    for (size_t i = 0; i < recalls.size(); ++i)
      if (recalls[i] >= r) pmax = std::max(pmax, precisions[i]);
    ap += pmax;
  }
  result.ap = ap / 11.0;
  return result;
}

APReport evaluate_map(const std::vector<Detection>& detections,
                      const DetectionDataset& dataset, double match_iou) {
  APReport report;
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < dataset.num_classes(); ++c) {
    std::vector<Detection> dets;
    for (const Detection& d : detections)
      if (d.class_id == c) dets.push_back(d);
    std::vector<std::pair<int, Box>> gts;
    for (int ii = 0; ii < static_cast<int>(dataset.images.size()); ++ii)
      for (const GroundTruth& g : dataset.images[ii].ground_truths)
        if (g.class_id == c) gts.emplace_back(ii, g.box);
    ClassAP ap = voc07_ap(std::move(dets), gts, match_iou);
    if (ap.defined) {
      sum += ap.ap;
      ++defined;
    }
    report.per_class.push_back(std::move(ap));
  }
  report.map = defined > 0 ? sum / defined : 0.0;
  return report;
}

}  // namespace falkdet
