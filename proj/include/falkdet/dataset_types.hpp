#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace falkdet {

// Corner-convention box, x2 > x1 and y2 > y1.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  Box() = default;
  Box(double x1_, double y1_, double x2_, double y2_) : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
    if (!(x2 > x1) || !(y2 > y1))
      throw std::invalid_argument("Box: requires x2 > x1 and y2 > y1");
  }

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
};

double iou(const Box& a, const Box& b);

struct GroundTruth {
  int class_id = 0;
  Box box;
  int feat_row = -1;  // row of the GT-aligned proposal feature, -1 if absent
};

struct RegionProposal {
  Box box;
  int feat_row = 0;
};

struct ImageEntry {
  std::string id;
  std::vector<RegionProposal> proposals;
  std::vector<GroundTruth> ground_truths;
};

struct DetectionDataset {
  int d = 0;
  std::vector<std::string> class_names;
  std::vector<ImageEntry> images;
  Eigen::MatrixXf features;  // one row per feat_row, d columns
  std::string split;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

}  // namespace falkdet
