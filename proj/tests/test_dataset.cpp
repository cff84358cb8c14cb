#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "falkdet/dataset.hpp"

using namespace falkdet;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("falkdet_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("iou examples and properties") {
  const Box a(0, 0, 10, 10);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box(20, 20, 30, 30)) == 0.0);
  CHECK(iou(Box(0, 0, 10, 10), Box(5, 0, 15, 10)) == doctest::Approx(1.0 / 3.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 50);
  for (int t = 0; t < 1000; ++t) {
    const double x1 = u(rng), y1 = u(rng);
    const Box p(x1, y1, x1 + 1 + u(rng), y1 + 1 + u(rng));
    const double x2 = u(rng), y2 = u(rng);
    const Box q(x2, y2, x2 + 1 + u(rng), y2 + 1 + u(rng));
    const double v = iou(p, q);
    CHECK(v == iou(q, p));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  CHECK_THROWS_AS(Box(0, 0, 0, 10), std::invalid_argument);
}

TEST_CASE("assign_labels positive / negative / band") {
  DetectionDataset ds;
  ds.d = 2;
  ds.class_names = {"thing"};
  ds.features = Eigen::MatrixXf::Zero(4, 2);
  ImageEntry img;
  img.id = "im0";
  const Box gt(0, 0, 10, 10);
  img.ground_truths.push_back(GroundTruth{0, gt, 0});
  img.proposals.push_back(RegionProposal{gt, 0});                  // IoU 1 -> positive
  img.proposals.push_back(RegionProposal{Box(50, 50, 60, 60), 1}); // disjoint -> negative
  // IoU = 45/155 ~ 0.29 < tau_neg(0.3) -> negative
  img.proposals.push_back(RegionProposal{Box(5.5, 0, 15.5, 10), 2});
  // IoU = 0.45 in [0.3, 0.6) -> discarded
  img.proposals.push_back(RegionProposal{Box(3.8, 0, 13.8, 10), 3});
  ds.images.push_back(img);

  const auto labeled = assign_labels(ds, LabelingConfig{0.6, 0.3});
  REQUIRE(labeled.size() == 3);
  CHECK(labeled[0].label == 0);
  CHECK(labeled[0].matched_gt == 0);
  CHECK(labeled[1].label == -1);
  CHECK(labeled[2].label == -1);

  // partition: no region appears as both positive and negative
  for (const auto& lr : labeled)
    if (lr.positive()) {
      const double v = iou(lr.box, ds.images[lr.image_index].ground_truths[lr.matched_gt].box);
      CHECK(v >= 0.6);
    }
}

TEST_CASE("assign_labels injects uncovered ground truths") {
  DetectionDataset ds;
  ds.d = 2;
  ds.class_names = {"thing"};
  ds.features = Eigen::MatrixXf::Zero(1, 2);
  ImageEntry img;
  img.id = "im0";
  img.ground_truths.push_back(GroundTruth{0, Box(0, 0, 10, 10), 0});
  ds.images.push_back(img);  // no proposals at all

  const auto labeled = assign_labels(ds, {});
  REQUIRE(labeled.size() == 1);
  CHECK(labeled[0].positive());
  CHECK(labeled[0].feat_row == 0);
}

TEST_CASE("dataset save/load round trip is bitwise") {
  SyntheticConfig cfg;
  cfg.classes = 2;
  cfg.dim = 5;
  cfg.images = 3;
  cfg.background_per_image = 7;
  const DetectionDataset ds = generate_synthetic(cfg, 99);
  const fs::path dir = temp_dir("roundtrip");
  save_dataset(ds, dir);
  const DetectionDataset back = load_dataset(dir);

  CHECK(back.d == ds.d);
  CHECK(back.class_names == ds.class_names);
  REQUIRE(back.images.size() == ds.images.size());
  REQUIRE(back.features.rows() == ds.features.rows());
  // features compared as f32 bit patterns
  CHECK(std::memcmp(back.features.data(), ds.features.data(),
                    sizeof(float) * ds.features.size()) == 0);
  for (size_t i = 0; i < ds.images.size(); ++i) {
    CHECK(back.images[i].id == ds.images[i].id);
    REQUIRE(back.images[i].proposals.size() == ds.images[i].proposals.size());
    REQUIRE(back.images[i].ground_truths.size() == ds.images[i].ground_truths.size());
    for (size_t p = 0; p < ds.images[i].proposals.size(); ++p) {
      CHECK(back.images[i].proposals[p].feat_row == ds.images[i].proposals[p].feat_row);
      CHECK(back.images[i].proposals[p].box.x1 == ds.images[i].proposals[p].box.x1);
    }
  }
}

TEST_CASE("load_dataset parses a hand-written fixture") {
  const fs::path dir = temp_dir("fixture");
  std::ofstream(dir / "meta.txt") << "d=2\nclasses=cat,dog\nimages=2\n";
  std::ofstream(dir / "proposals.csv")
      << "image_id,x1,y1,x2,y2,feat_row\n"
         "a,0,0,10,10,0\n"
         "a,1,1,11,11,1\n"
         "b,5,5,20,20,2\n";
  std::ofstream(dir / "groundtruth.csv")
      << "image_id,class_id,x1,y1,x2,y2,feat_row\n"
         "a,0,0,0,10,10,0\n"
         "b,1,5,5,20,20,-1\n";
  {
    std::ofstream fb(dir / "features.bin", std::ios::binary);
    const float vals[6] = {1, 2, 3, 4, 5, 6};
    fb.write(reinterpret_cast<const char*>(vals), sizeof(vals));
  }

  const DetectionDataset ds = load_dataset(dir);
  CHECK(ds.d == 2);
  CHECK(ds.class_names == std::vector<std::string>{"cat", "dog"});
  REQUIRE(ds.images.size() == 2);
  CHECK(ds.images[0].id == "a");
  CHECK(ds.images[0].proposals.size() == 2);
  CHECK(ds.images[1].proposals.size() == 1);
  CHECK(ds.images[1].proposals[0].box.x2 == 20.0);
  CHECK(ds.images[1].ground_truths[0].feat_row == -1);
  CHECK(ds.features(2, 1) == 6.0f);
}

TEST_CASE("load_dataset accepts an empty proposals file with a valid header") {
  const fs::path dir = temp_dir("empty");
  std::ofstream(dir / "meta.txt") << "d=3\nclasses=x\nimages=0\n";
  std::ofstream(dir / "proposals.csv") << "image_id,x1,y1,x2,y2,feat_row\n";
  std::ofstream(dir / "groundtruth.csv") << "image_id,class_id,x1,y1,x2,y2,feat_row\n";
  std::ofstream(dir / "features.bin", std::ios::binary);
  const DetectionDataset ds = load_dataset(dir);
  CHECK(ds.images.empty());
  CHECK(ds.features.rows() == 0);
}

TEST_CASE("load_dataset error paths name the file") {
  const fs::path dir = temp_dir("errors");
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("meta.txt"),
                       std::runtime_error);

  std::ofstream(dir / "meta.txt") << "d=2\nclasses=x\nimages=1\n";
  std::ofstream(dir / "features.bin", std::ios::binary);
  std::ofstream(dir / "groundtruth.csv") << "image_id,class_id,x1,y1,x2,y2,feat_row\n";
  std::ofstream(dir / "proposals.csv")
      << "image_id,x1,y1,x2,y2,feat_row\n"
         "a,0,0,10,10,5\n";  // feat_row out of range
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("proposals.csv:2"),
                       std::runtime_error);
}

TEST_CASE("generate_synthetic determinism and shape") {
  SyntheticConfig cfg;
  cfg.classes = 1;
  cfg.dim = 4;
  cfg.images = 1;
  cfg.positives_per_class_per_image = 1;
  cfg.background_per_image = 0;
  cfg.jitter_per_gt = 0;
  const DetectionDataset ds = generate_synthetic(cfg, 5);
  REQUIRE(ds.images.size() == 1);
  CHECK(ds.images[0].ground_truths.size() == 1);
  CHECK(ds.images[0].proposals.size() == 1);
  const auto labeled = assign_labels(ds, {});
  REQUIRE(labeled.size() == 1);
  CHECK(labeled[0].positive());

  SyntheticConfig big;
  big.classes = 3;
  big.dim = 8;
  big.images = 4;
  big.background_per_image = 20;
  big.hard_fraction = 0.3;
  const DetectionDataset d1 = generate_synthetic(big, 77);
  const DetectionDataset d2 = generate_synthetic(big, 77);
  CHECK(std::memcmp(d1.features.data(), d2.features.data(),
                    sizeof(float) * d1.features.size()) == 0);
  const DetectionDataset d3 = generate_synthetic(big, 78);
  CHECK(std::memcmp(d1.features.data(), d3.features.data(),
                    sizeof(float) * d1.features.size()) != 0);
}

TEST_CASE("generated clusters are nearest-prototype separable at wide margin") {
  SyntheticConfig cfg;
  cfg.classes = 3;
  cfg.dim = 16;
  cfg.images = 10;
  cfg.positives_per_class_per_image = 2;
  cfg.background_per_image = 30;
  cfg.margin = 10.0;  // 10 cluster sigmas
  cfg.hard_fraction = 0.0;
  const DetectionDataset ds = generate_synthetic(cfg, 31);

  std::vector<Eigen::VectorXf> centroids;  // class prototypes plus origin
  for (int c = 0; c < cfg.classes; ++c) centroids.push_back(class_prototype(cfg, c));
  centroids.push_back(Eigen::VectorXf::Zero(cfg.dim));

  const auto labeled = assign_labels(ds, {});
  int checked = 0;
  for (const auto& lr : labeled) {
    const Eigen::VectorXf f = ds.features.row(lr.feat_row).transpose();
    int best = 0;
    double best_d = (f - centroids[0]).squaredNorm();
    for (int k = 1; k < static_cast<int>(centroids.size()); ++k) {
      const double d2 = (f - centroids[k]).squaredNorm();
      if (d2 < best_d) { best_d = d2; best = k; }
    }
    const int expected = lr.positive() ? lr.label : cfg.classes;
    CHECK(best == expected);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("generate_synthetic rejects impossible configs") {
  SyntheticConfig cfg;
  cfg.positives_per_class_per_image = 100000000;
  CHECK_THROWS_AS(generate_synthetic(cfg, 0), std::invalid_argument);
  SyntheticConfig bad;
  bad.hard_fraction = 2.0;
  CHECK_THROWS_AS(generate_synthetic(bad, 0), std::invalid_argument);
}
