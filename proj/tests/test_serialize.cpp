#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "falkdet/serialize.hpp"

using namespace falkdet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("falkdet_ser_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

FalkonModel random_model(std::uint64_t seed, int m = 7, int d = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  FalkonModel model;
  model.centers.resize(m, d);
  for (int i = 0; i < model.centers.size(); ++i)
    model.centers.data()[i] = static_cast<float>(g(rng));
  model.alpha.resize(m);
  for (int i = 0; i < m; ++i) model.alpha(i) = g(rng);
  model.kernel = GaussianKernelParams(0.5 + std::abs(g(rng)));
  model.lambda = std::abs(g(rng)) * 1e-4;
  return model;
}

RlsModel random_rls(std::uint64_t seed, int d = 4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  RlsModel m;
  m.weights.resize(d, 4);
  for (int i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = g(rng);
  for (int i = 0; i < 4; ++i) m.bias(i) = g(rng);
  m.ridge = std::abs(g(rng));
  return m;
}

}  // namespace

TEST_CASE("FLKN round trip is bitwise") {
  const fs::path dir = temp_dir("flkn");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FalkonModel m = random_model(seed, 3 + static_cast<int>(seed), 2 + seed % 3);
    const fs::path p = dir / ("m" + std::to_string(seed) + ".bin");
    save_model(m, p);
    const FalkonModel back = load_model(p);
    REQUIRE(back.centers.rows() == m.centers.rows());
    REQUIRE(back.centers.cols() == m.centers.cols());
    CHECK(std::memcmp(back.centers.data(), m.centers.data(),
                      sizeof(float) * m.centers.size()) == 0);
    CHECK(std::memcmp(back.alpha.data(), m.alpha.data(),
                      sizeof(double) * m.alpha.size()) == 0);
    CHECK(back.kernel.sigma == m.kernel.sigma);
    CHECK(back.lambda == m.lambda);
  }
}

TEST_CASE("RLSB round trip is bitwise") {
  const fs::path dir = temp_dir("rlsb");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RlsModel m = random_rls(seed, 2 + static_cast<int>(seed));
    const fs::path p = dir / "r.bin";
    save_rls(m, p);
    const RlsModel back = load_rls(p);
    REQUIRE(back.weights.rows() == m.weights.rows());
    CHECK(std::memcmp(back.weights.data(), m.weights.data(),
                      sizeof(double) * m.weights.size()) == 0);
    CHECK(std::memcmp(back.bias.data(), m.bias.data(), sizeof(double) * 4) == 0);
    CHECK(back.ridge == m.ridge);
  }
}

TEST_CASE("ensemble round trip preserves models, names and traces") {
  ClassifierEnsemble ens;
  ens.class_names = {"alpha", "beta"};
  ens.models.resize(2);
  ClassModel cm0;
  cm0.classifier = random_model(11);
  cm0.refiner = random_rls(12, 3);
  ens.models[0] = cm0;
  // class 1 intentionally missing (failed training)
  ens.labeling = LabelingConfig{0.55, 0.25};
  ens.config.sigma = 3.0;
  ens.config.lambda = 1e-5;
  ens.traces.resize(2);
  ens.traces[0].positives = 9;
  ens.traces[0].iterations.push_back(IterationStats{0, 4, 17, 0.125, 26});
  ens.traces[0].iterations.push_back(IterationStats{1, 2, 12, 0.5, 21});

  const fs::path dir = temp_dir("ensemble");
  save_ensemble(ens, dir);
  CHECK(fs::exists(dir / "ensemble.txt"));
  CHECK(fs::exists(dir / "model_alpha.bin"));
  CHECK(fs::exists(dir / "bbox_alpha.bin"));
  CHECK(fs::exists(dir / "trace_alpha.csv"));
  CHECK_FALSE(fs::exists(dir / "model_beta.bin"));

  const ClassifierEnsemble back = load_ensemble(dir);
  CHECK(back.class_names == ens.class_names);
  REQUIRE(back.models.size() == 2);
  REQUIRE(back.models[0].has_value());
  CHECK_FALSE(back.models[1].has_value());
  CHECK(std::memcmp(back.models[0]->classifier.alpha.data(),
                    cm0.classifier.alpha.data(),
                    sizeof(double) * cm0.classifier.alpha.size()) == 0);
  REQUIRE(back.models[0]->refiner.has_value());
  CHECK(back.models[0]->refiner->ridge == cm0.refiner->ridge);
  CHECK(back.labeling.tau_pos == ens.labeling.tau_pos);
  CHECK(back.labeling.tau_neg == ens.labeling.tau_neg);

  // trace CSV has the documented header and one row per iteration
  std::ifstream tf(dir / "trace_alpha.csv");
  std::string line;
  std::getline(tf, line);
  CHECK(line == "iteration,n_hard,n_chosen,train_seconds");
  int rows = 0;
  while (std::getline(tf, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("corrupt magic and short files are rejected") {
  const fs::path dir = temp_dir("corrupt");
  const fs::path p = dir / "bad.bin";
  std::ofstream(p, std::ios::binary) << "NOPE" << std::string(64, '\0');
  CHECK_THROWS_AS(load_model(p), std::runtime_error);
  CHECK_THROWS_AS(load_rls(p), std::runtime_error);

  const fs::path good = dir / "good.bin";
  save_model(random_model(3), good);
  // truncate
  fs::resize_file(good, fs::file_size(good) / 2);
  CHECK_THROWS_AS(load_model(good), std::runtime_error);

  CHECK_THROWS_AS(load_model(dir / "missing.bin"), std::runtime_error);
  CHECK_THROWS_AS(load_ensemble(dir / "missing_dir"), std::runtime_error);
}

TEST_CASE("detections and AP report CSVs have the documented shape") {
  DetectionDataset ds;
  ds.d = 1;
  ds.class_names = {"cat", "dog"};
  ds.features = Eigen::MatrixXf::Zero(1, 1);
  ImageEntry img;
  img.id = "img7";
  img.ground_truths.push_back(GroundTruth{0, Box(0, 0, 10, 10), 0});
  ds.images.push_back(img);

  std::vector<Detection> dets{Detection{0, 0, Box(0, 0, 10, 10), 0.75}};
  const fs::path dir = temp_dir("csv");
  write_detections_csv(dets, ds, dir / "dets.csv");
  std::ifstream df(dir / "dets.csv");
  std::string line;
  std::getline(df, line);
  CHECK(line == "image_id,class_id,x1,y1,x2,y2,confidence");
  std::getline(df, line);
  CHECK(line.rfind("img7,0,", 0) == 0);

  const APReport rep = evaluate_map(dets, ds);
  write_ap_report_csv(rep, ds, dir / "report.csv");
  std::ifstream rf(dir / "report.csv");
  std::getline(rf, line);
  CHECK(line == "class,ap,tp,fp,num_gt");
  std::getline(rf, line);
  CHECK(line.rfind("cat,", 0) == 0);
  std::getline(rf, line);
  CHECK(line.find("absent") != std::string::npos);  // dog has no ground truth
  std::getline(rf, line);
  CHECK(line.rfind("mAP,", 0) == 0);
}
