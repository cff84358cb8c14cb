#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "falkdet/bootstrap.hpp"
#include "falkdet/dataset.hpp"
#include "falkdet/eval.hpp"

namespace falkdet {

struct GenerateOptions {
  std::filesystem::path out_dir;
  SyntheticConfig synth;
  std::uint64_t seed = 0;
};

struct TrainOptions {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_dir;
  BootstrapConfig config;
};

struct EvalOptions {
  std::filesystem::path model_dir;
  std::filesystem::path dataset_dir;
  DetectConfig detect;
  double match_iou = 0.5;
  std::filesystem::path detections_csv;  // defaults to <dataset>/detections.csv siblings
  std::filesystem::path report_csv;
};

struct SweepOptions {
  std::filesystem::path dataset_dir;
  std::filesystem::path test_dir;  // empty: evaluate on the training set
  std::vector<int> m_values;
  BootstrapConfig config;
  DetectConfig detect;
  double match_iou = 0.5;
  std::filesystem::path out_csv;
};

struct CvOptions {
  std::filesystem::path dataset_dir;
  std::vector<double> lambda_grid;
  std::vector<double> sigma_grid;
  BootstrapConfig config;
  std::filesystem::path out_csv;
};

// Each command prints data to stdout / files and diagnostics to stderr,
// returning a process exit status.
int cmd_generate(const GenerateOptions& opts);
int cmd_train(const TrainOptions& opts);
int cmd_eval(const EvalOptions& opts);
int cmd_sweep_m(const SweepOptions& opts);
int cmd_cv(const CvOptions& opts);

}  // namespace falkdet
