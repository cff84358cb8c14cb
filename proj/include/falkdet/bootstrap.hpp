#pragma once

#include <optional>
#include <string>
#include <vector>

#include "falkdet/bbox_refine.hpp"
#include "falkdet/dataset.hpp"
#include "falkdet/solver.hpp"

namespace falkdet {

struct BootstrapConfig {
  int n_b = 4;        // bootstrap mini-batches; 0 = Random BKG (no mining)
  int batch = 500;    // negatives per mini-batch (and sample size when n_b = 0)
  int m = 500;        // Nystrom center budget
  double lambda = 1e-6;
  double sigma = 10.0;
  double tau_hard = 0.0;   // score above which a negative counts as hard
  double tau_easy = -1.0;  // score below which a trained-on negative is pruned
  int hard_cap = -1;       // max hard negatives kept per iteration; < 0 means batch
  bool other_class_negatives = true;
  double bbox_ridge = 100.0;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency; caps per-class parallelism
  SolverConfig solver;
  LabelingConfig labeling;
};

struct IterationStats {
  int iteration = 0;
  int n_hard = 0;
  int n_chosen = 0;
  double train_seconds = 0.0;
  int train_size = 0;  // positives + negatives the model saw this iteration
};

struct BootstrapTrace {
  int positives = 0;
  std::vector<IterationStats> iterations;
  std::vector<int> chosen_final;  // rows of the negatives the final model trained on
};

struct ClassModel {
  FalkonModel classifier;
  std::optional<RlsModel> refiner;
};

struct ClassifierEnsemble {
  std::vector<std::string> class_names;
  std::vector<std::optional<ClassModel>> models;  // nullopt for failed classes
  LabelingConfig labeling;
  BootstrapConfig config;
  std::vector<BootstrapTrace> traces;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Per-class Mini Bootstrap hard-negative mining over feature rows of `features`.
// positive_rows stay fixed across iterations; negative_rows is the full pool.
FalkonModel mini_bootstrap_train_class(
    const Eigen::Ref<const Eigen::MatrixXf>& features,
    const std::vector<int>& positive_rows, const std::vector<int>& negative_rows,
    const BootstrapConfig& config, std::uint64_t class_seed,
    BootstrapTrace* trace = nullptr);

struct EnsembleTrainResult {
  ClassifierEnsemble ensemble;
  std::vector<std::string> errors;  // per-class failures, other classes still trained
};

EnsembleTrainResult train_ensemble(const DetectionDataset& dataset,
                                   const BootstrapConfig& config);

struct CvCell {
  double lambda = 0, sigma = 0, map = 0;
};

struct CvResult {
  double best_lambda = 0, best_sigma = 0, best_map = 0;
  std::vector<CvCell> table;
};

// One-fold cross-validation: 20% of training images held out, grid search over
// (lambda, sigma) by validation mAP. Ties prefer smaller lambda, then sigma.
CvResult cross_validate(const DetectionDataset& dataset,
                        const std::vector<double>& lambda_grid,
                        const std::vector<double>& sigma_grid,
                        const BootstrapConfig& config);

}  // namespace falkdet
