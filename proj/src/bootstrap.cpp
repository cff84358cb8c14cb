#include "falkdet/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <future>
#include <random>
#include <thread>

#include "falkdet/eval.hpp"
#include "falkdet/sampling.hpp"

namespace falkdet {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXf gather_rows(const Eigen::Ref<const Eigen::MatrixXf>& features,
                            const std::vector<int>& rows) {
  Eigen::MatrixXf out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
  return out;
}

}  // namespace

FalkonModel mini_bootstrap_train_class(
    const Eigen::Ref<const Eigen::MatrixXf>& features,
    const std::vector<int>& positive_rows, const std::vector<int>& negative_rows,
    const BootstrapConfig& config, std::uint64_t class_seed, BootstrapTrace* trace) {
  if (positive_rows.empty())
    throw std::invalid_argument("mini_bootstrap_train_class: no positives");
  if (config.n_b < 0 || (config.n_b >= 1 && config.batch < 1))
    throw std::invalid_argument("mini_bootstrap_train_class: bad n_b/batch");
  if (config.tau_easy > config.tau_hard)
    throw std::invalid_argument("mini_bootstrap_train_class: tau_easy > tau_hard");

  const GaussianKernelParams kernel(config.sigma);
  const int hard_cap = config.hard_cap < 0 ? config.batch : config.hard_cap;
  const int num_pos = static_cast<int>(positive_rows.size());

  // labels are +/-1 regression targets; centers are re-drawn per iteration
  auto train_once = [&](const std::vector<int>& neg_rows, int iteration) {
    std::vector<int> rows = positive_rows;
    rows.insert(rows.end(), neg_rows.begin(), neg_rows.end());
    Eigen::VectorXd y(rows.size());
    y.head(num_pos).setConstant(1.0);
    y.tail(static_cast<Eigen::Index>(neg_rows.size())).setConstant(-1.0);

    const CenterSelection sel = rebalanced_center_sampling(
        num_pos, static_cast<int>(neg_rows.size()), config.m,
        derive_seed(class_seed, 200, static_cast<std::uint64_t>(iteration)));
    std::vector<int> center_rows;
    for (int i : sel.positive_indices) center_rows.push_back(positive_rows[i]);
    for (int i : sel.negative_indices) center_rows.push_back(neg_rows[i]);

    const Eigen::MatrixXf X = gather_rows(features, rows);
    const Eigen::MatrixXf C = gather_rows(features, center_rows);
    try {
      return falkon_train(X, y, C, config.lambda, kernel, config.solver);
    } catch (const std::exception& e) {
      throw std::runtime_error("bootstrap iteration " + std::to_string(iteration) +
                               ": " + e.what());
    }
  };

  const std::uint64_t sample_seed = derive_seed(class_seed, 100);

  if (config.n_b == 0) {
    // Random BKG: a single random subsample, no mining
    const std::vector<int> negs =
        subsample_negatives(negative_rows, config.batch, sample_seed);
    const auto t0 = std::chrono::steady_clock::now();
    FalkonModel model = train_once(negs, 0);
    if (trace) {
      trace->positives = num_pos;
      trace->iterations.push_back(IterationStats{1, 0, static_cast<int>(negs.size()),
                                                 seconds_since(t0),
                                                 num_pos + static_cast<int>(negs.size())});
      trace->chosen_final = negs;
    }
    return model;
  }

  const std::vector<int> sampled =
      subsample_negatives(negative_rows, config.n_b * config.batch, sample_seed);

  std::vector<int> chosen;
  FalkonModel model;
  bool have_model = false;
  for (int i = 1; i <= config.n_b; ++i) {
    const size_t b0 = static_cast<size_t>(i - 1) * config.batch;
    if (b0 >= sampled.size()) break;
    const size_t b1 = std::min(sampled.size(), b0 + config.batch);
    std::vector<int> batch(sampled.begin() + b0, sampled.begin() + b1);

    std::vector<int> hard;
    if (!have_model) {
      hard = batch;  // no prior model: the whole first batch counts as hard
      if (static_cast<int>(hard.size()) > hard_cap) hard.resize(hard_cap);
    } else {
      const Eigen::VectorXd scores = falkon_predict(model, gather_rows(features, batch));
      std::vector<int> order;
      for (int k = 0; k < static_cast<int>(batch.size()); ++k)
        if (scores(k) > config.tau_hard) order.push_back(k);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return scores(a) > scores(b); });
      if (static_cast<int>(order.size()) > hard_cap) order.resize(hard_cap);
      for (int k : order) hard.push_back(batch[k]);
    }

    std::vector<int> train_negs = chosen;
    train_negs.insert(train_negs.end(), hard.begin(), hard.end());

    const auto t0 = std::chrono::steady_clock::now();
    model = train_once(train_negs, i);
    have_model = true;
    const double secs = seconds_since(t0);

    // prune the easy ones from everything the model just trained on
    chosen.clear();
    if (!train_negs.empty()) {
      const Eigen::VectorXd scores =
          falkon_predict(model, gather_rows(features, train_negs));
      for (int k = 0; k < static_cast<int>(train_negs.size()); ++k)
        if (scores(k) >= config.tau_easy) chosen.push_back(train_negs[k]);
    }

    if (trace)
      trace->iterations.push_back(IterationStats{
          i, static_cast<int>(hard.size()), static_cast<int>(chosen.size()), secs,
          num_pos + static_cast<int>(train_negs.size())});
  }

  const auto t0 = std::chrono::steady_clock::now();
  model = train_once(chosen, config.n_b + 1);
  if (trace) {
    trace->positives = num_pos;
    trace->iterations.push_back(IterationStats{
        config.n_b + 1, 0, static_cast<int>(chosen.size()), seconds_since(t0),
        num_pos + static_cast<int>(chosen.size())});
    trace->chosen_final = chosen;
  }
  return model;
}

EnsembleTrainResult train_ensemble(const DetectionDataset& dataset,
                                   const BootstrapConfig& config) {
  const std::vector<LabeledRegion> labeled = assign_labels(dataset, config.labeling);
  const int C = dataset.num_classes();

  std::vector<std::vector<int>> pos_rows(C);
  std::vector<std::vector<const LabeledRegion*>> pos_regions(C);
  std::vector<int> background_rows;
  for (const LabeledRegion& lr : labeled) {
    if (lr.positive()) {
      pos_rows[lr.label].push_back(lr.feat_row);
      pos_regions[lr.label].push_back(&lr);
    } else {
      background_rows.push_back(lr.feat_row);
    }
  }

  EnsembleTrainResult result;
  result.ensemble.class_names = dataset.class_names;
  result.ensemble.labeling = config.labeling;
  result.ensemble.config = config;
  result.ensemble.models.resize(C);
  result.ensemble.traces.resize(C);
  std::vector<std::string> errors(C);

  auto train_class = [&](int c) {
    if (pos_rows[c].empty()) {
      errors[c] = "class " + dataset.class_names[c] + ": no positive regions";
      return;
    }
    std::vector<int> neg_pool = background_rows;
    if (config.other_class_negatives)
      for (int o = 0; o < C; ++o)
        if (o != c)
          neg_pool.insert(neg_pool.end(), pos_rows[o].begin(), pos_rows[o].end());
    if (neg_pool.empty()) {
      errors[c] = "class " + dataset.class_names[c] + ": empty negative pool";
      return;
    }
    try {
      ClassModel cm;
      cm.classifier = mini_bootstrap_train_class(
          dataset.features, pos_rows[c], neg_pool, config,
          derive_seed(config.seed, static_cast<std::uint64_t>(c)),
          &result.ensemble.traces[c]);

      Eigen::MatrixXf pf = Eigen::MatrixXf(pos_rows[c].size(), dataset.d);
      std::vector<BoxDeltas> targets;
      for (size_t i = 0; i < pos_regions[c].size(); ++i) {
        const LabeledRegion& lr = *pos_regions[c][i];
        pf.row(static_cast<Eigen::Index>(i)) = dataset.features.row(lr.feat_row);
        const GroundTruth& gt = dataset.images[lr.image_index].ground_truths[lr.matched_gt];
        targets.push_back(compute_targets(lr.box, gt.box));
      }
      cm.refiner = rls_train(pf, targets, config.bbox_ridge);
      result.ensemble.models[c] = std::move(cm);
    } catch (const std::exception& e) {
      errors[c] = "class " + dataset.class_names[c] + ": " + e.what();
    }
  };

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int threads = std::max(1, config.threads > 0 ? config.threads : hw);
  if (threads == 1 || C <= 1) {
    for (int c = 0; c < C; ++c) train_class(c);
  } else {
    std::vector<std::future<void>> futs;
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(threads, C); ++w)
      futs.push_back(std::async(std::launch::async, [&]() {
        for (int c = next.fetch_add(1); c < C; c = next.fetch_add(1)) train_class(c);
      }));
    for (auto& f : futs) f.get();
  }

  for (int c = 0; c < C; ++c)
    if (!errors[c].empty()) result.errors.push_back(errors[c]);
  return result;
}

CvResult cross_validate(const DetectionDataset& dataset,
                        const std::vector<double>& lambda_grid,
                        const std::vector<double>& sigma_grid,
                        const BootstrapConfig& config) {
  if (lambda_grid.empty() || sigma_grid.empty())
    throw std::invalid_argument("cross_validate: empty grid");
  const int num_images = static_cast<int>(dataset.images.size());
  if (num_images < 2)
    throw std::invalid_argument("cross_validate: need at least 2 images");

  // deterministic image-level 20% split
  std::vector<int> order(num_images);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(config.seed, 0xCF));
  std::shuffle(order.begin(), order.end(), rng);
  int val_count = (num_images + 4) / 5;
  val_count = std::clamp(val_count, 1, num_images - 1);

  DetectionDataset train_ds, val_ds;
  train_ds.d = val_ds.d = dataset.d;
  train_ds.class_names = val_ds.class_names = dataset.class_names;
  train_ds.features = val_ds.features = dataset.features;
  for (int k = 0; k < num_images; ++k)
    (k < val_count ? val_ds : train_ds).images.push_back(dataset.images[order[k]]);

  CvResult result;
  bool first = true;
  for (double lambda : lambda_grid)
    for (double sigma : sigma_grid) {
      BootstrapConfig cell_cfg = config;
      cell_cfg.lambda = lambda;
      cell_cfg.sigma = sigma;
      const EnsembleTrainResult tr = train_ensemble(train_ds, cell_cfg);
      const APReport report = evaluate_map(detect(tr.ensemble, val_ds), val_ds);
      result.table.push_back(CvCell{lambda, sigma, report.map});
      const bool better =
          first || report.map > result.best_map ||
          (report.map == result.best_map &&
           (lambda < result.best_lambda ||
            (lambda == result.best_lambda && sigma < result.best_sigma)));
      if (better) {
        result.best_lambda = lambda;
        result.best_sigma = sigma;
        result.best_map = report.map;
        first = false;
      }
    }
  return result;
}

}  // namespace falkdet
