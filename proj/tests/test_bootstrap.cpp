#include <doctest.h>

#include <random>
#include <set>

#include "falkdet/bootstrap.hpp"
#include "falkdet/eval.hpp"
#include "falkdet/sampling.hpp"

using namespace falkdet;

namespace {

// Two well separated clusters with a configurable negative surplus.
struct Pool {
  Eigen::MatrixXf features;
  std::vector<int> positives;
  std::vector<int> negatives;
};

Pool make_pool(int num_pos, int num_neg, int d, double margin, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Pool pool;
  pool.features.resize(num_pos + num_neg, d);
  for (int i = 0; i < num_pos; ++i) {
    for (int j = 0; j < d; ++j)
      pool.features(i, j) = static_cast<float>(g(rng) + (j == 0 ? margin : 0));
    pool.positives.push_back(i);
  }
  for (int i = 0; i < num_neg; ++i) {
    for (int j = 0; j < d; ++j) pool.features(num_pos + i, j) = static_cast<float>(g(rng));
    pool.negatives.push_back(num_pos + i);
  }
  return pool;
}

BootstrapConfig small_config() {
  BootstrapConfig cfg;
  cfg.n_b = 3;
  cfg.batch = 20;
  cfg.m = 30;
  cfg.lambda = 1e-5;
  cfg.sigma = 4.0;
  return cfg;
}

}  // namespace

TEST_CASE("n_b = 0 is bitwise identical to direct training on the same sample") {
  const Pool pool = make_pool(25, 200, 6, 8.0, 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    BootstrapConfig cfg = small_config();
    cfg.n_b = 0;
    cfg.batch = 50;
    const std::uint64_t class_seed = derive_seed(seed, 0);

    BootstrapTrace trace;
    const FalkonModel via_bootstrap = mini_bootstrap_train_class(
        pool.features, pool.positives, pool.negatives, cfg, class_seed, &trace);

    // replicate the sampling path by hand and train directly
    const std::vector<int> negs =
        subsample_negatives(pool.negatives, cfg.batch, derive_seed(class_seed, 100));
    std::vector<int> rows = pool.positives;
    rows.insert(rows.end(), negs.begin(), negs.end());
    Eigen::VectorXd y(rows.size());
    y.head(pool.positives.size()).setConstant(1.0);
    y.tail(negs.size()).setConstant(-1.0);
    const CenterSelection sel = rebalanced_center_sampling(
        static_cast<int>(pool.positives.size()), static_cast<int>(negs.size()), cfg.m,
        derive_seed(class_seed, 200, 0));
    std::vector<int> center_rows;
    for (int i : sel.positive_indices) center_rows.push_back(pool.positives[i]);
    for (int i : sel.negative_indices) center_rows.push_back(negs[i]);
    Eigen::MatrixXf X(rows.size(), 6), C(center_rows.size(), 6);
    for (size_t i = 0; i < rows.size(); ++i) X.row(i) = pool.features.row(rows[i]);
    for (size_t i = 0; i < center_rows.size(); ++i)
      C.row(i) = pool.features.row(center_rows[i]);
    const FalkonModel direct =
        falkon_train(X, y, C, cfg.lambda, GaussianKernelParams(cfg.sigma), cfg.solver);

    REQUIRE(via_bootstrap.alpha.size() == direct.alpha.size());
    for (int i = 0; i < direct.alpha.size(); ++i)
      CHECK(via_bootstrap.alpha(i) == direct.alpha(i));
    REQUIRE(trace.iterations.size() == 1);
    CHECK(trace.iterations[0].n_chosen == static_cast<int>(negs.size()));
  }
}

TEST_CASE("bootstrap trace arithmetic and fixed positives") {
  const Pool pool = make_pool(30, 300, 5, 6.0, 2);
  BootstrapConfig cfg = small_config();
  BootstrapTrace trace;
  mini_bootstrap_train_class(pool.features, pool.positives, pool.negatives, cfg, 77,
                             &trace);
  REQUIRE(trace.iterations.size() == static_cast<size_t>(cfg.n_b) + 1);
  CHECK(trace.positives == 30);
  int prev_chosen = 0;
  for (size_t i = 0; i < trace.iterations.size(); ++i) {
    const IterationStats& s = trace.iterations[i];
    if (s.iteration <= cfg.n_b) {
      // |train set at iteration i| = P + |N_chosen_{i-1}| + |N_i^H|
      CHECK(s.train_size == trace.positives + prev_chosen + s.n_hard);
    } else {
      CHECK(s.train_size == trace.positives + s.n_chosen);
    }
    prev_chosen = s.n_chosen;
  }
  // final chosen negatives come from the sampled pool, all distinct
  std::set<int> uniq(trace.chosen_final.begin(), trace.chosen_final.end());
  CHECK(uniq.size() == trace.chosen_final.size());
}

TEST_CASE("a model that finds every negative easy prunes them all") {
  // single bootstrap iteration over perfectly separable data with a pruning
  // threshold above every negative's score
  const Pool pool = make_pool(40, 100, 4, 12.0, 3);
  BootstrapConfig cfg = small_config();
  cfg.n_b = 1;
  cfg.batch = 40;
  cfg.tau_easy = 0.0;  // prune anything scoring below the decision boundary
  cfg.solver.cg_tolerance = 1e-10;
  BootstrapTrace trace;
  mini_bootstrap_train_class(pool.features, pool.positives, pool.negatives, cfg, 5,
                             &trace);
  REQUIRE(trace.iterations.size() == 2);
  CHECK(trace.iterations[0].n_hard == 40);
  CHECK(trace.iterations[0].n_chosen == 0);  // everything pruned as easy
  CHECK(trace.iterations[1].n_chosen == 0);  // final model: positives only
}

TEST_CASE("train_ensemble on separable data separates its own positives") {
  SyntheticConfig synth;
  synth.classes = 2;
  synth.dim = 12;
  synth.images = 12;
  synth.positives_per_class_per_image = 2;
  synth.background_per_image = 40;
  synth.margin = 10.0;
  const DetectionDataset ds = generate_synthetic(synth, 11);

  BootstrapConfig cfg = small_config();
  cfg.m = 60;
  cfg.sigma = 6.0;
  cfg.threads = 1;
  const EnsembleTrainResult result = train_ensemble(ds, cfg);
  CHECK(result.errors.empty());
  REQUIRE(result.ensemble.models.size() == 2);

  const auto labeled = assign_labels(ds, cfg.labeling);
  for (const auto& lr : labeled) {
    if (!lr.positive()) continue;
    const Eigen::MatrixXf q = ds.features.row(lr.feat_row);
    for (int c = 0; c < 2; ++c) {
      const double score = falkon_predict(result.ensemble.models[c]->classifier, q)(0);
      if (c == lr.label) CHECK(score > 0.0);
      else CHECK(score < 0.0);
    }
  }
}

TEST_CASE("train_ensemble reports per-class failures and trains the rest") {
  SyntheticConfig synth;
  synth.classes = 1;
  synth.dim = 6;
  synth.images = 6;
  synth.background_per_image = 20;
  DetectionDataset ds = generate_synthetic(synth, 21);
  ds.class_names.push_back("ghost");  // a class with zero positives

  BootstrapConfig cfg = small_config();
  cfg.threads = 1;
  const EnsembleTrainResult result = train_ensemble(ds, cfg);
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].find("ghost") != std::string::npos);
  CHECK(result.ensemble.models[0].has_value());
  CHECK_FALSE(result.ensemble.models[1].has_value());
}

TEST_CASE("single-class ensemble equals mini_bootstrap_train_class directly") {
  SyntheticConfig synth;
  synth.classes = 1;
  synth.dim = 8;
  synth.images = 8;
  synth.background_per_image = 30;
  const DetectionDataset ds = generate_synthetic(synth, 31);
  BootstrapConfig cfg = small_config();
  cfg.threads = 1;
  const EnsembleTrainResult result = train_ensemble(ds, cfg);
  REQUIRE(result.errors.empty());

  const auto labeled = assign_labels(ds, cfg.labeling);
  std::vector<int> pos, neg;
  for (const auto& lr : labeled)
    (lr.positive() ? pos : neg).push_back(lr.feat_row);
  const FalkonModel direct = mini_bootstrap_train_class(ds.features, pos, neg, cfg,
                                                        derive_seed(cfg.seed, 0));
  const Eigen::VectorXd a = result.ensemble.models[0]->classifier.alpha;
  REQUIRE(a.size() == direct.alpha.size());
  for (int i = 0; i < a.size(); ++i) CHECK(a(i) == direct.alpha(i));
}

TEST_CASE("threaded and sequential ensemble training agree bitwise") {
  SyntheticConfig synth;
  synth.classes = 3;
  synth.dim = 8;
  synth.images = 8;
  synth.background_per_image = 30;
  const DetectionDataset ds = generate_synthetic(synth, 41);
  BootstrapConfig cfg = small_config();
  cfg.threads = 1;
  const EnsembleTrainResult seq = train_ensemble(ds, cfg);
  cfg.threads = 3;
  const EnsembleTrainResult par = train_ensemble(ds, cfg);
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd& a = seq.ensemble.models[c]->classifier.alpha;
    const Eigen::VectorXd& b = par.ensemble.models[c]->classifier.alpha;
    REQUIRE(a.size() == b.size());
    for (int i = 0; i < a.size(); ++i) CHECK(a(i) == b(i));
  }
}

TEST_CASE("cross_validate selection rules") {
  SyntheticConfig synth;
  synth.classes = 2;
  synth.dim = 8;
  synth.images = 10;
  synth.positives_per_class_per_image = 1;
  synth.background_per_image = 25;
  const DetectionDataset ds = generate_synthetic(synth, 51);
  BootstrapConfig cfg = small_config();
  cfg.threads = 1;

  // single cell comes straight back
  CvResult r = cross_validate(ds, {1e-4}, {5.0}, cfg);
  CHECK(r.best_lambda == 1e-4);
  CHECK(r.best_sigma == 5.0);
  REQUIRE(r.table.size() == 1);

  // a degenerate sigma never beats a sane one on separable data
  r = cross_validate(ds, {1e-4}, {1e-9, 5.0}, cfg);
  CHECK(r.best_sigma == 5.0);
  REQUIRE(r.table.size() == 2);
  CHECK(r.table[0].map < r.table[1].map);

  // duplicated cells do not change the selection
  const CvResult dedup = cross_validate(ds, {1e-4}, {5.0, 5.0}, cfg);
  CHECK(dedup.best_lambda == 1e-4);
  CHECK(dedup.best_sigma == 5.0);
}
