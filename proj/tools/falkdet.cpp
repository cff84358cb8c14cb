#include <CLI11.hpp>

#include "falkdet/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"On-line object detection training on precomputed region features"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--threads", threads, "Internal parallelism cap, 0 = machine")
      ->capture_default_str();
  app.set_config("--config", "", "Plain key=value config file (flags win)");

  auto add_train_flags = [&](CLI::App* cmd, falkdet::BootstrapConfig& cfg) {
    cmd->add_option("--nb", cfg.n_b, "Bootstrap mini-batches (0 = random background)")
        ->capture_default_str();
    cmd->add_option("--batch", cfg.batch, "Negatives per mini-batch")->capture_default_str();
    cmd->add_option("--m", cfg.m, "Nystrom center budget")->capture_default_str();
    cmd->add_option("--lambda", cfg.lambda, "Regularization")->capture_default_str();
    cmd->add_option("--sigma", cfg.sigma, "Gaussian kernel bandwidth")->capture_default_str();
    cmd->add_option("--tau-hard", cfg.tau_hard, "Hard-negative score threshold")
        ->capture_default_str();
    cmd->add_option("--tau-easy", cfg.tau_easy, "Easy-negative pruning threshold")
        ->capture_default_str();
    cmd->add_option("--hard-cap", cfg.hard_cap, "Max hard negatives per iteration (-1 = batch)")
        ->capture_default_str();
    cmd->add_option("--tau-pos", cfg.labeling.tau_pos, "Positive IoU threshold")
        ->capture_default_str();
    cmd->add_option("--tau-neg", cfg.labeling.tau_neg, "Negative IoU threshold")
        ->capture_default_str();
    cmd->add_option("--bbox-ridge", cfg.bbox_ridge, "Box-refinement ridge parameter")
        ->capture_default_str();
    cmd->add_flag("--no-other-class-negatives",
                  [&cfg](std::int64_t) { cfg.other_class_negatives = false; },
                  "Exclude other classes' positives from the negative pool");
    cmd->add_option("--cg-iters", cfg.solver.max_cg_iterations, "Max CG iterations")
        ->capture_default_str();
    cmd->add_option("--cg-tol", cfg.solver.cg_tolerance, "CG relative residual tolerance")
        ->capture_default_str();
  };

  auto add_eval_flags = [&](CLI::App* cmd, falkdet::DetectConfig& det, double& match_iou) {
    cmd->add_option("--match-iou", match_iou, "AP matching IoU")->capture_default_str();
    cmd->add_option("--nms-iou", det.nms_iou, "NMS IoU threshold")->capture_default_str();
    cmd->add_option("--score-thresh", det.score_thresh, "Detection score threshold")
        ->capture_default_str();
  };

  falkdet::GenerateOptions gen;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--out", gen.out_dir, "Output dataset directory")->required();
  generate->add_option("--classes", gen.synth.classes, "Class count")->capture_default_str();
  generate->add_option("--dim", gen.synth.dim, "Feature dimension")->capture_default_str();
  generate->add_option("--images", gen.synth.images, "Image count")->capture_default_str();
  generate->add_option("--positives-per-image", gen.synth.positives_per_class_per_image,
                       "Positives per class per image")->capture_default_str();
  generate->add_option("--background-per-image", gen.synth.background_per_image,
                       "Background regions per image")->capture_default_str();
  generate->add_option("--imbalance", gen.synth.imbalance,
                       "Negative/positive ratio (overrides --background-per-image)")
      ->capture_default_str();
  generate->add_option("--margin", gen.synth.margin, "Class prototype separation")
      ->capture_default_str();
  generate->add_option("--cluster-sigma", gen.synth.cluster_sigma, "Cluster spread")
      ->capture_default_str();
  generate->add_option("--hard-fraction", gen.synth.hard_fraction,
                       "Fraction of near-prototype background features")->capture_default_str();
  generate->add_option("--jitter-per-gt", gen.synth.jitter_per_gt,
                       "Extra overlapping proposals per GT")->capture_default_str();

  falkdet::TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a classifier ensemble");
  train_cmd->add_option("--data", train.dataset_dir, "Dataset directory")->required();
  train_cmd->add_option("--out", train.out_dir, "Output model directory")->required();
  add_train_flags(train_cmd, train.config);

  falkdet::EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate an ensemble (VOC07 mAP)");
  eval_cmd->add_option("--model", eval.model_dir, "Model directory")->required();
  eval_cmd->add_option("--data", eval.dataset_dir, "Dataset directory")->required();
  eval_cmd->add_option("--detections", eval.detections_csv, "Detections CSV path");
  eval_cmd->add_option("--report", eval.report_csv, "AP report CSV path");
  add_eval_flags(eval_cmd, eval.detect, eval.match_iou);

  falkdet::SweepOptions sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep-m", "Train/eval over a list of M values");
  sweep_cmd->add_option("--data", sweep.dataset_dir, "Training dataset directory")->required();
  sweep_cmd->add_option("--test", sweep.test_dir, "Test dataset directory (default: train)");
  sweep_cmd->add_option("--m-list", sweep.m_values, "M values")->required()->delimiter(',');
  sweep_cmd->add_option("--out", sweep.out_csv, "Output CSV")->required();
  add_train_flags(sweep_cmd, sweep.config);
  add_eval_flags(sweep_cmd, sweep.detect, sweep.match_iou);

  falkdet::CvOptions cv;
  CLI::App* cv_cmd = app.add_subcommand("cv", "Cross-validate lambda/sigma by validation mAP");
  cv_cmd->add_option("--data", cv.dataset_dir, "Dataset directory")->required();
  cv_cmd->add_option("--lambda-grid", cv.lambda_grid, "Lambda grid")->required()->delimiter(',');
  cv_cmd->add_option("--sigma-grid", cv.sigma_grid, "Sigma grid")->required()->delimiter(',');
  cv_cmd->add_option("--out", cv.out_csv, "Output CSV")->required();
  add_train_flags(cv_cmd, cv.config);

  // let shared options like --seed appear after the subcommand name
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  gen.seed = seed;
  train.config.seed = seed;
  train.config.threads = threads;
  sweep.config.seed = seed;
  sweep.config.threads = threads;
  cv.config.seed = seed;
  cv.config.threads = threads;

  if (generate->parsed()) return falkdet::cmd_generate(gen);
  if (train_cmd->parsed()) return falkdet::cmd_train(train);
  if (eval_cmd->parsed()) return falkdet::cmd_eval(eval);
  if (sweep_cmd->parsed()) return falkdet::cmd_sweep_m(sweep);
  if (cv_cmd->parsed()) return falkdet::cmd_cv(cv);
  return 1;
}
