#include "falkdet/commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "falkdet/serialize.hpp"

namespace falkdet {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SecondsFmt {
  double v;
};
std::ostream& operator<<(std::ostream& os, SecondsFmt s) {
  const auto flags = os.flags();
  os << std::fixed << std::setprecision(3) << s.v;
  os.flags(flags);
  return os;
}

}  // namespace

int cmd_generate(const GenerateOptions& opts) {
  try {
    const DetectionDataset ds = generate_synthetic(opts.synth, opts.seed);
    save_dataset(ds, opts.out_dir);
    int proposals = 0, gts = 0;
    for (const auto& img : ds.images) {
      proposals += static_cast<int>(img.proposals.size());
      gts += static_cast<int>(img.ground_truths.size());
    }
    std::cout << "dataset written to " << opts.out_dir.string() << "\n"
              << "images=" << ds.images.size() << " classes=" << ds.num_classes()
              << " d=" << ds.d << " proposals=" << proposals
              << " ground_truths=" << gts << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "generate: " << e.what() << "\n";
    return 1;
  }
}

int cmd_train(const TrainOptions& opts) {
  try {
    const DetectionDataset ds = load_dataset(opts.dataset_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const EnsembleTrainResult result = train_ensemble(ds, opts.config);
    const double secs = seconds_since(t0);
    save_ensemble(result.ensemble, opts.out_dir);
    {
      std::ofstream tf(opts.out_dir / "train_time.txt");
      tf << std::fixed << std::setprecision(3) << secs << "\n";
    }
    for (const std::string& err : result.errors) std::cerr << "train: " << err << "\n";
    std::cout << "ensemble written to " << opts.out_dir.string() << "\n"
              << "train_seconds=" << SecondsFmt{secs} << "\n";
    return result.errors.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "train: " << e.what() << "\n";
    return 1;
  }
}

int cmd_eval(const EvalOptions& opts) {
  try {
    const DetectionDataset ds = load_dataset(opts.dataset_dir);
    const ClassifierEnsemble ens = load_ensemble(opts.model_dir);
    for (const auto& m : ens.models)
      if (m && m->classifier.dim() != ds.d)
        throw std::runtime_error("model/dataset feature dimension mismatch");
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<Detection> dets = detect(ens, ds, opts.detect);
    const double secs = seconds_since(t0);
    const APReport report = evaluate_map(dets, ds, opts.match_iou);
    const auto det_path = opts.detections_csv.empty()
                              ? opts.model_dir / "detections.csv"
                              : opts.detections_csv;
    const auto rep_path =
        opts.report_csv.empty() ? opts.model_dir / "ap_report.csv" : opts.report_csv;
    write_detections_csv(dets, ds, det_path);
    write_ap_report_csv(report, ds, rep_path);
    std::cout << "mAP=" << report.map << "\n"
              << "test_seconds=" << SecondsFmt{secs} << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep_m(const SweepOptions& opts) {
  try {
    if (opts.m_values.empty()) throw std::invalid_argument("sweep-m: empty M list");
    const DetectionDataset train_ds = load_dataset(opts.dataset_dir);
    const DetectionDataset test_ds =
        opts.test_dir.empty() ? train_ds : load_dataset(opts.test_dir);

    std::ofstream csv(opts.out_csv);
    if (!csv) throw std::runtime_error("cannot write " + opts.out_csv.string());
    csv << "M,map,train_seconds,test_seconds\n";
    csv << std::fixed << std::setprecision(6);
    for (int m : opts.m_values) {
      BootstrapConfig cfg = opts.config;
      cfg.m = m;
      auto t0 = std::chrono::steady_clock::now();
      const EnsembleTrainResult result = train_ensemble(train_ds, cfg);
      const double train_secs = seconds_since(t0);
      for (const std::string& err : result.errors)
        std::cerr << "sweep-m: " << err << "\n";
      t0 = std::chrono::steady_clock::now();
      const std::vector<Detection> dets = detect(result.ensemble, test_ds, opts.detect);
      const double test_secs = seconds_since(t0);
      const APReport report = evaluate_map(dets, test_ds, opts.match_iou);
      csv << m << ',' << report.map << ',' << train_secs << ',' << test_secs << "\n";
      std::cout << "M=" << m << " mAP=" << report.map
                << " train_seconds=" << SecondsFmt{train_secs}
                << " test_seconds=" << SecondsFmt{test_secs} << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sweep-m: " << e.what() << "\n";
    return 1;
  }
}

int cmd_cv(const CvOptions& opts) {
  try {
    const DetectionDataset ds = load_dataset(opts.dataset_dir);
    const CvResult result =
        cross_validate(ds, opts.lambda_grid, opts.sigma_grid, opts.config);
    std::ofstream csv(opts.out_csv);
    if (!csv) throw std::runtime_error("cannot write " + opts.out_csv.string());
    csv << "lambda,sigma,map\n";
    csv.precision(12);
    for (const CvCell& cell : result.table)
      csv << cell.lambda << ',' << cell.sigma << ',' << cell.map << "\n";
    std::cout << "lambda*=" << result.best_lambda << " sigma*=" << result.best_sigma
              << " map=" << result.best_map << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "cv: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace falkdet
