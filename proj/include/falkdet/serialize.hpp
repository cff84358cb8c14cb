#pragma once

#include <filesystem>

#include "falkdet/bootstrap.hpp"
#include "falkdet/eval.hpp"

namespace falkdet {

// "FLKN" binary container: magic, version u32, M u32, d u32, sigma f64,
// lambda f64, centers (M*d f32 row-major), alpha (M f64). Little-endian.
void save_model(const FalkonModel& model, const std::filesystem::path& path);
FalkonModel load_model(const std::filesystem::path& path);

// "RLSB": magic, d u32, ridge f64, W (d*4 f64 row-major), bias (4 f64).
void save_rls(const RlsModel& model, const std::filesystem::path& path);
RlsModel load_rls(const std::filesystem::path& path);

// Ensemble directory: model_<class>.bin + bbox_<class>.bin per class,
// ensemble.txt manifest, trace_<class>.csv bootstrap traces.
void save_ensemble(const ClassifierEnsemble& ensemble, const std::filesystem::path& dir);
ClassifierEnsemble load_ensemble(const std::filesystem::path& dir);

void write_detections_csv(const std::vector<Detection>& detections,
                          const DetectionDataset& dataset,
                          const std::filesystem::path& path);
void write_ap_report_csv(const APReport& report, const DetectionDataset& dataset,
                         const std::filesystem::path& path);

}  // namespace falkdet
