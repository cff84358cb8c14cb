#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "falkdet/commands.hpp"
#include "falkdet/eval.hpp"
#include "falkdet/sampling.hpp"
#include "falkdet/serialize.hpp"

namespace py = pybind11;
using namespace falkdet;

PYBIND11_MODULE(_core, m) {
  m.doc() = "FALKON-based on-line detector training core";

  // --- kernel ---------------------------------------------------------------
  py::class_<GaussianKernelParams>(m, "GaussianKernelParams")
      .def(py::init<double>(), py::arg("sigma"))
      .def_readonly("sigma", &GaussianKernelParams::sigma);

  m.def(
      "kernel_block",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma) {
        return kernel_block(a, b, GaussianKernelParams(sigma));
      },
      py::arg("a"), py::arg("b"), py::arg("sigma"));

  // --- boxes / evaluation ---------------------------------------------------
  py::class_<Box>(m, "Box")
      .def(py::init<double, double, double, double>(), py::arg("x1"), py::arg("y1"),
           py::arg("x2"), py::arg("y2"))
      .def_readonly("x1", &Box::x1)
      .def_readonly("y1", &Box::y1)
      .def_readonly("x2", &Box::x2)
      .def_readonly("y2", &Box::y2)
      .def("area", &Box::area)
      .def("__repr__", [](const Box& b) {
        return "Box(" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " +
               std::to_string(b.x2) + ", " + std::to_string(b.y2) + ")";
      });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("nms", &nms, py::arg("boxes"), py::arg("scores"), py::arg("iou_thresh"));

  py::class_<Detection>(m, "Detection")
      .def(py::init([](int image_index, int class_id, const Box& box, double conf) {
             return Detection{image_index, class_id, box, conf};
           }),
           py::arg("image_index"), py::arg("class_id"), py::arg("box"),
           py::arg("confidence"))
      .def_readonly("image_index", &Detection::image_index)
      .def_readonly("class_id", &Detection::class_id)
      .def_readonly("box", &Detection::box)
      .def_readonly("confidence", &Detection::confidence);

  py::class_<ClassAP>(m, "ClassAP")
      .def_readonly("defined", &ClassAP::defined)
      .def_readonly("ap", &ClassAP::ap)
      .def_readonly("tp", &ClassAP::tp)
      .def_readonly("fp", &ClassAP::fp)
      .def_readonly("num_gt", &ClassAP::num_gt);

  py::class_<APReport>(m, "APReport")
      .def_readonly("per_class", &APReport::per_class)
      .def_readonly("map", &APReport::map);

  m.def("voc07_ap", &voc07_ap, py::arg("detections"), py::arg("gts"),
        py::arg("match_iou") = 0.5);

  // --- dataset --------------------------------------------------------------
  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("classes", &SyntheticConfig::classes)
      .def_readwrite("dim", &SyntheticConfig::dim)
      .def_readwrite("images", &SyntheticConfig::images)
      .def_readwrite("positives_per_class_per_image",
                     &SyntheticConfig::positives_per_class_per_image)
      .def_readwrite("background_per_image", &SyntheticConfig::background_per_image)
      .def_readwrite("imbalance", &SyntheticConfig::imbalance)
      .def_readwrite("margin", &SyntheticConfig::margin)
      .def_readwrite("cluster_sigma", &SyntheticConfig::cluster_sigma)
      .def_readwrite("hard_fraction", &SyntheticConfig::hard_fraction)
      .def_readwrite("jitter_per_gt", &SyntheticConfig::jitter_per_gt);

  py::class_<DetectionDataset>(m, "DetectionDataset")
      .def_readonly("d", &DetectionDataset::d)
      .def_readonly("class_names", &DetectionDataset::class_names)
      .def_property_readonly("features",
                             [](const DetectionDataset& ds) { return ds.features; })
      .def_property_readonly("num_images", [](const DetectionDataset& ds) {
        return ds.images.size();
      });

  m.def("generate_synthetic", &generate_synthetic, py::arg("config"), py::arg("seed"));
  m.def("load_dataset", &load_dataset, py::arg("dir"));
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("dir"));

  // --- solver ---------------------------------------------------------------
  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("max_cg_iterations", &SolverConfig::max_cg_iterations)
      .def_readwrite("cg_tolerance", &SolverConfig::cg_tolerance)
      .def_readwrite("tile_rows", &SolverConfig::tile_rows);

  py::class_<TrainMeta>(m, "TrainMeta")
      .def_readonly("n", &TrainMeta::n)
      .def_readonly("cg_iterations", &TrainMeta::cg_iterations)
      .def_readonly("final_residual", &TrainMeta::final_residual)
      .def_readonly("converged", &TrainMeta::converged)
      .def_readonly("residual_trace", &TrainMeta::residual_trace);

  py::class_<FalkonModel>(m, "FalkonModel")
      .def_property_readonly("centers", [](const FalkonModel& m_) { return m_.centers; })
      .def_property_readonly("alpha", [](const FalkonModel& m_) { return m_.alpha; })
      .def_property_readonly("sigma",
                             [](const FalkonModel& m_) { return m_.kernel.sigma; })
      .def_readonly("lambda_", &FalkonModel::lambda)
      .def_readonly("meta", &FalkonModel::meta);

  m.def(
      "falkon_train",
      [](const Eigen::MatrixXf& X, const Eigen::VectorXd& y,
         const Eigen::MatrixXf& centers, double lam, double sigma,
         const SolverConfig& cfg) {
        return falkon_train(X, y, centers, lam, GaussianKernelParams(sigma), cfg);
      },
      py::arg("X"), py::arg("y"), py::arg("centers"), py::arg("lambda_"),
      py::arg("sigma"), py::arg("config") = SolverConfig{});

  m.def(
      "falkon_predict",
      [](const FalkonModel& model, const Eigen::MatrixXf& queries) {
        return falkon_predict(model, queries);
      },
      py::arg("model"), py::arg("queries"));

  m.def(
      "nystrom_krr_direct",
      [](const Eigen::MatrixXf& X, const Eigen::VectorXd& y,
         const Eigen::MatrixXf& centers, double lam, double sigma) {
        return nystrom_krr_direct(X, y, centers, lam, GaussianKernelParams(sigma));
      },
      py::arg("X"), py::arg("y"), py::arg("centers"), py::arg("lambda_"),
      py::arg("sigma"));

  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));

  // --- sampling -------------------------------------------------------------
  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("a"), py::arg("b") = 0);
  m.def("sample_without_replacement", &sample_without_replacement,
        py::arg("pool_size"), py::arg("count"), py::arg("seed"));

  py::class_<CenterSelection>(m, "CenterSelection")
      .def_readonly("positive_indices", &CenterSelection::positive_indices)
      .def_readonly("negative_indices", &CenterSelection::negative_indices)
      .def_readonly("under_full", &CenterSelection::under_full);

  m.def("rebalanced_center_sampling", &rebalanced_center_sampling,
        py::arg("num_positives"), py::arg("num_negatives"), py::arg("m"),
        py::arg("seed"));

  // --- bootstrap / ensemble -------------------------------------------------
  py::class_<BootstrapConfig>(m, "BootstrapConfig")
      .def(py::init<>())
      .def_readwrite("n_b", &BootstrapConfig::n_b)
      .def_readwrite("batch", &BootstrapConfig::batch)
      .def_readwrite("m", &BootstrapConfig::m)
      .def_readwrite("lambda_", &BootstrapConfig::lambda)
      .def_readwrite("sigma", &BootstrapConfig::sigma)
      .def_readwrite("tau_hard", &BootstrapConfig::tau_hard)
      .def_readwrite("tau_easy", &BootstrapConfig::tau_easy)
      .def_readwrite("hard_cap", &BootstrapConfig::hard_cap)
      .def_readwrite("other_class_negatives", &BootstrapConfig::other_class_negatives)
      .def_readwrite("bbox_ridge", &BootstrapConfig::bbox_ridge)
      .def_readwrite("seed", &BootstrapConfig::seed)
      .def_readwrite("threads", &BootstrapConfig::threads);

  py::class_<ClassifierEnsemble>(m, "ClassifierEnsemble")
      .def_readonly("class_names", &ClassifierEnsemble::class_names)
      .def_property_readonly("num_classes", &ClassifierEnsemble::num_classes);

  m.def(
      "train_ensemble",
      [](const DetectionDataset& ds, const BootstrapConfig& cfg) {
        EnsembleTrainResult r = train_ensemble(ds, cfg);
        return py::make_tuple(std::move(r.ensemble), std::move(r.errors));
      },
      py::arg("dataset"), py::arg("config"));

  m.def("save_ensemble", &save_ensemble, py::arg("ensemble"), py::arg("dir"));
  m.def("load_ensemble", &load_ensemble, py::arg("dir"));

  py::class_<DetectConfig>(m, "DetectConfig")
      .def(py::init<>())
      .def_readwrite("score_thresh", &DetectConfig::score_thresh)
      .def_readwrite("nms_iou", &DetectConfig::nms_iou);

  m.def("detect", &detect, py::arg("ensemble"), py::arg("dataset"),
        py::arg("config") = DetectConfig{});
  m.def("evaluate_map", &evaluate_map, py::arg("detections"), py::arg("dataset"),
        py::arg("match_iou") = 0.5);
}
