#include "falkdet/serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace falkdet {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void check_magic(std::istream& is, const char* magic, const std::filesystem::path& path) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw std::runtime_error("bad magic in " + path.string());
}

}  // namespace

void save_model(const FalkonModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write("FLKN", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<std::uint32_t>(model.m()));
  put_u32(os, static_cast<std::uint32_t>(model.dim()));
  put_f64(os, model.kernel.sigma);
  put_f64(os, model.lambda);
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
      model.centers;
  os.write(reinterpret_cast<const char*>(rm.data()),
           static_cast<std::streamsize>(sizeof(float)) * rm.size());
  os.write(reinterpret_cast<const char*>(model.alpha.data()),
           static_cast<std::streamsize>(sizeof(double)) * model.alpha.size());
}

FalkonModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  check_magic(is, "FLKN", path);
  const std::uint32_t version = get_u32(is);
  if (version != 1)
    throw std::runtime_error("unsupported FLKN version in " + path.string());
  const std::uint32_t m = get_u32(is);
  const std::uint32_t d = get_u32(is);
  const double sigma = get_f64(is);
  const double lambda = get_f64(is);

  FalkonModel model;
  model.kernel = GaussianKernelParams(sigma);
  model.lambda = lambda;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(m, d);
  is.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(sizeof(float)) * rm.size());
  model.centers = rm;
  model.alpha.resize(m);
  is.read(reinterpret_cast<char*>(model.alpha.data()),
          static_cast<std::streamsize>(sizeof(double)) * m);
  if (!is) throw std::runtime_error("truncated model file " + path.string());
  return model;
}

void save_rls(const RlsModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write("RLSB", 4);
  put_u32(os, static_cast<std::uint32_t>(model.weights.rows()));
  put_f64(os, model.ridge);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
      model.weights;
  os.write(reinterpret_cast<const char*>(rm.data()),
           static_cast<std::streamsize>(sizeof(double)) * rm.size());
  os.write(reinterpret_cast<const char*>(model.bias.data()), sizeof(double) * 4);
}

RlsModel load_rls(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  check_magic(is, "RLSB", path);
  const std::uint32_t d = get_u32(is);
  RlsModel model;
  model.ridge = get_f64(is);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(d, 4);
  is.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(sizeof(double)) * rm.size());
  model.weights = rm;
  is.read(reinterpret_cast<char*>(model.bias.data()), sizeof(double) * 4);
  if (!is) throw std::runtime_error("truncated RLS file " + path.string());
  return model;
}

void save_ensemble(const ClassifierEnsemble& ensemble, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "ensemble.txt");
  manifest.precision(17);
  manifest << "classes=";
  for (size_t i = 0; i < ensemble.class_names.size(); ++i)
    manifest << (i ? "," : "") << ensemble.class_names[i];
  manifest << "\n";
  manifest << "tau_pos=" << ensemble.labeling.tau_pos << "\n";
  manifest << "tau_neg=" << ensemble.labeling.tau_neg << "\n";
  manifest << "n_b=" << ensemble.config.n_b << "\n";
  manifest << "batch=" << ensemble.config.batch << "\n";
  manifest << "m=" << ensemble.config.m << "\n";
  manifest << "lambda=" << ensemble.config.lambda << "\n";
  manifest << "sigma=" << ensemble.config.sigma << "\n";
  manifest << "tau_hard=" << ensemble.config.tau_hard << "\n";
  manifest << "tau_easy=" << ensemble.config.tau_easy << "\n";
  manifest << "seed=" << ensemble.config.seed << "\n";

  for (int c = 0; c < ensemble.num_classes(); ++c) {
    if (!ensemble.models[c]) continue;
    const std::string& name = ensemble.class_names[c];
    save_model(ensemble.models[c]->classifier, dir / ("model_" + name + ".bin"));
    if (ensemble.models[c]->refiner)
      save_rls(*ensemble.models[c]->refiner, dir / ("bbox_" + name + ".bin"));
    if (c < static_cast<int>(ensemble.traces.size())) {
      std::ofstream tf(dir / ("trace_" + name + ".csv"));
      tf << "iteration,n_hard,n_chosen,train_seconds\n";
      tf.precision(3);
      tf << std::fixed;
      for (const IterationStats& s : ensemble.traces[c].iterations)
        tf << s.iteration << ',' << s.n_hard << ',' << s.n_chosen << ','
           << s.train_seconds << "\n";
    }
  }
}

ClassifierEnsemble load_ensemble(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "ensemble.txt");
  if (!manifest) throw std::runtime_error("missing file: " + (dir / "ensemble.txt").string());
  ClassifierEnsemble ens;
  std::string line;
  while (std::getline(manifest, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "classes") {
      std::stringstream ss(val);
      std::string name;
      while (std::getline(ss, name, ','))
        if (!name.empty()) ens.class_names.push_back(name);
    } else if (key == "tau_pos") ens.labeling.tau_pos = std::stod(val);
    else if (key == "tau_neg") ens.labeling.tau_neg = std::stod(val);
    else if (key == "n_b") ens.config.n_b = std::stoi(val);
    else if (key == "batch") ens.config.batch = std::stoi(val);
    else if (key == "m") ens.config.m = std::stoi(val);
    else if (key == "lambda") ens.config.lambda = std::stod(val);
    else if (key == "sigma") ens.config.sigma = std::stod(val);
    else if (key == "tau_hard") ens.config.tau_hard = std::stod(val);
    else if (key == "tau_easy") ens.config.tau_easy = std::stod(val);
    else if (key == "seed") ens.config.seed = std::stoull(val);
  }
  ens.config.labeling = ens.labeling;
  ens.models.resize(ens.class_names.size());
  ens.traces.resize(ens.class_names.size());
  for (int c = 0; c < ens.num_classes(); ++c) {
    const auto model_path = dir / ("model_" + ens.class_names[c] + ".bin");
    if (!std::filesystem::exists(model_path)) continue;
    ClassModel cm;
    cm.classifier = load_model(model_path);
    const auto bbox_path = dir / ("bbox_" + ens.class_names[c] + ".bin");
    if (std::filesystem::exists(bbox_path)) cm.refiner = load_rls(bbox_path);
    ens.models[c] = std::move(cm);
  }
  return ens;
}

void write_detections_csv(const std::vector<Detection>& detections,
                          const DetectionDataset& dataset,
                          const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "image_id,class_id,x1,y1,x2,y2,confidence\n";
  os.precision(17);
  for (const Detection& d : detections)
    os << dataset.images[d.image_index].id << ',' << d.class_id << ',' << d.box.x1
       << ',' << d.box.y1 << ',' << d.box.x2 << ',' << d.box.y2 << ','
       << d.confidence << "\n";
}

void write_ap_report_csv(const APReport& report, const DetectionDataset& dataset,
                         const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "class,ap,tp,fp,num_gt\n";
  os.precision(17);
  for (int c = 0; c < static_cast<int>(report.per_class.size()); ++c) {
    const ClassAP& ap = report.per_class[c];
    os << dataset.class_names[c] << ',';
    if (ap.defined) os << ap.ap;
    else os << "absent";
    os << ',' << ap.tp << ',' << ap.fp << ',' << ap.num_gt << "\n";
  }
  os << "mAP," << report.map << "\n";
}

}  // namespace falkdet
