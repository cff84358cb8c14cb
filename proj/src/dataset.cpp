#include "falkdet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "falkdet/bbox_refine.hpp"
#include "falkdet/sampling.hpp"

namespace falkdet {

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

std::vector<LabeledRegion> assign_labels(const DetectionDataset& dataset,
                                         const LabelingConfig& config) {
  if (!(config.tau_neg >= 0 && config.tau_neg < config.tau_pos && config.tau_pos <= 1))
    throw std::invalid_argument("assign_labels: need 0 <= tau_neg < tau_pos <= 1");

  std::vector<LabeledRegion> out;
  for (int ii = 0; ii < static_cast<int>(dataset.images.size()); ++ii) {
    const ImageEntry& img = dataset.images[ii];
    std::vector<bool> gt_covered(img.ground_truths.size(), false);
    for (const RegionProposal& prop : img.proposals) {
      double best = 0.0;
      int best_gt = -1;
      for (int g = 0; g < static_cast<int>(img.ground_truths.size()); ++g) {
        const double v = iou(prop.box, img.ground_truths[g].box);
        if (v > best) { best = v; best_gt = g; }
      }
      LabeledRegion lr;
      lr.image_index = ii;
      lr.feat_row = prop.feat_row;
      lr.box = prop.box;
      if (best_gt >= 0 && best >= config.tau_pos) {
        lr.label = img.ground_truths[best_gt].class_id;
        lr.matched_gt = best_gt;
        if (best >= 0.999) gt_covered[best_gt] = true;
        out.push_back(lr);
      } else if (best < config.tau_neg) {
        lr.label = -1;
        out.push_back(lr);
      }
      // ambiguous band [tau_neg, tau_pos): discarded
    }
    // inject GT boxes not already present as exact-overlap positives
    for (int g = 0; g < static_cast<int>(img.ground_truths.size()); ++g) {
      const GroundTruth& gt = img.ground_truths[g];
      if (gt_covered[g] || gt.feat_row < 0) continue;
      LabeledRegion lr;
      lr.image_index = ii;
      lr.feat_row = gt.feat_row;
      lr.box = gt.box;
      lr.label = gt.class_id;
      lr.matched_gt = g;
      out.push_back(lr);
    }
  }
  return out;
}

namespace {

[[noreturn]] void ingest_error(const std::filesystem::path& file, int line,
                               const std::string& what) {
  throw std::runtime_error("ingestion error in " + file.string() + ":" +
                           std::to_string(line) + ": " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_num(const std::string& s, const std::filesystem::path& file, int line) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    ingest_error(file, line, "malformed number '" + s + "'");
  }
}

}  // namespace

DetectionDataset load_dataset(const std::filesystem::path& dir) {
  DetectionDataset ds;

  const auto meta_path = dir / "meta.txt";
  std::ifstream meta(meta_path);
  if (!meta) throw std::runtime_error("missing file: " + meta_path.string());
  std::string line;
  int num_images = 0;
  int lineno = 0;
  while (std::getline(meta, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) ingest_error(meta_path, lineno, "expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "d") ds.d = static_cast<int>(parse_num(val, meta_path, lineno));
    else if (key == "classes") {
      for (const auto& name : split_csv(val))
        if (!name.empty()) ds.class_names.push_back(name);
    } else if (key == "images") num_images = static_cast<int>(parse_num(val, meta_path, lineno));
    else ingest_error(meta_path, lineno, "unknown key '" + key + "'");
  }
  if (ds.d < 1) ingest_error(meta_path, 1, "invalid feature dimension");

  const auto feat_path = dir / "features.bin";
  std::ifstream fb(feat_path, std::ios::binary | std::ios::ate);
  if (!fb) throw std::runtime_error("missing file: " + feat_path.string());
  const std::streamoff bytes = fb.tellg();
  if (bytes % (sizeof(float) * ds.d) != 0)
    throw std::runtime_error("ingestion error in " + feat_path.string() +
                             ": size not a multiple of d*4 bytes");
  const Eigen::Index rows = bytes / (sizeof(float) * ds.d);
  ds.features.resize(rows, ds.d);
  fb.seekg(0);
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, ds.d);
  fb.read(reinterpret_cast<char*>(rm.data()), bytes);
  if (!fb) throw std::runtime_error("ingestion error in " + feat_path.string() + ": short read");
  ds.features = rm;

  std::unordered_map<std::string, int> image_index;
  auto image_of = [&](const std::string& id) {
    auto it = image_index.find(id);
    if (it != image_index.end()) return it->second;
    const int idx = static_cast<int>(ds.images.size());
    image_index.emplace(id, idx);
    ds.images.push_back(ImageEntry{id, {}, {}});
    return idx;
  };

  const auto prop_path = dir / "proposals.csv";
  std::ifstream pf(prop_path);
  if (!pf) throw std::runtime_error("missing file: " + prop_path.string());
  lineno = 0;
  while (std::getline(pf, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "image_id,x1,y1,x2,y2,feat_row")
        ingest_error(prop_path, 1, "bad header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) ingest_error(prop_path, lineno, "expected 6 fields");
    RegionProposal rp;
    try {
      rp.box = Box(parse_num(f[1], prop_path, lineno), parse_num(f[2], prop_path, lineno),
                   parse_num(f[3], prop_path, lineno), parse_num(f[4], prop_path, lineno));
    } catch (const std::invalid_argument& e) {
      ingest_error(prop_path, lineno, e.what());
    }
    rp.feat_row = static_cast<int>(parse_num(f[5], prop_path, lineno));
    if (rp.feat_row < 0 || rp.feat_row >= rows)
      ingest_error(prop_path, lineno, "feat_row out of range");
    ds.images[image_of(f[0])].proposals.push_back(rp);
  }

  const auto gt_path = dir / "groundtruth.csv";
  std::ifstream gf(gt_path);
  if (!gf) throw std::runtime_error("missing file: " + gt_path.string());
  lineno = 0;
  while (std::getline(gf, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "image_id,class_id,x1,y1,x2,y2,feat_row")
        ingest_error(gt_path, 1, "bad header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) ingest_error(gt_path, lineno, "expected 7 fields");
    GroundTruth gt;
    gt.class_id = static_cast<int>(parse_num(f[1], gt_path, lineno));
    if (gt.class_id < 0 || gt.class_id >= ds.num_classes())
      ingest_error(gt_path, lineno, "class_id out of range");
    try {
      gt.box = Box(parse_num(f[2], gt_path, lineno), parse_num(f[3], gt_path, lineno),
                   parse_num(f[4], gt_path, lineno), parse_num(f[5], gt_path, lineno));
    } catch (const std::invalid_argument& e) {
      ingest_error(gt_path, lineno, e.what());
    }
    gt.feat_row = static_cast<int>(parse_num(f[6], gt_path, lineno));
    if (gt.feat_row < -1 || gt.feat_row >= rows)
      ingest_error(gt_path, lineno, "feat_row out of range");
    ds.images[image_of(f[0])].ground_truths.push_back(gt);
  }

  (void)num_images;  // informational; image list is driven by the CSVs
  return ds;
}

void save_dataset(const DetectionDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ofstream meta(dir / "meta.txt");
    meta << "d=" << ds.d << "\n";
    meta << "classes=";
    for (size_t i = 0; i < ds.class_names.size(); ++i)
      meta << (i ? "," : "") << ds.class_names[i];
    meta << "\n";
    meta << "images=" << ds.images.size() << "\n";
  }
  {
    std::ofstream pf(dir / "proposals.csv");
    pf << "image_id,x1,y1,x2,y2,feat_row\n";
    pf.precision(17);
    for (const auto& img : ds.images)
      for (const auto& p : img.proposals)
        pf << img.id << ',' << p.box.x1 << ',' << p.box.y1 << ',' << p.box.x2 << ','
           << p.box.y2 << ',' << p.feat_row << "\n";
  }
  {
    std::ofstream gf(dir / "groundtruth.csv");
    gf << "image_id,class_id,x1,y1,x2,y2,feat_row\n";
    gf.precision(17);
    for (const auto& img : ds.images)
      for (const auto& g : img.ground_truths)
        gf << img.id << ',' << g.class_id << ',' << g.box.x1 << ',' << g.box.y1 << ','
           << g.box.x2 << ',' << g.box.y2 << ',' << g.feat_row << "\n";
  }
  {
    std::ofstream fb(dir / "features.bin", std::ios::binary);
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = ds.features;
    fb.write(reinterpret_cast<const char*>(rm.data()),
             static_cast<std::streamsize>(sizeof(float)) * rm.size());
  }
}

Eigen::VectorXf class_prototype(const SyntheticConfig& cfg, int class_id) {
  Eigen::VectorXf mu = Eigen::VectorXf::Zero(cfg.dim);
  if (class_id < cfg.dim) {
    mu(class_id) = static_cast<float>(cfg.margin);
  } else {
    // more classes than axes: deterministic random direction per class
    std::mt19937_64 rng(derive_seed(0xfa1cde7u, static_cast<std::uint64_t>(class_id)));
    std::normal_distribution<double> g(0, 1);
    Eigen::VectorXd v(cfg.dim);
    for (int i = 0; i < cfg.dim; ++i) v(i) = g(rng);
    mu = (v.normalized() * cfg.margin).cast<float>();
  }
  return mu;
}

DetectionDataset generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.classes < 1 || cfg.dim < 1 || cfg.images < 1)
    throw std::invalid_argument("generate_synthetic: classes, dim, images must be >= 1");
  if (cfg.positives_per_class_per_image < 0 || cfg.hard_fraction < 0 ||
      cfg.hard_fraction > 1)
    throw std::invalid_argument("generate_synthetic: invalid config");

  int bg_per_image = cfg.background_per_image;
  if (cfg.imbalance > 0) {
    const double pos_total =
        static_cast<double>(cfg.classes) * cfg.positives_per_class_per_image * cfg.images;
    bg_per_image = static_cast<int>(std::llround(cfg.imbalance * pos_total / cfg.images));
  }

  // box layout: GT grid in the top band, background boxes strictly below it
  const double S = 40.0;         // box edge
  const double canvas = 1e6;
  const double gt_band = cfg.classes * 3 * S + 4 * S;
  if (cfg.positives_per_class_per_image * 3 * S + S > canvas)
    throw std::invalid_argument("generate_synthetic: too many positives per image for layout");

  DetectionDataset ds;
  ds.d = cfg.dim;
  for (int c = 0; c < cfg.classes; ++c) ds.class_names.push_back("class" + std::to_string(c));

  std::vector<Eigen::VectorXf> protos(cfg.classes);
  for (int c = 0; c < cfg.classes; ++c) protos[c] = class_prototype(cfg, c);

  std::vector<Eigen::VectorXf> rows;
  auto add_row = [&](const Eigen::VectorXf& f) {
    rows.push_back(f);
    return static_cast<int>(rows.size()) - 1;
  };

  std::mt19937_64 rng(derive_seed(seed, 0x5e17));
  std::normal_distribution<double> gauss(0, 1);
  std::uniform_real_distribution<double> unif(0, 1);

  // Box-offset deltas leave a fixed linear imprint on the feature, so the RLS
  // refiner has recoverable localization signal (as CNN region features do).
  // Config-deterministic, like the prototypes, so train/test splits share it.
  Eigen::MatrixXf delta_enc(cfg.dim, 4);
  {
    std::mt19937_64 enc_rng(derive_seed(0xfa1cde7u, 0x6e0));
    std::normal_distribution<double> g(0, 1);
    const double scale = 16.0 / std::sqrt(static_cast<double>(cfg.dim));
    for (int i = 0; i < delta_enc.size(); ++i)
      delta_enc.data()[i] = static_cast<float>(scale * g(enc_rng));
  }

  auto gaussian_vec = [&](const Eigen::VectorXf& mean, double sigma) {
    Eigen::VectorXf f(cfg.dim);
    for (int i = 0; i < cfg.dim; ++i)
      f(i) = mean(i) + static_cast<float>(sigma * gauss(rng));
    return f;
  };

  for (int im = 0; im < cfg.images; ++im) {
    ImageEntry img;
    img.id = "img" + std::to_string(im);
    for (int c = 0; c < cfg.classes; ++c) {
      for (int k = 0; k < cfg.positives_per_class_per_image; ++k) {
        const double x = S + k * 3 * S;
        const double y = S + c * 3 * S;
        const Box gt_box(x, y, x + S, y + S);
        const Eigen::VectorXf feat = gaussian_vec(protos[c], cfg.cluster_sigma);
        const int row = add_row(feat);
        img.proposals.push_back(RegionProposal{gt_box, row});
        img.ground_truths.push_back(GroundTruth{c, gt_box, row});
        for (int j = 0; j < cfg.jitter_per_gt; ++j) {
          // shifted copy, IoU with the GT around 0.6-0.8
          const double dx = (0.08 + 0.08 * unif(rng)) * S * (unif(rng) < 0.5 ? -1 : 1);
          const double dy = (0.08 + 0.08 * unif(rng)) * S * (unif(rng) < 0.5 ? -1 : 1);
          const Box jb(gt_box.x1 + dx, gt_box.y1 + dy, gt_box.x2 + dx, gt_box.y2 + dy);
          const BoxDeltas t = compute_targets(jb, gt_box);
          const Eigen::Vector4f tv(static_cast<float>(t.tx), static_cast<float>(t.ty),
                                   static_cast<float>(t.tw), static_cast<float>(t.th));
          img.proposals.push_back(RegionProposal{
              jb, add_row(gaussian_vec(protos[c], cfg.cluster_sigma) + delta_enc * tv)});
        }
      }
    }
    for (int k = 0; k < bg_per_image; ++k) {
      const double x = unif(rng) * (canvas - S);
      const double y = gt_band + unif(rng) * (canvas - gt_band - S);
      const Box bb(x, y, x + S, y + S);
      Eigen::VectorXf feat;
      if (unif(rng) < cfg.hard_fraction) {
        // hard negative: on a shell 1..2 margins away from a random prototype
        const int c = static_cast<int>(unif(rng) * cfg.classes) % cfg.classes;
        Eigen::VectorXd dir(cfg.dim);
        for (int i = 0; i < cfg.dim; ++i) dir(i) = gauss(rng);
        dir.normalize();
        const double r = cfg.margin * (1.0 + unif(rng));
        feat = protos[c] + (dir * r).cast<float>();
      } else {
        feat = gaussian_vec(Eigen::VectorXf::Zero(cfg.dim), cfg.cluster_sigma);
      }
      img.proposals.push_back(RegionProposal{bb, add_row(feat)});
    }
    ds.images.push_back(std::move(img));
  }

  ds.features.resize(static_cast<Eigen::Index>(rows.size()), cfg.dim);
  for (size_t i = 0; i < rows.size(); ++i) ds.features.row(static_cast<Eigen::Index>(i)) = rows[i];
  return ds;
}

}  // namespace falkdet
