#include "unfilter/evaluate.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "unfilter/dataset.hpp"
#include "unfilter/errors.hpp"
#include "unfilter/losses.hpp"
#include "unfilter/metrics.hpp"

namespace unfilter {

namespace fs = std::filesystem;

std::optional<Aggregates> MetricsReport::aggregates() const {
  if (per_image.empty()) return std::nullopt;
  Aggregates a;
  a.count = per_image.size();
  for (const auto& s : per_image) {
    a.ssim += s.ssim;
    a.psnr += s.psnr;
    a.delta_e += s.delta_e;
    a.feat_dist += s.feat_dist;
    a.baseline_ssim += s.baseline_ssim;
    a.baseline_psnr += s.baseline_psnr;
    a.baseline_delta_e += s.baseline_delta_e;
  }
  const double n = static_cast<double>(a.count);
  for (double* v : {&a.ssim, &a.psnr, &a.delta_e, &a.feat_dist, &a.baseline_ssim, &a.baseline_psnr,
                    &a.baseline_delta_e}) {
    *v /= n;
  }
  return a;
}

std::int64_t MetricsReport::predictions() const {
  std::int64_t total = 0;
  for (const auto& row : confusion) {
    for (auto v : row) total += v;
  }
  return total;
}

std::optional<double> MetricsReport::accuracy() const {
  const auto total = predictions();
  if (total == 0) return std::nullopt;
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) hits += confusion[i][i];
  return static_cast<double>(hits) / static_cast<double>(total);
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["per_image"] = nlohmann::json::array();
  for (const auto& s : per_image) {
    j["per_image"].push_back({{"image_id", s.image_id},
                              {"filter", s.filter},
                              {"ssim", s.ssim},
                              {"psnr", s.psnr},
                              {"delta_e", s.delta_e},
                              {"feat_dist", s.feat_dist},
                              {"baseline", {{"ssim", s.baseline_ssim},
                                            {"psnr", s.baseline_psnr},
                                            {"delta_e", s.baseline_delta_e}}},
                              {"predicted", s.predicted}});
  }
  j["originals"] = nlohmann::json::array();
  for (const auto& o : originals) {
    j["originals"].push_back({{"image_id", o.image_id}, {"psnr", o.psnr}, {"predicted", o.predicted}});
  }
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : skipped) {
    j["skipped"].push_back({{"image_id", s.image_id}, {"filter", s.filter}, {"reason", s.reason}});
  }
  if (const auto a = aggregates()) {
    j["aggregates"] = {{"count", a->count},
                       {"ssim", a->ssim},
                       {"psnr", a->psnr},
                       {"delta_e", a->delta_e},
                       {"feat_dist", a->feat_dist},
                       {"baseline_ssim", a->baseline_ssim},
                       {"baseline_psnr", a->baseline_psnr},
                       {"baseline_delta_e", a->baseline_delta_e}};
  } else {
    j["aggregates"] = nullptr;
  }
  if (const auto acc = accuracy()) {
    j["accuracy"] = *acc;
  } else {
    j["accuracy"] = nullptr;
  }
  j["class_names"] = class_names();
  j["confusion"] = confusion;
  j["counts"] = {{"scored", per_image.size()},
                 {"originals", originals.size()},
                 {"skipped", skipped.size()},
                 {"predictions", predictions()}};
  j["config_echo"] = config_echo;
  return j;
}

double feat_dist(Backbone& backbone, const RgbImage& a, const RgbImage& b) {
  if (!a.same_shape(b)) throw ShapeError("feat_dist: image shapes differ");
  torch::NoGradGuard no_grad;
  const auto fa = backbone->features(image_to_tensor(a), "relu3_2");
  const auto fb = backbone->features(image_to_tensor(b), "relu3_2");
  return semantic_distance(fa, fb).item<double>();
}

namespace {

struct Job {
  std::string image_id;
  std::string filter;
  fs::path input;
  fs::path original;
};

}  // namespace

MetricsReport evaluate_dir(LoadedModel& model, const fs::path& dataset_dir, const EvalOptions& opts) {
  MetricsReport report;
  report.config_echo = {{"dataset_dir", dataset_dir.string()},
                        {"filters", opts.filters},
                        {"max_images", opts.max_images},
                        {"include_originals", opts.include_originals},
                        {"checkpoint_step", model.step},
                        {"model", model.config.model.to_json()}};
  const auto manifest_path = dataset_dir / kManifestName;
  if (!fs::exists(manifest_path)) {
    if (!fs::is_directory(dataset_dir)) throw IoError("dataset directory not found: " + dataset_dir.string());
    return report;
  }
  const auto manifest = DatasetManifest::load(manifest_path);

  std::vector<std::string> filters = opts.filters.empty() ? manifest.filters : opts.filters;
  for (const auto& f : filters) class_index(f);
  auto ids = manifest.image_ids();
  if (opts.max_images > 0 && static_cast<std::size_t>(opts.max_images) < ids.size()) ids.resize(opts.max_images);

  std::map<std::string, std::string> paths;
  for (const auto& e : manifest.entries) paths[e.filter + "/" + e.image_id] = e.path;
  auto lookup = [&](const std::string& filter, const std::string& id) -> std::optional<fs::path> {
    auto it = paths.find(filter + "/" + id);
    if (it == paths.end()) return std::nullopt;
    const auto p = dataset_dir / it->second;
    if (!fs::exists(p)) return std::nullopt;
    return p;
  };

  std::vector<Job> jobs;
  for (const auto& id : ids) {
    const auto original = lookup(std::string(kOriginalName), id);
    for (const auto& f : filters) {
      const auto input = lookup(f, id);
      if (!input) continue;
      if (!original) {
        report.skipped.push_back({id, f, "missing original"});
        continue;
      }
      jobs.push_back({id, f, *input, *original});
    }
    if (opts.include_originals && original) jobs.push_back({id, std::string(kOriginalName), *original, *original});
  }

  const int s = model.config.model.image_size;
  auto backbone = model.generator->backbone();
  const std::size_t step = static_cast<std::size_t>(std::max(1, opts.batch_size));
  for (std::size_t start = 0; start < jobs.size(); start += step) {
    const auto end = std::min(jobs.size(), start + step);
    std::vector<RgbImage> inputs, targets;
    for (std::size_t k = start; k < end; ++k) {
      auto in = load_image(jobs[k].input);
      auto gt = load_image(jobs[k].original);
      if (in.height() != s || in.width() != s) in = resize_bilinear(in, s, s);
      if (gt.height() != s || gt.width() != s) gt = resize_bilinear(gt, s, s);
      inputs.push_back(std::move(in));
      targets.push_back(std::move(gt));
    }
    const auto results = unfilter_batch(model.generator, inputs);
    for (std::size_t k = start; k < end; ++k) {
      const auto& job = jobs[k];
      const auto& r = results[k - start];
      const auto& gt = targets[k - start];
      report.confusion[class_index(job.filter)][class_index(r.predicted_filter)] += 1;
      if (job.filter == kOriginalName) {
        report.originals.push_back({job.image_id, psnr(r.image, gt), r.predicted_filter});
        continue;
      }
      ImageScore sc;
      sc.image_id = job.image_id;
      sc.filter = job.filter;
      sc.ssim = ssim(r.image, gt);
      sc.psnr = psnr(r.image, gt);
      sc.delta_e = image_delta_e(r.image, gt);
      sc.feat_dist = feat_dist(backbone, r.image, gt);
      const auto& in = inputs[k - start];
      sc.baseline_ssim = ssim(in, gt);
      sc.baseline_psnr = psnr(in, gt);
      sc.baseline_delta_e = image_delta_e(in, gt);
      sc.predicted = r.predicted_filter;
      report.per_image.push_back(std::move(sc));
    }
  }
  return report;
}

MetricsReport evaluate_dir(const fs::path& ckpt, const fs::path& dataset_dir, const EvalOptions& opts) {
  auto model = load_model(ckpt);
  auto report = evaluate_dir(model, dataset_dir, opts);
  report.config_echo["checkpoint"] = ckpt.string();
  return report;
}

std::string format_confusion(const ConfusionMatrix& m, const std::vector<std::string>& classes) {
  const auto names = classes.empty() ? class_names() : classes;
  std::vector<int> idx;
  for (const auto& n : names) idx.push_back(class_index(n));
  std::size_t width = 9;
  for (const auto& n : names) width = std::max(width, n.size());
  std::ostringstream os;
  os << std::setw(static_cast<int>(width)) << "true\\pred";
  for (const auto& n : names) os << " " << std::setw(static_cast<int>(width)) << n;
  os << "\n";
  for (std::size_t r = 0; r < names.size(); ++r) {
    os << std::setw(static_cast<int>(width)) << names[r];
    for (int c : idx) os << " " << std::setw(static_cast<int>(width)) << m[idx[r]][c];
    os << "\n";
  }
  return os.str();
}

}  // namespace unfilter
