#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "unfilter/filters.hpp"
#include "unfilter/training.hpp"

namespace unfilter {

using ConfusionMatrix = std::array<std::array<std::int64_t, kNumClasses>, kNumClasses>;

struct ImageScore {
  std::string image_id;
  std::string filter;
  double ssim = 0.0;
  double psnr = 0.0;
  double delta_e = 0.0;
  // Same-backbone perceptual distance. Not comparable to LPIPS.
  double feat_dist = 0.0;
  // Filtered input scored against the original, before unfiltering.
  double baseline_ssim = 0.0;
  double baseline_psnr = 0.0;
  double baseline_delta_e = 0.0;
  std::string predicted;
};

struct OriginalScore {
  std::string image_id;
  double psnr = 0.0;  // unfiltered output vs the original input itself
  std::string predicted;
};

struct SkippedEval {
  std::string image_id;
  std::string filter;
  std::string reason;
};

struct Aggregates {
  std::size_t count = 0;
  double ssim = 0.0;
  double psnr = 0.0;
  double delta_e = 0.0;
  double feat_dist = 0.0;
  double baseline_ssim = 0.0;
  double baseline_psnr = 0.0;
  double baseline_delta_e = 0.0;
};

struct MetricsReport {
  std::vector<ImageScore> per_image;
  std::vector<OriginalScore> originals;
  std::vector<SkippedEval> skipped;
  ConfusionMatrix confusion{};  // rows: true class, columns: predicted class
  nlohmann::json config_echo = nlohmann::json::object();

  // Arithmetic means over per_image; empty when nothing was scored.
  std::optional<Aggregates> aggregates() const;
  // trace / sum of the confusion matrix; empty when it is all zeros.
  std::optional<double> accuracy() const;
  std::int64_t predictions() const;

  // {"per_image": [...], "originals": [...], "skipped": [...],
  //  "aggregates": {...} | null, "accuracy": x | null, "class_names": [...],
  //  "confusion": [[...] x17], "counts": {...}, "config_echo": {...}}
  nlohmann::json to_json() const;
};

struct EvalOptions {
  std::vector<std::string> filters;  // empty: every filter in the manifest
  int max_images = 0;                // 0: all
  bool include_originals = true;
  int batch_size = 8;
};

// Unfilters every filtered image of a synthesized dataset and scores it
// against its original. A directory without a manifest (or with no entries)
// yields an empty report.
MetricsReport evaluate_dir(LoadedModel& model, const std::filesystem::path& dataset_dir,
                           const EvalOptions& opts = {});
MetricsReport evaluate_dir(const std::filesystem::path& ckpt, const std::filesystem::path& dataset_dir,
                           const EvalOptions& opts = {});

// Mean relu3_2 semantic distance between two srgb_unit images.
double feat_dist(Backbone& backbone, const RgbImage& a, const RgbImage& b);

// Text confusion table (true class per row, predicted per column) restricted
// to `classes`; all seventeen when empty.
std::string format_confusion(const ConfusionMatrix& m, const std::vector<std::string>& classes = {});

}  // namespace unfilter
