#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace unfilter {

struct ManifestEntry {
  std::string image_id;
  std::string filter;  // one of the sixteen names, or "original"
  std::string path;    // relative to the dataset root, '/'-separated

  bool operator==(const ManifestEntry&) const = default;
};

struct SkippedFile {
  std::string file;
  std::string reason;

  bool operator==(const SkippedFile&) const = default;
};

// manifest.json of a synthesized dataset:
//   {"format_version": 1, "seed": S, "image_size": [H, W],
//    "filters": [...], "registry_version": V,
//    "entries": [{"image_id", "filter", "path"}, ...],
//    "skipped": [{"file", "reason"}, ...]}
struct DatasetManifest {
  static constexpr int kFormatVersion = 1;

  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  int registry_version = 0;
  std::vector<std::string> filters;
  std::vector<ManifestEntry> entries;
  std::vector<SkippedFile> skipped;

  std::vector<std::string> image_ids() const;
  // Throws ValidationError unless every image_id has exactly one entry per
  // listed filter plus one "original" entry.
  void check_complete() const;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);

  void save(const std::filesystem::path& file) const;
  static DatasetManifest load(const std::filesystem::path& file);
};

inline constexpr const char* kManifestName = "manifest.json";

struct SynthOptions {
  int height = 256;
  int width = 256;
  std::uint64_t seed = 0;
  // Empty means all sixteen built-in filters.
  std::vector<std::string> filters;
};

// Per-image seed for grain and other stochastic primitives.
std::uint64_t image_seed(std::uint64_t global_seed, const std::string& image_id);

// Reads every decodable image in `src_dir` (sorted by filename), resizes it
// and writes <out_dir>/<filter>/<image_id>.png for each filter plus
// <out_dir>/original/<image_id>.png, then manifest.json.
// Throws IoError when no image in `src_dir` decodes.
DatasetManifest synthesize_dataset(const std::filesystem::path& src_dir,
                                   const std::filesystem::path& out_dir, const SynthOptions& opts);

}  // namespace unfilter
