#include "unfilter/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "unfilter/errors.hpp"
#include "unfilter/filters.hpp"
#include "unfilter/image.hpp"
#include "unfilter/rng.hpp"

namespace unfilter {

namespace fs = std::filesystem;

namespace {

std::string sanitize_id(const std::string& stem) {
  std::string id = stem;
  for (char& c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return id.empty() ? std::string("image") : id;
}

}  // namespace

std::vector<std::string> DatasetManifest::image_ids() const {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (seen.insert(e.image_id).second) ids.push_back(e.image_id);
  }
  return ids;
}

void DatasetManifest::check_complete() const {
  std::map<std::string, std::map<std::string, int>> counts;
  for (const auto& e : entries) ++counts[e.image_id][e.filter];
  for (const auto& [id, per_filter] : counts) {
    auto expect_one = [&](const std::string& f) {
      auto it = per_filter.find(f);
      const int n = it == per_filter.end() ? 0 : it->second;
      if (n != 1) {
        throw ValidationError("manifest: image '" + id + "' has " + std::to_string(n) +
                              " entries for filter '" + f + "'");
      }
    };
    expect_one(std::string(kOriginalName));
    for (const auto& f : filters) expect_one(f);
    if (per_filter.size() != filters.size() + 1) {
      throw ValidationError("manifest: image '" + id + "' has entries for unlisted filters");
    }
  }
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["seed"] = seed;
  j["image_size"] = {height, width};
  j["registry_version"] = registry_version;
  j["filters"] = filters;
  auto es = nlohmann::json::array();
  for (const auto& e : entries) {
    es.push_back({{"image_id", e.image_id}, {"filter", e.filter}, {"path", e.path}});
  }
  j["entries"] = es;
  auto sk = nlohmann::json::array();
  for (const auto& s : skipped) sk.push_back({{"file", s.file}, {"reason", s.reason}});
  j["skipped"] = sk;
  return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    const int version = j.value("format_version", kFormatVersion);
    if (version != kFormatVersion) {
      throw ValidationError("unsupported manifest format_version " + std::to_string(version));
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.height = j.at("image_size").at(0).get<int>();
    m.width = j.at("image_size").at(1).get<int>();
    m.registry_version = j.value("registry_version", 0);
    if (j.contains("filters")) {
      m.filters = j.at("filters").get<std::vector<std::string>>();
    }
    for (const auto& e : j.at("entries")) {
      m.entries.push_back({e.at("image_id").get<std::string>(), e.at("filter").get<std::string>(),
                           e.at("path").get<std::string>()});
    }
    if (!j.contains("filters")) {
      std::set<std::string> fs;
      for (const auto& e : m.entries) {
        if (e.filter != kOriginalName) fs.insert(e.filter);
      }
      m.filters.assign(fs.begin(), fs.end());
    }
    if (j.contains("skipped")) {
      for (const auto& s : j.at("skipped")) {
        m.skipped.push_back({s.at("file").get<std::string>(), s.at("reason").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void DatasetManifest::save(const fs::path& file) const {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + file.string());
  out << to_json().dump(2) << '\n';
}

DatasetManifest DatasetManifest::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest: " + file.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("manifest is not valid JSON: " + std::string(e.what()));
  }
}

std::uint64_t image_seed(std::uint64_t global_seed, const std::string& image_id) {
  return splitmix64(global_seed ^ fnv1a64(image_id));
}

DatasetManifest synthesize_dataset(const fs::path& src_dir, const fs::path& out_dir,
                                   const SynthOptions& opts) {
  if (!fs::is_directory(src_dir)) throw IoError("source directory not found: " + src_dir.string());
  if (opts.height < kMinImageSide || opts.width < kMinImageSide) {
    throw ShapeError("output size must be at least 8x8");
  }

  std::vector<FilterSpec> specs;
  if (opts.filters.empty()) {
    specs = FilterRegistry::builtin().filters();
  } else {
    for (const auto& name : opts.filters) specs.push_back(FilterRegistry::builtin().get(name));
  }

  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(src_dir)) {
    if (de.is_regular_file() && de.path().filename().string().front() != '.') {
      files.push_back(de.path());
    }
  }
  std::sort(files.begin(), files.end());

  DatasetManifest manifest;
  manifest.seed = opts.seed;
  manifest.height = opts.height;
  manifest.width = opts.width;
  manifest.registry_version = FilterRegistry::builtin().version();
  for (const auto& s : specs) manifest.filters.push_back(s.name);

  std::set<std::string> used_ids;
  for (const auto& file : files) {
    RgbImage img;
    try {
      img = load_image(file);
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << file.filename().string() << ": " << e.what() << '\n';
      manifest.skipped.push_back({file.filename().string(), e.what()});
      continue;
    }
    std::string id = sanitize_id(file.stem().string());
    for (int n = 2; used_ids.count(id) != 0; ++n) {
      id = sanitize_id(file.stem().string()) + "_" + std::to_string(n);
    }
    used_ids.insert(id);

    const RgbImage base = resize_bilinear(img, opts.height, opts.width);
    const std::uint64_t seed = image_seed(opts.seed, id);

    const std::string orig_rel = std::string(kOriginalName) + "/" + id + ".png";
    save_png(base, out_dir / orig_rel);
    manifest.entries.push_back({id, std::string(kOriginalName), orig_rel});
    for (const auto& spec : specs) {
      const std::string rel = spec.name + "/" + id + ".png";
      save_png(apply_filter(base, spec, seed), out_dir / rel);
      manifest.entries.push_back({id, spec.name, rel});
    }
  }

  if (used_ids.empty()) {
    throw IoError("no decodable images in " + src_dir.string());
  }
  manifest.save(out_dir / kManifestName);
  return manifest;
}

}  // namespace unfilter
