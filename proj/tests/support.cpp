#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "unfilter/archive.hpp"
#include "unfilter/rng.hpp"

namespace testsupport {

using unfilter::RgbImage;

RgbImage scene(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(unfilter::splitmix64(seed));
  auto u = [&] { return static_cast<float>(unfilter::uniform01(rng)); };
  RgbImage img(height, width);
  float c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = 0.15f + 0.7f * u();
    c1[c] = 0.15f + 0.7f * u();
  }
  const float angle = 6.2831853f * u();
  const float dx = std::cos(angle), dy = std::sin(angle);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float t = std::clamp(0.5f + ((x / float(width) - 0.5f) * dx + (y / float(height) - 0.5f) * dy), 0.f, 1.f);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = c0[c] * (1 - t) + c1[c] * t;
    }
  }
  const int disks = 3 + static_cast<int>(unfilter::uniform_index(rng, 4));
  for (int d = 0; d < disks; ++d) {
    const float cx = u() * width, cy = u() * height;
    const float r = (0.08f + 0.25f * u()) * std::min(width, height);
    float col[3];
    for (float& v : col) v = u();
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const float dist = std::hypot(x - cx, y - cy);
        const float a = std::clamp((r - dist) / 2.0f, 0.f, 1.f) * 0.85f;
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = img.at(y, x, c) * (1 - a) + col[c] * a;
      }
    }
  }
  for (auto& v : img.data()) v += 0.02f * static_cast<float>(unfilter::standard_normal(rng));
  img.clamp();
  return img;
}

void write_scenes(const std::filesystem::path& dir, int count, int size, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%03d.png", i);
    unfilter::save_png(scene(size, size, seed * 1000003ull + i), dir / name);
  }
}

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  do {
    path_ = base / ("unfilter_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  } while (std::filesystem::exists(path_));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string file_sha256(const std::filesystem::path& p) { return unfilter::sha256_file(p); }

double mean_saturation(const RgbImage& img) {
  double total = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
      total += std::max({r, g, b}) - std::min({r, g, b});
    }
  }
  return total / (static_cast<double>(img.height()) * img.width());
}

bool shape_is(const torch::Tensor& t, std::vector<std::int64_t> sizes) { return t.sizes().vec() == sizes; }

}  // namespace testsupport
