#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "unfilter/image.hpp"

namespace testsupport {

// Procedural "natural" image: smooth gradients, a few soft disks and mild
// noise, all drawn from `seed`.
unfilter::RgbImage scene(int height, int width, std::uint64_t seed);

// Writes `count` scenes as PNGs named img_000.png, ... into `dir`.
void write_scenes(const std::filesystem::path& dir, int count, int size, std::uint64_t seed);

// Fresh empty directory under the system temp dir; removed by the destructor.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

std::string file_sha256(const std::filesystem::path& p);

// True when `t` has exactly the given sizes.
bool shape_is(const torch::Tensor& t, std::vector<std::int64_t> sizes);

// Mean over pixels of (max - min channel).
double mean_saturation(const unfilter::RgbImage& img);

}  // namespace testsupport
