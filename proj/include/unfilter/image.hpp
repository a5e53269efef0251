#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace unfilter {

enum class ColorSpace {
  kSrgbUnit,         // sRGB-encoded values in [0, 1]
  kGeneratorSigned,  // sRGB-encoded values mapped to [-1, 1]
};

inline constexpr int kMinImageSide = 8;

/// Interleaved H x W x 3 float raster tagged with its value range.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width, ColorSpace space = ColorSpace::kSrgbUnit);
  RgbImage(int height, int width, std::vector<float> pixels,
           ColorSpace space = ColorSpace::kSrgbUnit);

  static RgbImage uniform(int height, int width, float r, float g, float b);

  int height() const { return height_; }
  int width() const { return width_; }
  ColorSpace color_space() const { return space_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  float& at(int y, int x, int c) { return pixels_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }

  std::span<float> data() { return pixels_; }
  std::span<const float> data() const { return pixels_; }

  float min_value() const { return space_ == ColorSpace::kSrgbUnit ? 0.0f : -1.0f; }
  float max_value() const { return 1.0f; }

  void clamp();
  bool same_shape(const RgbImage& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  RgbImage to_signed() const;
  RgbImage to_unit() const;
  RgbImage flipped_horizontal() const;
  RgbImage crop(int y0, int x0, int height, int width) const;

  bool operator==(const RgbImage& other) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int height_ = 0;
  int width_ = 0;
  ColorSpace space_ = ColorSpace::kSrgbUnit;
  std::vector<float> pixels_;
};

// Bilinear resampling (half-pixel centres, edge clamped).
RgbImage resize_bilinear(const RgbImage& img, int height, int width);

// PNG/JPEG/... decode into srgb_unit. Throws IoError when undecodable.
RgbImage load_image(const std::filesystem::path& path);
// 8-bit PNG encode with fixed compression settings so output bytes are
// reproducible.
void save_png(const RgbImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> to_bytes(const RgbImage& img);
RgbImage from_bytes(int height, int width, std::span<const std::uint8_t> rgb);

}  // namespace unfilter
