#include "unfilter/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "unfilter/errors.hpp"

namespace unfilter {

namespace {

void check_dims(int height, int width) {
  if (height < kMinImageSide || width < kMinImageSide) {
    throw ShapeError("image must be at least " + std::to_string(kMinImageSide) + "x" +
                     std::to_string(kMinImageSide) + ", got " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
}

}  // namespace

RgbImage::RgbImage(int height, int width, ColorSpace space)
    : height_(height), width_(width), space_(space) {
  check_dims(height, width);
  pixels_.assign(static_cast<std::size_t>(height) * width * 3,
                 space == ColorSpace::kSrgbUnit ? 0.0f : -1.0f);
}

RgbImage::RgbImage(int height, int width, std::vector<float> pixels, ColorSpace space)
    : height_(height), width_(width), space_(space), pixels_(std::move(pixels)) {
  check_dims(height, width);
  if (pixels_.size() != static_cast<std::size_t>(height) * width * 3) {
    throw ShapeError("pixel buffer holds " + std::to_string(pixels_.size()) +
                     " values, expected " + std::to_string(height * width * 3));
  }
}

RgbImage RgbImage::uniform(int height, int width, float r, float g, float b) {
  RgbImage img(height, width);
  for (std::size_t i = 0; i < img.pixels_.size(); i += 3) {
    img.pixels_[i] = r;
    img.pixels_[i + 1] = g;
    img.pixels_[i + 2] = b;
  }
  img.clamp();
  return img;
}

void RgbImage::clamp() {
  const float lo = min_value();
  for (float& v : pixels_) v = std::clamp(v, lo, 1.0f);
}

RgbImage RgbImage::to_signed() const {
  if (space_ == ColorSpace::kGeneratorSigned) return *this;
  RgbImage out = *this;
  out.space_ = ColorSpace::kGeneratorSigned;
  for (float& v : out.pixels_) v = v * 2.0f - 1.0f;
  out.clamp();
  return out;
}

RgbImage RgbImage::to_unit() const {
  if (space_ == ColorSpace::kSrgbUnit) return *this;
  RgbImage out = *this;
  out.space_ = ColorSpace::kSrgbUnit;
  for (float& v : out.pixels_) v = (v + 1.0f) * 0.5f;
  out.clamp();
  return out;
}

RgbImage RgbImage::flipped_horizontal() const {
  RgbImage out = *this;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = at(y, width_ - 1 - x, c);
    }
  }
  return out;
}

RgbImage RgbImage::crop(int y0, int x0, int height, int width) const {
  if (y0 < 0 || x0 < 0 || y0 + height > height_ || x0 + width > width_) {
    throw ShapeError("crop window out of bounds");
  }
  RgbImage out(height, width, space_);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = at(y0 + y, x0 + x, c);
    }
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& img, int height, int width) {
  if (img.height() == height && img.width() == width) return img;
  RgbImage out(height, width, img.color_space());
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bottom = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = static_cast<float>(top * (1 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> to_bytes(const RgbImage& img) {
  const RgbImage unit = img.to_unit();
  std::vector<std::uint8_t> out(unit.size());
  auto src = unit.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

RgbImage from_bytes(int height, int width, std::span<const std::uint8_t> rgb) {
  std::vector<float> px(rgb.size());
  std::transform(rgb.begin(), rgb.end(), px.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return RgbImage(height, width, std::move(px));
}

RgbImage load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("cannot decode image: " + path.string());
  if (bgr.depth() != CV_8U) bgr.convertTo(bgr, CV_8U);
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  if (!rgb.isContinuous()) rgb = rgb.clone();
  return from_bytes(rgb.rows, rgb.cols,
                    std::span<const std::uint8_t>(rgb.data, rgb.total() * 3));
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
  auto bytes = to_bytes(img);
  cv::Mat rgb(img.height(), img.width(), CV_8UC3, bytes.data());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imwrite(path.string(), bgr, params)) {
    throw IoError("cannot write png: " + path.string());
  }
}

}  // namespace unfilter
