#pragma once

#include "unfilter/image.hpp"

namespace unfilter {

// Value reported by psnr() for identical images (zero MSE).
inline constexpr double kPsnrCap = 99.0;

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Mean SSIM over the 'valid' region of a gaussian-weighted window, computed on
// Rec.601 luma of the srgb_unit images. Images smaller than the window use a
// window truncated to the image size.
double ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& opts = {});

// 10*log10(1/MSE) over all channels with peak 1.0, capped at kPsnrCap.
double psnr(const RgbImage& a, const RgbImage& b);

// Mean per-pixel CIEDE2000 after sRGB -> Lab conversion.
double image_delta_e(const RgbImage& a, const RgbImage& b);

}  // namespace unfilter
