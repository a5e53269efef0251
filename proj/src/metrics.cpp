#include "unfilter/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "unfilter/color.hpp"
#include "unfilter/errors.hpp"

namespace unfilter {

namespace {

void require_same_shape(const RgbImage& a, const RgbImage& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()));
  }
}

std::vector<double> luma601(const RgbImage& img) {
  const RgbImage unit = img.to_unit();
  std::vector<double> y(static_cast<std::size_t>(unit.height()) * unit.width());
  auto px = unit.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
  }
  return y;
}

std::vector<double> gaussian_1d(int size, double sigma) {
  std::vector<double> k(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// 'valid' separable filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& ky, const std::vector<double>& kx) {
  const int oh = h - static_cast<int>(ky.size()) + 1;
  const int ow = w - static_cast<int>(kx.size()) + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kx.size(); ++k) acc += kx[k] * src[y * w + x + k];
      tmp[y * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < ky.size(); ++k) acc += ky[k] * tmp[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& opts) {
  require_same_shape(a, b, "ssim");
  const int h = a.height();
  const int w = a.width();
  const auto ky = gaussian_1d(std::min(opts.window, h), opts.sigma);
  const auto kx = gaussian_1d(std::min(opts.window, w), opts.sigma);

  const auto ya = luma601(a);
  const auto yb = luma601(b);
  std::vector<double> aa(ya.size()), bb(ya.size()), ab(ya.size());
  for (std::size_t i = 0; i < ya.size(); ++i) {
    aa[i] = ya[i] * ya[i];
    bb[i] = yb[i] * yb[i];
    ab[i] = ya[i] * yb[i];
  }
  const auto mu_a = filter_valid(ya, h, w, ky, kx);
  const auto mu_b = filter_valid(yb, h, w, ky, kx);
  const auto s_aa = filter_valid(aa, h, w, ky, kx);
  const auto s_bb = filter_valid(bb, h, w, ky, kx);
  const auto s_ab = filter_valid(ab, h, w, ky, kx);

  const double c1 = std::pow(opts.k1 * opts.dynamic_range, 2.0);
  const double c2 = std::pow(opts.k2 * opts.dynamic_range, 2.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = s_aa[i] - ma * ma;
    const double vb = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double psnr(const RgbImage& a, const RgbImage& b) {
  require_same_shape(a, b, "psnr");
  const RgbImage ua = a.to_unit();
  const RgbImage ub = b.to_unit();
  auto pa = ua.data();
  auto pb = ub.data();
  double se = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(pa.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double image_delta_e(const RgbImage& a, const RgbImage& b) {
  require_same_shape(a, b, "image_delta_e");
  const RgbImage ua = a.to_unit();
  const RgbImage ub = b.to_unit();
  auto pa = ua.data();
  auto pb = ub.data();
  double total = 0.0;
  const std::size_t n = pa.size() / 3;
  for (std::size_t i = 0; i < n; ++i) {
    const LabColor la = srgb_to_lab(pa[3 * i], pa[3 * i + 1], pa[3 * i + 2]);
    const LabColor lb = srgb_to_lab(pb[3 * i], pb[3 * i + 1], pb[3 * i + 2]);
    total += ciede2000(la, lb);
  }
  return total / static_cast<double>(n);
}

}  // namespace unfilter
