#include "unfilter/color.hpp"

#include <cmath>
#include <numbers>

namespace unfilter {

namespace {

constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
  return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
double rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

LabColor srgb_to_lab(double r, double g, double b) {
  const double lr = srgb_to_linear(r);
  const double lg = srgb_to_linear(g);
  const double lb = srgb_to_linear(b);
  const double x = 0.4124564 * lr + 0.3575761 * lg + 0.1804375 * lb;
  const double y = 0.2126729 * lr + 0.7151522 * lg + 0.0721750 * lb;
  const double z = 0.0193339 * lr + 0.1191920 * lg + 0.9503041 * lb;
  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> lab_to_srgb(const LabColor& lab) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double x = kXn * lab_f_inv(fx);
  const double y = kYn * (lab.L > kKappa * kEpsilon ? fy * fy * fy : lab.L / kKappa);
  const double z = kZn * lab_f_inv(fz);
  const double lr = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
  const double lg = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
  const double lb = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
  return {linear_to_srgb(lr), linear_to_srgb(lg), linear_to_srgb(lb)};
}

double ciede2000(const LabColor& c1, const LabColor& c2) {
  const double c1ab = std::hypot(c1.a, c1.b);
  const double c2ab = std::hypot(c2.a, c2.b);
  const double cbar = (c1ab + c2ab) / 2.0;
  const double cbar7 = std::pow(cbar, 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(cbar7 / (cbar7 + std::pow(25.0, 7.0))));

  const double a1p = (1.0 + g) * c1.a;
  const double a2p = (1.0 + g) * c2.a;
  const double c1p = std::hypot(a1p, c1.b);
  const double c2p = std::hypot(a2p, c2.b);

  auto hue = [](double b, double ap) {
    if (b == 0.0 && ap == 0.0) return 0.0;
    double h = deg(std::atan2(b, ap));
    return h < 0.0 ? h + 360.0 : h;
  };
  const double h1p = hue(c1.b, a1p);
  const double h2p = hue(c2.b, a2p);

  const double dLp = c2.L - c1.L;
  const double dCp = c2p - c1p;
  double dhp = 0.0;
  if (c1p * c2p != 0.0) {
    dhp = h2p - h1p;
    if (dhp > 180.0) dhp -= 360.0;
    else if (dhp < -180.0) dhp += 360.0;
  }
  const double dHp = 2.0 * std::sqrt(c1p * c2p) * std::sin(rad(dhp) / 2.0);

  const double lbarp = (c1.L + c2.L) / 2.0;
  const double cbarp = (c1p + c2p) / 2.0;
  double hbarp = h1p + h2p;
  if (c1p * c2p != 0.0) {
    if (std::abs(h1p - h2p) <= 180.0) hbarp /= 2.0;
    else if (h1p + h2p < 360.0) hbarp = (hbarp + 360.0) / 2.0;
    else hbarp = (hbarp - 360.0) / 2.0;
  }

  const double t = 1.0 - 0.17 * std::cos(rad(hbarp - 30.0)) + 0.24 * std::cos(rad(2.0 * hbarp)) +
                   0.32 * std::cos(rad(3.0 * hbarp + 6.0)) - 0.20 * std::cos(rad(4.0 * hbarp - 63.0));
  const double dtheta = 30.0 * std::exp(-std::pow((hbarp - 275.0) / 25.0, 2.0));
  const double cbarp7 = std::pow(cbarp, 7.0);
  const double rc = 2.0 * std::sqrt(cbarp7 / (cbarp7 + std::pow(25.0, 7.0)));
  const double lterm = (lbarp - 50.0) * (lbarp - 50.0);
  const double sl = 1.0 + 0.015 * lterm / std::sqrt(20.0 + lterm);
  const double sc = 1.0 + 0.045 * cbarp;
  const double sh = 1.0 + 0.015 * cbarp * t;
  const double rt = -std::sin(rad(2.0 * dtheta)) * rc;

  const double tl = dLp / sl;
  const double tc = dCp / sc;
  const double th = dHp / sh;
  return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

}  // namespace unfilter
