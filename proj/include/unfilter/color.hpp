#pragma once

#include <array>

namespace unfilter {

// CIE L*a*b* relative to the D65 white point.
struct LabColor {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;

  bool operator==(const LabColor&) const = default;
};

// sRGB (IEC 61966-2-1) components in [0, 1].
LabColor srgb_to_lab(double r, double g, double b);
inline LabColor srgb_to_lab(const std::array<double, 3>& rgb) {
  return srgb_to_lab(rgb[0], rgb[1], rgb[2]);
}
// Unclamped; out-of-gamut colors may fall outside [0, 1].
std::array<double, 3> lab_to_srgb(const LabColor& lab);

// CIEDE2000 colour difference with kL = kC = kH = 1.
double ciede2000(const LabColor& c1, const LabColor& c2);

}  // namespace unfilter
