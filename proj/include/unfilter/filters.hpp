#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "unfilter/image.hpp"

namespace unfilter {

using Rgb = std::array<float, 3>;

// --- primitives ------------------------------------------------------------

struct Brightness {
  float delta = 0.0f;
};

struct Contrast {
  float gain = 1.0f;
  float pivot = 0.5f;
};

// Scales chroma around Rec.709 luma.
struct Saturation {
  float gain = 1.0f;
};

// Luminance-preserving hue rotation (the SVG feColorMatrix "hueRotate" matrix).
struct HueRotate {
  float degrees = 0.0f;
};

enum class CurveChannel { kRed, kGreen, kBlue, kAll };

// Monotone piecewise-linear tone curve. `in` strictly increasing, from 0 to 1.
struct ChannelCurve {
  CurveChannel channel = CurveChannel::kAll;
  std::vector<std::pair<float, float>> points = {{0.0f, 0.0f}, {1.0f, 1.0f}};
};

struct Tint {
  Rgb rgb = {0.0f, 0.0f, 0.0f};
  float opacity = 0.0f;
};

// Radial darkening; 0 inside `inner_radius`, smoothstep to full `strength`
// at the corners (radius 1).
struct Vignette {
  float strength = 0.0f;
  float inner_radius = 0.5f;
};

// Monochrome additive gaussian noise.
struct Grain {
  float sigma = 0.0f;
  std::uint64_t seed = 0;
};

// `radius_px` is the gaussian standard deviation in pixels.
struct GaussianBlur {
  float radius_px = 0.0f;
};

enum class BlendMode { kScreen, kMultiply, kSoftLight };

struct Overlay {
  Rgb rgb = {1.0f, 1.0f, 1.0f};
  BlendMode mode = BlendMode::kScreen;
  float opacity = 0.0f;
};

using FilterPrimitive = std::variant<Brightness, Contrast, Saturation, HueRotate, ChannelCurve,
                                     Tint, Vignette, Grain, GaussianBlur, Overlay>;

std::string_view primitive_kind(const FilterPrimitive& p);

// Throws ValidationError naming the primitive when a parameter is out of range.
void validate(const FilterPrimitive& p);

// `image_seed` is mixed into grain seeds so each image of a dataset gets its
// own (reproducible) noise realisation.
RgbImage apply_primitive(const RgbImage& img, const FilterPrimitive& p,
                         std::uint64_t image_seed = 0);

// --- filters ---------------------------------------------------------------

inline constexpr std::string_view kOriginalName = "original";
inline constexpr std::size_t kNumFilters = 16;
inline constexpr std::size_t kNumClasses = kNumFilters + 1;

// The sixteen emulated filters in class-index order. The class index of
// "original" is kNumFilters.
const std::array<std::string_view, kNumFilters>& filter_names();
// All seventeen class names (filters then "original").
std::vector<std::string> class_names();
// Class index for a filter name or "original"; throws LookupError.
int class_index(std::string_view name);

struct FilterSpec {
  std::string name;
  std::vector<FilterPrimitive> primitives;
};

void validate(const FilterSpec& spec);

RgbImage apply_filter(const RgbImage& img, const FilterSpec& spec, std::uint64_t image_seed = 0);

class FilterRegistry {
 public:
  static FilterRegistry from_json(const nlohmann::json& doc);
  static FilterRegistry from_file(const std::filesystem::path& path);
  // The registry compiled in from data/filters.json.
  static const FilterRegistry& builtin();

  int version() const { return version_; }
  // Throws LookupError listing the valid names.
  const FilterSpec& get(std::string_view name) const;
  const std::vector<FilterSpec>& filters() const { return filters_; }

 private:
  int version_ = 0;
  std::vector<FilterSpec> filters_;
};

// Registry lookup by name; "original" yields an empty spec.
FilterSpec builtin_filter(std::string_view name);

nlohmann::json to_json(const FilterPrimitive& p);
FilterPrimitive primitive_from_json(const nlohmann::json& j);

}  // namespace unfilter
