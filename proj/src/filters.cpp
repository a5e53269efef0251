#include "unfilter/filters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "unfilter/errors.hpp"
#include "unfilter/rng.hpp"

namespace unfilter {

extern const char* const kBuiltinRegistryJson;  // generated from data/filters.json

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool in_unit(float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; }

[[noreturn]] void reject(const FilterPrimitive& p, const std::string& why) {
  throw ValidationError("invalid " + std::string(primitive_kind(p)) + " primitive: " + why);
}

float luma709(float r, float g, float b) { return 0.2126f * r + 0.7152f * g + 0.0722f * b; }

float soft_light(float backdrop, float source) {
  if (source <= 0.5f) {
    return backdrop - (1.0f - 2.0f * source) * backdrop * (1.0f - backdrop);
  }
  const float d = backdrop <= 0.25f ? ((16.0f * backdrop - 12.0f) * backdrop + 4.0f) * backdrop
                                    : std::sqrt(backdrop);
  return backdrop + (2.0f * source - 1.0f) * (d - backdrop);
}

float blend(BlendMode mode, float backdrop, float source) {
  switch (mode) {
    case BlendMode::kScreen:
      return 1.0f - (1.0f - backdrop) * (1.0f - source);
    case BlendMode::kMultiply:
      return backdrop * source;
    case BlendMode::kSoftLight:
      return soft_light(backdrop, source);
  }
  return backdrop;
}

float eval_curve(const std::vector<std::pair<float, float>>& pts, float v) {
  auto it = std::upper_bound(pts.begin(), pts.end(), v,
                             [](float x, const auto& p) { return x < p.first; });
  if (it == pts.begin()) return pts.front().second;
  if (it == pts.end()) return pts.back().second;
  const auto& [x0, y0] = *(it - 1);
  const auto& [x1, y1] = *it;
  const float t = (v - x0) / (x1 - x0);
  return y0 + t * (y1 - y0);
}

template <class F>
RgbImage map_pixels(const RgbImage& img, F&& f) {
  RgbImage out = img;
  auto px = out.data();
  for (std::size_t i = 0; i < px.size(); i += 3) f(px[i], px[i + 1], px[i + 2]);
  out.clamp();
  return out;
}

RgbImage blur(const RgbImage& img, float sigma) {
  if (sigma < 1e-6f) return img;
  const int half = static_cast<int>(std::ceil(3.0f * sigma));
  std::vector<float> kernel(2 * half + 1);
  float sum = 0.0f;
  for (int i = -half; i <= half; ++i) {
    kernel[i + half] = std::exp(-0.5f * (i * i) / (sigma * sigma));
    sum += kernel[i + half];
  }
  for (float& k : kernel) k /= sum;

  const int h = img.height();
  const int w = img.width();
  RgbImage tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float acc = 0.0f;
        for (int k = -half; k <= half; ++k) {
          acc += kernel[k + half] * img.at(y, std::clamp(x + k, 0, w - 1), c);
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  RgbImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float acc = 0.0f;
        for (int k = -half; k <= half; ++k) {
          acc += kernel[k + half] * tmp.at(std::clamp(y + k, 0, h - 1), x, c);
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  out.clamp();
  return out;
}

RgbImage vignette(const RgbImage& img, const Vignette& v) {
  if (v.strength <= 0.0f) return img;
  RgbImage out = img;
  const double cy = (img.height() - 1) / 2.0;
  const double cx = (img.width() - 1) / 2.0;
  const double corner = std::hypot(cx, cy);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double r = std::hypot(x - cx, y - cy) / corner;
      double t = 0.0;
      if (v.inner_radius < 1.0f && r > v.inner_radius) {
        t = std::clamp((r - v.inner_radius) / (1.0 - v.inner_radius), 0.0, 1.0);
        t = t * t * (3.0 - 2.0 * t);
      }
      const auto factor = static_cast<float>(1.0 - v.strength * t);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) *= factor;
    }
  }
  out.clamp();
  return out;
}

RgbImage grain(const RgbImage& img, const Grain& g, std::uint64_t image_seed) {
  if (g.sigma <= 0.0f) return img;
  RgbImage out = img;
  std::mt19937_64 gen(splitmix64(g.seed ^ splitmix64(image_seed)));
  auto px = out.data();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const auto n = static_cast<float>(standard_normal(gen) * g.sigma);
    px[i] += n;
    px[i + 1] += n;
    px[i + 2] += n;
  }
  out.clamp();
  return out;
}

RgbImage hue_rotate(const RgbImage& img, float degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double m[3][3] = {
      {0.213 + c * 0.787 - s * 0.213, 0.715 - c * 0.715 - s * 0.715, 0.072 - c * 0.072 + s * 0.928},
      {0.213 - c * 0.213 + s * 0.143, 0.715 + c * 0.285 + s * 0.140, 0.072 - c * 0.072 - s * 0.283},
      {0.213 - c * 0.213 - s * 0.787, 0.715 - c * 0.715 + s * 0.715, 0.072 + c * 0.928 + s * 0.072},
  };
  return map_pixels(img, [&](float& r, float& g, float& b) {
    const double in[3] = {r, g, b};
    r = static_cast<float>(m[0][0] * in[0] + m[0][1] * in[1] + m[0][2] * in[2]);
    g = static_cast<float>(m[1][0] * in[0] + m[1][1] * in[1] + m[1][2] * in[2]);
    b = static_cast<float>(m[2][0] * in[0] + m[2][1] * in[1] + m[2][2] * in[2]);
  });
}

const char* curve_channel_name(CurveChannel c) {
  switch (c) {
    case CurveChannel::kRed: return "red";
    case CurveChannel::kGreen: return "green";
    case CurveChannel::kBlue: return "blue";
    case CurveChannel::kAll: return "all";
  }
  return "all";
}

const char* blend_mode_name(BlendMode m) {
  switch (m) {
    case BlendMode::kScreen: return "screen";
    case BlendMode::kMultiply: return "multiply";
    case BlendMode::kSoftLight: return "softlight";
  }
  return "screen";
}

Rgb rgb_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("rgb must be a 3-element array");
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

}  // namespace

std::string_view primitive_kind(const FilterPrimitive& p) {
  return std::visit(Overloaded{
                        [](const Brightness&) { return std::string_view("brightness"); },
                        [](const Contrast&) { return std::string_view("contrast"); },
                        [](const Saturation&) { return std::string_view("saturation"); },
                        [](const HueRotate&) { return std::string_view("hue_rotate"); },
                        [](const ChannelCurve&) { return std::string_view("channel_curve"); },
                        [](const Tint&) { return std::string_view("tint"); },
                        [](const Vignette&) { return std::string_view("vignette"); },
                        [](const Grain&) { return std::string_view("grain"); },
                        [](const GaussianBlur&) { return std::string_view("gaussian_blur"); },
                        [](const Overlay&) { return std::string_view("overlay"); },
                    },
                    p);
}

void validate(const FilterPrimitive& p) {
  std::visit(
      Overloaded{
          [&](const Brightness& b) {
            if (!std::isfinite(b.delta) || std::abs(b.delta) > 1.0f) reject(p, "delta must lie in [-1, 1]");
          },
          [&](const Contrast& c) {
            if (!std::isfinite(c.gain) || c.gain < 0.0f) reject(p, "gain must be >= 0");
            if (!in_unit(c.pivot)) reject(p, "pivot must lie in [0, 1]");
          },
          [&](const Saturation& s) {
            if (!std::isfinite(s.gain) || s.gain < 0.0f) reject(p, "gain must be >= 0");
          },
          [&](const HueRotate& h) {
            if (!std::isfinite(h.degrees)) reject(p, "degrees must be finite");
          },
          [&](const ChannelCurve& c) {
            if (c.points.size() < 2) reject(p, "needs at least two control points");
            if (c.points.front().first != 0.0f || c.points.back().first != 1.0f) {
              reject(p, "control points must start at in=0 and end at in=1");
            }
            for (std::size_t i = 0; i < c.points.size(); ++i) {
              if (!in_unit(c.points[i].first) || !in_unit(c.points[i].second)) {
                reject(p, "control point " + std::to_string(i) + " outside [0, 1]");
              }
              if (i > 0 && !(c.points[i].first > c.points[i - 1].first)) {
                reject(p, "control points must be strictly increasing in `in` (point " +
                              std::to_string(i) + ")");
              }
            }
          },
          [&](const Tint& t) {
            if (!in_unit(t.opacity)) reject(p, "opacity must lie in [0, 1]");
            for (float v : t.rgb) {
              if (!in_unit(v)) reject(p, "rgb components must lie in [0, 1]");
            }
          },
          [&](const Vignette& v) {
            if (!in_unit(v.strength)) reject(p, "strength must lie in [0, 1]");
            if (!in_unit(v.inner_radius)) reject(p, "inner_radius must lie in [0, 1]");
          },
          [&](const Grain& g) {
            if (!std::isfinite(g.sigma) || g.sigma < 0.0f) reject(p, "sigma must be >= 0");
          },
          [&](const GaussianBlur& b) {
            if (!std::isfinite(b.radius_px) || b.radius_px < 0.0f || b.radius_px > 64.0f) {
              reject(p, "radius_px must lie in [0, 64]");
            }
          },
          [&](const Overlay& o) {
            if (!in_unit(o.opacity)) reject(p, "opacity must lie in [0, 1]");
            for (float v : o.rgb) {
              if (!in_unit(v)) reject(p, "rgb components must lie in [0, 1]");
            }
          },
      },
      p);
}

RgbImage apply_primitive(const RgbImage& img, const FilterPrimitive& p, std::uint64_t image_seed) {
  validate(p);
  const RgbImage src = img.to_unit();
  return std::visit(
      Overloaded{
          [&](const Brightness& b) {
            return map_pixels(src, [&](float& r, float& g, float& bl) {
              r += b.delta;
              g += b.delta;
              bl += b.delta;
            });
          },
          [&](const Contrast& c) {
            return map_pixels(src, [&](float& r, float& g, float& b) {
              r = (r - c.pivot) * c.gain + c.pivot;
              g = (g - c.pivot) * c.gain + c.pivot;
              b = (b - c.pivot) * c.gain + c.pivot;
            });
          },
          [&](const Saturation& s) {
            return map_pixels(src, [&](float& r, float& g, float& b) {
              const float l = luma709(r, g, b);
              r = l + s.gain * (r - l);
              g = l + s.gain * (g - l);
              b = l + s.gain * (b - l);
            });
          },
          [&](const HueRotate& h) { return hue_rotate(src, h.degrees); },
          [&](const ChannelCurve& c) {
            return map_pixels(src, [&](float& r, float& g, float& b) {
              if (c.channel == CurveChannel::kRed || c.channel == CurveChannel::kAll) r = eval_curve(c.points, r);
              if (c.channel == CurveChannel::kGreen || c.channel == CurveChannel::kAll) g = eval_curve(c.points, g);
              if (c.channel == CurveChannel::kBlue || c.channel == CurveChannel::kAll) b = eval_curve(c.points, b);
            });
          },
          [&](const Tint& t) {
            return map_pixels(src, [&](float& r, float& g, float& b) {
              r += t.opacity * (t.rgb[0] - r);
              g += t.opacity * (t.rgb[1] - g);
              b += t.opacity * (t.rgb[2] - b);
            });
          },
          [&](const Vignette& v) { return vignette(src, v); },
          [&](const Grain& g) { return grain(src, g, image_seed); },
          [&](const GaussianBlur& b) { return blur(src, b.radius_px); },
          [&](const Overlay& o) {
            return map_pixels(src, [&](float& r, float& g, float& b) {
              r += o.opacity * (blend(o.mode, r, o.rgb[0]) - r);
              g += o.opacity * (blend(o.mode, g, o.rgb[1]) - g);
              b += o.opacity * (blend(o.mode, b, o.rgb[2]) - b);
            });
          },
      },
      p);
}

const std::array<std::string_view, kNumFilters>& filter_names() {
  static constexpr std::array<std::string_view, kNumFilters> kNames = {
      "1977",    "Amaro",     "Brannan",  "Clarendon", "Gingham", "He-Fe",
      "Hudson",  "Lo-Fi",     "Mayfair",  "Nashville", "Perpetua", "Sutro",
      "Toaster", "Valencia",  "Willow",   "X-Pro II"};
  return kNames;
}

std::vector<std::string> class_names() {
  std::vector<std::string> out(filter_names().begin(), filter_names().end());
  out.emplace_back(kOriginalName);
  return out;
}

int class_index(std::string_view name) {
  const auto& names = filter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  if (name == kOriginalName) return static_cast<int>(kNumFilters);
  std::string msg = "unknown filter '" + std::string(name) + "'; valid names:";
  for (auto n : names) msg += " '" + std::string(n) + "'";
  msg += " 'original'";
  throw LookupError(msg);
}

void validate(const FilterSpec& spec) {
  if (spec.name == kOriginalName && !spec.primitives.empty()) {
    throw ValidationError("filter 'original' must have no primitives");
  }
  if (spec.name != kOriginalName && spec.primitives.empty()) {
    throw ValidationError("filter '" + spec.name + "' has no primitives");
  }
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    try {
      validate(spec.primitives[i]);
    } catch (const ValidationError& e) {
      throw ValidationError("filter '" + spec.name + "', primitive #" + std::to_string(i) + ": " +
                            e.what());
    }
  }
}

RgbImage apply_filter(const RgbImage& img, const FilterSpec& spec, std::uint64_t image_seed) {
  validate(spec);
  RgbImage out = img.to_unit();
  for (const auto& p : spec.primitives) out = apply_primitive(out, p, image_seed);
  return out;
}

nlohmann::json to_json(const FilterPrimitive& p) {
  nlohmann::json j;
  j["kind"] = primitive_kind(p);
  std::visit(Overloaded{
                 [&](const Brightness& b) { j["delta"] = b.delta; },
                 [&](const Contrast& c) {
                   j["gain"] = c.gain;
                   j["pivot"] = c.pivot;
                 },
                 [&](const Saturation& s) { j["gain"] = s.gain; },
                 [&](const HueRotate& h) { j["degrees"] = h.degrees; },
                 [&](const ChannelCurve& c) {
                   j["channel"] = curve_channel_name(c.channel);
                   auto pts = nlohmann::json::array();
                   for (auto [in, out] : c.points) pts.push_back({in, out});
                   j["points"] = pts;
                 },
                 [&](const Tint& t) {
                   j["rgb"] = t.rgb;
                   j["opacity"] = t.opacity;
                 },
                 [&](const Vignette& v) {
                   j["strength"] = v.strength;
                   j["inner_radius"] = v.inner_radius;
                 },
                 [&](const Grain& g) {
                   j["sigma"] = g.sigma;
                   j["seed"] = g.seed;
                 },
                 [&](const GaussianBlur& b) { j["radius_px"] = b.radius_px; },
                 [&](const Overlay& o) {
                   j["rgb"] = o.rgb;
                   j["mode"] = blend_mode_name(o.mode);
                   j["opacity"] = o.opacity;
                 },
             },
             p);
  return j;
}

FilterPrimitive primitive_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "brightness") return Brightness{j.at("delta").get<float>()};
    if (kind == "contrast") return Contrast{j.at("gain").get<float>(), j.value("pivot", 0.5f)};
    if (kind == "saturation") return Saturation{j.at("gain").get<float>()};
    if (kind == "hue_rotate") return HueRotate{j.at("degrees").get<float>()};
    if (kind == "channel_curve") {
      ChannelCurve c;
      const auto ch = j.at("channel").get<std::string>();
      if (ch == "red") c.channel = CurveChannel::kRed;
      else if (ch == "green") c.channel = CurveChannel::kGreen;
      else if (ch == "blue") c.channel = CurveChannel::kBlue;
      else if (ch == "all") c.channel = CurveChannel::kAll;
      else throw ValidationError("unknown curve channel '" + ch + "'");
      c.points.clear();
      for (const auto& pt : j.at("points")) {
        if (!pt.is_array() || pt.size() != 2) throw ValidationError("curve points are [in, out] pairs");
        c.points.emplace_back(pt[0].get<float>(), pt[1].get<float>());
      }
      return c;
    }
    if (kind == "tint") return Tint{rgb_from_json(j.at("rgb")), j.at("opacity").get<float>()};
    if (kind == "vignette") {
      return Vignette{j.at("strength").get<float>(), j.at("inner_radius").get<float>()};
    }
    if (kind == "grain") return Grain{j.at("sigma").get<float>(), j.value("seed", std::uint64_t{0})};
    if (kind == "gaussian_blur") return GaussianBlur{j.at("radius_px").get<float>()};
    if (kind == "overlay") {
      Overlay o;
      o.rgb = rgb_from_json(j.at("rgb"));
      const auto mode = j.at("mode").get<std::string>();
      if (mode == "screen") o.mode = BlendMode::kScreen;
      else if (mode == "multiply") o.mode = BlendMode::kMultiply;
      else if (mode == "softlight") o.mode = BlendMode::kSoftLight;
      else throw ValidationError("unknown blend mode '" + mode + "'");
      o.opacity = j.at("opacity").get<float>();
      return o;
    }
    throw ValidationError("unknown primitive kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed primitive: ") + e.what());
  }
}

FilterRegistry FilterRegistry::from_json(const nlohmann::json& doc) {
  FilterRegistry reg;
  try {
    reg.version_ = doc.at("registry_version").get<int>();
    for (const auto& f : doc.at("filters")) {
      FilterSpec spec;
      spec.name = f.at("name").get<std::string>();
      for (const auto& p : f.at("primitives")) spec.primitives.push_back(primitive_from_json(p));
      validate(spec);
      reg.filters_.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed filter registry: ") + e.what());
  }
  for (std::size_t i = 0; i < reg.filters_.size(); ++i) {
    const auto& name = reg.filters_[i].name;
    if (name == kOriginalName) throw ValidationError("registry must not define 'original'");
    class_index(name);
    for (std::size_t j = 0; j < i; ++j) {
      if (reg.filters_[j].name == name) throw ValidationError("duplicate filter '" + name + "'");
    }
  }
  return reg;
}

FilterRegistry FilterRegistry::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open filter registry: " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("filter registry is not valid JSON: " + std::string(e.what()));
  }
}

const FilterRegistry& FilterRegistry::builtin() {
  static const FilterRegistry reg = from_json(nlohmann::json::parse(kBuiltinRegistryJson));
  return reg;
}

const FilterSpec& FilterRegistry::get(std::string_view name) const {
  for (const auto& f : filters_) {
    if (f.name == name) return f;
  }
  std::string msg = "unknown filter '" + std::string(name) + "'; valid names:";
  for (const auto& f : filters_) msg += " '" + f.name + "'";
  throw LookupError(msg);
}

FilterSpec builtin_filter(std::string_view name) {
  if (name == kOriginalName) return FilterSpec{std::string(kOriginalName), {}};
  return FilterRegistry::builtin().get(name);
}

}  // namespace unfilter
