#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest_torch.hpp"

#include <cmath>
#include <random>

#include "support.hpp"
#include "unfilter/errors.hpp"
#include "unfilter/filters.hpp"
#include "unfilter/rng.hpp"

using namespace unfilter;

namespace {

double max_abs_diff(const RgbImage& a, const RgbImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, double(std::fabs(a.data()[i] - b.data()[i])));
  return m;
}

RgbImage random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RgbImage img(h, w);
  for (auto& v : img.data()) v = static_cast<float>(uniform01(rng));
  return img;
}

FilterPrimitive random_primitive(std::mt19937_64& rng) {
  auto u = [&] { return static_cast<float>(uniform01(rng)); };
  switch (uniform_index(rng, 10)) {
    case 0: return Brightness{u() * 2 - 1};
    case 1: return Contrast{u() * 3, u()};
    case 2: return Saturation{u() * 3};
    case 3: return HueRotate{u() * 720 - 360};
    case 4: {
      ChannelCurve c;
      c.channel = static_cast<CurveChannel>(uniform_index(rng, 4));
      c.points = {{0.f, u()}, {0.3f + 0.2f * u(), u()}, {1.f, u()}};
      return c;
    }
    case 5: return Tint{{u(), u(), u()}, u()};
    case 6: return Vignette{u(), u()};
    case 7: return Grain{u() * 0.2f, rng()};
    case 8: return GaussianBlur{u() * 3};
    default: return Overlay{{u(), u(), u()}, static_cast<BlendMode>(uniform_index(rng, 3)), u()};
  }
}

}  // namespace

TEST_CASE("brightness zero and neutral primitives are identities") {
  const auto img = testsupport::scene(32, 40, 1);
  const FilterPrimitive neutral[] = {Brightness{0.f}, Contrast{1.f, 0.5f}, Saturation{1.f}, HueRotate{0.f},
                                     ChannelCurve{}, Tint{{0.2f, 0.4f, 0.9f}, 0.f}, Vignette{0.f, 0.3f},
                                     Grain{0.f, 5}, GaussianBlur{0.f},
                                     Overlay{{0.3f, 0.1f, 0.9f}, BlendMode::kMultiply, 0.f}};
  for (const auto& p : neutral) {
    CAPTURE(primitive_kind(p));
    CHECK(max_abs_diff(apply_primitive(img, p), img) <= 1e-6);
  }
}

TEST_CASE("hue rotation by a full turn is the identity") {
  const auto img = random_image(16, 16, 3);
  CHECK(max_abs_diff(apply_primitive(img, HueRotate{360.f}), img) <= 1e-6);
}

TEST_CASE("brightness adds delta") {
  const auto img = RgbImage::uniform(8, 8, 0.5f, 0.5f, 0.5f);
  const auto out = apply_primitive(img, Brightness{0.1f});
  for (float v : out.data()) CHECK(v == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("vignette with zero strength is the identity for any radius") {
  const auto img = testsupport::scene(24, 24, 9);
  for (float r : {0.f, 0.25f, 0.9f, 1.f}) CHECK(max_abs_diff(apply_primitive(img, Vignette{0.f, r}), img) == 0.0);
}

TEST_CASE("contrast keeps mid-gray fixed") {
  const auto img = RgbImage::uniform(8, 8, 0.5f, 0.5f, 0.5f);
  CHECK(max_abs_diff(apply_primitive(img, Contrast{1.7f}), img) <= 1e-7);
}

TEST_CASE("outputs stay in range for random primitives") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto img = random_image(9, 11, rng());
    const auto p = random_primitive(rng);
    CAPTURE(primitive_kind(p));
    const auto out = apply_primitive(img, p, rng());
    REQUIRE(out.same_shape(img));
    for (float v : out.data()) {
      REQUIRE(v >= 0.f);
      REQUIRE(v <= 1.f);
    }
  }
}

TEST_CASE("grain is deterministic and depends on the image seed") {
  const auto img = testsupport::scene(16, 16, 2);
  const Grain g{0.1f, 42};
  CHECK(apply_primitive(img, g, 7) == apply_primitive(img, g, 7));
  CHECK_FALSE(apply_primitive(img, g, 7) == apply_primitive(img, g, 8));
}

TEST_CASE("malformed curves are rejected with the primitive named") {
  ChannelCurve bad;
  bad.points = {{0.f, 0.f}, {0.6f, 0.5f}, {0.4f, 0.7f}, {1.f, 1.f}};
  const auto img = RgbImage::uniform(8, 8, 0.5f, 0.5f, 0.5f);
  try {
    apply_primitive(img, bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("channel_curve") != std::string::npos);
  }
  ChannelCurve open_end;
  open_end.points = {{0.f, 0.f}, {0.9f, 1.f}};
  CHECK_THROWS_AS(validate(FilterPrimitive{open_end}), ValidationError);
  CHECK_THROWS_AS(validate(FilterPrimitive{Tint{{0.f, 0.f, 0.f}, 1.5f}}), ValidationError);
  CHECK_THROWS_AS(validate(FilterPrimitive{Grain{-0.1f, 0}}), ValidationError);
  CHECK_THROWS_AS(validate(FilterPrimitive{GaussianBlur{-1.f}}), ValidationError);
}

TEST_CASE("curve interpolates piecewise linearly") {
  ChannelCurve c;
  c.channel = CurveChannel::kRed;
  c.points = {{0.f, 0.f}, {0.5f, 0.8f}, {1.f, 1.f}};
  const auto out = apply_primitive(RgbImage::uniform(8, 8, 0.25f, 0.25f, 0.75f), c);
  CHECK(out.at(0, 0, 0) == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(out.at(0, 0, 1) == doctest::Approx(0.25));
  CHECK(out.at(0, 0, 2) == doctest::Approx(0.75));
}

TEST_CASE("apply_filter composes in order") {
  const auto gray = RgbImage::uniform(8, 8, 0.5f, 0.5f, 0.5f);
  FilterSpec spec{"custom", {Brightness{0.1f}, Brightness{-0.1f}}};
  CHECK(max_abs_diff(apply_filter(gray, spec), gray) <= 1e-6);
  CHECK(apply_filter(gray, builtin_filter("original")) == gray);
}

TEST_CASE("builtin registry holds the sixteen names") {
  const auto& reg = FilterRegistry::builtin();
  CHECK(reg.filters().size() == 16);
  for (auto name : filter_names()) CHECK(reg.get(name).name == name);
  CHECK(class_names().size() == 17);
  CHECK(class_index("original") == 16);
  CHECK_THROWS_AS(builtin_filter("Gotham"), LookupError);
  try {
    builtin_filter("Gotham");
  } catch (const LookupError& e) {
    CHECK(std::string(e.what()).find("Willow") != std::string::npos);
  }
}

TEST_CASE("Toaster has a vignette and a warm overlay") {
  const auto spec = builtin_filter("Toaster");
  bool vignette = false, warm = false;
  for (const auto& p : spec.primitives) {
    if (std::holds_alternative<Vignette>(p)) vignette = std::get<Vignette>(p).strength > 0;
    if (const auto* o = std::get_if<Overlay>(&p)) warm = warm || (o->rgb[0] > o->rgb[2] && o->opacity > 0);
  }
  CHECK(vignette);
  CHECK(warm);
}

TEST_CASE("Willow desaturates to a purplish gray") {
  const auto spec = builtin_filter("Willow");
  bool low_sat = false, purple = false;
  for (const auto& p : spec.primitives) {
    if (const auto* s = std::get_if<Saturation>(&p)) low_sat = s->gain < 0.2f;
    if (const auto* t = std::get_if<Tint>(&p)) purple = t->rgb[2] > t->rgb[1] && t->rgb[0] > t->rgb[1];
  }
  CHECK(low_sat);
  CHECK(purple);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = testsupport::scene(48, 48, seed);
    const auto out = apply_filter(img, spec);
    CAPTURE(seed);
    CHECK(testsupport::mean_saturation(out) < 0.15);
    CHECK(testsupport::mean_saturation(out) < testsupport::mean_saturation(img));
  }
}

TEST_CASE("registry JSON round trip and rejection rules") {
  nlohmann::json doc;
  doc["registry_version"] = 3;
  doc["filters"] = nlohmann::json::array();
  for (const auto& f : FilterRegistry::builtin().filters()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : f.primitives) arr.push_back(to_json(p));
    doc["filters"].push_back({{"name", f.name}, {"primitives", arr}});
  }
  const auto reg = FilterRegistry::from_json(doc);
  CHECK(reg.version() == 3);
  const auto img = testsupport::scene(16, 16, 4);
  for (auto name : filter_names()) CHECK(apply_filter(img, reg.get(name)) == apply_filter(img, builtin_filter(name)));

  auto dup = doc;
  dup["filters"].push_back(doc["filters"][0]);
  CHECK_THROWS(FilterRegistry::from_json(dup));
  auto orig = doc;
  orig["filters"].push_back({{"name", "original"}, {"primitives", nlohmann::json::array()}});
  CHECK_THROWS(FilterRegistry::from_json(orig));
}

TEST_CASE("filters are pure functions of image, spec and seed") {
  const auto img = testsupport::scene(32, 32, 5);
  for (auto name : filter_names()) {
    const auto spec = builtin_filter(name);
    CHECK(apply_filter(img, spec, 99) == apply_filter(img, spec, 99));
  }
}
