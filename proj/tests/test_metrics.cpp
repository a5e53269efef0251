#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest_torch.hpp"

#include <cmath>
#include <random>

#include "ciede2000_pairs.hpp"
#include "support.hpp"
#include "unfilter/color.hpp"
#include "unfilter/errors.hpp"
#include "unfilter/metrics.hpp"
#include "unfilter/rng.hpp"

using namespace unfilter;

namespace {

RgbImage random_image(int h, int w, std::mt19937_64& rng) {
  RgbImage img(h, w);
  for (auto& v : img.data()) v = static_cast<float>(uniform01(rng));
  return img;
}

// Direct 2-D evaluation of the SSIM index at every valid window position.
double ssim_oracle(const RgbImage& a, const RgbImage& b) {
  const int win = 11;
  const double sigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double wsum = 0.0;
  double wk[11][11];
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      wk[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * sigma * sigma));
      wsum += wk[i][j];
    }
  }
  auto luma = [](const RgbImage& img, int y, int x) {
    return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
  };
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + win <= a.height(); ++y0) {
    for (int x0 = 0; x0 + win <= a.width(); ++x0) {
      double ma = 0, mb = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          ma += wk[i][j] / wsum * luma(a, y0 + i, x0 + j);
          mb += wk[i][j] / wsum * luma(b, y0 + i, x0 + j);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double da = luma(a, y0 + i, x0 + j) - ma;
          const double db = luma(b, y0 + i, x0 + j) - mb;
          va += wk[i][j] / wsum * da * da;
          vb += wk[i][j] / wsum * db * db;
          cov += wk[i][j] / wsum * da * db;
        }
      }
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

}  // namespace

TEST_CASE("ssim matches a direct-summation oracle") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    const auto a = testsupport::scene(24, 20, t);
    auto b = a;
    for (auto& v : b.data()) v = std::clamp(v + 0.1f * static_cast<float>(standard_normal(rng)), 0.f, 1.f);
    CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("ssim identities and checkerboard inversion") {
  std::mt19937_64 rng(1);
  const auto x = random_image(16, 16, rng);
  CHECK(std::fabs(ssim(x, x) - 1.0) <= 1e-9);

  RgbImage board(16, 16), inverse(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int xx = 0; xx < 16; ++xx) {
      const float v = ((y + xx) % 2 == 0) ? 1.f : 0.f;
      for (int c = 0; c < 3; ++c) {
        board.at(y, xx, c) = v;
        inverse.at(y, xx, c) = 1.f - v;
      }
    }
  }
  const double s = ssim(board, inverse);
  CHECK(s >= -1.0);
  CHECK(s < 0.0);
  CHECK(s == doctest::Approx(ssim_oracle(board, inverse)).epsilon(1e-9));
}

TEST_CASE("ssim is symmetric") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto a = random_image(20, 24, rng);
    const auto b = random_image(20, 24, rng);
    CHECK(std::fabs(ssim(a, b) - ssim(b, a)) <= 1e-9);
  }
}

TEST_CASE("psnr cap and closed form") {
  std::mt19937_64 rng(3);
  const auto x = random_image(12, 12, rng);
  CHECK(psnr(x, x) == kPsnrCap);
  const auto a = RgbImage::uniform(10, 10, 0.5f, 0.5f, 0.5f);
  const auto b = RgbImage::uniform(10, 10, 0.6f, 0.6f, 0.6f);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
}

TEST_CASE("delta e identities") {
  std::mt19937_64 rng(4);
  const auto x = random_image(12, 12, rng);
  CHECK(image_delta_e(x, x) == 0.0);
  const auto gray = RgbImage::uniform(8, 8, 0.5f, 0.5f, 0.5f);
  const auto black = RgbImage::uniform(8, 8, 0.f, 0.f, 0.f);
  const double expected = ciede2000(srgb_to_lab(0.5, 0.5, 0.5), srgb_to_lab(0.0, 0.0, 0.0));
  CHECK(image_delta_e(gray, black) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("shape mismatches are rejected") {
  const auto a = RgbImage::uniform(8, 8, 0.f, 0.f, 0.f);
  const auto b = RgbImage::uniform(8, 9, 0.f, 0.f, 0.f);
  CHECK_THROWS_AS(ssim(a, b), ShapeError);
  CHECK_THROWS_AS(psnr(a, b), ShapeError);
  CHECK_THROWS_AS(image_delta_e(a, b), ShapeError);
}

TEST_CASE("ciede2000 reproduces the published verification pairs") {
  for (std::size_t i = 0; i < kCiede2000Pairs.size(); ++i) {
    const auto& r = kCiede2000Pairs[i];
    const LabColor c1{r[0], r[1], r[2]}, c2{r[3], r[4], r[5]};
    CAPTURE(i + 1);
    CHECK(std::fabs(ciede2000(c1, c2) - r[6]) < 1e-4);
    CHECK(ciede2000(c1, c2) == doctest::Approx(ciede2000(c2, c1)).epsilon(1e-12));
    CHECK(ciede2000(c1, c1) == 0.0);
  }
}

TEST_CASE("lab round trip stays within one 8-bit step") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 2000; ++i) {
    const double r = uniform01(rng), g = uniform01(rng), b = uniform01(rng);
    const auto back = lab_to_srgb(srgb_to_lab(r, g, b));
    CHECK(std::fabs(back[0] - r) <= 1.0 / 255);
    CHECK(std::fabs(back[1] - g) <= 1.0 / 255);
    CHECK(std::fabs(back[2] - b) <= 1.0 / 255);
  }
  const auto white = srgb_to_lab(1, 1, 1);
  CHECK(white.L == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(std::fabs(white.a) < 1e-3);
  CHECK(std::fabs(white.b) < 1e-3);
}
