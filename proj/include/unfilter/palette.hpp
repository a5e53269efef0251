#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "unfilter/color.hpp"
#include "unfilter/image.hpp"

namespace unfilter {

struct PaletteEntry {
  LabColor color;
  double weight = 0.0;
};

// Entries sorted by weight (descending); weights sum to 1.
struct Palette {
  std::vector<PaletteEntry> entries;

  std::size_t size() const { return entries.size(); }
};

enum class ClusterSpace { kLab, kRgb };

struct KMeansOptions {
  int k = 5;
  std::uint64_t seed = 0;
  int max_iterations = 300;
  double tolerance = 1e-4;  // max centroid shift for convergence
  ClusterSpace space = ClusterSpace::kLab;
};

struct PaletteFit {
  Palette palette;
  // Within-cluster sum of squares after each assignment step.
  std::vector<double> wcss_history;
  int iterations = 0;
  std::size_t distinct_colors = 0;
};

// k-means (k-means++ seeding) over the image's pixel colours.
// When the image has fewer than k distinct colours the palette holds each
// distinct colour with its population share, padded by repeating the last
// colour with zero weight.
PaletteFit fit_palette(const RgbImage& img, const KMeansOptions& opts = {});
inline Palette dominant_colors(const RgbImage& img, const KMeansOptions& opts = {}) {
  return fit_palette(img, opts).palette;
}

enum class MatchRule { kOptimal, kWeightOrder };

struct PaletteMatch {
  std::size_t ref_index = 0;
  std::size_t test_index = 0;
  double delta_e = 0.0;
  double weight = 0.0;  // reference entry weight
};

// Pairs each reference colour with a test colour, minimising total CIEDE2000
// cost (kOptimal) or pairing by rank (kWeightOrder). Results follow the
// reference ordering (weight descending). Throws ShapeError on size mismatch.
std::vector<PaletteMatch> palette_match_delta(const Palette& test, const Palette& ref,
                                              MatchRule rule = MatchRule::kOptimal);

// Minimum-cost perfect assignment on a square cost matrix (Hungarian
// algorithm). Returns assignment[row] = column.
std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost);

std::string srgb_hex(const LabColor& lab);

// [{"lab": [L, a, b], "srgb_hex": "#rrggbb", "weight": w, "delta_e": d|null}, ...]
nlohmann::json palette_to_json(const Palette& p, const std::vector<PaletteMatch>* matches = nullptr);

}  // namespace unfilter
