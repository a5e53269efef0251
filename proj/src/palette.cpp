#include "unfilter/palette.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>

#include "unfilter/errors.hpp"
#include "unfilter/rng.hpp"

namespace unfilter {

namespace {

using Vec3 = std::array<double, 3>;

double dist2(const Vec3& a, const Vec3& b) {
  const double d0 = a[0] - b[0];
  const double d1 = a[1] - b[1];
  const double d2 = a[2] - b[2];
  return d0 * d0 + d1 * d1 + d2 * d2;
}

struct WeightedColor {
  Vec3 value;  // in clustering space
  LabColor lab;
  double count;
};

std::size_t sample_weighted(std::mt19937_64& gen, const std::vector<double>& w) {
  double total = 0.0;
  for (double v : w) total += v;
  double u = uniform01(gen) * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    if (u < w[i]) return i;
    u -= w[i];
  }
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) return i;
  }
  return 0;
}

std::size_t nearest(const Vec3& p, const std::vector<Vec3>& centers, double* d2_out) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = dist2(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (d2_out) *d2_out = best_d;
  return best;
}

void sort_palette(Palette& p) {
  std::stable_sort(p.entries.begin(), p.entries.end(), [](const auto& x, const auto& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    if (x.color.L != y.color.L) return x.color.L < y.color.L;
    if (x.color.a != y.color.a) return x.color.a < y.color.a;
    return x.color.b < y.color.b;
  });
}

LabColor to_lab(const Vec3& v, ClusterSpace space) {
  if (space == ClusterSpace::kLab) return {v[0], v[1], v[2]};
  return srgb_to_lab(v[0], v[1], v[2]);
}

}  // namespace

PaletteFit fit_palette(const RgbImage& img, const KMeansOptions& opts) {
  if (opts.k < 1) throw ValidationError("k must be >= 1");
  if (img.empty()) throw ValidationError("image is empty");

  const RgbImage unit = img.to_unit();
  std::map<std::array<float, 3>, double> counts;
  auto px = unit.data();
  for (std::size_t i = 0; i < px.size(); i += 3) counts[{px[i], px[i + 1], px[i + 2]}] += 1.0;
  const double total = static_cast<double>(px.size() / 3);

  std::vector<WeightedColor> colors;
  colors.reserve(counts.size());
  for (const auto& [rgb, n] : counts) {
    const LabColor lab = srgb_to_lab(rgb[0], rgb[1], rgb[2]);
    const Vec3 v = opts.space == ClusterSpace::kLab ? Vec3{lab.L, lab.a, lab.b}
                                                    : Vec3{rgb[0], rgb[1], rgb[2]};
    colors.push_back({v, lab, n});
  }

  PaletteFit fit;
  fit.distinct_colors = colors.size();
  const auto k = static_cast<std::size_t>(opts.k);

  if (colors.size() <= k) {
    for (const auto& c : colors) fit.palette.entries.push_back({c.lab, c.count / total});
    sort_palette(fit.palette);
    while (fit.palette.entries.size() < k) {
      fit.palette.entries.push_back({fit.palette.entries.back().color, 0.0});
    }
    fit.wcss_history.push_back(0.0);
    return fit;
  }

  // k-means++ seeding, weighted by pixel population.
  std::mt19937_64 gen(splitmix64(opts.seed));
  std::vector<Vec3> centers;
  std::vector<double> w(colors.size());
  for (std::size_t i = 0; i < colors.size(); ++i) w[i] = colors[i].count;
  centers.push_back(colors[sample_weighted(gen, w)].value);
  while (centers.size() < k) {
    for (std::size_t i = 0; i < colors.size(); ++i) {
      double d2 = 0.0;
      nearest(colors[i].value, centers, &d2);
      w[i] = colors[i].count * d2;
    }
    centers.push_back(colors[sample_weighted(gen, w)].value);
  }

  std::vector<std::size_t> assign(colors.size());
  auto assign_all = [&] {
    double wcss = 0.0;
    for (std::size_t i = 0; i < colors.size(); ++i) {
      double d2 = 0.0;
      assign[i] = nearest(colors[i].value, centers, &d2);
      wcss += colors[i].count * d2;
    }
    fit.wcss_history.push_back(wcss);
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    assign_all();
    std::vector<Vec3> sums(k, Vec3{0.0, 0.0, 0.0});
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < colors.size(); ++i) {
      for (int d = 0; d < 3; ++d) sums[assign[i]][d] += colors[i].count * colors[i].value[d];
      mass[assign[i]] += colors[i].count;
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (mass[c] == 0.0) continue;  // empty cluster keeps its centre
      const Vec3 next = {sums[c][0] / mass[c], sums[c][1] / mass[c], sums[c][2] / mass[c]};
      shift = std::max(shift, std::sqrt(dist2(next, centers[c])));
      centers[c] = next;
    }
    fit.iterations = it + 1;
    if (shift < opts.tolerance) break;
  }
  assign_all();

  std::vector<double> mass(k, 0.0);
  for (std::size_t i = 0; i < colors.size(); ++i) mass[assign[i]] += colors[i].count;
  for (std::size_t c = 0; c < k; ++c) {
    fit.palette.entries.push_back({to_lab(centers[c], opts.space), mass[c] / total});
  }
  sort_palette(fit.palette);
  return fit;
}

std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  for (const auto& row : cost) {
    if (row.size() != n) throw ShapeError("assignment cost matrix must be square");
  }
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials formulation, 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

std::vector<PaletteMatch> palette_match_delta(const Palette& test, const Palette& ref, MatchRule rule) {
  if (test.size() != ref.size()) {
    throw ShapeError("palette size mismatch: " + std::to_string(test.size()) + " vs " +
                     std::to_string(ref.size()));
  }
  const std::size_t k = ref.size();
  std::vector<std::vector<double>> cost(k, std::vector<double>(k));
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t t = 0; t < k; ++t) {
      cost[r][t] = ciede2000(ref.entries[r].color, test.entries[t].color);
    }
  }
  std::vector<std::size_t> assignment(k);
  if (rule == MatchRule::kOptimal) {
    assignment = solve_assignment(cost);
  } else {
    for (std::size_t i = 0; i < k; ++i) assignment[i] = i;
  }
  std::vector<PaletteMatch> out;
  for (std::size_t r = 0; r < k; ++r) {
    out.push_back({r, assignment[r], cost[r][assignment[r]], ref.entries[r].weight});
  }
  return out;
}

std::string srgb_hex(const LabColor& lab) {
  const auto rgb = lab_to_srgb(lab);
  char buf[8];
  auto byte = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", byte(rgb[0]), byte(rgb[1]), byte(rgb[2]));
  return buf;
}

nlohmann::json palette_to_json(const Palette& p, const std::vector<PaletteMatch>* matches) {
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    const auto& e = p.entries[i];
    nlohmann::json j;
    j["lab"] = {e.color.L, e.color.a, e.color.b};
    j["srgb_hex"] = srgb_hex(e.color);
    j["weight"] = e.weight;
    j["delta_e"] = nullptr;
    if (matches) {
      for (const auto& m : *matches) {
        if (m.test_index == i) j["delta_e"] = m.delta_e;
      }
    }
    arr.push_back(j);
  }
  return arr;
}

}  // namespace unfilter
