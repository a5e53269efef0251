// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion was evaluated (whatever the verdicts)
// and 1 when the harness itself broke. Verdicts are also written to
// acceptance_report.txt in the working directory.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include "ciede2000_pairs.hpp"
#include "support.hpp"
#include "unfilter/archive.hpp"
#include "unfilter/dataset.hpp"
#include "unfilter/errors.hpp"
#include "unfilter/evaluate.hpp"
#include "unfilter/losses.hpp"
#include "unfilter/metrics.hpp"
#include "unfilter/model.hpp"
#include "unfilter/palette.hpp"
#include "unfilter/rng.hpp"
#include "unfilter/training.hpp"

using namespace unfilter;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::ofstream g_report;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail;
  std::cout << line.str() << std::endl;
  g_report << line.str() << "\n";
  g_report.flush();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

double max_abs(const torch::Tensor& t) { return t.abs().max().item<double>(); }

// --- 1 ---------------------------------------------------------------------

void adain_identity() {
  const auto t0 = Clock::now();
  torch::manual_seed(1);
  double identity = 0, moments = 0, raw_excess = 0;
  for (int i = 0; i < 200; ++i) {
    const auto c = 1 + i % 16, h = 2 + i % 7, w = 3 + i % 5;
    const auto x = torch::randn({2, c, h, w}, torch::kFloat64) * (1 + i % 4) + (i % 3);
    const double eps = 1e-5;
    const auto self = channel_stats(x);
    // Target std sigma + eps exactly cancels the stabiliser in the denominator.
    identity = std::max(identity, max_abs(adain(x, {self.mean, self.std + eps}, eps) - x));
    // Raw statistics: deviation is |x - mu| * eps / (sigma + eps).
    const auto bound = ((x - self.mean.unsqueeze(-1).unsqueeze(-1)).abs() * eps /
                        (self.std.unsqueeze(-1).unsqueeze(-1) + eps));
    raw_excess = std::max(raw_excess, ((adain(x, self, eps) - x).abs() - bound).max().item<double>());
    const AffineParams y{torch::randn({2, c}, torch::kFloat64), torch::rand({2, c}, torch::kFloat64) + 0.1};
    const auto out = adain(x, y, eps);
    const auto st = channel_stats(out);
    // Closed form: std is sigma(y) * sigma(x) / (sigma(x) + eps).
    const auto want_std = y.std * self.std / (self.std + eps);
    moments = std::max({moments, max_abs(st.mean - y.mean), max_abs(st.std - want_std)});
  }
  const double secs = seconds_since(t0);
  verdict(1, "AdaIN identity & moments", identity < 1e-5 && raw_excess < 1e-12 && moments < 1e-4 && secs < 10,
          "200 maps: self-identity dev " + fmt(identity) + " (<1e-5), raw-stat excess over eps bound " +
              fmt(raw_excess) + ", moment dev " + fmt(moments) + " (<1e-4), " + fmt(secs, 3) + " s (<10)");
}

// --- 2 ---------------------------------------------------------------------

void skip_identity() {
  GeneratorConfig cfg = TrainConfig::desk_profile().model;
  Encoder enc(cfg);
  {
    torch::NoGradGuard ng;
    for (std::size_t i = 0; i < enc->num_levels(); ++i) {
      enc->level(i)->residual_out()->weight.zero_();
      enc->level(i)->residual_out()->bias.zero_();
    }
  }
  torch::manual_seed(2);
  std::vector<AffineParams> styles;
  for (auto c : cfg.channels) styles.push_back({torch::randn({2, c}), torch::rand({2, c}) + 0.1});
  const auto res = enc->forward(torch::rand({2, 3, cfg.image_size, cfg.image_size}) * 2 - 1, styles);
  double dev = 0;
  for (const auto& l : res.levels) dev = std::max(dev, max_abs(l.o - l.v));
  verdict(2, "Skip identity", dev < 1e-6,
          std::to_string(res.levels.size()) + " levels, max abs deviation " + fmt(dev) + " (<1e-6)");
}

// --- 3 ---------------------------------------------------------------------

double gradient_error(const std::function<torch::Tensor(const torch::Tensor&)>& f, const torch::Tensor& x0) {
  auto x = x0.clone().set_requires_grad(true);
  const auto analytic = torch::autograd::grad({f(x)}, {x})[0];
  auto numeric = torch::zeros_like(x0);
  const double step = 1e-3;
  for (std::int64_t k = 0; k < x0.numel(); ++k) {
    auto plus = x0.clone(), minus = x0.clone();
    plus.view(-1)[k] += step;
    minus.view(-1)[k] -= step;
    numeric.view(-1)[k] = (f(plus).item<double>() - f(minus).item<double>()) / (2 * step);
  }
  return (analytic - numeric).norm().item<double>() / std::max(numeric.norm().item<double>(), 1e-8);
}

void gradient_checks() {
  torch::manual_seed(3);
  const auto kF64 = torch::kFloat64;
  const auto x = torch::rand({1, 2, 4, 4}, kF64), target = torch::rand({1, 2, 4, 4}, kF64);
  torch::nn::Conv2d critic(torch::nn::Conv2dOptions(2, 1, 3).padding(1));
  critic->to(kF64);
  auto d = [&](const torch::Tensor& v) { return torch::tanh(critic->forward(v)); };
  const auto real = torch::rand({2, 2, 4, 4}, kF64), fake = torch::rand({2, 2, 4, 4}, kF64);
  const auto alphas = torch::rand({2}, kF64);

  const double sem = gradient_error([&](const torch::Tensor& v) { return semantic_distance(v, target); }, x);
  const double tex = gradient_error([&](const torch::Tensor& v) { return idmrf_features(v, target); }, x);
  const double adv = gradient_error([&](const torch::Tensor& v) { return critic_objective(d(real.narrow(0, 0, 1)), d(v)); }, x);
  const double gp = gradient_error(
      [&](const torch::Tensor& w) {
        auto dw = [&](const torch::Tensor& v) {
          return torch::tanh(torch::nn::functional::conv2d(v, w, torch::nn::functional::Conv2dFuncOptions().padding(1)));
        };
        return gradient_penalty(dw, real, fake, alphas);
      },
      critic->weight.detach().clone());
  const double worst = std::max({sem, tex, adv, gp});
  verdict(3, "Gradient checks", worst < 1e-2,
          "relative errors sem " + fmt(sem) + ", tex " + fmt(tex) + ", adv " + fmt(adv) + ", gp " + fmt(gp) +
              " (<1e-2)");
}

// --- 4 ---------------------------------------------------------------------

void ciede_pairs() {
  const auto t0 = Clock::now();
  double worst = 0;
  for (const auto& r : kCiede2000Pairs) {
    worst = std::max(worst, std::fabs(ciede2000({r[0], r[1], r[2]}, {r[3], r[4], r[5]}) - r[6]));
  }
  const double secs = seconds_since(t0);
  verdict(4, "CIEDE2000 oracle", worst < 1e-4 && secs < 1,
          std::to_string(kCiede2000Pairs.size()) + " pairs, max error " + fmt(worst) + " (<1e-4), " +
              fmt(secs, 3) + " s (<1)");
}

// --- 5 ---------------------------------------------------------------------

void metric_identities() {
  std::mt19937_64 rng(5);
  double ssim_dev = 0, de_max = 0;
  bool cap = true;
  for (int i = 0; i < 100; ++i) {
    RgbImage img(11 + i % 20, 11 + (i * 7) % 25);
    for (auto& v : img.data()) v = static_cast<float>(uniform01(rng));
    ssim_dev = std::max(ssim_dev, std::fabs(ssim(img, img) - 1.0));
    de_max = std::max(de_max, image_delta_e(img, img));
    cap = cap && psnr(img, img) == kPsnrCap;
  }
  verdict(5, "Metric identities", ssim_dev <= 1e-9 && de_max == 0.0 && cap,
          "100 images: max |ssim(x,x)-1| " + fmt(ssim_dev) + ", max dE(x,x) " + fmt(de_max) +
              ", psnr(x,x) == " + fmt(kPsnrCap) + " dB cap " + (cap ? "always" : "violated"));
}

// --- 6 ---------------------------------------------------------------------

void dominant_colors_exact() {
  RgbImage img(10, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      const bool top = y < 6;
      img.at(y, x, 0) = top ? 0.85f : 0.1f;
      img.at(y, x, 1) = top ? 0.3f : 0.45f;
      img.at(y, x, 2) = top ? 0.2f : 0.7f;
    }
  }
  KMeansOptions opts;
  opts.k = 2;
  const auto p = dominant_colors(img, opts);
  const LabColor want[2] = {srgb_to_lab(0.85f, 0.3f, 0.2f), srgb_to_lab(0.1f, 0.45f, 0.7f)};
  double err = std::fabs(p.entries[0].weight - 0.6) + std::fabs(p.entries[1].weight - 0.4);
  for (int i = 0; i < 2; ++i) {
    err = std::max({err, std::fabs(p.entries[i].color.L - want[i].L), std::fabs(p.entries[i].color.a - want[i].a),
                    std::fabs(p.entries[i].color.b - want[i].b)});
  }

  std::mt19937_64 rng(6);
  double match_err = 0;
  int trials = 0;
  for (std::size_t k = 1; k <= 5; ++k) {
    for (int t = 0; t < 20; ++t, ++trials) {
      Palette a, b;
      for (std::size_t i = 0; i < k; ++i) {
        a.entries.push_back({srgb_to_lab(uniform01(rng), uniform01(rng), uniform01(rng)), 1.0 / k});
        b.entries.push_back({srgb_to_lab(uniform01(rng), uniform01(rng), uniform01(rng)), 1.0 / k});
      }
      double got = 0;
      for (const auto& m : palette_match_delta(a, b)) got += m.delta_e;
      std::vector<std::size_t> perm(k);
      std::iota(perm.begin(), perm.end(), 0);
      double best = 1e300;
      do {
        double c = 0;
        for (std::size_t i = 0; i < k; ++i) c += ciede2000(b.entries[i].color, a.entries[perm[i]].color);
        best = std::min(best, c);
      } while (std::next_permutation(perm.begin(), perm.end()));
      match_err = std::max(match_err, std::fabs(got - best));
    }
  }
  verdict(6, "Dominant-color exactness", err < 1e-6 && match_err < 1e-9,
          "centroid/weight error " + fmt(err) + " (<1e-6); matching vs k! brute force over " +
              std::to_string(trials) + " trials, max gap " + fmt(match_err));
}

// --- 7 and 8 -----------------------------------------------------------------

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  std::optional<fs::path> best;
  std::int64_t best_step = -1;
  if (!fs::exists(dir)) return best;
  const std::regex re("ckpt_([0-9]+)\\.bin");
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = e.path().filename().string();
    if (std::regex_match(name, m, re) && std::stoll(m[1]) > best_step) {
      best_step = std::stoll(m[1]);
      best = e.path();
    }
  }
  return best;
}

void overfit_experiment(const fs::path& work) {
  const std::vector<std::string> filters = {"Lo-Fi", "Toaster", "Willow", "1977"};
  const fs::path src = work / "src", data = work / "data", run = work / "run";
  if (!fs::exists(data / kManifestName)) {
    fs::remove_all(src);
    testsupport::write_scenes(src, 20, 96, 2024);
    SynthOptions so;
    so.height = 64;
    so.width = 64;
    so.seed = 7;
    so.filters = filters;
    synthesize_dataset(src, data, so);
  }

  auto cfg = TrainConfig::desk_profile();
  cfg.filters = filters;
  cfg.dataset_dir = data.string();
  cfg.out_dir = run.string();
  cfg.checkpoint_every = 250;

  const auto t0 = Clock::now();
  fs::path resume;
  if (const auto last = latest_checkpoint(run)) {
    try {
      Trainer probe(cfg);
      probe.load_checkpoint(*last);
      resume = *last;
      std::cout << "resuming overfit run from " << last->string() << std::endl;
    } catch (const Error& e) {
      std::cout << "discarding incompatible run (" << e.what() << ")" << std::endl;
      fs::remove_all(run);
    }
  }
  const auto res = train(cfg, resume, [](const StepRecord& r) {
    if (r.step % 100 == 0) std::cout << "  " << r.to_json().dump() << std::endl;
  });
  const double train_secs = seconds_since(t0);

  EvalOptions eo;
  eo.filters = filters;
  const auto report = evaluate_dir(res.checkpoint, data, eo);
  {
    std::ofstream out(work / "overfit_report.json");
    out << std::setw(2) << report.to_json() << "\n";
  }
  const auto agg = report.aggregates();
  if (!agg) throw std::runtime_error("overfit evaluation scored nothing");
  const bool pass7 = agg->psnr > 26.0 && agg->ssim > 0.80 && agg->delta_e < agg->baseline_delta_e;
  verdict(7, "Overfit experiment", pass7,
          std::to_string(agg->count) + " pairs after " + std::to_string(cfg.steps) + " steps (" +
              fmt(train_secs / 60, 3) + " min this session): PSNR " + fmt(agg->psnr) + " dB (>26), SSIM " +
              fmt(agg->ssim) + " (>0.80), dE " + fmt(agg->delta_e) + " (< baseline " + fmt(agg->baseline_delta_e) +
              "); baseline PSNR " + fmt(agg->baseline_psnr) + " dB, SSIM " + fmt(agg->baseline_ssim));

  std::vector<std::string> classes = filters;
  classes.push_back("original");
  const double acc = report.accuracy().value_or(0.0);
  const auto table = format_confusion(report.confusion, classes);
  std::cout << table;
  g_report << table;
  verdict(8, "Classifier sanity", acc >= 0.90,
          "training-set accuracy " + fmt(acc) + " over " + std::to_string(report.predictions()) +
              " predictions, 5 classes (>=0.90)");
}

// --- 9 ---------------------------------------------------------------------

void determinism(const fs::path& work) {
  fs::remove_all(work);
  testsupport::write_scenes(work / "src", 4, 40, 9);
  SynthOptions so;
  so.height = 32;
  so.width = 32;
  so.seed = 3;
  so.filters = {"Lo-Fi", "Toaster"};
  synthesize_dataset(work / "src", work / "ds_a", so);
  synthesize_dataset(work / "src", work / "ds_b", so);
  bool synth_same = true;
  for (const auto& e : fs::recursive_directory_iterator(work / "ds_a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), work / "ds_a");
    synth_same = synth_same && testsupport::file_sha256(e.path()) == testsupport::file_sha256(work / "ds_b" / rel);
  }

  TrainConfig c;
  c.model.image_size = 32;
  c.model.channels = {8, 16, 16};
  c.model.downsample_levels = 2;
  c.model.style_hidden = 16;
  c.model.style_layers = 2;
  c.model.classifier_hidden = 8;
  c.model.decoder_blocks = 1;
  c.model.disc_channels = 8;
  c.model.local_crop = 24;
  c.batch_size = 2;
  c.steps = 50;
  c.seed = 11;
  c.dataset_dir = (work / "ds_a").string();
  c.out_dir = (work / "run_a").string();
  const auto a = train(c);
  c.out_dir = (work / "run_b").string();
  const auto b = train(c);
  const auto ha = testsupport::file_sha256(a.checkpoint), hb = testsupport::file_sha256(b.checkpoint);
  verdict(9, "Determinism", ha == hb && synth_same,
          "50-step checkpoints " + ha.substr(0, 16) + (ha == hb ? " == " : " != ") + hb.substr(0, 16) +
              "; synthesis byte-identical: " + (synth_same ? "yes" : "no"));
  fs::remove_all(work);
}

// --- 10 --------------------------------------------------------------------

void filter_count(const fs::path& work) {
  fs::remove_all(work);
  testsupport::write_scenes(work / "src", 600, 16, 10);
  SynthOptions so;
  so.height = 16;
  so.width = 16;
  const auto m = synthesize_dataset(work / "src", work / "ds", so);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(work / "ds")) files += e.path().extension() == ".png";
  verdict(10, "Filter count contract", m.entries.size() == 10200 && files == 10200,
          std::to_string(m.image_ids().size()) + " originals -> " + std::to_string(m.entries.size()) +
              " manifest entries, " + std::to_string(files) + " PNG files (10200)");
  fs::remove_all(work);
}

}  // namespace

int main() {
  const fs::path work = fs::current_path() / "acceptance_work";
  fs::create_directories(work);
  g_report.open(fs::current_path() / "acceptance_report.txt");
  const std::vector<std::pair<int, std::function<void()>>> criteria = {
      {1, adain_identity},
      {2, skip_identity},
      {3, gradient_checks},
      {4, ciede_pairs},
      {5, metric_identities},
      {6, dominant_colors_exact},
      {7, [&] { overfit_experiment(work / "overfit"); }},
      {9, [&] { determinism(work / "determinism"); }},
      {10, [&] { filter_count(work / "count"); }},
  };
  int broken = 0;
  for (const auto& [id, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      ++broken;
      verdict(id, "harness error", false, e.what());
      if (id == 7) verdict(8, "harness error", false, e.what());
    }
  }
  return broken == 0 ? 0 : 1;
}
