// unfilter: command-line front end for dataset synthesis, training,
// inference, evaluation and palette analysis.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "unfilter/config.hpp"
#include "unfilter/dataset.hpp"
#include "unfilter/errors.hpp"
#include "unfilter/evaluate.hpp"
#include "unfilter/filters.hpp"
#include "unfilter/image.hpp"
#include "unfilter/palette.hpp"
#include "unfilter/training.hpp"

namespace fs = std::filesystem;
using namespace unfilter;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("no such file: " + p.string());
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << std::setw(2) << j << "\n";
}

fs::path sidecar(const fs::path& p) { return fs::path(p.string() + ".config.json"); }

// --- synth --------------------------------------------------------------

struct SynthArgs {
  std::string src, out;
  std::vector<int> size{256, 256};
  std::uint64_t seed = 0;
  std::vector<std::string> filters;
};

int run_synth(const SynthArgs& a) {
  require_file(a.src);
  SynthOptions opts;
  opts.height = a.size.at(0);
  opts.width = a.size.at(1);
  opts.seed = env_seed().value_or(a.seed);
  opts.filters = a.filters;
  const auto manifest = synthesize_dataset(a.src, a.out, opts);
  write_json(fs::path(a.out) / "config_echo.json", {{"command", "synth"},
                                                    {"src", a.src},
                                                    {"out", a.out},
                                                    {"size", {opts.height, opts.width}},
                                                    {"seed", opts.seed},
                                                    {"filters", opts.filters}});
  std::cout << nlohmann::json{{"images", manifest.image_ids().size()},
                              {"files", manifest.entries.size()},
                              {"skipped", manifest.skipped.size()},
                              {"manifest", (fs::path(a.out) / kManifestName).string()}}
                   .dump()
            << "\n";
  return kExitOk;
}

// --- train -------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string profile;
  std::int64_t steps = -1;
  std::string resume;
  std::string dataset;
  std::string out;
  std::vector<std::string> sets;
};

int run_train(const TrainArgs& a) {
  KeyValues settings;
  if (!a.config.empty()) {
    require_file(a.config);
    settings = read_key_values(a.config);
  }
  KeyValues overrides;
  if (!a.profile.empty()) overrides.emplace_back("profile", a.profile);
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (a.steps >= 0) overrides.emplace_back("steps", std::to_string(a.steps));
  if (!a.dataset.empty()) overrides.emplace_back("dataset_dir", a.dataset);
  if (!a.out.empty()) overrides.emplace_back("out_dir", a.out);
  const auto cfg = build_train_config(settings, overrides);
  if (!a.resume.empty()) require_file(a.resume);
  require_file(fs::path(cfg.dataset_dir) / kManifestName);
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config.txt");
    echo << to_key_values(cfg);
  }
  const auto result = train(cfg, a.resume, [](const StepRecord& r) {
    if (r.step % 50 == 0) std::cerr << r.to_json().dump() << "\n";
  });
  std::cout << nlohmann::json{{"checkpoint", result.checkpoint.string()},
                              {"steps", cfg.steps},
                              {"last", result.last ? result.last->to_json() : nlohmann::json(nullptr)}}
                   .dump()
            << "\n";
  return kExitOk;
}

// --- unfilter ----------------------------------------------------------------

struct UnfilterArgs {
  std::string ckpt, in, out;
};

int run_unfilter(const UnfilterArgs& a) {
  require_file(a.ckpt);
  require_file(a.in);
  auto model = load_model(a.ckpt);
  const auto r = unfilter::unfilter(model.generator, load_image(a.in));
  save_png(r.image, a.out);
  const nlohmann::json info = {{"command", "unfilter"},
                               {"checkpoint", a.ckpt},
                               {"checkpoint_step", model.step},
                               {"input", a.in},
                               {"output", a.out},
                               {"predicted_filter", r.predicted_filter},
                               {"model", model.config.model.to_json()}};
  write_json(sidecar(a.out), info);
  std::cout << nlohmann::json{{"output", a.out}, {"predicted_filter", r.predicted_filter}}.dump() << "\n";
  return kExitOk;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string ckpt, dataset, report = "report.json";
  std::vector<std::string> filters;
  int max_images = 0;
  bool no_originals = false;
};

int run_eval(const EvalArgs& a) {
  require_file(a.ckpt);
  require_file(a.dataset);
  EvalOptions opts;
  opts.filters = a.filters;
  opts.max_images = a.max_images;
  opts.include_originals = !a.no_originals;
  auto report = evaluate_dir(fs::path(a.ckpt), fs::path(a.dataset), opts);
  report.config_echo["command"] = "eval";
  report.config_echo["report"] = a.report;
  write_json(a.report, report.to_json());

  std::vector<std::string> shown;
  const auto names = class_names();
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    std::int64_t row = 0, col = 0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      row += report.confusion[i][j];
      col += report.confusion[j][i];
    }
    if (row + col > 0) shown.push_back(names[i]);
  }
  if (!shown.empty()) std::cerr << format_confusion(report.confusion, shown);
  const auto agg = report.to_json();
  std::cout << nlohmann::json{{"report", a.report},
                              {"aggregates", agg["aggregates"]},
                              {"accuracy", agg["accuracy"]},
                              {"counts", agg["counts"]}}
                   .dump()
            << "\n";
  return kExitOk;
}

// --- palette -----------------------------------------------------------------

struct PaletteArgs {
  std::string img, ref, out, space = "lab", match = "optimal";
  int k = 5;
  std::uint64_t seed = 0;
};

int run_palette(const PaletteArgs& a) {
  require_file(a.img);
  if (!a.ref.empty()) require_file(a.ref);
  KMeansOptions opts;
  opts.k = a.k;
  opts.seed = env_seed().value_or(a.seed);
  if (a.space == "lab") opts.space = ClusterSpace::kLab;
  else if (a.space == "rgb") opts.space = ClusterSpace::kRgb;
  else throw ConfigError("unknown --space '" + a.space + "' (expected lab or rgb)");
  MatchRule rule;
  if (a.match == "optimal") rule = MatchRule::kOptimal;
  else if (a.match == "weight") rule = MatchRule::kWeightOrder;
  else throw ConfigError("unknown --match '" + a.match + "' (expected optimal or weight)");
  if (a.k < 1) throw ValidationError("--k must be >= 1");

  const auto palette = dominant_colors(load_image(a.img), opts);
  nlohmann::json out;
  if (!a.ref.empty()) {
    const auto ref = dominant_colors(load_image(a.ref), opts);
    const auto matches = palette_match_delta(palette, ref, rule);
    out = palette_to_json(palette, &matches);
  } else {
    out = palette_to_json(palette);
  }
  if (a.out.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    write_json(a.out, out);
    write_json(sidecar(a.out), {{"command", "palette"},
                                {"image", a.img},
                                {"ref", a.ref},
                                {"k", a.k},
                                {"seed", opts.seed},
                                {"space", a.space},
                                {"match", a.match}});
  }
  return kExitOk;
}

// --- grid --------------------------------------------------------------------

struct GridArgs {
  std::string ckpt, out = "grid.png";
  std::vector<std::string> images;
};

// Rows follow the inputs; columns are filtered | original | unfiltered. The
// original is looked up as ../original/<name> next to a synthesized input and
// left mid-gray when absent.
int run_grid(const GridArgs& a) {
  require_file(a.ckpt);
  if (a.images.empty()) throw ValidationError("grid needs at least one image");
  for (const auto& p : a.images) require_file(p);
  auto model = load_model(a.ckpt);
  const int s = model.config.model.image_size;
  constexpr int kGap = 4;
  const int cols = 3;
  const int rows = static_cast<int>(a.images.size());
  RgbImage canvas = RgbImage::uniform(rows * s + (rows + 1) * kGap, cols * s + (cols + 1) * kGap, 1.f, 1.f, 1.f);
  auto blit = [&](const RgbImage& img, int r, int c) {
    const int y0 = kGap + r * (s + kGap);
    const int x0 = kGap + c * (s + kGap);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        for (int ch = 0; ch < 3; ++ch) canvas.at(y0 + y, x0 + x, ch) = img.at(y, x, ch);
      }
    }
  };
  nlohmann::json rows_info = nlohmann::json::array();
  for (int r = 0; r < rows; ++r) {
    const fs::path in_path(a.images[r]);
    auto filtered = resize_bilinear(load_image(in_path), s, s);
    const auto orig_path = in_path.parent_path().parent_path() / kOriginalName / in_path.filename();
    RgbImage original = RgbImage::uniform(s, s, 0.5f, 0.5f, 0.5f);
    const bool has_original = fs::exists(orig_path);
    if (has_original) original = resize_bilinear(load_image(orig_path), s, s);
    const auto res = unfilter::unfilter(model.generator, filtered);
    blit(filtered, r, 0);
    blit(original, r, 1);
    blit(res.image, r, 2);
    rows_info.push_back({{"input", in_path.string()},
                         {"original", has_original ? orig_path.string() : std::string()},
                         {"predicted_filter", res.predicted_filter}});
  }
  save_png(canvas, a.out);
  write_json(sidecar(a.out), {{"command", "grid"},
                              {"checkpoint", a.ckpt},
                              {"columns", {"filtered", "original", "unfiltered"}},
                              {"rows", rows_info}});
  std::cout << nlohmann::json{{"output", a.out}, {"rows", rows}}.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instagram-filter removal toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "Build a paired dataset from an image folder");
  cmd_synth->add_option("src", synth.src, "Source image directory")->required();
  cmd_synth->add_option("out", synth.out, "Output dataset directory")->required();
  cmd_synth->add_option("--size", synth.size, "Height and width")->expected(2);
  cmd_synth->add_option("--seed", synth.seed, "Dataset seed");
  cmd_synth->add_option("--filters", synth.filters, "Subset of filter names");

  TrainArgs tr;
  auto* cmd_train = app.add_subcommand("train", "Train the generator and critics");
  cmd_train->add_option("config", tr.config, "key = value config file");
  cmd_train->add_option("--profile", tr.profile, "paper or desk");
  cmd_train->add_option("--steps", tr.steps, "Number of training steps");
  cmd_train->add_option("--resume", tr.resume, "Checkpoint to resume from");
  cmd_train->add_option("--dataset", tr.dataset, "Dataset directory");
  cmd_train->add_option("--out", tr.out, "Run output directory");
  cmd_train->add_option("--set", tr.sets, "Extra key=value overrides");

  UnfilterArgs uf;
  auto* cmd_unfilter = app.add_subcommand("unfilter", "Remove the filter from one image");
  cmd_unfilter->add_option("ckpt", uf.ckpt, "Checkpoint")->required();
  cmd_unfilter->add_option("in", uf.in, "Input image")->required();
  cmd_unfilter->add_option("out", uf.out, "Output PNG")->required();

  EvalArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "Score a checkpoint on a synthesized dataset");
  cmd_eval->add_option("ckpt", ev.ckpt, "Checkpoint")->required();
  cmd_eval->add_option("dataset", ev.dataset, "Dataset directory")->required();
  cmd_eval->add_option("--report", ev.report, "Report JSON path");
  cmd_eval->add_option("--filters", ev.filters, "Subset of filter names");
  cmd_eval->add_option("--max-images", ev.max_images, "Use the first N image ids");
  cmd_eval->add_flag("--no-originals", ev.no_originals, "Skip unfiltered inputs");

  PaletteArgs pa;
  auto* cmd_palette = app.add_subcommand("palette", "Dominant colours of an image");
  cmd_palette->add_option("img", pa.img, "Image")->required();
  cmd_palette->add_option("--k", pa.k, "Number of colours");
  cmd_palette->add_option("--ref", pa.ref, "Reference image for colour distances");
  cmd_palette->add_option("--seed", pa.seed, "k-means++ seed");
  cmd_palette->add_option("--space", pa.space, "lab or rgb");
  cmd_palette->add_option("--match", pa.match, "optimal or weight");
  cmd_palette->add_option("--out", pa.out, "Output JSON (stdout when absent)");

  GridArgs gr;
  auto* cmd_grid = app.add_subcommand("grid", "Comparison strip: filtered | original | unfiltered");
  cmd_grid->add_option("ckpt", gr.ckpt, "Checkpoint")->required();
  cmd_grid->add_option("images", gr.images, "Filtered images")->required();
  cmd_grid->add_option("--out", gr.out, "Output PNG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    print_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (*cmd_synth) return run_synth(synth);
    if (*cmd_train) return run_train(tr);
    if (*cmd_unfilter) return run_unfilter(uf);
    if (*cmd_eval) return run_eval(ev);
    if (*cmd_palette) return run_palette(pa);
    if (*cmd_grid) return run_grid(gr);
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
