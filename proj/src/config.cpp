#include "unfilter/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "unfilter/errors.hpp"

namespace unfilter {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("invalid value '" + v + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid boolean '" + v + "' for " + key);
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

void apply_setting(TrainConfig& c, const std::string& key, const std::string& v) {
  auto& m = c.model;
  if (key == "profile") {
    if (v != "paper" && v != "desk") throw ConfigError("unknown profile '" + v + "' (expected paper or desk)");
  } else if (key == "steps") {
    c.steps = parse_number<std::int64_t>(key, v);
  } else if (key == "batch_size") {
    c.batch_size = parse_number<int>(key, v);
  } else if (key == "beta1") {
    c.beta1 = parse_number<double>(key, v);
  } else if (key == "beta2") {
    c.beta2 = parse_number<double>(key, v);
  } else if (key == "lr_gen") {
    c.lr_gen = parse_number<double>(key, v);
  } else if (key == "lr_disc") {
    c.lr_disc = parse_number<double>(key, v);
  } else if (key == "flip_prob") {
    c.flip_prob = parse_number<double>(key, v);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "checkpoint_every") {
    c.checkpoint_every = parse_number<std::int64_t>(key, v);
  } else if (key == "deterministic") {
    c.deterministic = parse_bool(key, v);
  } else if (key == "dataset_dir") {
    c.dataset_dir = v;
  } else if (key == "out_dir") {
    c.out_dir = v;
  } else if (key == "filters") {
    c.filters = split_list(v);
  } else if (key == "max_images") {
    c.max_images = parse_number<int>(key, v);
  } else if (key == "adversarial") {
    c.adversarial = adversarial_mode_from_string(v);
  } else if (key == "sem_layers") {
    c.sem_layers = split_list(v);
  } else if (key == "tex_layer") {
    c.tex_layer = v;
  } else if (key == "loss.tex") {
    c.weights.tex = parse_number<double>(key, v);
  } else if (key == "loss.sem") {
    c.weights.sem = parse_number<double>(key, v);
  } else if (key == "loss.adv") {
    c.weights.adv = parse_number<double>(key, v);
  } else if (key == "loss.gp") {
    c.weights.gp = parse_number<double>(key, v);
  } else if (key == "loss.cls") {
    c.weights.cls = parse_number<double>(key, v);
  } else if (key == "model.image_size") {
    m.image_size = parse_number<int>(key, v);
  } else if (key == "model.channels") {
    m.channels.clear();
    for (const auto& s : split_list(v)) m.channels.push_back(parse_number<std::int64_t>(key, s));
  } else if (key == "model.downsample_levels") {
    m.downsample_levels = parse_number<int>(key, v);
  } else if (key == "model.style_heads") {
    m.style_heads = parse_number<int>(key, v);
  } else if (key == "model.style_hidden") {
    m.style_hidden = parse_number<int>(key, v);
  } else if (key == "model.style_layers") {
    m.style_layers = parse_number<int>(key, v);
  } else if (key == "model.classifier_hidden") {
    m.classifier_hidden = parse_number<int>(key, v);
  } else if (key == "model.num_classes") {
    m.num_classes = parse_number<int>(key, v);
  } else if (key == "model.decoder_blocks") {
    m.decoder_blocks = parse_number<int>(key, v);
  } else if (key == "model.upsample") {
    if (v == "nearest") m.upsample = UpsampleMode::kNearest;
    else if (v == "bilinear") m.upsample = UpsampleMode::kBilinear;
    else throw ConfigError("unknown upsample mode '" + v + "'");
  } else if (key == "model.adain_eps") {
    m.adain_eps = parse_number<double>(key, v);
  } else if (key == "model.style_layer") {
    m.style_layer = v;
  } else if (key == "model.backbone_weights") {
    m.backbone_weights = v;
  } else if (key == "model.disc_channels") {
    m.disc_channels = parse_number<int>(key, v);
  } else if (key == "model.local_crop") {
    m.local_crop = parse_number<int>(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("UNFILTER_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  return parse_number<std::uint64_t>("UNFILTER_SEED", s);
}

TrainConfig build_train_config(const KeyValues& settings, const KeyValues& overrides) {
  std::string profile = "paper";
  for (const auto* kv : {&settings, &overrides}) {
    for (const auto& [k, v] : *kv) {
      if (k == "profile") profile = v;
    }
  }
  TrainConfig cfg;
  if (profile == "desk") {
    cfg = TrainConfig::desk_profile();
  } else if (profile == "paper") {
    cfg = TrainConfig::paper_profile();
  } else {
    throw ConfigError("unknown profile '" + profile + "' (expected paper or desk)");
  }
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  if (const auto s = env_seed()) cfg.seed = *s;
  cfg.model.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

std::string to_key_values(const TrainConfig& c) {
  const auto& m = c.model;
  std::vector<std::string> channels;
  for (auto ch : m.channels) channels.push_back(std::to_string(ch));
  std::ostringstream os;
  os << "steps = " << c.steps << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "beta1 = " << fmt(c.beta1) << "\n"
     << "beta2 = " << fmt(c.beta2) << "\n"
     << "lr_gen = " << fmt(c.lr_gen) << "\n"
     << "lr_disc = " << fmt(c.lr_disc) << "\n"
     << "flip_prob = " << fmt(c.flip_prob) << "\n"
     << "seed = " << c.seed << "\n"
     << "checkpoint_every = " << c.checkpoint_every << "\n"
     << "deterministic = " << (c.deterministic ? "true" : "false") << "\n"
     << "dataset_dir = " << c.dataset_dir << "\n"
     << "out_dir = " << c.out_dir << "\n"
     << "filters = " << join(c.filters) << "\n"
     << "max_images = " << c.max_images << "\n"
     << "adversarial = " << to_string(c.adversarial) << "\n"
     << "sem_layers = " << join(c.sem_layers) << "\n"
     << "tex_layer = " << c.tex_layer << "\n"
     << "loss.tex = " << fmt(c.weights.tex) << "\n"
     << "loss.sem = " << fmt(c.weights.sem) << "\n"
     << "loss.adv = " << fmt(c.weights.adv) << "\n"
     << "loss.gp = " << fmt(c.weights.gp) << "\n"
     << "loss.cls = " << fmt(c.weights.cls) << "\n"
     << "model.image_size = " << m.image_size << "\n"
     << "model.channels = " << join(channels) << "\n"
     << "model.downsample_levels = " << m.downsample_levels << "\n"
     << "model.style_heads = " << m.style_heads << "\n"
     << "model.style_hidden = " << m.style_hidden << "\n"
     << "model.style_layers = " << m.style_layers << "\n"
     << "model.classifier_hidden = " << m.classifier_hidden << "\n"
     << "model.num_classes = " << m.num_classes << "\n"
     << "model.decoder_blocks = " << m.decoder_blocks << "\n"
     << "model.upsample = " << (m.upsample == UpsampleMode::kNearest ? "nearest" : "bilinear") << "\n"
     << "model.adain_eps = " << fmt(m.adain_eps) << "\n"
     << "model.style_layer = " << m.style_layer << "\n"
     << "model.backbone_weights = " << m.backbone_weights << "\n"
     << "model.disc_channels = " << m.disc_channels << "\n"
     << "model.local_crop = " << m.local_crop << "\n";
  return os.str();
}

}  // namespace unfilter
