#include "unfilter/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "unfilter/archive.hpp"
#include "unfilter/errors.hpp"
#include "unfilter/filters.hpp"
#include "unfilter/rng.hpp"

namespace unfilter {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpointFormat = "unfilter-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

// --- config ------------------------------------------------------------------

TrainConfig TrainConfig::paper_profile() { return TrainConfig{}; }

TrainConfig TrainConfig::desk_profile() {
  TrainConfig c;
  c.model.image_size = 64;
  c.model.channels = {32, 64, 128, 128, 128, 128};
  c.model.downsample_levels = 2;
  c.model.local_crop = 32;
  c.model.disc_channels = 32;
  c.steps = 2000;
  c.max_images = 20;
  return c;
}

void TrainConfig::validate() const {
  model.validate();
  weights.validate();
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_gen > 0.0) || !(lr_disc > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ConfigError("flip_prob must lie in [0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (max_images < 0) throw ConfigError("max_images must be >= 0");
  if (sem_layers.empty()) throw ConfigError("sem_layers must name at least one backbone layer");
  const auto& tags = BackboneImpl::layer_tags();
  for (const auto& l : sem_layers) {
    if (std::find(tags.begin(), tags.end(), l) == tags.end()) throw ConfigError("unknown sem layer '" + l + "'");
  }
  if (std::find(tags.begin(), tags.end(), tex_layer) == tags.end()) {
    throw ConfigError("unknown tex layer '" + tex_layer + "'");
  }
  for (const auto& f : filters) {
    try {
      if (class_index(f) == static_cast<int>(kNumFilters)) throw ConfigError("'original' is always included");
    } catch (const LookupError& e) {
      throw ConfigError(e.what());
    }
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"model", model.to_json()},
          {"loss", weights.to_json()},
          {"adversarial", to_string(adversarial)},
          {"sem_layers", sem_layers},
          {"tex_layer", tex_layer},
          {"steps", steps},
          {"batch_size", batch_size},
          {"optimizer", "adam"},
          {"beta1", beta1},
          {"beta2", beta2},
          {"lr_gen", lr_gen},
          {"lr_disc", lr_disc},
          {"flip_prob", flip_prob},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every},
          {"deterministic", deterministic},
          {"dataset_dir", dataset_dir},
          {"out_dir", out_dir},
          {"filters", filters},
          {"max_images", max_images}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.model = GeneratorConfig::from_json(j.at("model"));
    const auto& l = j.at("loss");
    c.weights.tex = l.at("tex").get<double>();
    c.weights.sem = l.at("sem").get<double>();
    c.weights.adv = l.at("adv").get<double>();
    c.weights.gp = l.at("gp").get<double>();
    c.weights.cls = l.at("cls").get<double>();
    c.adversarial = adversarial_mode_from_string(j.at("adversarial").get<std::string>());
    c.sem_layers = j.at("sem_layers").get<std::vector<std::string>>();
    c.tex_layer = j.at("tex_layer").get<std::string>();
    c.steps = j.at("steps").get<std::int64_t>();
    c.batch_size = j.at("batch_size").get<int>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.lr_gen = j.at("lr_gen").get<double>();
    c.lr_disc = j.at("lr_disc").get<double>();
    c.flip_prob = j.at("flip_prob").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
    c.deterministic = j.at("deterministic").get<bool>();
    c.dataset_dir = j.value("dataset_dir", std::string());
    c.out_dir = j.value("out_dir", std::string());
    c.filters = j.at("filters").get<std::vector<std::string>>();
    c.max_images = j.at("max_images").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  c.validate();
  return c;
}

// --- tensors <-> images ----------------------------------------------------

torch::Tensor image_to_tensor(const RgbImage& img) {
  auto hwc = torch::from_blob(const_cast<float*>(img.data().data()), {img.height(), img.width(), 3},
                              torch::kFloat32);
  return hwc.permute({2, 0, 1}).contiguous().unsqueeze(0);
}

RgbImage tensor_to_image(const torch::Tensor& t, ColorSpace space) {
  auto x = t.detach().to(torch::kCPU, torch::kFloat32);
  if (x.dim() == 4) {
    if (x.size(0) != 1) throw ShapeError("tensor_to_image expects a single image");
    x = x[0];
  }
  if (x.dim() != 3 || x.size(0) != 3) throw ShapeError("tensor_to_image expects [3,H,W], got " + c10::str(x.sizes()));
  const float lo = space == ColorSpace::kSrgbUnit ? 0.0f : -1.0f;
  x = x.clamp(lo, 1.0f).permute({1, 2, 0}).contiguous();
  const auto* p = x.data_ptr<float>();
  std::vector<float> pixels(p, p + x.numel());
  return RgbImage(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)), std::move(pixels), space);
}

// --- dataset -----------------------------------------------------------------

PairedDataset::PairedDataset(const fs::path& root, int image_size, const std::vector<std::string>& filters,
                             int max_images)
    : root_(root), image_size_(image_size) {
  const auto manifest = DatasetManifest::load(root / kManifestName);
  manifest.check_complete();
  for (const auto& e : manifest.entries) paths_[e.filter + "/" + e.image_id] = e.path;

  ids_ = manifest.image_ids();
  if (max_images > 0 && static_cast<std::size_t>(max_images) < ids_.size()) ids_.resize(max_images);

  classes_ = filters.empty() ? manifest.filters : filters;
  for (const auto& f : classes_) {
    if (std::find(manifest.filters.begin(), manifest.filters.end(), f) == manifest.filters.end()) {
      throw LookupError("filter '" + f + "' is not part of the dataset at " + root.string());
    }
  }
  classes_.emplace_back(kOriginalName);

  for (const auto& id : ids_) {
    for (const auto& cls : classes_) samples_.push_back({id, cls, class_index(cls)});
  }

  const double bytes = static_cast<double>(ids_.size() * classes_.size()) * 3.0 * image_size * image_size * 4.0;
  if (bytes <= 1.5e9) {
    for (const auto& id : ids_) {
      for (const auto& cls : classes_) cache_[cls + "/" + id] = load(cls, id);
    }
    preloaded_ = true;
  }
}

torch::Tensor PairedDataset::load(const std::string& filter, const std::string& image_id) const {
  const auto key = filter + "/" + image_id;
  if (preloaded_) return cache_.at(key);
  auto it = paths_.find(key);
  if (it == paths_.end()) throw LookupError("dataset has no entry " + key);
  auto img = load_image(root_ / it->second);
  if (img.height() != image_size_ || img.width() != image_size_) {
    img = resize_bilinear(img, image_size_, image_size_);
  }
  return image_to_tensor(img)[0];
}

torch::Tensor PairedDataset::input(std::size_t i) const {
  return load(samples_.at(i).filter, samples_.at(i).image_id);
}

torch::Tensor PairedDataset::target(std::size_t i) const {
  return load(std::string(kOriginalName), samples_.at(i).image_id);
}

// --- trainer -----------------------------------------------------------------

nlohmann::json StepRecord::to_json() const {
  return {{"step", step},       {"tex", losses.tex},     {"sem", losses.sem}, {"glo", losses.glo},
          {"loc", losses.loc},  {"gp", losses.gp},       {"cls", losses.cls}, {"adv", losses.adv},
          {"total", losses.total}, {"lr_gen", lr_gen}, {"lr_disc", lr_disc}};
}

void set_deterministic(bool on) {
  at::globalContext().setDeterministicAlgorithms(on, /*warn_only=*/false);
  if (on) at::set_num_threads(1);
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  cfg_.model.seed = cfg_.seed;
  set_deterministic(cfg_.deterministic);
  if (cfg_.dataset_dir.empty()) throw ConfigError("dataset_dir is not set");
  data_ = std::make_unique<PairedDataset>(cfg_.dataset_dir, cfg_.model.image_size, cfg_.filters, cfg_.max_images);
  if (data_->size() < static_cast<std::size_t>(cfg_.batch_size)) {
    throw ValidationError("dataset has " + std::to_string(data_->size()) + " pairs, fewer than batch_size " +
                          std::to_string(cfg_.batch_size));
  }
  gen_ = Generator(cfg_.model);
  disc_global_ = PatchDiscriminator(cfg_.model.image_size, cfg_.model.disc_channels,
                                    derive_seed(cfg_.seed, "disc_global"));
  disc_local_ = PatchDiscriminator(cfg_.model.local_crop, cfg_.model.disc_channels,
                                   derive_seed(cfg_.seed, "disc_local"));

  const auto betas = std::make_tuple(cfg_.beta1, cfg_.beta2);
  opt_gen_ = std::make_unique<torch::optim::Adam>(gen_->trainable_parameters(),
                                                  torch::optim::AdamOptions(cfg_.lr_gen).betas(betas));
  auto disc_params = disc_global_->parameters();
  for (const auto& p : disc_local_->parameters()) disc_params.push_back(p);
  opt_disc_ = std::make_unique<torch::optim::Adam>(disc_params, torch::optim::AdamOptions(cfg_.lr_disc).betas(betas));

  rng_.seed(derive_seed(cfg_.seed, "trainer"));
  order_.resize(data_->size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::int64_t>(i);
  reshuffle();
}

void Trainer::reshuffle() {
  for (std::size_t i = order_.size() - 1; i > 0; --i) {
    std::swap(order_[i], order_[uniform_index(rng_, i + 1)]);
  }
  cursor_ = 0;
}

Batch Trainer::next_batch() {
  Batch b;
  std::vector<torch::Tensor> in, tg;
  std::vector<std::int64_t> labels;
  for (int k = 0; k < cfg_.batch_size; ++k) {
    if (cursor_ >= order_.size()) reshuffle();
    const auto idx = static_cast<std::size_t>(order_[cursor_++]);
    const bool flip = uniform01(rng_) < cfg_.flip_prob;
    auto x = data_->input(idx);
    auto y = data_->target(idx);
    if (flip) {
      x = torch::flip(x, {2});
      y = torch::flip(y, {2});
    }
    in.push_back(x);
    tg.push_back(y);
    labels.push_back(data_->sample(idx).label);
    b.indices.push_back(idx);
    b.flipped.push_back(flip);
  }
  b.input = torch::stack(in);
  b.target = torch::stack(tg);
  b.labels = torch::tensor(labels, torch::kInt64);
  return b;
}

StepRecord Trainer::step() {
  const auto batch = next_batch();
  if (batch_hook_) batch_hook_(batch);
  const auto n = static_cast<std::size_t>(cfg_.batch_size);
  const int c = cfg_.model.local_crop;
  const int span = cfg_.model.image_size - c + 1;
  std::vector<std::int64_t> ys(n), xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = static_cast<std::int64_t>(uniform_index(rng_, span));
    xs[i] = static_cast<std::int64_t>(uniform_index(rng_, span));
  }
  std::vector<double> ag(n), al(n);
  for (auto& a : ag) a = uniform01(rng_);
  for (auto& a : al) a = uniform01(rng_);
  const auto alphas_glo = torch::tensor(ag, torch::kFloat32);
  const auto alphas_loc = torch::tensor(al, torch::kFloat32);
  auto crop = [&](const torch::Tensor& t) {
    std::vector<torch::Tensor> parts;
    for (std::size_t i = 0; i < n; ++i) parts.push_back(t[i].narrow(1, ys[i], c).narrow(2, xs[i], c));
    return torch::stack(parts);
  };

  gen_->train();
  const auto out = gen_->forward(batch.input);
  const auto fake = out.image;
  const auto real = batch.target * 2.0 - 1.0;
  const auto real_crops = crop(real);
  const bool wgan = cfg_.adversarial == AdversarialMode::kWganGp;

  // Critic update.
  double gp_value = 0.0;
  {
    const auto fake_d = fake.detach();
    const auto fake_crops_d = crop(fake_d);
    auto d_loss = critic_loss(disc_global_->forward(real), disc_global_->forward(fake_d), cfg_.adversarial) +
                  critic_loss(disc_local_->forward(real_crops), disc_local_->forward(fake_crops_d), cfg_.adversarial);
    if (wgan) {
      const auto gp =
          gradient_penalty([&](const torch::Tensor& x) { return disc_global_->forward(x); }, real, fake_d,
                           alphas_glo) +
          gradient_penalty([&](const torch::Tensor& x) { return disc_local_->forward(x); }, real_crops,
                           fake_crops_d, alphas_loc);
      gp_value = gp.item<double>();
      d_loss = d_loss + cfg_.weights.gp * gp;
    }
    const double d_value = d_loss.item<double>();
    if (!std::isfinite(gp_value)) throw DivergenceError("gp", "non-finite gradient penalty");
    if (!std::isfinite(d_value)) throw DivergenceError("critic", "non-finite critic loss");
    opt_disc_->zero_grad();
    d_loss.backward();
    opt_disc_->step();
  }

  // Generator update.
  torch::Tensor glo, loc;
  const auto fake_crops = crop(fake);
  if (wgan) {
    torch::Tensor real_g, real_l;
    {
      torch::NoGradGuard no_grad;
      real_g = disc_global_->forward(real);
      real_l = disc_local_->forward(real_crops);
    }
    glo = critic_objective(real_g, disc_global_->forward(fake), cfg_.adversarial);
    loc = critic_objective(real_l, disc_local_->forward(fake_crops), cfg_.adversarial);
  } else {
    glo = generator_adv_loss(disc_global_->forward(fake));
    loc = generator_adv_loss(disc_local_->forward(fake_crops));
  }
  auto backbone = gen_->backbone();
  const auto fake_unit = (fake + 1.0) * 0.5;
  const auto sem = semantic_consistency(backbone, fake_unit, batch.target, cfg_.sem_layers);
  const auto tex = texture_idmrf(backbone, fake_unit, batch.target, cfg_.tex_layer);
  const auto cls = classification_loss(out.logits, batch.labels);

  LossComponents comp;
  comp.tex = tex.item<double>();
  comp.sem = sem.item<double>();
  comp.glo = glo.item<double>();
  comp.loc = loc.item<double>();
  comp.gp = gp_value;
  comp.cls = cls.item<double>();
  StepRecord rec;
  rec.losses = total_loss(comp, cfg_.weights);

  const auto& w = cfg_.weights;
  const auto g_loss = w.tex * tex + w.sem * sem + w.adv * (glo + loc + w.cls * cls);
  opt_gen_->zero_grad();
  g_loss.backward();
  opt_gen_->step();

  ++step_;
  rec.step = step_;
  rec.lr_gen = static_cast<torch::optim::AdamOptions&>(opt_gen_->param_groups()[0].options()).lr();
  rec.lr_disc = static_cast<torch::optim::AdamOptions&>(opt_disc_->param_groups()[0].options()).lr();
  return rec;
}

namespace {

void add_adam_state(TensorArchive& ar, const std::string& prefix, torch::optim::Adam& opt) {
  const auto& params = opt.param_groups()[0].params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = opt.state().find(params[i].unsafeGetTensorImpl());
    if (it == opt.state().end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const auto key = prefix + std::to_string(i);
    ar.add(key + ".step", torch::tensor(s.step(), torch::kInt64));
    ar.add(key + ".exp_avg", s.exp_avg());
    ar.add(key + ".exp_avg_sq", s.exp_avg_sq());
  }
}

void load_adam_state(const TensorArchive& ar, const std::string& prefix, torch::optim::Adam& opt) {
  const auto& params = opt.param_groups()[0].params();
  opt.state().clear();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto key = prefix + std::to_string(i);
    if (!ar.contains(key + ".step")) continue;
    auto s = std::make_unique<torch::optim::AdamParamState>();
    const auto& m = ar.get(key + ".exp_avg");
    const auto& v = ar.get(key + ".exp_avg_sq");
    if (m.sizes() != params[i].sizes() || v.sizes() != params[i].sizes()) {
      throw CheckpointError("optimizer state " + key + " does not match its parameter");
    }
    s->step(ar.get(key + ".step").item<std::int64_t>());
    s->exp_avg(m.clone());
    s->exp_avg_sq(v.clone());
    opt.state()[params[i].unsafeGetTensorImpl()] = std::move(s);
  }
}

nlohmann::json checkpoint_config(TrainConfig cfg) {
  cfg.out_dir.clear();
  return cfg.to_json();
}

TensorArchive read_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path.string());
  auto ar = TensorArchive::load(path);
  if (ar.meta.value("format", std::string()) != kCheckpointFormat) {
    throw CheckpointError(path.string() + " is not an unfilter checkpoint");
  }
  const int version = ar.meta.value("format_version", 0);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  return ar;
}

}  // namespace

void Trainer::save_checkpoint(const fs::path& path) const {
  TensorArchive ar;
  std::ostringstream rng_state;
  rng_state << rng_;
  ar.meta = {{"format", kCheckpointFormat},
             {"format_version", kCheckpointVersion},
             {"step", step_},
             {"seed", cfg_.seed},
             {"rng_state", rng_state.str()},
             {"cursor", cursor_},
             {"config", checkpoint_config(cfg_)}};
  add_module_state(ar, "gen.", *gen_);
  add_module_state(ar, "disc_global.", *disc_global_);
  add_module_state(ar, "disc_local.", *disc_local_);
  add_adam_state(ar, "adam_gen.", *opt_gen_);
  add_adam_state(ar, "adam_disc.", *opt_disc_);
  ar.add("sampler.order", torch::tensor(order_, torch::kInt64));
  ar.save(path);
}

void Trainer::load_checkpoint(const fs::path& path) {
  const auto ar = read_checkpoint(path);
  try {
    auto stored = GeneratorConfig::from_json(ar.meta.at("config").at("model"));
    auto mine = cfg_.model;
    stored.backbone_weights.clear();
    mine.backbone_weights.clear();
    if (stored.to_json() != mine.to_json()) {
      throw CheckpointError("checkpoint model config differs from the training config");
    }
    load_module_state(ar, "gen.", *gen_);
    load_module_state(ar, "disc_global.", *disc_global_);
    load_module_state(ar, "disc_local.", *disc_local_);
    load_adam_state(ar, "adam_gen.", *opt_gen_);
    load_adam_state(ar, "adam_disc.", *opt_disc_);
    const auto& order = ar.get("sampler.order");
    if (order.numel() != static_cast<std::int64_t>(order_.size())) {
      throw CheckpointError("checkpoint sampling order does not match the dataset size");
    }
    const auto* p = order.data_ptr<std::int64_t>();
    order_.assign(p, p + order.numel());
    cursor_ = ar.meta.at("cursor").get<std::size_t>();
    step_ = ar.meta.at("step").get<std::int64_t>();
    std::istringstream rng_state(ar.meta.at("rng_state").get<std::string>());
    rng_state >> rng_;
    if (!rng_state) throw CheckpointError("corrupt RNG state in checkpoint");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("corrupt checkpoint config: ") + e.what());
  }
}

std::string checkpoint_name(std::int64_t step) { return "ckpt_" + std::to_string(step) + ".bin"; }

TrainResult train(const TrainConfig& cfg, const fs::path& resume,
                  const std::function<void(const StepRecord&)>& on_step) {
  if (cfg.out_dir.empty()) throw ConfigError("out_dir is not set");
  Trainer trainer(cfg);
  fs::path last_good;
  if (!resume.empty()) {
    trainer.load_checkpoint(resume);
    last_good = resume;
  }
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  {
    std::ofstream echo(out / "config_echo.json");
    echo << std::setw(2) << trainer.config().to_json() << "\n";
  }
  std::ofstream log(out / "train_log.jsonl", std::ios::app);
  if (!log) throw IoError("cannot write " + (out / "train_log.jsonl").string());

  TrainResult result;
  while (trainer.step_count() < cfg.steps) {
    StepRecord rec;
    try {
      rec = trainer.step();
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.component(), std::string(e.what()) + " at step " +
                                               std::to_string(trainer.step_count() + 1) +
                                               "; last good checkpoint: " +
                                               (last_good.empty() ? std::string("none") : last_good.string()));
    }
    log << rec.to_json().dump() << "\n";
    log.flush();
    if (on_step) on_step(rec);
    result.last = rec;
    if (cfg.checkpoint_every > 0 && rec.step % cfg.checkpoint_every == 0) {
      last_good = out / checkpoint_name(rec.step);
      trainer.save_checkpoint(last_good);
    }
  }
  result.checkpoint = out / checkpoint_name(trainer.step_count());
  if (result.checkpoint != last_good) trainer.save_checkpoint(result.checkpoint);
  return result;
}

LoadedModel load_model(const fs::path& ckpt) {
  const auto ar = read_checkpoint(ckpt);
  LoadedModel m;
  try {
    m.config = TrainConfig::from_json(ar.meta.at("config"));
    m.step = ar.meta.at("step").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("corrupt checkpoint config: ") + e.what());
  }
  auto model_cfg = m.config.model;
  model_cfg.backbone_weights.clear();
  m.generator = Generator(model_cfg);
  load_module_state(ar, "gen.", *m.generator);
  m.generator->eval();
  return m;
}

std::vector<UnfilterResult> unfilter_batch(Generator& gen, const std::vector<RgbImage>& imgs) {
  std::vector<UnfilterResult> results;
  if (imgs.empty()) return results;
  const int s = gen->config().image_size;
  std::vector<torch::Tensor> xs;
  for (const auto& img : imgs) {
    auto unit = img.color_space() == ColorSpace::kSrgbUnit ? img : img.to_unit();
    if (unit.height() != s || unit.width() != s) unit = resize_bilinear(unit, s, s);
    xs.push_back(image_to_tensor(unit)[0]);
  }
  torch::NoGradGuard no_grad;
  gen->eval();
  const auto out = gen->forward(torch::stack(xs));
  const auto pred = predicted_classes(out.logits);
  const auto names = class_names();
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    UnfilterResult r;
    r.image = tensor_to_image((out.image[i] + 1.0) * 0.5, ColorSpace::kSrgbUnit);
    r.predicted_filter = names.at(pred[i]);
    r.logits = out.logits[i].clone();
    results.push_back(std::move(r));
  }
  return results;
}

UnfilterResult unfilter(Generator& gen, const RgbImage& img) { return unfilter_batch(gen, {img}).front(); }

}  // namespace unfilter
