#include "unfilter/model.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

#include "unfilter/archive.hpp"
#include "unfilter/errors.hpp"
#include "unfilter/filters.hpp"
#include "unfilter/rng.hpp"

namespace unfilter {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

constexpr double kLeak = 0.2;

torch::Tensor lrelu(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(kLeak));
}

nn::Conv2d conv3x3(std::int64_t in, std::int64_t out, int stride = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

std::string shape_str(const torch::Tensor& t) { return c10::str(t.sizes()); }

std::int64_t backbone_channels(const std::string& tag) {
  if (tag.rfind("relu1_", 0) == 0) return 64;
  if (tag.rfind("relu2_", 0) == 0) return 128;
  if (tag.rfind("relu3_", 0) == 0) return 256;
  throw LookupError("unknown backbone layer '" + tag + "'");
}

struct VggConv {
  const char* name;
  std::int64_t in;
  std::int64_t out;
  bool pool_before;
};

constexpr VggConv kVggLayout[] = {
    {"conv1_1", 3, 64, false},    {"conv1_2", 64, 64, false},   {"conv2_1", 64, 128, true},
    {"conv2_2", 128, 128, false}, {"conv3_1", 128, 256, true},  {"conv3_2", 256, 256, false},
    {"conv3_3", 256, 256, false},
};

}  // namespace

// --- config ------------------------------------------------------------------

void GeneratorConfig::validate() const {
  const int n = num_levels();
  if (n < 1) throw ConfigError("generator needs at least one encoder level");
  for (auto c : channels) {
    if (c < 1) throw ConfigError("channel widths must be positive");
  }
  if (style_heads != 0 && style_heads != n) {
    throw ConfigError("style extractor must have exactly one head per encoder level (" +
                      std::to_string(n) + " levels, " + std::to_string(style_heads) + " heads)");
  }
  if (downsample_levels < 0 || downsample_levels > n - 1) {
    throw ConfigError("downsample_levels must lie in [0, levels-1]");
  }
  if (image_size < 24 || image_size % (1 << downsample_levels) != 0) {
    throw ConfigError("image_size must be >= 24 and divisible by 2^downsample_levels");
  }
  if (local_crop < 24 || local_crop > image_size) {
    throw ConfigError("local_crop must lie in [24, image_size]");
  }
  if (style_layers < 1 || style_hidden < 1 || classifier_hidden < 1) {
    throw ConfigError("style/classifier widths and depths must be positive");
  }
  if (num_classes != static_cast<int>(kNumClasses)) {
    throw ConfigError("classifier must have " + std::to_string(kNumClasses) + " classes");
  }
  if (decoder_blocks < 0) throw ConfigError("decoder_blocks must be >= 0");
  if (!(adain_eps > 0.0)) throw ConfigError("adain_eps must be > 0");
  if (disc_channels < 1) throw ConfigError("disc_channels must be positive");
  backbone_channels(style_layer);
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"image_size", image_size},
          {"channels", channels},
          {"downsample_levels", downsample_levels},
          {"style_heads", style_heads},
          {"style_hidden", style_hidden},
          {"style_layers", style_layers},
          {"classifier_hidden", classifier_hidden},
          {"num_classes", num_classes},
          {"decoder_blocks", decoder_blocks},
          {"upsample", upsample == UpsampleMode::kNearest ? "nearest" : "bilinear"},
          {"adain_eps", adain_eps},
          {"style_layer", style_layer},
          {"backbone_weights", backbone_weights},
          {"disc_channels", disc_channels},
          {"local_crop", local_crop},
          {"seed", seed}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  try {
    c.image_size = j.at("image_size").get<int>();
    c.channels = j.at("channels").get<std::vector<std::int64_t>>();
    c.downsample_levels = j.at("downsample_levels").get<int>();
    c.style_heads = j.value("style_heads", 0);
    c.style_hidden = j.at("style_hidden").get<int>();
    c.style_layers = j.at("style_layers").get<int>();
    c.classifier_hidden = j.at("classifier_hidden").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.decoder_blocks = j.at("decoder_blocks").get<int>();
    const auto up = j.at("upsample").get<std::string>();
    if (up == "nearest") c.upsample = UpsampleMode::kNearest;
    else if (up == "bilinear") c.upsample = UpsampleMode::kBilinear;
    else throw ConfigError("unknown upsample mode '" + up + "'");
    c.adain_eps = j.at("adain_eps").get<double>();
    c.style_layer = j.at("style_layer").get<std::string>();
    c.backbone_weights = j.value("backbone_weights", std::string());
    c.disc_channels = j.at("disc_channels").get<int>();
    c.local_crop = j.at("local_crop").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed generator config: ") + e.what());
  }
  c.validate();
  return c;
}

// --- AdaIN -----------------------------------------------------------------

AffineParams channel_stats(const torch::Tensor& x) {
  if (x.dim() != 4) throw ShapeError("expected an [N,C,H,W] feature map, got " + shape_str(x));
  auto mean = x.mean({2, 3});
  auto var = (x - mean.unsqueeze(-1).unsqueeze(-1)).pow(2).mean({2, 3});
  return {mean, var.sqrt()};
}

torch::Tensor adain(const torch::Tensor& x, const AffineParams& y, double eps) {
  if (x.dim() != 4) throw ShapeError("adain expects an [N,C,H,W] feature map, got " + shape_str(x));
  const auto n = x.size(0);
  const auto c = x.size(1);
  if (y.mean.dim() != 2 || y.std.dim() != 2 || y.mean.size(1) != c || y.std.size(1) != c) {
    throw ShapeError("adain: affine params " + shape_str(y.mean) + "/" + shape_str(y.std) +
                     " do not match " + std::to_string(c) + " channels");
  }
  if (y.mean.size(0) != n && y.mean.size(0) != 1) {
    throw ShapeError("adain: affine params batch does not match feature batch");
  }
  const auto mu = x.mean({2, 3}, /*keepdim=*/true);
  const auto sigma = (x - mu).pow(2).mean({2, 3}, true).sqrt();
  const auto target_mean = y.mean.unsqueeze(-1).unsqueeze(-1);
  const auto target_std = y.std.unsqueeze(-1).unsqueeze(-1);
  return target_std * (x - mu) / (sigma + eps) + target_mean;
}

// --- backbone ----------------------------------------------------------------

BackboneImpl::BackboneImpl(std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  torch::NoGradGuard no_grad;
  for (const auto& layer : kVggLayout) {
    auto conv = register_module(layer.name, conv3x3(layer.in, layer.out));
    const double fan_out = static_cast<double>(layer.out) * 9.0;
    conv->weight.normal_(0.0, std::sqrt(2.0 / fan_out), gen);
    conv->bias.zero_();
    conv->weight.set_requires_grad(false);
    conv->bias.set_requires_grad(false);
    conv_names_.emplace_back(layer.name);
    convs_.push_back(conv);
  }
  mean_ = register_buffer("mean", torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1}));
  std_ = register_buffer("std", torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1}));
}

const std::vector<std::string>& BackboneImpl::layer_tags() {
  static const std::vector<std::string> kTags = {"relu1_1", "relu1_2", "relu2_1", "relu2_2",
                                                 "relu3_1", "relu3_2", "relu3_3"};
  return kTags;
}

std::map<std::string, torch::Tensor> BackboneImpl::forward(const torch::Tensor& img,
                                                           const std::vector<std::string>& tags) {
  if (img.dim() != 4 || img.size(1) != 3) {
    throw ShapeError("backbone expects [N,3,H,W], got " + shape_str(img));
  }
  std::size_t deepest = 0;
  for (const auto& tag : tags) {
    const auto& all = layer_tags();
    auto it = std::find(all.begin(), all.end(), tag);
    if (it == all.end()) throw LookupError("unknown backbone layer '" + tag + "'");
    deepest = std::max(deepest, static_cast<std::size_t>(it - all.begin()) + 1);
  }
  std::map<std::string, torch::Tensor> out;
  auto h = (img - mean_) / std_;
  for (std::size_t i = 0; i < deepest; ++i) {
    if (kVggLayout[i].pool_before) h = F::max_pool2d(h, F::MaxPool2dFuncOptions(2));
    h = torch::relu(convs_[i]->forward(h));
    const auto& tag = layer_tags()[i];
    if (std::find(tags.begin(), tags.end(), tag) != tags.end()) out[tag] = h;
  }
  return out;
}

torch::Tensor BackboneImpl::features(const torch::Tensor& img, const std::string& tag) {
  return forward(img, {tag}).at(tag);
}

torch::Tensor BackboneImpl::embedding(const torch::Tensor& img, const std::string& tag) {
  return features(img, tag).mean({2, 3});
}

void BackboneImpl::load_weights(const std::string& path) {
  const auto ar = TensorArchive::load(path);
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    const auto& w = ar.get(conv_names_[i] + ".weight");
    const auto& b = ar.get(conv_names_[i] + ".bias");
    if (w.sizes() != convs_[i]->weight.sizes() || b.sizes() != convs_[i]->bias.sizes()) {
      throw CheckpointError("backbone weights for " + conv_names_[i] + " have the wrong shape");
    }
    convs_[i]->weight.copy_(w);
    convs_[i]->bias.copy_(b);
  }
}

// --- style extractor -------------------------------------------------------

StyleExtractorImpl::StyleExtractorImpl(std::int64_t embed_dim,
                                       const std::vector<std::int64_t>& level_channels, int hidden,
                                       int layers)
    : embed_dim_(embed_dim), level_channels_(level_channels) {
  trunk_ = register_module("trunk", nn::Sequential());
  std::int64_t in = embed_dim;
  for (int i = 0; i < layers; ++i) {
    trunk_->push_back(nn::Linear(in, hidden));
    trunk_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(kLeak)));
    in = hidden;
  }
  heads_ = register_module("heads", nn::ModuleList());
  for (auto c : level_channels) heads_->push_back(nn::Linear(hidden, 2 * c));
}

std::vector<AffineParams> StyleExtractorImpl::forward(const torch::Tensor& z) {
  if (z.dim() != 2 || z.size(1) != embed_dim_) {
    throw ShapeError("style extractor expects [N," + std::to_string(embed_dim_) + "] embeddings, got " +
                     shape_str(z));
  }
  const auto h = trunk_->forward(z);
  std::vector<AffineParams> out;
  for (std::size_t i = 0; i < heads_->size(); ++i) {
    const auto y = heads_[i]->as<nn::Linear>()->forward(h);
    const auto c = level_channels_[i];
    out.push_back({y.narrow(1, 0, c), F::softplus(y.narrow(1, c, c))});
  }
  return out;
}

// --- encoder -----------------------------------------------------------------

EncoderLevelImpl::EncoderLevelImpl(std::int64_t in_channels, std::int64_t channels, int stride,
                                   double eps)
    : eps_(eps) {
  proj_ = register_module("proj", conv3x3(in_channels, channels, stride));
  conv_in_ = register_module("conv_in", conv3x3(channels, channels));
  conv_out_ = register_module("conv_out", conv3x3(channels, channels));
}

LevelOutput EncoderLevelImpl::forward(const torch::Tensor& x, const AffineParams& y) {
  auto v = lrelu(proj_->forward(x));
  auto r = conv_out_->forward(lrelu(adain(conv_in_->forward(v), y, eps_)));
  return {v, r + v};
}

EncoderImpl::EncoderImpl(const GeneratorConfig& cfg) : image_size_(cfg.image_size) {
  stem_ = register_module("stem", conv3x3(3, cfg.channels.front()));
  std::int64_t in = cfg.channels.front();
  for (int i = 0; i < cfg.num_levels(); ++i) {
    const int stride = (i >= 1 && i <= cfg.downsample_levels) ? 2 : 1;
    levels_.push_back(register_module("level" + std::to_string(i),
                                      EncoderLevel(in, cfg.channels[i], stride, cfg.adain_eps)));
    in = cfg.channels[i];
  }
}

EncodeResult EncoderImpl::forward(const torch::Tensor& img, const std::vector<AffineParams>& styles) {
  if (img.dim() != 4 || img.size(1) != 3 || img.size(2) != image_size_ || img.size(3) != image_size_) {
    throw ShapeError("encoder expects [N,3," + std::to_string(image_size_) + "," +
                     std::to_string(image_size_) + "], got " + shape_str(img));
  }
  if (styles.size() != levels_.size()) {
    throw ConfigError("encoder has " + std::to_string(levels_.size()) + " AdaIN levels but received " +
                      std::to_string(styles.size()) + " affine parameter sets");
  }
  EncodeResult res;
  auto h = lrelu(stem_->forward(img));
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    auto lv = levels_[i]->forward(h, styles[i]);
    h = lv.o;
    res.levels.push_back(std::move(lv));
  }
  res.latent = h;
  return res;
}

// --- decoder -----------------------------------------------------------------

namespace {

nn::Sequential residual_branch(std::int64_t c) {
  return nn::Sequential(conv3x3(c, c), nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(kLeak)),
                        conv3x3(c, c));
}

}  // namespace

DecoderImpl::DecoderImpl(const GeneratorConfig& cfg)
    : latent_channels_(cfg.latent_channels()), latent_size_(cfg.latent_size()), upsample_(cfg.upsample) {
  blocks_ = register_module("blocks", nn::ModuleList());
  for (int i = 0; i < cfg.decoder_blocks; ++i) blocks_->push_back(residual_branch(latent_channels_));
  up_convs_ = register_module("up_convs", nn::ModuleList());
  up_blocks_ = register_module("up_blocks", nn::ModuleList());
  std::int64_t in = latent_channels_;
  for (int level = cfg.downsample_levels - 1; level >= 0; --level) {
    const auto out = cfg.channels[level];
    up_convs_->push_back(conv3x3(in, out));
    up_blocks_->push_back(residual_branch(out));
    in = out;
  }
  out_ = register_module("out", conv3x3(in, 3));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& latent) {
  if (latent.dim() != 4 || latent.size(1) != latent_channels_ || latent.size(2) != latent_size_ ||
      latent.size(3) != latent_size_) {
    throw ShapeError("decoder expects [N," + std::to_string(latent_channels_) + "," +
                     std::to_string(latent_size_) + "," + std::to_string(latent_size_) + "], got " +
                     shape_str(latent));
  }
  auto h = latent;
  for (const auto& b : *blocks_) h = h + b->as<nn::Sequential>()->forward(h);
  for (std::size_t i = 0; i < up_convs_->size(); ++i) {
    auto opts = F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0});
    if (upsample_ == UpsampleMode::kNearest) {
      opts.mode(torch::kNearest);
    } else {
      opts.mode(torch::kBilinear).align_corners(false);
    }
    h = F::interpolate(h, opts);
    h = lrelu(up_convs_[i]->as<nn::Conv2d>()->forward(h));
    h = h + up_blocks_[i]->as<nn::Sequential>()->forward(h);
  }
  return torch::tanh(out_->forward(h));
}

// --- classifier --------------------------------------------------------------

FilterClassifierImpl::FilterClassifierImpl(std::int64_t latent_channels, int hidden, int num_classes) {
  fc1_ = register_module("fc1", nn::Linear(latent_channels, hidden));
  fc2_ = register_module("fc2", nn::Linear(hidden, num_classes));
}

torch::Tensor FilterClassifierImpl::forward(const torch::Tensor& latent) {
  if (latent.dim() != 4) throw ShapeError("classifier expects a 4-d latent, got " + shape_str(latent));
  return fc2_->forward(lrelu(fc1_->forward(latent.mean({2, 3}))));
}

std::vector<int> predicted_classes(const torch::Tensor& logits) {
  if (logits.dim() != 2) throw ShapeError("logits must be [N, classes], got " + shape_str(logits));
  const auto l = logits.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  const auto* p = l.data_ptr<double>();
  const auto n = l.size(0);
  const auto k = l.size(1);
  std::vector<int> out(n);
  for (std::int64_t i = 0; i < n; ++i) {
    int best = 0;
    for (std::int64_t c = 1; c < k; ++c) {
      if (p[i * k + c] > p[i * k + best]) best = static_cast<int>(c);
    }
    out[i] = best;
  }
  return out;
}

// --- generator bundle ----------------------------------------------------

GeneratorImpl::GeneratorImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  backbone_ = register_module("backbone", Backbone(derive_seed(cfg_.seed, "backbone")));
  if (!cfg_.backbone_weights.empty()) backbone_->load_weights(cfg_.backbone_weights);
  style_ = register_module("style", StyleExtractor(backbone_channels(cfg_.style_layer), cfg_.channels,
                                                   cfg_.style_hidden, cfg_.style_layers));
  encoder_ = register_module("encoder", Encoder(cfg_));
  decoder_ = register_module("decoder", Decoder(cfg_));
  classifier_ = register_module(
      "classifier", FilterClassifier(cfg_.latent_channels(), cfg_.classifier_hidden, cfg_.num_classes));
  if (style_->num_heads() != encoder_->num_levels()) {
    throw ConfigError("style head count does not match encoder level count");
  }
  init_parameters(*style_, derive_seed(cfg_.seed, "style"));
  init_parameters(*encoder_, derive_seed(cfg_.seed, "encoder"));
  init_parameters(*decoder_, derive_seed(cfg_.seed, "decoder"));
  init_parameters(*classifier_, derive_seed(cfg_.seed, "classifier"));
}

torch::Tensor GeneratorImpl::style_embedding(const torch::Tensor& img_unit) {
  torch::NoGradGuard no_grad;
  return backbone_->embedding(img_unit, cfg_.style_layer);
}

std::vector<AffineParams> GeneratorImpl::extract_style(const torch::Tensor& z) { return style_->forward(z); }

EncodeResult GeneratorImpl::encode(const torch::Tensor& img_signed, const std::vector<AffineParams>& styles) {
  return encoder_->forward(img_signed, styles);
}

torch::Tensor GeneratorImpl::decode(const torch::Tensor& latent) { return decoder_->forward(latent); }

torch::Tensor GeneratorImpl::classify_filter(const torch::Tensor& latent) {
  return classifier_->forward(latent);
}

GeneratorOutput GeneratorImpl::forward(const torch::Tensor& img_unit) {
  if (img_unit.dim() != 4 || img_unit.size(1) != 3 || img_unit.size(2) != cfg_.image_size ||
      img_unit.size(3) != cfg_.image_size) {
    throw ShapeError("generator expects [N,3," + std::to_string(cfg_.image_size) + "," +
                     std::to_string(cfg_.image_size) + "], got " + shape_str(img_unit));
  }
  GeneratorOutput out;
  out.styles = extract_style(style_embedding(img_unit));
  auto enc = encode(img_unit * 2.0 - 1.0, out.styles);
  out.latent = enc.latent;
  out.image = decode(enc.latent);
  out.logits = classify_filter(enc.latent);
  return out;
}

std::vector<torch::Tensor> GeneratorImpl::trainable_parameters() const {
  std::vector<torch::Tensor> params;
  for (const torch::nn::Module* m : {static_cast<const nn::Module*>(style_.get()),
                                     static_cast<const nn::Module*>(encoder_.get()),
                                     static_cast<const nn::Module*>(decoder_.get()),
                                     static_cast<const nn::Module*>(classifier_.get())}) {
    for (const auto& p : m->parameters()) params.push_back(p);
  }
  return params;
}

// --- discriminator -----------------------------------------------------------

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int input_size, int base_channels, std::uint64_t seed)
    : input_size_(input_size) {
  const std::int64_t c = base_channels;
  auto conv = [](std::int64_t in, std::int64_t out, int stride) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(stride).padding(1));
  };
  auto act = [] { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(kLeak)); };
  net_ = register_module("net", nn::Sequential(conv(3, c, 2), act(), conv(c, 2 * c, 2), act(),
                                               conv(2 * c, 4 * c, 2), act(), conv(4 * c, 8 * c, 1), act(),
                                               conv(8 * c, 1, 1)));
  init_parameters(*this, seed);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& img) {
  if (img.dim() != 4 || img.size(1) != 3 || img.size(2) != input_size_ || img.size(3) != input_size_) {
    throw ShapeError("discriminator expects [N,3," + std::to_string(input_size_) + "," +
                     std::to_string(input_size_) + "], got " + shape_str(img));
  }
  return net_->forward(img);
}

// --- init --------------------------------------------------------------------

void init_parameters(torch::nn::Module& module, std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  torch::NoGradGuard no_grad;
  std::int64_t last_fan_in = 1;
  for (auto& p : module.named_parameters(/*recurse=*/true)) {
    auto& t = p.value();
    if (t.dim() >= 2) {
      last_fan_in = t.numel() / t.size(0);
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(last_fan_in));
    t.uniform_(-bound, bound, gen);
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view role) {
  return splitmix64(seed ^ fnv1a64(role));
}

}  // namespace unfilter
