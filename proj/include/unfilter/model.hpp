#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

namespace unfilter {

enum class UpsampleMode { kNearest, kBilinear };

struct GeneratorConfig {
  int image_size = 256;
  // One entry per encoder level; each level owns one AdaIN layer and one
  // style head.
  std::vector<std::int64_t> channels = {64, 128, 256, 256, 256, 256};
  // Levels 1..downsample_levels use stride-2 projections.
  int downsample_levels = 4;
  // 0 means "one per encoder level"; anything else must equal the level count.
  int style_heads = 0;
  int style_hidden = 512;
  int style_layers = 5;
  int classifier_hidden = 256;
  int num_classes = 17;
  int decoder_blocks = 2;
  UpsampleMode upsample = UpsampleMode::kNearest;
  double adain_eps = 1e-5;
  // Backbone layer whose global-average-pooled activations feed the style
  // extractor.
  std::string style_layer = "relu3_2";
  std::string backbone_weights;  // empty: seeded random initialisation
  int disc_channels = 64;
  int local_crop = 128;
  std::uint64_t seed = 0;

  int num_levels() const { return static_cast<int>(channels.size()); }
  int latent_size() const { return image_size >> downsample_levels; }
  std::int64_t latent_channels() const { return channels.back(); }
  // Throws ConfigError.
  void validate() const;

  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

// Per-sample target statistics for one AdaIN layer; both tensors are [N, C].
struct AffineParams {
  torch::Tensor mean;
  torch::Tensor std;
};

// sigma(y) * (x - mu(x)) / (sigma(x) + eps) + mu(y), statistics per sample and
// channel over spatial positions (population variance).
torch::Tensor adain(const torch::Tensor& x, const AffineParams& y, double eps = 1e-5);

// Per-channel spatial (mean, population std) of an [N, C, H, W] map.
AffineParams channel_stats(const torch::Tensor& x);

// --- frozen backbone ---------------------------------------------------------

// VGG16 feature stack truncated after block 3. Layer tags: relu1_1, relu1_2,
// relu2_1, relu2_2, relu3_1, relu3_2, relu3_3. Input is srgb_unit [N,3,H,W];
// ImageNet mean/std normalisation is applied internally. Parameters never
// require grad.
class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(std::uint64_t seed = 0);

  static const std::vector<std::string>& layer_tags();

  std::map<std::string, torch::Tensor> forward(const torch::Tensor& img,
                                               const std::vector<std::string>& tags);
  torch::Tensor features(const torch::Tensor& img, const std::string& tag);
  // Global-average-pooled activations of `tag`: [N, C].
  torch::Tensor embedding(const torch::Tensor& img, const std::string& tag);

  // Tensor-archive file with keys conv1_1.weight, conv1_1.bias, ...
  void load_weights(const std::string& path);

 private:
  std::vector<std::string> conv_names_;
  std::vector<torch::nn::Conv2d> convs_;
  torch::Tensor mean_;
  torch::Tensor std_;
};
TORCH_MODULE(Backbone);

// --- generator ---------------------------------------------------------------

class StyleExtractorImpl : public torch::nn::Module {
 public:
  StyleExtractorImpl(std::int64_t embed_dim, const std::vector<std::int64_t>& level_channels,
                     int hidden, int layers);

  std::vector<AffineParams> forward(const torch::Tensor& z);

  std::size_t num_heads() const { return heads_->size(); }
  torch::nn::Sequential trunk() const { return trunk_; }

 private:
  std::int64_t embed_dim_;
  std::vector<std::int64_t> level_channels_;
  torch::nn::Sequential trunk_;
  torch::nn::ModuleList heads_;
};
TORCH_MODULE(StyleExtractor);

struct LevelOutput {
  torch::Tensor v;  // level input after projection (the skip branch)
  torch::Tensor o;  // r(v, y) + v
};

class EncoderLevelImpl : public torch::nn::Module {
 public:
  EncoderLevelImpl(std::int64_t in_channels, std::int64_t channels, int stride, double eps);

  LevelOutput forward(const torch::Tensor& x, const AffineParams& y);

  // Last layer of the residual branch; zeroing it makes the level an identity
  // on v.
  torch::nn::Conv2d residual_out() const { return conv_out_; }

 private:
  double eps_;
  torch::nn::Conv2d proj_{nullptr};
  torch::nn::Conv2d conv_in_{nullptr};
  torch::nn::Conv2d conv_out_{nullptr};
};
TORCH_MODULE(EncoderLevel);

struct EncodeResult {
  torch::Tensor latent;
  std::vector<LevelOutput> levels;
};

class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const GeneratorConfig& cfg);

  // `img` is generator_signed [N,3,S,S].
  EncodeResult forward(const torch::Tensor& img, const std::vector<AffineParams>& styles);

  std::size_t num_levels() const { return levels_.size(); }
  EncoderLevel level(std::size_t i) const { return levels_[i]; }

 private:
  int image_size_;
  torch::nn::Conv2d stem_{nullptr};
  std::vector<EncoderLevel> levels_;
};
TORCH_MODULE(Encoder);

class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const GeneratorConfig& cfg);

  // Returns generator_signed [N,3,S,S] (tanh output).
  torch::Tensor forward(const torch::Tensor& latent);

 private:
  std::int64_t latent_channels_;
  int latent_size_;
  UpsampleMode upsample_;
  torch::nn::ModuleList blocks_;
  torch::nn::ModuleList up_convs_;
  torch::nn::ModuleList up_blocks_;
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(Decoder);

class FilterClassifierImpl : public torch::nn::Module {
 public:
  FilterClassifierImpl(std::int64_t latent_channels, int hidden, int num_classes);

  // [N, num_classes] logits.
  torch::Tensor forward(const torch::Tensor& latent);

 private:
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
};
TORCH_MODULE(FilterClassifier);

// Index of the largest logit per row; ties go to the lowest class index.
std::vector<int> predicted_classes(const torch::Tensor& logits);

struct GeneratorOutput {
  torch::Tensor image;  // generator_signed [N,3,S,S]
  torch::Tensor logits;
  torch::Tensor latent;
  std::vector<AffineParams> styles;
};

// Style extractor, encoder, decoder and auxiliary classifier. The frozen
// backbone is owned alongside (registered as a submodule so it is saved in
// checkpoints) but excluded from trainable_parameters().
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorConfig& cfg);

  const GeneratorConfig& config() const { return cfg_; }

  // Embedding of an srgb_unit batch through the frozen backbone.
  torch::Tensor style_embedding(const torch::Tensor& img_unit);
  std::vector<AffineParams> extract_style(const torch::Tensor& z);
  EncodeResult encode(const torch::Tensor& img_signed, const std::vector<AffineParams>& styles);
  torch::Tensor decode(const torch::Tensor& latent);
  torch::Tensor classify_filter(const torch::Tensor& latent);

  // Full pass on an srgb_unit batch.
  GeneratorOutput forward(const torch::Tensor& img_unit);

  std::vector<torch::Tensor> trainable_parameters() const;

  Backbone backbone() const { return backbone_; }
  StyleExtractor style_extractor() const { return style_; }
  Encoder encoder() const { return encoder_; }
  Decoder decoder() const { return decoder_; }
  FilterClassifier classifier() const { return classifier_; }

 private:
  GeneratorConfig cfg_;
  Backbone backbone_{nullptr};
  StyleExtractor style_{nullptr};
  Encoder encoder_{nullptr};
  Decoder decoder_{nullptr};
  FilterClassifier classifier_{nullptr};
};
TORCH_MODULE(Generator);

// --- discriminators ------------------------------------------------------

// PatchGAN critic with no output nonlinearity. Rejects inputs whose spatial
// size differs from `input_size`.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  PatchDiscriminatorImpl(int input_size, int base_channels, std::uint64_t seed);

  torch::Tensor forward(const torch::Tensor& img);
  int input_size() const { return input_size_; }

 private:
  int input_size_;
  torch::nn::Sequential net_;
};
TORCH_MODULE(PatchDiscriminator);

// Deterministic re-initialisation: uniform(+-1/sqrt(fan_in)) weights and
// biases, drawn in named_parameters() order from a generator seeded by `seed`.
void init_parameters(torch::nn::Module& module, std::uint64_t seed);

// Seeds used for the sub-networks derived from one creation seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view role);

}  // namespace unfilter
