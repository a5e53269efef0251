#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "unfilter/dataset.hpp"
#include "unfilter/image.hpp"
#include "unfilter/losses.hpp"
#include "unfilter/model.hpp"

namespace unfilter {

struct TrainConfig {
  GeneratorConfig model;
  LossWeights weights;
  AdversarialMode adversarial = AdversarialMode::kWganGp;
  std::vector<std::string> sem_layers = {"relu3_2"};
  std::string tex_layer = "relu3_2";

  std::int64_t steps = 120000;
  int batch_size = 8;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double lr_gen = 2e-4;
  double lr_disc = 1e-3;
  double flip_prob = 0.5;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;  // 0: only the final checkpoint
  bool deterministic = true;

  std::string dataset_dir;
  std::string out_dir;
  // Filter classes used as inputs besides "original"; empty means every
  // filter listed in the manifest.
  std::vector<std::string> filters;
  int max_images = 0;  // 0: all images; otherwise the first N image ids

  // 256x256, six levels (64..256 channels), 120k steps.
  static TrainConfig paper_profile();
  // CPU-sized run: 64x64 inputs, 32..128 channels, 2,000 steps on 20 images.
  static TrainConfig desk_profile();

  // Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Pixel tensors: [N,3,H,W] float in the image's own value range.
torch::Tensor image_to_tensor(const RgbImage& img);
// `t` is [3,H,W] or [1,3,H,W]; values are clamped to the range of `space`.
RgbImage tensor_to_image(const torch::Tensor& t, ColorSpace space);

struct PairSample {
  std::string image_id;
  std::string filter;  // input class name
  int label = 0;       // class_index(filter)
};

// (filtered input, original target) pairs joined on image_id from a
// synthesized dataset, resized to the working resolution.
class PairedDataset {
 public:
  PairedDataset(const std::filesystem::path& root, int image_size, const std::vector<std::string>& filters,
                int max_images);

  std::size_t size() const { return samples_.size(); }
  const PairSample& sample(std::size_t i) const { return samples_[i]; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& image_ids() const { return ids_; }
  int image_size() const { return image_size_; }

  // srgb_unit [3,S,S] tensors.
  torch::Tensor input(std::size_t i) const;
  torch::Tensor target(std::size_t i) const;

 private:
  torch::Tensor load(const std::string& filter, const std::string& image_id) const;

  std::filesystem::path root_;
  int image_size_;
  std::vector<std::string> ids_;
  std::vector<std::string> classes_;
  std::vector<PairSample> samples_;
  std::map<std::string, std::string> paths_;  // "<filter>/<id>" -> relative path
  bool preloaded_ = false;
  std::map<std::string, torch::Tensor> cache_;
};

struct Batch {
  torch::Tensor input;   // srgb_unit [B,3,S,S]
  torch::Tensor target;  // srgb_unit [B,3,S,S]
  torch::Tensor labels;  // int64 [B]
  std::vector<std::size_t> indices;
  std::vector<bool> flipped;
};

struct StepRecord {
  std::int64_t step = 0;  // 1-based index of the finished step
  LossBreakdown losses;
  double lr_gen = 0.0;
  double lr_disc = 0.0;

  nlohmann::json to_json() const;
};

class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  const TrainConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }

  // Draws the next shuffled batch and its horizontal flips.
  Batch next_batch();
  // One critic update (both discriminators) followed by one generator update.
  StepRecord step();

  // Called with every batch that step() consumes, before any update.
  void set_batch_hook(std::function<void(const Batch&)> hook) { batch_hook_ = std::move(hook); }

  void save_checkpoint(const std::filesystem::path& path) const;
  // Restores parameters, optimizer moments, step, RNG and sampling order.
  // The stored model config must equal this trainer's.
  void load_checkpoint(const std::filesystem::path& path);

  Generator generator() const { return gen_; }
  PatchDiscriminator global_critic() const { return disc_global_; }
  PatchDiscriminator local_critic() const { return disc_local_; }
  const PairedDataset& dataset() const { return *data_; }
  torch::optim::Adam& gen_optimizer() { return *opt_gen_; }
  torch::optim::Adam& disc_optimizer() { return *opt_disc_; }

 private:
  void reshuffle();

  TrainConfig cfg_;
  std::unique_ptr<PairedDataset> data_;
  Generator gen_{nullptr};
  PatchDiscriminator disc_global_{nullptr};
  PatchDiscriminator disc_local_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_gen_;
  std::unique_ptr<torch::optim::Adam> opt_disc_;
  std::mt19937_64 rng_;
  std::vector<std::int64_t> order_;
  std::size_t cursor_ = 0;
  std::int64_t step_ = 0;
  std::function<void(const Batch&)> batch_hook_;
};

std::string checkpoint_name(std::int64_t step);

struct TrainResult {
  std::filesystem::path checkpoint;
  std::optional<StepRecord> last;
};

// Runs until cfg.steps, appending to <out_dir>/train_log.jsonl and writing
// ckpt_<step>.bin every checkpoint_every steps and at the end. On a
// non-finite loss the DivergenceError names the last good checkpoint.
TrainResult train(const TrainConfig& cfg, const std::filesystem::path& resume = {},
                  const std::function<void(const StepRecord&)>& on_step = {});

struct LoadedModel {
  TrainConfig config;
  std::int64_t step = 0;
  Generator generator{nullptr};
};

// Throws CheckpointError on corrupt or incompatible files.
LoadedModel load_model(const std::filesystem::path& ckpt);

struct UnfilterResult {
  RgbImage image;  // srgb_unit at the network resolution
  std::string predicted_filter;
  torch::Tensor logits;
};

// Resizes to the network resolution, runs the generator in inference mode.
UnfilterResult unfilter(Generator& gen, const RgbImage& img);
std::vector<UnfilterResult> unfilter_batch(Generator& gen, const std::vector<RgbImage>& imgs);

void set_deterministic(bool on);

}  // namespace unfilter
