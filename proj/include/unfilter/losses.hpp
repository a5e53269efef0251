#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "unfilter/model.hpp"

namespace unfilter {

struct LossWeights {
  double tex = 1e-3;
  double sem = 1e-4;
  double adv = 1e-3;
  double gp = 10.0;
  double cls = 0.5;

  // Throws ConfigError on negative or non-finite weights.
  void validate() const;
  nlohmann::json to_json() const;
};

enum class AdversarialMode { kWganGp, kHinge };

std::string to_string(AdversarialMode m);
AdversarialMode adversarial_mode_from_string(const std::string& s);

// Scalar components of one training step.
struct LossComponents {
  double tex = 0.0;
  double sem = 0.0;
  double glo = 0.0;
  double loc = 0.0;
  double gp = 0.0;
  double cls = 0.0;
};

struct LossBreakdown {
  double tex = 0.0;
  double sem = 0.0;
  double adv = 0.0;  // glo + loc + w.gp * gp + w.cls * cls
  double glo = 0.0;
  double loc = 0.0;
  double gp = 0.0;
  double cls = 0.0;
  double total = 0.0;  // w.tex * tex + w.sem * sem + w.adv * adv

  nlohmann::json to_json() const;
};

// Throws DivergenceError naming the first non-finite component.
LossBreakdown total_loss(const LossComponents& c, const LossWeights& w);

// --- semantic consistency ------------------------------------------------------

// Per-sample squared L2 distance divided by C*H*W, averaged over the batch.
torch::Tensor semantic_distance(const torch::Tensor& f_out, const torch::Tensor& f_gt);

// Sum of semantic_distance over `layers` of the frozen backbone. Both images
// are srgb_unit [N,3,H,W]; gradients flow into `out` only.
torch::Tensor semantic_consistency(Backbone& backbone, const torch::Tensor& out, const torch::Tensor& gt,
                                   const std::vector<std::string>& layers = {"relu3_2"});

// --- ID-MRF texture term -----------------------------------------------------

struct IdMrfOptions {
  double bandwidth = 0.5;  // h
  double eps = 1e-5;
};

// Contextual loss between a source (output) and target feature map of one
// sample, patches being 1x1 feature vectors. [C,H,W] or [C,P] inputs.
//   d_ij  = max(0, 1 - cos(x_i - mu_y, y_j - mu_y))
//   dn_ij = d_ij / (min_k d_ik + eps)
//   A_ij  = softmax_j((1 - dn_ij) / h)
//   loss  = -log(mean_j max_i A_ij)
torch::Tensor idmrf_single(const torch::Tensor& f_src, const torch::Tensor& f_tgt, const IdMrfOptions& opts = {});

// Batch mean of idmrf_single over [N,C,H,W] feature maps.
torch::Tensor idmrf_features(const torch::Tensor& f_src, const torch::Tensor& f_tgt,
                             const IdMrfOptions& opts = {});

torch::Tensor texture_idmrf(Backbone& backbone, const torch::Tensor& out, const torch::Tensor& gt,
                            const std::string& layer = "relu3_2", const IdMrfOptions& opts = {});

// --- adversarial terms -------------------------------------------------------

using Critic = std::function<torch::Tensor(const torch::Tensor&)>;

// Wasserstein estimate E[D(real)] - E[D(fake)] (wgan_gp), or the hinge critic
// loss E[relu(1 - D(real))] + E[relu(1 + D(fake))] (hinge). The critic
// minimises -critic_objective in wgan_gp mode and the hinge loss directly.
torch::Tensor critic_objective(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                               AdversarialMode mode = AdversarialMode::kWganGp);
// Loss the critic minimises.
torch::Tensor critic_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                          AdversarialMode mode = AdversarialMode::kWganGp);
// Loss the generator minimises: -E[D(fake)] in both modes.
torch::Tensor generator_adv_loss(const torch::Tensor& fake_scores);

// mean_n (||grad_x D(x_n)||_2 - 1)^2 on x = a*real + (1-a)*fake with one
// alpha per sample ([N] tensor in [0,1]). The graph is kept so the penalty can
// be backpropagated into the critic.
torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const torch::Tensor& alphas);

// Mean cross-entropy of [N,K] logits against int64 labels in [0,K).
torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels);

struct AdversarialInputs {
  torch::Tensor real;        // generator_signed targets [N,3,S,S]
  torch::Tensor fake;        // generator outputs [N,3,S,S]
  torch::Tensor real_crops;  // [N,3,c,c]
  torch::Tensor fake_crops;
  torch::Tensor logits;      // [N,17]
  torch::Tensor labels;      // int64 [N]
  torch::Tensor alphas_glo;  // [N]
  torch::Tensor alphas_loc;  // [N]
};

struct AdversarialTerms {
  torch::Tensor gen_term;       // generator-side glo + loc (no gp, no cls)
  torch::Tensor disc_glo_term;  // critic_objective of the global critic
  torch::Tensor disc_loc_term;
  torch::Tensor gp_term;        // global + local penalties
  torch::Tensor cls_term;
};

// Throws ValidationError when images, crops, logits and labels disagree on
// batch size.
AdversarialTerms adversarial_losses(PatchDiscriminator& global, PatchDiscriminator& local,
                                    const AdversarialInputs& in,
                                    AdversarialMode mode = AdversarialMode::kWganGp);

}  // namespace unfilter
