#include "unfilter/losses.hpp"

#include <cmath>

#include "unfilter/errors.hpp"

namespace unfilter {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
  for (double w : {tex, sem, adv, gp, cls}) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("loss weights must be finite and >= 0");
  }
}

nlohmann::json LossWeights::to_json() const {
  return {{"tex", tex}, {"sem", sem}, {"adv", adv}, {"gp", gp}, {"cls", cls}};
}

std::string to_string(AdversarialMode m) { return m == AdversarialMode::kWganGp ? "wgan_gp" : "hinge"; }

AdversarialMode adversarial_mode_from_string(const std::string& s) {
  if (s == "wgan_gp") return AdversarialMode::kWganGp;
  if (s == "hinge") return AdversarialMode::kHinge;
  throw ConfigError("unknown adversarial mode '" + s + "' (expected wgan_gp or hinge)");
}

nlohmann::json LossBreakdown::to_json() const {
  return {{"tex", tex}, {"sem", sem}, {"adv", adv}, {"glo", glo},
          {"loc", loc}, {"gp", gp},   {"cls", cls}, {"total", total}};
}

LossBreakdown total_loss(const LossComponents& c, const LossWeights& w) {
  const std::pair<const char*, double> parts[] = {{"tex", c.tex}, {"sem", c.sem}, {"glo", c.glo},
                                                  {"loc", c.loc}, {"gp", c.gp},   {"cls", c.cls}};
  for (const auto& [name, v] : parts) {
    if (!std::isfinite(v)) {
      throw DivergenceError(name, std::string("non-finite loss component '") + name + "'");
    }
  }
  LossBreakdown b;
  b.tex = c.tex;
  b.sem = c.sem;
  b.glo = c.glo;
  b.loc = c.loc;
  b.gp = c.gp;
  b.cls = c.cls;
  b.adv = c.glo + c.loc + w.gp * c.gp + w.cls * c.cls;
  b.total = w.tex * c.tex + w.sem * c.sem + w.adv * b.adv;
  if (!std::isfinite(b.total)) throw DivergenceError("total", "non-finite total loss");
  return b;
}

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + c10::str(a.sizes()) + " vs " +
                     c10::str(b.sizes()));
  }
}

}  // namespace

torch::Tensor semantic_distance(const torch::Tensor& f_out, const torch::Tensor& f_gt) {
  require_same_shape(f_out, f_gt, "semantic_distance");
  if (f_out.dim() < 2) throw ShapeError("semantic_distance expects batched feature maps");
  const auto n = f_out.size(0);
  const auto chw = static_cast<double>(f_out.numel() / n);
  return (f_out - f_gt).pow(2).reshape({n, -1}).sum(1).div(chw).mean();
}

torch::Tensor semantic_consistency(Backbone& backbone, const torch::Tensor& out, const torch::Tensor& gt,
                                   const std::vector<std::string>& layers) {
  require_same_shape(out, gt, "semantic_consistency");
  const auto f_out = backbone->forward(out, layers);
  std::map<std::string, torch::Tensor> f_gt;
  {
    torch::NoGradGuard no_grad;
    f_gt = backbone->forward(gt, layers);
  }
  auto total = torch::zeros({}, out.options());
  for (const auto& tag : layers) total = total + semantic_distance(f_out.at(tag), f_gt.at(tag));
  return total;
}

torch::Tensor idmrf_single(const torch::Tensor& f_src, const torch::Tensor& f_tgt, const IdMrfOptions& opts) {
  require_same_shape(f_src, f_tgt, "texture_idmrf");
  if (f_src.dim() != 2 && f_src.dim() != 3) throw ShapeError("idmrf_single expects [C,H,W] or [C,P]");
  const auto c = f_src.size(0);
  const auto x = f_src.reshape({c, -1}).t();  // [P_src, C]
  const auto y = f_tgt.reshape({c, -1}).t();  // [P_tgt, C]
  const auto mu = y.mean(0, true);
  const auto xn = F::normalize(x - mu, F::NormalizeFuncOptions().dim(1));
  const auto yn = F::normalize(y - mu, F::NormalizeFuncOptions().dim(1));
  const auto d = (1.0 - xn.matmul(yn.t())).clamp_min(0.0);
  const auto dmin = std::get<0>(d.min(1, true));
  const auto rel = d / (dmin + opts.eps);
  const auto affinity = torch::softmax((1.0 - rel) / opts.bandwidth, 1);
  const auto best = std::get<0>(affinity.max(0));
  return -torch::log(best.mean());
}

torch::Tensor idmrf_features(const torch::Tensor& f_src, const torch::Tensor& f_tgt, const IdMrfOptions& opts) {
  require_same_shape(f_src, f_tgt, "texture_idmrf");
  if (f_src.dim() != 4) throw ShapeError("idmrf_features expects [N,C,H,W]");
  auto total = torch::zeros({}, f_src.options());
  const auto n = f_src.size(0);
  for (std::int64_t i = 0; i < n; ++i) total = total + idmrf_single(f_src[i], f_tgt[i], opts);
  return total / static_cast<double>(n);
}

torch::Tensor texture_idmrf(Backbone& backbone, const torch::Tensor& out, const torch::Tensor& gt,
                            const std::string& layer, const IdMrfOptions& opts) {
  require_same_shape(out, gt, "texture_idmrf");
  const auto f_out = backbone->features(out, layer);
  torch::Tensor f_gt;
  {
    torch::NoGradGuard no_grad;
    f_gt = backbone->features(gt, layer);
  }
  return idmrf_features(f_out, f_gt, opts);
}

torch::Tensor critic_objective(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                               AdversarialMode mode) {
  if (mode == AdversarialMode::kWganGp) return real_scores.mean() - fake_scores.mean();
  return torch::relu(1.0 - real_scores).mean() + torch::relu(1.0 + fake_scores).mean();
}

torch::Tensor critic_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                          AdversarialMode mode) {
  const auto obj = critic_objective(real_scores, fake_scores, mode);
  return mode == AdversarialMode::kWganGp ? -obj : obj;
}

torch::Tensor generator_adv_loss(const torch::Tensor& fake_scores) { return -fake_scores.mean(); }

torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const torch::Tensor& alphas) {
  require_same_shape(real, fake, "gradient_penalty");
  const auto n = real.size(0);
  if (alphas.dim() != 1 || alphas.size(0) != n) {
    throw ValidationError("gradient_penalty needs one alpha per sample");
  }
  std::vector<std::int64_t> view(real.dim(), 1);
  view[0] = n;
  const auto a = alphas.to(real.options()).view(view);
  auto x = (a * real.detach() + (1.0 - a) * fake.detach()).requires_grad_(true);
  const auto scores = critic(x);
  const auto grads = torch::autograd::grad({scores.sum()}, {x}, {}, /*retain_graph=*/true,
                                           /*create_graph=*/true)[0];
  const auto norms = grads.reshape({n, -1}).norm(2, 1);
  return (norms - 1.0).pow(2).mean();
}

torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels) {
  if (logits.dim() != 2 || labels.dim() != 1 || logits.size(0) != labels.size(0)) {
    throw ValidationError("classification_loss: logits " + c10::str(logits.sizes()) + " vs labels " +
                          c10::str(labels.sizes()));
  }
  return F::cross_entropy(logits, labels.to(torch::kInt64));
}

AdversarialTerms adversarial_losses(PatchDiscriminator& global, PatchDiscriminator& local,
                                    const AdversarialInputs& in, AdversarialMode mode) {
  const auto n = in.real.size(0);
  for (const auto* t : {&in.fake, &in.real_crops, &in.fake_crops, &in.logits, &in.labels}) {
    if (t->dim() == 0 || t->size(0) != n) {
      throw ValidationError("adversarial_losses: batch size mismatch between images, crops, logits and labels");
    }
  }
  AdversarialTerms t;
  const auto real_g = global->forward(in.real);
  const auto fake_g = global->forward(in.fake);
  const auto real_l = local->forward(in.real_crops);
  const auto fake_l = local->forward(in.fake_crops);
  t.disc_glo_term = critic_objective(real_g, fake_g, mode);
  t.disc_loc_term = critic_objective(real_l, fake_l, mode);
  if (mode == AdversarialMode::kWganGp) {
    t.gen_term = critic_objective(real_g.detach(), fake_g, mode) + critic_objective(real_l.detach(), fake_l, mode);
  } else {
    t.gen_term = generator_adv_loss(fake_g) + generator_adv_loss(fake_l);
  }
  t.gp_term = gradient_penalty([&](const torch::Tensor& x) { return global->forward(x); }, in.real, in.fake,
                               in.alphas_glo) +
              gradient_penalty([&](const torch::Tensor& x) { return local->forward(x); }, in.real_crops,
                               in.fake_crops, in.alphas_loc);
  t.cls_term = classification_loss(in.logits, in.labels);
  return t;
}

}  // namespace unfilter
