#pragma once

#include <optional>
#include <string>

#include <torch/torch.h>

#include <nlohmann/json_fwd.hpp>

#include "rfgen/config.hpp"
#include "rfgen/provider.hpp"

namespace rfgen {

// Scalar record of one optimization step. `total` is the weighted sum the
// generator minimizes: stage 1 uses the flow terms only; stage 2 adds the
// content terms and the (unweighted) generator adversarial term.
struct LossReport {
    std::optional<double> cor, reg, l1, per, sty, adv_g, adv_d;
    double total = 0.0;
};

nlohmann::json to_json(const LossReport& report);
LossReport loss_report_from_json(const nlohmann::json& j);

// Warm-up loss for the flow extractor: warp the source's provider features
// by `flow`, compare against the target's features with per-location cosine
// similarity normalized by the best similarity any source location could
// offer, and average exp(-sim/sim_max).
torch::Tensor sampling_correctness(const torch::Tensor& source_image,
                                   const torch::Tensor& target_image, const torch::Tensor& flow,
                                   FeatureProvider& provider);

namespace detail {
// Same loss on already-extracted feature maps (kept separate so the formula
// can be probed without a provider).
torch::Tensor sampling_correctness_features(const torch::Tensor& source_features,
                                            const torch::Tensor& target_features,
                                            const torch::Tensor& flow);
} // namespace detail

// Penalizes local patches of absolute sampling coordinates (grid + flow) by
// their squared residual from the best-fit 2-D affine transform.
torch::Tensor flow_regularization(const torch::Tensor& flow, int patch = 4);

struct ContentLossValues {
    torch::Tensor l1, per, sty;
};

// L1 / perceptual / style terms between a generated and a real image, all
// per-element means so the weights stay resolution independent.
ContentLossValues content_losses(const torch::Tensor& generated, const torch::Tensor& target,
                                 FeatureProvider& provider);

struct AdversarialLossValues {
    torch::Tensor discriminator; // -E[log sig(real)] - E[log(1 - sig(fake))]
    torch::Tensor generator;     // -E[log sig(fake)] (non-saturating)
};

AdversarialLossValues adversarial_losses(const torch::Tensor& real_logits,
                                         const torch::Tensor& fake_logits);

// Recombines recorded components into the stage total; throws when a
// component required by the stage is missing.
LossReport total_loss(int stage, LossReport components, const LossWeights& weights);

} // namespace rfgen
