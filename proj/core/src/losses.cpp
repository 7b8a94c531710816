#include "rfgen/losses.hpp"

#include <nlohmann/json.hpp>

#include "rfgen/common.hpp"
#include "rfgen/kernels.hpp"

namespace rfgen {

namespace F = torch::nn::functional;
using nlohmann::json;

namespace {

torch::Tensor as_batched(const torch::Tensor& t) { return t.dim() == 3 ? t.unsqueeze(0) : t; }

void write_opt(json& j, const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
}

std::optional<double> read_opt(const json& j, const char* key) {
    if (j.contains(key)) return j.at(key).get<double>();
    return std::nullopt;
}

} // namespace

json to_json(const LossReport& report) {
    json j;
    write_opt(j, "cor", report.cor);
    write_opt(j, "reg", report.reg);
    write_opt(j, "l1", report.l1);
    write_opt(j, "per", report.per);
    write_opt(j, "sty", report.sty);
    write_opt(j, "adv_g", report.adv_g);
    write_opt(j, "adv_d", report.adv_d);
    j["total"] = report.total;
    return j;
}

LossReport loss_report_from_json(const json& j) {
    LossReport r;
    r.cor = read_opt(j, "cor");
    r.reg = read_opt(j, "reg");
    r.l1 = read_opt(j, "l1");
    r.per = read_opt(j, "per");
    r.sty = read_opt(j, "sty");
    r.adv_g = read_opt(j, "adv_g");
    r.adv_d = read_opt(j, "adv_d");
    r.total = j.at("total").get<double>();
    return r;
}

namespace detail {

torch::Tensor sampling_correctness_features(const torch::Tensor& source_features,
                                            const torch::Tensor& target_features,
                                            const torch::Tensor& flow) {
    torch::Tensor phi_s = as_batched(source_features);
    torch::Tensor phi_t = as_batched(target_features);
    torch::Tensor w = as_batched(flow);
    require(phi_s.sizes() == phi_t.sizes(), "source/target feature shapes disagree");
    require(w.size(-1) == phi_s.size(-1) && w.size(-2) == phi_s.size(-2),
            "flow resolution does not match the provider layer");

    torch::Tensor warped = kernels::warp(phi_s, w);
    torch::Tensor sim =
        (F::normalize(warped, F::NormalizeFuncOptions().dim(1)) *
         F::normalize(phi_t, F::NormalizeFuncOptions().dim(1)))
            .sum(1); // [B,h,w]

    torch::Tensor sim_max;
    {
        // Best similarity any source location can offer each target location;
        // independent of the flow, so no gradient is needed.
        torch::NoGradGuard no_grad;
        const auto b = phi_s.size(0), d = phi_s.size(1);
        const auto pixels = phi_s.size(2) * phi_s.size(3);
        torch::Tensor ns =
            F::normalize(phi_s.reshape({b, d, pixels}), F::NormalizeFuncOptions().dim(1));
        torch::Tensor nt =
            F::normalize(phi_t.reshape({b, d, pixels}), F::NormalizeFuncOptions().dim(1));
        sim_max = std::get<0>(torch::bmm(nt.transpose(1, 2), ns).max(2))
                      .reshape({b, phi_s.size(2), phi_s.size(3)})
                      .clamp_min(1e-8);
    }
    return torch::exp(-sim / sim_max).mean();
}

} // namespace detail

torch::Tensor sampling_correctness(const torch::Tensor& source_image,
                                   const torch::Tensor& target_image, const torch::Tensor& flow,
                                   FeatureProvider& provider) {
    require(source_image.sizes() == target_image.sizes(), "image shapes disagree");
    const auto h = flow.size(-2), w = flow.size(-1);
    torch::Tensor phi_s = provider->feature_at(source_image, h, w);
    torch::Tensor phi_t = provider->feature_at(target_image, h, w);
    return detail::sampling_correctness_features(phi_s, phi_t, flow);
}

torch::Tensor flow_regularization(const torch::Tensor& flow, int patch) {
    require(patch >= 3, "affine fit needs a patch of at least 3");
    torch::Tensor w = as_batched(flow);
    require(w.size(1) == 2, "flow must have 2 channels");
    const auto height = w.size(2), width = w.size(3);
    require(height >= patch && width >= patch, "patch larger than flow extent");

    const auto opts = w.options();
    torch::Tensor grid_x = torch::arange(width, opts).view({1, 1, 1, width});
    torch::Tensor grid_y = torch::arange(height, opts).view({1, 1, height, 1});
    torch::Tensor coords = torch::cat(
        {w.narrow(1, 0, 1) + grid_x, w.narrow(1, 1, 1) + grid_y}, 1); // [B,2,H,W]

    // Non-overlapping patches of absolute sampling coordinates.
    torch::Tensor patches = F::unfold(
        coords, F::UnfoldFuncOptions({patch, patch}).stride({patch, patch})); // [B, 2*p*p, P]
    const auto b = patches.size(0), n_patches = patches.size(2);
    const int64_t n = static_cast<int64_t>(patch) * patch;
    patches = patches.reshape({b, 2, n, n_patches});

    // Residual projector I - X (X^T X)^-1 X^T for the patch-local design
    // matrix X = [x, y, 1]; identical for every patch, so build it once.
    torch::Tensor design = torch::empty({n, 3}, opts);
    for (int ky = 0; ky < patch; ++ky)
        for (int kx = 0; kx < patch; ++kx) {
            design[ky * patch + kx][0] = static_cast<double>(kx);
            design[ky * patch + kx][1] = static_cast<double>(ky);
            design[ky * patch + kx][2] = 1.0;
        }
    torch::Tensor xtx_inv = torch::linalg_inv(design.t().matmul(design));
    torch::Tensor projector =
        torch::eye(n, opts) - design.matmul(xtx_inv).matmul(design.t()); // [n,n]

    torch::Tensor residual = torch::einsum("ij,bcjp->bcip", {projector, patches});
    return residual.pow(2).mean();
}

ContentLossValues content_losses(const torch::Tensor& generated, const torch::Tensor& target,
                                 FeatureProvider& provider) {
    require(generated.sizes() == target.sizes(), "image shapes disagree");
    ContentLossValues out;
    out.l1 = (generated - target).abs().mean();

    std::vector<torch::Tensor> phi_g = provider->features(generated);
    std::vector<torch::Tensor> phi_t = provider->features(target);

    out.per = torch::zeros({}, out.l1.options());
    for (int i : provider->perceptual_layers()) out.per = out.per + (phi_g[i] - phi_t[i]).abs().mean();

    out.sty = torch::zeros({}, out.l1.options());
    for (int j : provider->style_layers())
        out.sty = out.sty + (kernels::gram(phi_g[j]) - kernels::gram(phi_t[j])).abs().mean();
    return out;
}

AdversarialLossValues adversarial_losses(const torch::Tensor& real_logits,
                                         const torch::Tensor& fake_logits) {
    require(real_logits.sizes() == fake_logits.sizes(), "logit map shapes disagree");
    AdversarialLossValues out;
    // softplus(-x) = -log sig(x); softplus(x) = -log(1 - sig(x)).
    out.discriminator = F::softplus(-real_logits).mean() + F::softplus(fake_logits).mean();
    out.generator = F::softplus(-fake_logits).mean();
    return out;
}

LossReport total_loss(int stage, LossReport components, const LossWeights& weights) {
    require(stage == 1 || stage == 2, "stage must be 1 or 2");
    auto need = [&](const std::optional<double>& v, const char* name) {
        require(v.has_value(), std::string("stage ") + std::to_string(stage) +
                                   " total requires component '" + name + "'");
        return *v;
    };
    double total = weights.cor * need(components.cor, "cor") +
                   weights.reg * need(components.reg, "reg");
    if (stage == 2) {
        total += weights.l1 * need(components.l1, "l1") +
                 weights.per * need(components.per, "per") +
                 weights.sty * need(components.sty, "sty") + need(components.adv_g, "adv_g");
    }
    components.total = total;
    return components;
}

} // namespace rfgen
