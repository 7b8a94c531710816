#include "rfgen/kernels.hpp"

#include "rfgen/common.hpp"

namespace rfgen::kernels {

namespace {

// Lifts a 3-D tensor to 4-D so every kernel runs one batched code path.
torch::Tensor as_batched(const torch::Tensor& t, bool& was_unbatched) {
    require(t.dim() == 3 || t.dim() == 4, "expected a [C,H,W] or [B,C,H,W] tensor");
    was_unbatched = t.dim() == 3;
    return was_unbatched ? t.unsqueeze(0) : t;
}

void check_spatial_match(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
    require(a.size(-1) == b.size(-1) && a.size(-2) == b.size(-2),
            std::string("spatial dimensions disagree in ") + what);
    require(a.size(0) == b.size(0), std::string("batch sizes disagree in ") + what);
}

} // namespace

torch::Tensor warp(const torch::Tensor& feature, const torch::Tensor& flow) {
    bool unbatched_f = false, unbatched_w = false;
    torch::Tensor f = as_batched(feature, unbatched_f);
    torch::Tensor w = as_batched(flow, unbatched_w);
    require(unbatched_f == unbatched_w, "feature and flow must both be batched or both not");
    require(w.size(1) == 2, "flow must have 2 channels (dx, dy)");
    check_spatial_match(f, w, "warp");

    const int64_t batch = f.size(0), channels = f.size(1);
    const int64_t height = f.size(2), width = f.size(3);
    const auto opts = f.options();

    torch::Tensor grid_x = torch::arange(width, opts).view({1, 1, width});
    torch::Tensor grid_y = torch::arange(height, opts).view({1, height, 1});
    torch::Tensor px = grid_x + w.select(1, 0); // [B,H,W]
    torch::Tensor py = grid_y + w.select(1, 1);

    torch::Tensor x0f = px.floor();
    torch::Tensor y0f = py.floor();
    torch::Tensor tx = (px - x0f).unsqueeze(1);
    torch::Tensor ty = (py - y0f).unsqueeze(1);

    torch::Tensor x0 = x0f.to(torch::kLong).clamp(0, width - 1);
    torch::Tensor x1 = (x0f.to(torch::kLong) + 1).clamp(0, width - 1);
    torch::Tensor y0 = y0f.to(torch::kLong).clamp(0, height - 1);
    torch::Tensor y1 = (y0f.to(torch::kLong) + 1).clamp(0, height - 1);

    torch::Tensor flat = f.reshape({batch, channels, height * width});
    auto corner = [&](const torch::Tensor& iy, const torch::Tensor& ix) {
        torch::Tensor lin = (iy * width + ix).reshape({batch, 1, height * width});
        lin = lin.expand({batch, channels, height * width});
        return flat.gather(2, lin).reshape({batch, channels, height, width});
    };

    torch::Tensor v00 = corner(y0, x0);
    torch::Tensor v01 = corner(y0, x1);
    torch::Tensor v10 = corner(y1, x0);
    torch::Tensor v11 = corner(y1, x1);

    torch::Tensor top = v00 + (v01 - v00) * tx;
    torch::Tensor bottom = v10 + (v11 - v10) * tx;
    torch::Tensor out = top + (bottom - top) * ty;
    return unbatched_f ? out.squeeze(0) : out;
}

torch::Tensor compose_flow(const torch::Tensor& flow, const torch::Tensor& residual) {
    require(flow.sizes() == residual.sizes(), "flow fields must share shape to compose");
    require(flow.size(flow.dim() - 3) == 2, "flow must have 2 channels");
    return flow + residual;
}

torch::Tensor matte(const torch::Tensor& warped, const torch::Tensor& target,
                    const torch::Tensor& occlusion) {
    bool ub_w = false, ub_t = false, ub_m = false;
    torch::Tensor fw = as_batched(warped, ub_w);
    torch::Tensor ft = as_batched(target, ub_t);
    torch::Tensor m = as_batched(occlusion, ub_m);
    require(ub_w == ub_t && ub_t == ub_m, "mixed batched/unbatched arguments to matte");
    require(fw.sizes() == ft.sizes(), "matte features must share shape");
    require(m.size(1) == 1, "occlusion map must have a single channel");
    check_spatial_match(fw, m, "matte");
    {
        torch::NoGradGuard no_grad;
        require(m.min().item<double>() >= 0.0 && m.max().item<double>() <= 1.0,
                "occlusion map must lie in [0,1]");
    }
    torch::Tensor out = fw * (1.0 - m) + ft * m;
    return ub_w ? out.squeeze(0) : out;
}

torch::Tensor softmax_fuse(const std::vector<torch::Tensor>& blended,
                           const std::vector<torch::Tensor>& logits) {
    require(!blended.empty(), "softmax_fuse needs at least one source (K >= 1)");
    require(blended.size() == logits.size(), "one logit map per blended feature");
    const size_t k = blended.size();

    bool unbatched = false;
    std::vector<torch::Tensor> feats(k), logs(k);
    for (size_t i = 0; i < k; ++i) {
        bool ub_f = false, ub_l = false;
        feats[i] = as_batched(blended[i], ub_f);
        logs[i] = as_batched(logits[i], ub_l);
        require(ub_f == ub_l, "mixed batched/unbatched arguments to softmax_fuse");
        require(logs[i].size(1) == 1, "attention logits must have a single channel");
        require(feats[i].sizes() == feats[0].sizes(), "blended features must share shape");
        check_spatial_match(feats[i], logs[i], "softmax_fuse");
        if (i == 0) unbatched = ub_f;
        require(ub_f == unbatched, "mixed batched/unbatched sources");
    }

    torch::Tensor weight = torch::softmax(torch::stack(logs, 0), 0); // [K,B,1,H,W]
    torch::Tensor out = (torch::stack(feats, 0) * weight).sum(0);
    return unbatched ? out.squeeze(0) : out;
}

torch::Tensor gram(const torch::Tensor& feature) {
    bool unbatched = false;
    torch::Tensor f = as_batched(feature, unbatched);
    const int64_t batch = f.size(0), channels = f.size(1);
    const int64_t pixels = f.size(2) * f.size(3);
    torch::Tensor flat = f.reshape({batch, channels, pixels});
    torch::Tensor g = torch::bmm(flat, flat.transpose(1, 2)) /
                      static_cast<double>(channels * pixels);
    return unbatched ? g.squeeze(0) : g;
}

} // namespace rfgen::kernels
