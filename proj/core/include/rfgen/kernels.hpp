#pragma once

#include <vector>

#include <torch/torch.h>

namespace rfgen::kernels {

// Differentiable primitives shared by the networks and losses. All of them
// accept either unbatched ([C,H,W] features, [2,H,W] flows, [1,H,W] maps)
// or batched 4-D tensors and are pure functions of their inputs.
//
// Flow values are pixel displacements at the tensor's own resolution
// (channel 0 horizontal, channel 1 vertical); they are never rescaled
// implicitly. Out-of-range samples replicate the border pixel.

// Bilinear warp: output[c,y,x] samples feature[c] at
// (x + flow[0,y,x], y + flow[1,y,x]). Differentiable in both arguments.
torch::Tensor warp(const torch::Tensor& feature, const torch::Tensor& flow);

// Refined flow = initial flow + residual flow (elementwise).
torch::Tensor compose_flow(const torch::Tensor& flow, const torch::Tensor& residual);

// Per-pixel convex blend warped*(1-m) + target*m, broadcast over channels.
// Requires m in [0,1].
torch::Tensor matte(const torch::Tensor& warped, const torch::Tensor& target,
                    const torch::Tensor& occlusion);

// Pixel-level softmax over the K logit maps, then the weighted sum of the
// K blended features. Weights sum to one at every pixel.
torch::Tensor softmax_fuse(const std::vector<torch::Tensor>& blended,
                           const std::vector<torch::Tensor>& logits);

// Gram matrix G[a,b] = sum_{y,x} f[a,y,x] f[b,y,x] / (C*H*W).
// Returns [C,C] (or [B,C,C] for batched input); symmetric and PSD.
torch::Tensor gram(const torch::Tensor& feature);

} // namespace rfgen::kernels
