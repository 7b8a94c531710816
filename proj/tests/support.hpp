#pragma once

#include <functional>

#include <torch/torch.h>

// Shared helpers for the test suites. The finite-difference checker is the
// independent oracle for every gradient assertion; it never calls autograd.
namespace testsupport {

// Central finite differences of scalar_fn at x, one entry at a time.
inline torch::Tensor central_differences(
    const std::function<double(const torch::Tensor&)>& scalar_fn, const torch::Tensor& x,
    double step = 1e-5) {
    torch::Tensor grad = torch::zeros_like(x);
    torch::Tensor flat = x.reshape(-1);
    torch::Tensor grad_flat = grad.reshape(-1);
    for (int64_t i = 0; i < flat.numel(); ++i) {
        torch::Tensor xp = x.clone();
        torch::Tensor xm = x.clone();
        xp.reshape(-1)[i] += step;
        xm.reshape(-1)[i] -= step;
        grad_flat[i] = (scalar_fn(xp) - scalar_fn(xm)) / (2.0 * step);
    }
    return grad;
}

// Largest relative deviation between an autograd gradient and its
// finite-difference estimate; denominators are floored so that entries that
// are zero on both sides compare cleanly.
inline double max_relative_error(const torch::Tensor& analytic, const torch::Tensor& numeric,
                                 double floor_value = 1e-2) {
    torch::Tensor denom = torch::maximum(analytic.abs(), numeric.abs()).clamp_min(floor_value);
    return ((analytic - numeric).abs() / denom).max().item<double>();
}

// Uniform values whose fractional parts avoid the bilinear kernel's
// non-differentiable integer crossings, so central differences stay valid.
inline torch::Tensor off_integer_uniform(torch::IntArrayRef shape, double lo, double hi,
                                         torch::Generator& gen,
                                         torch::Dtype dtype = torch::kDouble) {
    torch::Tensor raw = torch::rand(shape, gen, torch::TensorOptions().dtype(dtype)) * (hi - lo) + lo;
    torch::Tensor frac = raw - raw.floor();
    torch::Tensor safe_frac = 0.2 + frac * 0.6; // keep within [0.2, 0.8]
    return raw.floor() + safe_frac;
}

} // namespace testsupport
