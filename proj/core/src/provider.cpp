#include "rfgen/provider.hpp"

#include <cmath>
#include <filesystem>

#include "rfgen/common.hpp"

namespace rfgen {

namespace F = torch::nn::functional;

FeatureProviderImpl::FeatureProviderImpl(int base_channels, std::uint64_t seed,
                                         torch::Dtype dtype) {
    require(base_channels >= 1, "provider base_channels must be >= 1");
    auto gen = torch::make_generator<at::CPUGeneratorImpl>(seed);
    const int c = base_channels;
    const int plan[4][3] = {{3, c, 1}, {c, 2 * c, 2}, {2 * c, 4 * c, 2}, {4 * c, 8 * c, 2}};
    for (int i = 0; i < 4; ++i) {
        const int in = plan[i][0], out = plan[i][1], stride = plan[i][2];
        auto conv = torch::nn::Conv2d(
            torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
        // He-style init drawn from a private generator so the stack is a pure
        // function of (base_channels, seed).
        const double gain = std::sqrt(2.0 / (9.0 * in));
        {
            torch::NoGradGuard no_grad;
            conv->weight.copy_(torch::randn(conv->weight.sizes(), gen) * gain);
            conv->bias.zero_();
        }
        register_module("conv" + std::to_string(i + 1), conv);
        steps_.push_back({conv, false, stride});
        names_.push_back("relu" + std::to_string(i + 1));
        perceptual_.push_back(i);
        if (i >= 1) style_.push_back(i);
    }
    id_ = "random-stack-c" + std::to_string(c) + "-s" + std::to_string(seed);
    to(dtype);
    freeze();
}

FeatureProviderImpl::FeatureProviderImpl(const std::string& vgg_weights_path,
                                         torch::Dtype dtype) {
    struct Spec {
        const char* name;
        int in, out;
        bool pool_before;
    };
    static const Spec vgg19[] = {
        {"conv1_1", 3, 64, false},    {"conv1_2", 64, 64, false},
        {"conv2_1", 64, 128, true},   {"conv2_2", 128, 128, false},
        {"conv3_1", 128, 256, true},  {"conv3_2", 256, 256, false},
        {"conv3_3", 256, 256, false}, {"conv3_4", 256, 256, false},
        {"conv4_1", 256, 512, true},  {"conv4_2", 512, 512, false},
        {"conv4_3", 512, 512, false}, {"conv4_4", 512, 512, false},
    };

    torch::serialize::InputArchive archive;
    try {
        archive.load_from(vgg_weights_path);
    } catch (const c10::Error& e) {
        throw runtime_failure("cannot load provider weights from '" + vgg_weights_path +
                              "': " + e.what_without_backtrace());
    }

    for (const Spec& spec : vgg19) {
        auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(spec.in, spec.out, 3).padding(1));
        torch::Tensor weight, bias;
        archive.read(std::string(spec.name) + ".weight", weight);
        archive.read(std::string(spec.name) + ".bias", bias);
        require(weight.sizes() == conv->weight.sizes(),
                std::string("unexpected shape for ") + spec.name + ".weight");
        require(bias.sizes() == conv->bias.sizes(),
                std::string("unexpected shape for ") + spec.name + ".bias");
        {
            torch::NoGradGuard no_grad;
            conv->weight.copy_(weight);
            conv->bias.copy_(bias);
        }
        register_module(spec.name, conv);
        steps_.push_back({conv, spec.pool_before, 1});
        std::string relu_name = spec.name;
        relu_name.replace(0, 4, "relu");
        names_.push_back(relu_name);
    }
    auto index_of = [&](const std::string& name) {
        for (size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return static_cast<int>(i);
        throw contract_error("missing provider layer " + name);
    };
    perceptual_ = {index_of("relu1_1"), index_of("relu2_1"), index_of("relu3_1"),
                   index_of("relu4_1")};
    style_ = {index_of("relu2_2"), index_of("relu3_4"), index_of("relu4_4")};
    id_ = "vgg19-" + std::filesystem::path(vgg_weights_path).stem().string();
    to(dtype);
    freeze();
}

void FeatureProviderImpl::freeze() {
    for (auto& p : parameters()) p.set_requires_grad(false);
    eval();
}

std::vector<torch::Tensor> FeatureProviderImpl::features(const torch::Tensor& image) {
    const bool unbatched = image.dim() == 3;
    require(image.dim() == 3 || image.dim() == 4, "provider expects a [3,H,W] or [B,3,H,W] image");
    torch::Tensor x = unbatched ? image.unsqueeze(0) : image;
    require(x.size(1) == steps_.front().conv->weight.size(1),
            "provider channel mismatch: expected 3-channel images");

    std::vector<torch::Tensor> taps;
    taps.reserve(steps_.size());
    for (const Step& step : steps_) {
        if (step.pool_before) x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
        x = torch::relu(step.conv->forward(x));
        taps.push_back(unbatched ? x.squeeze(0) : x);
    }
    return taps;
}

torch::Tensor FeatureProviderImpl::feature_at(const torch::Tensor& image, std::int64_t h,
                                              std::int64_t w) {
    std::vector<torch::Tensor> taps = features(image);
    // Deepest exact match first, then the deepest larger layer pooled down.
    for (auto it = taps.rbegin(); it != taps.rend(); ++it) {
        if (it->size(-2) == h && it->size(-1) == w) return *it;
    }
    for (auto it = taps.rbegin(); it != taps.rend(); ++it) {
        if (it->size(-2) >= h && it->size(-1) >= w && it->size(-2) % h == 0 &&
            it->size(-1) % w == 0) {
            return F::adaptive_avg_pool2d(*it,
                                          F::AdaptiveAvgPool2dFuncOptions({h, w}));
        }
    }
    throw contract_error("no provider layer matches resolution " + std::to_string(h) + "x" +
                         std::to_string(w));
}

FeatureProvider make_provider(int base_channels, std::uint64_t seed,
                              const std::string& vgg_weights_path, torch::Dtype dtype) {
    if (vgg_weights_path.empty()) return FeatureProvider(base_channels, seed, dtype);
    return FeatureProvider(vgg_weights_path, dtype);
}

} // namespace rfgen
