#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace rfgen {

// Frozen feature extractor behind the perceptual losses and the embedding
// metrics. Two backings share one interface: a seeded random convolutional
// stack (the default, no external weights needed) and a VGG-19 prefix loaded
// from a named-tensor archive. Parameters never train; gradients still flow
// to the input image.
class FeatureProviderImpl : public torch::nn::Module {
public:
    FeatureProviderImpl(int base_channels, std::uint64_t seed,
                        torch::Dtype dtype = torch::kFloat32);
    explicit FeatureProviderImpl(const std::string& vgg_weights_path,
                                 torch::Dtype dtype = torch::kFloat32);

    // Activations of every named layer, shallow to deep.
    std::vector<torch::Tensor> features(const torch::Tensor& image);

    // The deepest layer matching (h, w); deeper-but-larger layers are
    // average-pooled down when no exact match exists.
    torch::Tensor feature_at(const torch::Tensor& image, std::int64_t h, std::int64_t w);

    const std::vector<std::string>& layer_names() const { return names_; }
    const std::vector<int>& perceptual_layers() const { return perceptual_; }
    const std::vector<int>& style_layers() const { return style_; }
    const std::string& id() const { return id_; }

private:
    struct Step {
        torch::nn::Conv2d conv{nullptr};
        bool pool_before = false;
        int stride = 1;
    };

    void freeze();

    std::vector<Step> steps_;
    std::vector<std::string> names_;
    std::vector<int> perceptual_;
    std::vector<int> style_;
    std::string id_;
};

TORCH_MODULE(FeatureProvider);

// Random stack unless vgg_weights_path is non-empty.
FeatureProvider make_provider(int base_channels, std::uint64_t seed,
                              const std::string& vgg_weights_path,
                              torch::Dtype dtype = torch::kFloat32);

} // namespace rfgen
