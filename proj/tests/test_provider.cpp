#include <cstdio>
#include <filesystem>

#include "doctest_torch.hpp"

#include "rfgen/common.hpp"
#include "rfgen/provider.hpp"

using namespace rfgen;

TEST_SUITE_BEGIN("provider");

TEST_CASE("random stack is a pure function of its seed") {
    auto gen = torch::make_generator<at::CPUGeneratorImpl>(5);
    torch::Tensor image = torch::rand({3, 16, 16}, gen) * 2.0f - 1.0f;
    FeatureProvider a(8, 123);
    FeatureProvider b(8, 123);
    FeatureProvider c(8, 124);
    auto fa = a->features(image);
    auto fb = b->features(image);
    auto fc = c->features(image);
    REQUIRE(fa.size() == 4);
    for (size_t i = 0; i < fa.size(); ++i) CHECK(torch::equal(fa[i], fb[i]));
    CHECK_FALSE(torch::equal(fa[3], fc[3]));
}

TEST_CASE("provider parameters are frozen but gradients reach the input") {
    FeatureProvider provider(4, 7);
    for (const auto& p : provider->parameters()) CHECK_FALSE(p.requires_grad());
    torch::Tensor image = torch::rand({3, 16, 16}).mul(2).sub(1).requires_grad_(true);
    auto taps = provider->features(image);
    taps.back().sum().backward();
    CHECK(image.grad().abs().sum().item<double>() > 0.0);
}

TEST_CASE("feature_at picks matching resolutions and pools when needed") {
    FeatureProvider provider(4, 7);
    torch::Tensor image = torch::rand({3, 16, 16});
    CHECK(provider->feature_at(image, 16, 16).size(-1) == 16);
    CHECK(provider->feature_at(image, 4, 4).size(-1) == 4);
    // No tap is 5x5 and nothing divides evenly into it.
    CHECK_THROWS_AS(provider->feature_at(image, 5, 5), contract_error);
}

TEST_CASE("random stack exposes taps at H, H/2, H/4, H/8") {
    FeatureProvider provider(4, 7);
    torch::Tensor image = torch::rand({3, 32, 32});
    auto taps = provider->features(image);
    CHECK(taps[0].sizes() == torch::IntArrayRef({4, 32, 32}));
    CHECK(taps[1].sizes() == torch::IntArrayRef({8, 16, 16}));
    CHECK(taps[2].sizes() == torch::IntArrayRef({16, 8, 8}));
    CHECK(taps[3].sizes() == torch::IntArrayRef({32, 4, 4}));
}

TEST_CASE("vgg19 prefix loads from a named-tensor archive") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "rfgen_test_vgg.pt";
    {
        struct Spec {
            const char* name;
            int in, out;
        };
        static const Spec specs[] = {
            {"conv1_1", 3, 64},    {"conv1_2", 64, 64},   {"conv2_1", 64, 128},
            {"conv2_2", 128, 128}, {"conv3_1", 128, 256}, {"conv3_2", 256, 256},
            {"conv3_3", 256, 256}, {"conv3_4", 256, 256}, {"conv4_1", 256, 512},
            {"conv4_2", 512, 512}, {"conv4_3", 512, 512}, {"conv4_4", 512, 512},
        };
        auto gen = torch::make_generator<at::CPUGeneratorImpl>(1);
        torch::serialize::OutputArchive archive;
        for (const Spec& s : specs) {
            archive.write(std::string(s.name) + ".weight",
                          torch::randn({s.out, s.in, 3, 3}, gen) * 0.05);
            archive.write(std::string(s.name) + ".bias", torch::zeros({s.out}));
        }
        archive.save_to(path.string());
    }

    FeatureProvider provider(path.string());
    CHECK(provider->layer_names().size() == 12);
    CHECK(provider->layer_names().front() == "relu1_1");
    CHECK(provider->layer_names().back() == "relu4_4");
    CHECK(provider->perceptual_layers().size() == 4);
    CHECK(provider->style_layers().size() == 3);
    CHECK(provider->id().rfind("vgg19-", 0) == 0);

    torch::Tensor image = torch::rand({3, 32, 32});
    auto taps = provider->features(image);
    CHECK(taps.front().sizes() == torch::IntArrayRef({64, 32, 32}));
    CHECK(taps.back().sizes() == torch::IntArrayRef({512, 4, 4}));

    fs::remove(path);
}

TEST_CASE("missing provider weight file is a runtime failure") {
    CHECK_THROWS_AS(FeatureProvider("/nonexistent/vgg.pt"), runtime_failure);
}

TEST_SUITE_END();
