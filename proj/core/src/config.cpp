#include "rfgen/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rfgen/common.hpp"

namespace rfgen {

using nlohmann::json;

std::string to_string(AblationMode mode) {
    switch (mode) {
        case AblationMode::Full: return "full";
        case AblationMode::Baseline: return "baseline";
        case AblationMode::NoAttention: return "no-attn";
        case AblationMode::NoOcclusion: return "no-occ";
        case AblationMode::NoResidual: return "no-res";
    }
    throw contract_error("unreachable ablation mode");
}

AblationMode ablation_from_string(const std::string& name) {
    if (name == "full") return AblationMode::Full;
    if (name == "baseline") return AblationMode::Baseline;
    if (name == "no-attn") return AblationMode::NoAttention;
    if (name == "no-occ") return AblationMode::NoOcclusion;
    if (name == "no-res") return AblationMode::NoResidual;
    throw contract_error("unknown ablation variant '" + name +
                         "' (expected full|baseline|no-attn|no-occ|no-res)");
}

std::vector<int> GeneratorConfig::appearance_widths() const {
    return {base_width, base_width * 2, base_width * 4};
}

std::vector<int> GeneratorConfig::flow_widths() const {
    return {base_width / 2, base_width, base_width * 2, base_width * 4, base_width * 8};
}

std::vector<int> GeneratorConfig::predictor_widths() const {
    return {base_width, base_width * 2, base_width * 4};
}

std::vector<int> GeneratorConfig::discriminator_widths() const {
    return {base_width, base_width * 2, base_width * 4, base_width * 8};
}

int GeneratorConfig::level_channels(int level) const {
    require(level >= 0 && level < levels, "fusing level out of range");
    return level == 0 ? base_width * 4 : base_width * 2;
}

int GeneratorConfig::level_scale(int level) const {
    require(level >= 0 && level < levels, "fusing level out of range");
    return level == 0 ? 8 : 4;
}

void GeneratorConfig::validate() const {
    require(sources >= 1, "sources (K) must be >= 1");
    require(levels == 2, "the architecture uses exactly two fusing levels");
    require(height > 0 && width > 0, "image size must be positive");
    require(height % 32 == 0 && width % 32 == 0,
            "image size must be divisible by 32 (flow extractor descends to H/32)");
    require(pose_channels >= 1, "pose_channels must be >= 1");
    require(base_width >= 2 && base_width % 2 == 0, "base_width must be an even integer >= 2");
    require(padding_rule == "border", "only the 'border' padding rule is implemented");
    require(provider_width >= 1, "provider_width must be >= 1");
}

bool GeneratorConfig::compatible_with(const GeneratorConfig& other, std::string* why) const {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (levels != other.levels) return fail("levels differ");
    if (height != other.height || width != other.width) return fail("image size differs");
    if (pose_channels != other.pose_channels) return fail("pose_channels differ");
    if (base_width != other.base_width) return fail("base_width differs");
    if (!(weights == other.weights)) return fail("loss weights differ");
    if (padding_rule != other.padding_rule) return fail("padding rule differs");
    if (ablation != other.ablation) return fail("ablation mode differs");
    if (provider_weights != other.provider_weights) return fail("provider weights differ");
    if (provider_seed != other.provider_seed) return fail("provider seed differs");
    if (provider_width != other.provider_width) return fail("provider width differs");
    return true; // K may differ
}

void TrainConfig::validate() const {
    require(stage1_iters >= 0 && stage2_iters >= 0, "iteration counts must be >= 0");
    require(lr > 0.0, "learning rate must be positive");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "betas must be in [0,1)");
    require(batch_size >= 1, "batch size must be >= 1");
    require(checkpoint_every >= 1, "checkpoint_every must be >= 1");
}

void DataConfig::validate() const {
    static const std::set<std::string> families = {"synth",   "deepfashion", "market",
                                                   "kitti",   "shapenet",    "voxceleb2"};
    require(families.count(family) == 1, "unknown dataset family '" + family + "'");
    require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, "holdout_fraction must be in [0,1)");
    require(heatmap_sigma >= 0.0, "heatmap_sigma must be >= 0 (0 = auto)");
    if (family == "synth") {
        require(synth_count >= 2, "synth_count must be >= 2");
        require(synth_size >= 32, "synth_size must be >= 32");
        require(synth_views >= 2, "synth_views must be >= 2");
    } else {
        require(!index.empty(), "real dataset families need an index file");
    }
}

void RunConfig::validate() const {
    gen.validate();
    train.validate();
    data.validate();
    require(!run_dir.empty(), "run_dir must not be empty");
}

double auto_heatmap_sigma(int image_size) {
    return 6.0 * static_cast<double>(image_size) / 256.0;
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (known.count(it.key()) == 0) {
            throw contract_error("unknown config key '" + scope + it.key() + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

LossWeights weights_from_json(const json& j) {
    LossWeights w;
    reject_unknown_keys(j, {"cor", "reg", "l1", "per", "sty"}, "loss_weights.");
    read(j, "cor", w.cor);
    read(j, "reg", w.reg);
    read(j, "l1", w.l1);
    read(j, "per", w.per);
    read(j, "sty", w.sty);
    return w;
}

} // namespace

json to_json(const GeneratorConfig& cfg) {
    return json{{"sources", cfg.sources},
                {"levels", cfg.levels},
                {"height", cfg.height},
                {"width", cfg.width},
                {"pose_channels", cfg.pose_channels},
                {"base_width", cfg.base_width},
                {"padding_rule", cfg.padding_rule},
                {"ablation", to_string(cfg.ablation)},
                {"provider_weights", cfg.provider_weights},
                {"provider_seed", cfg.provider_seed},
                {"provider_width", cfg.provider_width},
                {"loss_weights",
                 json{{"cor", cfg.weights.cor},
                      {"reg", cfg.weights.reg},
                      {"l1", cfg.weights.l1},
                      {"per", cfg.weights.per},
                      {"sty", cfg.weights.sty}}}};
}

GeneratorConfig generator_config_from_json(const json& j) {
    GeneratorConfig cfg;
    reject_unknown_keys(j,
                        {"sources", "levels", "height", "width", "pose_channels", "base_width",
                         "padding_rule", "ablation", "provider_weights", "provider_seed",
                         "provider_width", "loss_weights"},
                        "generator.");
    read(j, "sources", cfg.sources);
    read(j, "levels", cfg.levels);
    read(j, "height", cfg.height);
    read(j, "width", cfg.width);
    read(j, "pose_channels", cfg.pose_channels);
    read(j, "base_width", cfg.base_width);
    read(j, "padding_rule", cfg.padding_rule);
    if (j.contains("ablation")) cfg.ablation = ablation_from_string(j.at("ablation").get<std::string>());
    read(j, "provider_weights", cfg.provider_weights);
    read(j, "provider_seed", cfg.provider_seed);
    read(j, "provider_width", cfg.provider_width);
    if (j.contains("loss_weights")) cfg.weights = weights_from_json(j.at("loss_weights"));
    return cfg;
}

json to_json(const TrainConfig& cfg) {
    return json{{"stage1_iters", cfg.stage1_iters},
                {"stage2_iters", cfg.stage2_iters},
                {"lr", cfg.lr},
                {"beta1", cfg.beta1},
                {"beta2", cfg.beta2},
                {"batch_size", cfg.batch_size},
                {"seed", cfg.seed},
                {"checkpoint_every", cfg.checkpoint_every},
                {"grid_every", cfg.grid_every},
                {"clip_norm", cfg.clip_norm},
                {"allow_cold_stage2", cfg.allow_cold_stage2}};
}

json to_json(const DataConfig& cfg) {
    return json{{"family", cfg.family},
                {"index", cfg.index},
                {"holdout_fraction", cfg.holdout_fraction},
                {"heatmap_sigma", cfg.heatmap_sigma},
                {"synth_seed", cfg.synth_seed},
                {"synth_count", cfg.synth_count},
                {"synth_size", cfg.synth_size},
                {"synth_views", cfg.synth_views}};
}

json to_json(const RunConfig& cfg) {
    json j;
    j["run_dir"] = cfg.run_dir;
    j["ablation"] = to_string(cfg.gen.ablation);
    j["generator"] = to_json(cfg.gen);
    j["generator"].erase("ablation"); // echoed once at top level
    j["train"] = to_json(cfg.train);
    j["data"] = to_json(cfg.data);
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    reject_unknown_keys(j, {"run_dir", "ablation", "generator", "train", "data"}, "");
    read(j, "run_dir", cfg.run_dir);
    if (j.contains("generator")) cfg.gen = generator_config_from_json(j.at("generator"));
    if (j.contains("ablation")) cfg.gen.ablation = ablation_from_string(j.at("ablation").get<std::string>());

    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown_keys(t,
                            {"stage1_iters", "stage2_iters", "lr", "beta1", "beta2", "batch_size",
                             "seed", "checkpoint_every", "grid_every", "clip_norm",
                             "allow_cold_stage2"},
                            "train.");
        read(t, "stage1_iters", cfg.train.stage1_iters);
        read(t, "stage2_iters", cfg.train.stage2_iters);
        read(t, "lr", cfg.train.lr);
        read(t, "beta1", cfg.train.beta1);
        read(t, "beta2", cfg.train.beta2);
        read(t, "batch_size", cfg.train.batch_size);
        read(t, "seed", cfg.train.seed);
        read(t, "checkpoint_every", cfg.train.checkpoint_every);
        read(t, "grid_every", cfg.train.grid_every);
        read(t, "clip_norm", cfg.train.clip_norm);
        read(t, "allow_cold_stage2", cfg.train.allow_cold_stage2);
    }
    if (j.contains("data")) {
        const json& d = j.at("data");
        reject_unknown_keys(d,
                            {"family", "index", "holdout_fraction", "heatmap_sigma", "synth_seed",
                             "synth_count", "synth_size", "synth_views"},
                            "data.");
        read(d, "family", cfg.data.family);
        read(d, "index", cfg.data.index);
        read(d, "holdout_fraction", cfg.data.holdout_fraction);
        read(d, "heatmap_sigma", cfg.data.heatmap_sigma);
        read(d, "synth_seed", cfg.data.synth_seed);
        read(d, "synth_count", cfg.data.synth_count);
        read(d, "synth_size", cfg.data.synth_size);
        read(d, "synth_views", cfg.data.synth_views);
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "parse error at line L, column C: ..."
        throw contract_error(origin + ": " + e.what());
    }
    return run_config_from_json(j);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw runtime_failure("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path);
}

} // namespace rfgen
