#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rfgen {

enum class AblationMode { Full, Baseline, NoAttention, NoOcclusion, NoResidual };

std::string to_string(AblationMode mode);
AblationMode ablation_from_string(const std::string& name);

struct LossWeights {
    double cor = 2.5;
    double reg = 0.001;
    double l1 = 2.5;
    double per = 0.25;
    double sty = 250.0;

    bool operator==(const LossWeights&) const = default;
};

// Shape of the generator. base_width scales every stage; 64 reproduces the
// reference channel stacks (appearance 64/128/256, flow confidence
// 32/64/128/256/512, predictor 64/128/256).
struct GeneratorConfig {
    int sources = 2;        // K
    int levels = 2;         // N fusing levels; the architecture fixes two
    int height = 256;
    int width = 256;
    int pose_channels = 18; // c_p
    int base_width = 64;
    LossWeights weights;
    std::string padding_rule = "border";
    AblationMode ablation = AblationMode::Full;

    // Provider backing the perceptual losses: a seeded frozen stack by
    // default, or a VGG-19 prefix when a weight archive path is given.
    std::string provider_weights;
    std::uint64_t provider_seed = 2024;
    int provider_width = 16;

    std::vector<int> appearance_widths() const;   // at H/2, H/4, H/8
    std::vector<int> flow_widths() const;         // at H/2 .. H/32
    std::vector<int> predictor_widths() const;    // at H/2, H/4, H/8
    std::vector<int> discriminator_widths() const;
    // Channel count entering fusing level i (0-based; level 0 is H/8).
    int level_channels(int level) const;
    int level_scale(int level) const;             // spatial divisor (8 then 4)

    void validate() const;

    // Everything except K must match for a checkpoint to be loadable.
    bool compatible_with(const GeneratorConfig& other, std::string* why = nullptr) const;

    bool operator==(const GeneratorConfig&) const = default;
};

struct TrainConfig {
    int stage1_iters = 500;
    int stage2_iters = 2000;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int batch_size = 5;
    std::uint64_t seed = 1;
    int checkpoint_every = 500;
    int grid_every = 0;       // 0 disables periodic sample grids
    double clip_norm = 10.0;  // NaN guard; <= 0 disables
    bool allow_cold_stage2 = false;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct DataConfig {
    std::string family = "synth"; // synth | deepfashion | market | kitti | shapenet | voxceleb2
    std::string index;            // index file for real families
    double holdout_fraction = 0.2;
    double heatmap_sigma = 0.0;   // 0 = auto (6 px at 256, linear in size)

    // synth family parameters
    std::uint64_t synth_seed = 7;
    int synth_count = 24;
    int synth_size = 64;
    int synth_views = 6;

    void validate() const;
    bool operator==(const DataConfig&) const = default;
};

// Mirror of the run-config file: generator + training + data + run directory.
struct RunConfig {
    GeneratorConfig gen;
    TrainConfig train;
    DataConfig data;
    std::string run_dir = "runs/default";

    void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const DataConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

GeneratorConfig generator_config_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);

// Parses a config file. Unknown keys are rejected with their JSON path;
// parse errors carry the line number.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& origin);

double auto_heatmap_sigma(int image_size);

} // namespace rfgen
