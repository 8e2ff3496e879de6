#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tedk/metrics.hpp"
#include "tedk/mixer.hpp"
#include "tedk/predictor.hpp"
#include "tedk/synth.hpp"
#include "tedk/train.hpp"

namespace tedk {

// One experiment, parsed from a line-based file: `key = value`, `#` comments,
// dotted keys (`train.epochs = 30`). Unknown keys are rejected so typos fail
// loudly instead of silently running the defaults.
struct ExperimentConfig {
    SceneConfig scene;       // scene.count covers train and test together
    int test_count = 40;     // taken from the tail of the generated set
    std::vector<PredictorArch> archs;
    int feature_channels = 8;
    double kappa = 10.0;
    TrainConfig train;
    double mixer_lr = 1e-2;  // the head trains on far fewer images, so its
                             // schedule peaks hotter than the bases'
    MixerKind mixer_kind = MixerKind::RBF;
    FeatureLocation mixer_location = FeatureLocation::Penultimate;
    std::vector<double> caps;  // eval range upper bounds, each row caps (0, c]
    std::string out_dir = "out";
};

// Baseline protocol: 280 scenes at 32x32 (240 train by the 7:1 rule, 40
// test), three receptive-field-diverse bases, 30 epochs.
ExperimentConfig default_config();

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical form: every key once, fixed order. parse(serialize(c)) == c, and
// runs write it next to their outputs so results stay reproducible.
std::string serialize_config(const ExperimentConfig& cfg);

// TEDK_OUT overrides cfg.out_dir when set and non-empty.
std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg);

std::string arch_to_string(const PredictorArch& arch);
PredictorArch arch_from_string(const std::string& s);

}  // namespace tedk
