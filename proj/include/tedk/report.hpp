#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tedk/metrics.hpp"
#include "tedk/mixer.hpp"
#include "tedk/predictor.hpp"

namespace tedk {

// Multiply-accumulates for a same-padded 3x3 convolution.
std::int64_t conv3x3_macs(int cout, int cin, int h, int w);

// Analytic per-image cost at the given resolution. The mixer count includes
// gate convs applied once per visited input, so RBF scales with K.
std::int64_t predictor_macs(const ToyPredictor& p, int h, int w);
std::int64_t mixer_macs(const MixerModel& m, int h, int w);

struct ModelRow {
    std::string name;
    std::int64_t params = 0;
    std::int64_t macs = 0;
    MetricsReport metrics;
};

struct RangeRow {
    std::string name;
    MetricsReport metrics;  // cap fields carry the range
};

struct RunManifest {
    std::string run_id;       // first 12 hex chars of config_hash
    std::string config_hash;  // sha256 of the canonical config serialization
    std::vector<std::string> checkpoint_paths;
    std::vector<std::string> csv_paths;
    std::vector<ModelRow> models;  // bases in index order, then the mixer
    std::vector<RangeRow> ranges;  // per-cap rows, model-major
};

// Writes metrics.csv (model,params prefix + the standard metric columns) and,
// when ranges exist, ranges.csv. Row order follows the manifest, so reruns of
// the same manifest are byte-identical. Returns the paths written.
std::vector<std::filesystem::path> emit_report(const RunManifest& run,
                                               const std::filesystem::path& dir);

// JSON sidecar naming every artifact of a run. Every referenced file must
// exist at write time.
void write_manifest(const RunManifest& run, const std::filesystem::path& path);

}  // namespace tedk
