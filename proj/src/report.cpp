#include "tedk/report.hpp"

#include <stdexcept>

#include "json.hpp"
#include "tedk/util.hpp"

namespace tedk {

std::int64_t conv3x3_macs(int cout, int cin, int h, int w) {
    return static_cast<std::int64_t>(cout) * cin * 9 * h * w;
}

std::int64_t predictor_macs(const ToyPredictor& p, int h, int w) {
    std::int64_t total = 0;
    int cin = 3;
    for (int i = 0; i < p.arch.depth; ++i) {
        total += conv3x3_macs(p.arch.width, cin, h, w);
        cin = p.arch.width;
    }
    total += conv3x3_macs(p.feature_channels, cin, h, w);
    total += conv3x3_macs(1, p.feature_channels, h, w);
    return total;
}

std::int64_t mixer_macs(const MixerModel& m, int h, int w) {
    const int c = m.feature_channels;
    const int k = m.num_predictors;
    std::int64_t fuse = 0;
    switch (m.kind) {
        case MixerKind::UWF:
            break;  // the sum is adds only
        case MixerKind::CGF:
            fuse = static_cast<std::int64_t>(k) * conv3x3_macs(c, c, h, w);
            break;
        case MixerKind::CBF:
            fuse = conv3x3_macs(c, k * c, h, w);
            break;
        case MixerKind::RBF:
            fuse = static_cast<std::int64_t>(k) * 3 * conv3x3_macs(c, 2 * c, h, w);
            break;
    }
    return fuse + conv3x3_macs(1, m.fused_channels(), h, w);
}

std::vector<std::filesystem::path> emit_report(const RunManifest& run,
                                               const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;

    std::string metrics = "model,params," + MetricsReport::csv_header() + "\n";
    for (const ModelRow& row : run.models) {
        metrics += row.name + "," + std::to_string(row.params) + "," + row.metrics.csv_row() + "\n";
    }
    auto metrics_path = dir / "metrics.csv";
    write_file_text(metrics_path, metrics);
    written.push_back(metrics_path);

    if (!run.ranges.empty()) {
        std::string ranges = "model,cap_min,cap_max,rmse,valid_count\n";
        for (const RangeRow& row : run.ranges) {
            ranges += row.name + "," + format_float(row.metrics.cap.min) + "," +
                      format_float(row.metrics.cap.max) + "," + format_float(row.metrics.rmse) +
                      "," + std::to_string(row.metrics.valid_count) + "\n";
        }
        auto ranges_path = dir / "ranges.csv";
        write_file_text(ranges_path, ranges);
        written.push_back(ranges_path);
    }
    return written;
}

void write_manifest(const RunManifest& run, const std::filesystem::path& path) {
    // Paths are stored relative to the manifest so identical runs into
    // different directories stay byte-identical.
    const std::filesystem::path dir = path.parent_path();
    for (const auto& list : {run.checkpoint_paths, run.csv_paths}) {
        for (const std::string& p : list) {
            std::filesystem::path q(p);
            if (!std::filesystem::exists(q.is_absolute() ? q : dir / q)) {
                throw std::runtime_error("manifest references a missing file: " + p);
            }
        }
    }
    nlohmann::json j;
    j["run_id"] = run.run_id;
    j["config_hash"] = run.config_hash;
    j["checkpoints"] = run.checkpoint_paths;
    j["csvs"] = run.csv_paths;
    auto metrics_json = [](const MetricsReport& r) {
        nlohmann::json m;
        m["abs_rel"] = r.abs_rel;
        m["sq_rel"] = r.sq_rel;
        m["rmse"] = r.rmse;
        m["rmse_log"] = r.rmse_log;
        m["log10"] = r.log10;
        m["d1"] = r.delta1;
        m["d2"] = r.delta2;
        m["d3"] = r.delta3;
        m["cap_min"] = r.cap.min;
        m["cap_max"] = r.cap.max;
        m["valid_count"] = r.valid_count;
        return m;
    };
    j["models"] = nlohmann::json::array();
    for (const ModelRow& row : run.models) {
        nlohmann::json rj;
        rj["name"] = row.name;
        rj["params"] = row.params;
        rj["macs"] = row.macs;
        rj["metrics"] = metrics_json(row.metrics);
        j["models"].push_back(rj);
    }
    j["ranges"] = nlohmann::json::array();
    for (const RangeRow& row : run.ranges) {
        nlohmann::json rj;
        rj["name"] = row.name;
        rj["metrics"] = metrics_json(row.metrics);
        j["ranges"].push_back(rj);
    }
    write_file_text(path, j.dump(2) + "\n");
}

}  // namespace tedk
