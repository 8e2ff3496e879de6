#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tedk/analysis.hpp"
#include "tedk/codec.hpp"
#include "tedk/config.hpp"
#include "tedk/dataset.hpp"
#include "tedk/gradcheck_suite.hpp"
#include "tedk/report.hpp"
#include "tedk/train.hpp"
#include "tedk/util.hpp"

namespace fs = std::filesystem;
using namespace tedk;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_flag;
    std::int64_t seed = -1;  // <0 keeps the config's seeds
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out_flag, "output directory (TEDK_OUT still wins)");
    cmd->add_option("--seed", o.seed, "override scene and train seeds together");
}

ExperimentConfig resolve_config(const CommonOpts& o) {
    ExperimentConfig cfg =
        o.config_path.empty() ? default_config() : load_config(o.config_path);
    if (!o.out_flag.empty()) cfg.out_dir = o.out_flag;
    if (o.seed >= 0) {
        cfg.scene.seed = static_cast<std::uint64_t>(o.seed);
        cfg.train.seed = static_cast<std::uint64_t>(o.seed);
    }
    return cfg;
}

// Every run leaves the exact config it executed beside its outputs.
fs::path prepare_out(const ExperimentConfig& cfg) {
    fs::path dir = resolve_out_dir(cfg);
    fs::create_directories(dir);
    write_file_text(dir / "resolved.cfg", serialize_config(cfg));
    return dir;
}

std::vector<DepthSample> load_run_dataset(const fs::path& dir) {
    fs::path data = dir / "data";
    if (!fs::exists(data / "manifest.txt")) {
        throw std::runtime_error("no dataset under " + data.string() + "; run synth first");
    }
    return load_dataset(data);
}

DatasetSplit make_split(const ExperimentConfig& cfg, const std::vector<DepthSample>& dataset) {
    if (static_cast<int>(dataset.size()) != cfg.scene.count) {
        throw std::runtime_error("dataset has " + std::to_string(dataset.size()) +
                                 " samples but the config expects " +
                                 std::to_string(cfg.scene.count));
    }
    const int pool = cfg.scene.count - cfg.test_count;
    std::vector<DepthSample> train(dataset.begin(), dataset.begin() + pool);
    DatasetSplit split = split_dataset(train, cfg.train.seed);
    for (int i = pool; i < cfg.scene.count; ++i) {
        split.test.push_back(dataset[static_cast<std::size_t>(i)].id);
    }
    return split;
}

fs::path base_checkpoint_path(const fs::path& dir, int index) {
    return dir / ("base" + std::to_string(index) + ".tedk");
}

fs::path mixer_checkpoint_path(const fs::path& dir, MixerKind kind, FeatureLocation loc) {
    return dir / ("mixer-" + mixer_to_string(kind) + "-" + location_to_string(loc) + ".tedk");
}

std::vector<TrainedPredictor> load_bases(const ExperimentConfig& cfg, const fs::path& dir) {
    std::vector<TrainedPredictor> bases;
    for (std::size_t i = 0; i < cfg.archs.size(); ++i) {
        fs::path p = base_checkpoint_path(dir, static_cast<int>(i));
        if (!fs::exists(p)) {
            throw std::runtime_error("missing " + p.string() + "; run train-base first");
        }
        bases.push_back(load_predictor_checkpoint(p));
    }
    return bases;
}

TrainConfig mixer_train_config(const ExperimentConfig& cfg) {
    TrainConfig mcfg = cfg.train;
    mcfg.base_lr = cfg.mixer_lr;
    return mcfg;
}

MetricsReport eval_predictor(const ToyPredictor& model, const std::vector<DepthSample>& dataset,
                             const std::vector<std::string>& ids, DepthCap cap = {}) {
    return evaluate_depth_model(
        [&model](const Tensor& rgb) { return model.forward(rgb.unsqueeze0()); }, dataset, ids,
        cap);
}

MetricsReport eval_ensemble(const std::vector<ToyPredictor>& models, const MixerModel& mixer,
                            const std::vector<DepthSample>& dataset,
                            const std::vector<std::string>& ids, DepthCap cap = {}) {
    return evaluate_depth_model(
        [&](const Tensor& rgb) { return ensemble_forward(models, mixer, rgb); }, dataset, ids,
        cap);
}

int cmd_synth(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts);
    fs::path dir = prepare_out(cfg);
    std::vector<DepthSample> dataset = generate_synthetic_dataset(cfg.scene);
    save_dataset(dir / "data", dataset);
    std::printf("synth: %d scenes (%dx%d) -> %s\n", cfg.scene.count, cfg.scene.height,
                cfg.scene.width, (dir / "data").string().c_str());
    return 0;
}

int cmd_train_base(const CommonOpts& opts, int jobs) {
    ExperimentConfig cfg = resolve_config(opts);
    fs::path dir = prepare_out(cfg);
    std::vector<DepthSample> dataset = load_run_dataset(dir);
    DatasetSplit split = make_split(cfg, dataset);

    const int k = static_cast<int>(cfg.archs.size());
    std::vector<TrainedPredictor> bases(static_cast<std::size_t>(k));
    if (jobs <= 1) {
        for (int i = 0; i < k; ++i) {
            bases[static_cast<std::size_t>(i)] =
                train_one_base_predictor(split, dataset, cfg.archs[static_cast<std::size_t>(i)],
                                         i, cfg.feature_channels, cfg.kappa, cfg.train);
        }
    } else {
        // Bases are independent tasks with disjoint RNG streams, so threads
        // only change wall time, never results.
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            pool.emplace_back([&, i] {
                try {
                    bases[static_cast<std::size_t>(i)] = train_one_base_predictor(
                        split, dataset, cfg.archs[static_cast<std::size_t>(i)], i,
                        cfg.feature_channels, cfg.kappa, cfg.train);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            });
            if (static_cast<int>(pool.size()) == jobs || i == k - 1) {
                for (auto& t : pool) t.join();
                pool.clear();
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    for (int i = 0; i < k; ++i) {
        const TrainedPredictor& tp = bases[static_cast<std::size_t>(i)];
        save_predictor_checkpoint(base_checkpoint_path(dir, i), tp);
        std::printf("base%d: loss %.4f -> %.4f  val_rmse %.4f\n", i, tp.epoch_losses.front(),
                    tp.epoch_losses.back(), tp.validation_rmse);
    }
    return 0;
}

int cmd_train_mixer(const CommonOpts& opts, std::string kind_flag, std::string loc_flag) {
    ExperimentConfig cfg = resolve_config(opts);
    if (!kind_flag.empty()) cfg.mixer_kind = mixer_from_string(kind_flag);
    if (!loc_flag.empty()) cfg.mixer_location = location_from_string(loc_flag);
    fs::path dir = prepare_out(cfg);
    std::vector<DepthSample> dataset = load_run_dataset(dir);
    DatasetSplit split = make_split(cfg, dataset);
    std::vector<TrainedPredictor> bases = load_bases(cfg, dir);

    TrainedMixer tm = train_mixer(bases, split, dataset, cfg.mixer_kind, cfg.mixer_location,
                                  mixer_train_config(cfg));
    fs::path path = mixer_checkpoint_path(dir, cfg.mixer_kind, cfg.mixer_location);
    save_mixer_checkpoint(path, tm.model);
    std::printf("mixer %s(%s): loss %.4f -> %.4f  test rmse %.4f\n",
                mixer_to_string(cfg.mixer_kind).c_str(),
                location_to_string(cfg.mixer_location).c_str(), tm.epoch_losses.front(),
                tm.epoch_losses.back(), tm.test_metrics.rmse);
    return 0;
}

int cmd_eval(const CommonOpts& opts, std::string kind_flag, std::string loc_flag,
             std::vector<double> caps_flag) {
    ExperimentConfig cfg = resolve_config(opts);
    if (!kind_flag.empty()) cfg.mixer_kind = mixer_from_string(kind_flag);
    if (!loc_flag.empty()) cfg.mixer_location = location_from_string(loc_flag);
    if (!caps_flag.empty()) cfg.caps = caps_flag;
    fs::path dir = prepare_out(cfg);
    std::vector<DepthSample> dataset = load_run_dataset(dir);
    DatasetSplit split = make_split(cfg, dataset);
    std::vector<TrainedPredictor> bases = load_bases(cfg, dir);
    fs::path mixer_path = mixer_checkpoint_path(dir, cfg.mixer_kind, cfg.mixer_location);
    if (!fs::exists(mixer_path)) {
        throw std::runtime_error("missing " + mixer_path.string() + "; run train-mixer first");
    }
    MixerModel mixer = load_mixer_checkpoint(mixer_path);

    std::vector<ToyPredictor> models;
    for (const auto& tp : bases) models.push_back(tp.model);
    const int h = cfg.scene.height, w = cfg.scene.width;

    RunManifest run;
    run.config_hash = sha256_hex(serialize_config(cfg));
    run.run_id = run.config_hash.substr(0, 12);
    for (std::size_t i = 0; i < bases.size(); ++i) {
        run.checkpoint_paths.push_back(
            base_checkpoint_path(dir, static_cast<int>(i)).filename().string());
        ModelRow row;
        row.name = "base" + std::to_string(i);
        row.params = static_cast<std::int64_t>(bases[i].model.params.total_values());
        row.macs = predictor_macs(bases[i].model, h, w);
        row.metrics = eval_predictor(bases[i].model, dataset, split.test);
        run.models.push_back(row);
    }
    run.checkpoint_paths.push_back(mixer_path.filename().string());
    {
        ModelRow row;
        row.name = "mixer-" + mixer_to_string(cfg.mixer_kind);
        row.params = static_cast<std::int64_t>(mixer.params.total_values());
        row.macs = mixer_macs(mixer, h, w);
        row.metrics = eval_ensemble(models, mixer, dataset, split.test);
        run.models.push_back(row);
    }
    for (std::size_t mi = 0; mi < run.models.size(); ++mi) {
        const bool is_mixer = mi + 1 == run.models.size();
        auto predict = [&](const Tensor& rgb) {
            return is_mixer ? ensemble_forward(models, mixer, rgb)
                            : models[mi].forward(rgb.unsqueeze0());
        };
        for (double cap : cfg.caps) {
            RangeRow row;
            row.name = run.models[mi].name;
            row.metrics = evaluate_depth_range(predict, dataset, split.test, DepthCap{0.0, cap});
            run.ranges.push_back(row);
        }
    }

    for (const fs::path& p : emit_report(run, dir)) {
        run.csv_paths.push_back(p.filename().string());
    }
    write_manifest(run, dir / "manifest.json");
    for (const ModelRow& m : run.models) {
        std::printf("%s: params %lld  rmse %.4f  abs_rel %.4f  d1 %.3f\n", m.name.c_str(),
                    static_cast<long long>(m.params), m.metrics.rmse, m.metrics.abs_rel,
                    m.metrics.delta1);
    }
    return 0;
}

int cmd_fuse(const CommonOpts& opts, const std::string& input, const std::string& output,
             std::string kind_flag, std::string loc_flag) {
    ExperimentConfig cfg = resolve_config(opts);
    if (!kind_flag.empty()) cfg.mixer_kind = mixer_from_string(kind_flag);
    if (!loc_flag.empty()) cfg.mixer_location = location_from_string(loc_flag);
    fs::path dir = resolve_out_dir(cfg);
    std::vector<TrainedPredictor> bases = load_bases(cfg, dir);
    MixerModel mixer =
        load_mixer_checkpoint(mixer_checkpoint_path(dir, cfg.mixer_kind, cfg.mixer_location));
    std::vector<ToyPredictor> models;
    for (const auto& tp : bases) models.push_back(tp.model);

    Tensor rgb = read_ppm(input);
    Tensor depth = ensemble_forward(models, mixer, rgb);
    const Shape& s = depth.shape();
    Tensor flat = Tensor::from_data({1, s[2], s[3]}, depth.data());
    write_pfm(output, flat);
    std::printf("fuse: %s -> %s (%dx%d)\n", input.c_str(), output.c_str(), s[3], s[2]);
    return 0;
}

int cmd_gradcheck() {
    std::vector<SuiteCase> cases = run_default_gradient_suite();
    for (const SuiteCase& c : cases) {
        std::printf("%-22s max_rel_err %.3e  %s\n", c.name.c_str(), c.max_rel_error,
                    c.passed ? "ok" : "FAIL");
    }
    if (!suite_passed(cases)) {
        std::fprintf(stderr, "gradcheck: failures above\n");
        return 2;
    }
    std::printf("gradcheck: %zu cases ok\n", cases.size());
    return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& mixers_flag,
               const std::string& locations_flag, const std::string& counts_flag) {
    ExperimentConfig cfg = resolve_config(opts);
    fs::path dir = prepare_out(cfg);
    std::vector<DepthSample> dataset = load_run_dataset(dir);
    DatasetSplit split = make_split(cfg, dataset);
    std::vector<TrainedPredictor> bases = load_bases(cfg, dir);

    auto parse_list = [](const std::string& flag) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : flag) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (c != ' ') {
                cur += c;
            }
        }
        if (!cur.empty()) out.push_back(cur);
        return out;
    };
    std::vector<MixerKind> kinds;
    for (const std::string& s : parse_list(mixers_flag)) kinds.push_back(mixer_from_string(s));
    std::vector<FeatureLocation> locs;
    for (const std::string& s : parse_list(locations_flag)) {
        locs.push_back(s == "pl"   ? FeatureLocation::Penultimate
                       : s == "fl" ? FeatureLocation::Final
                                   : location_from_string(s));
    }
    std::vector<int> counts;
    for (const std::string& s : parse_list(counts_flag)) counts.push_back(std::stoi(s));
    if (counts.empty()) counts.push_back(static_cast<int>(bases.size()));

    const int h = cfg.scene.height, w = cfg.scene.width;
    TrainConfig mcfg = mixer_train_config(cfg);
    std::string csv = "mixer,location,predictors,params,macs," + MetricsReport::csv_header() + "\n";
    for (int count : counts) {
        if (count < 1 || count > static_cast<int>(bases.size())) {
            throw std::runtime_error("ablate: predictor count " + std::to_string(count) +
                                     " outside 1.." + std::to_string(bases.size()));
        }
        std::vector<TrainedPredictor> subset(bases.begin(), bases.begin() + count);
        std::vector<ToyPredictor> models;
        for (const auto& tp : subset) models.push_back(tp.model);
        for (MixerKind kind : kinds) {
            for (FeatureLocation loc : locs) {
                TrainedMixer tm = train_mixer(subset, split, dataset, kind, loc, mcfg);
                csv += mixer_to_string(kind) + "," + location_to_string(loc) + "," +
                       std::to_string(count) + "," +
                       std::to_string(tm.model.params.total_values()) + "," +
                       std::to_string(mixer_macs(tm.model, h, w)) + "," +
                       tm.test_metrics.csv_row() + "\n";
                std::printf("%s(%s) k=%d: rmse %.4f\n", mixer_to_string(kind).c_str(),
                            location_to_string(loc).c_str(), count, tm.test_metrics.rmse);
            }
        }
    }
    write_file_text(dir / "ablate.csv", csv);
    std::printf("ablate: wrote %s\n", (dir / "ablate.csv").string().c_str());
    return 0;
}

int cmd_export_heatmap(const CommonOpts& opts, const std::string& input,
                       const std::string& output, int predictor) {
    ExperimentConfig cfg = resolve_config(opts);
    fs::path dir = resolve_out_dir(cfg);
    if (predictor < 0 || predictor >= static_cast<int>(cfg.archs.size())) {
        throw std::runtime_error("export-heatmap: predictor index outside the ensemble");
    }
    TrainedPredictor tp = load_predictor_checkpoint(base_checkpoint_path(dir, predictor));
    Tensor rgb = read_ppm(input);
    Tensor feat = tp.model.features(rgb.unsqueeze0());
    const Shape& s = feat.shape();
    Tensor chw = Tensor::from_data({s[1], s[2], s[3]}, feat.data());
    Tensor heat = pca_principal_channel(chw);
    write_pgm(output, heat);
    std::printf("export-heatmap: base%d features -> %s\n", predictor, output.c_str());
    return 0;
}

int cmd_export_pointcloud(const CommonOpts& opts, const std::string& input,
                          const std::string& output, std::string kind_flag,
                          std::string loc_flag) {
    ExperimentConfig cfg = resolve_config(opts);
    if (!kind_flag.empty()) cfg.mixer_kind = mixer_from_string(kind_flag);
    if (!loc_flag.empty()) cfg.mixer_location = location_from_string(loc_flag);
    fs::path dir = resolve_out_dir(cfg);
    std::vector<TrainedPredictor> bases = load_bases(cfg, dir);
    MixerModel mixer =
        load_mixer_checkpoint(mixer_checkpoint_path(dir, cfg.mixer_kind, cfg.mixer_location));
    std::vector<ToyPredictor> models;
    for (const auto& tp : bases) models.push_back(tp.model);

    Tensor rgb = read_ppm(input);
    Tensor depth4 = ensemble_forward(models, mixer, rgb);
    const Shape& s = depth4.shape();
    Tensor depth = Tensor::from_data({1, s[2], s[3]}, depth4.data());
    Tensor mask = Tensor::full({1, s[2], s[3]}, 1.0);
    CameraIntrinsics intr;
    intr.fx = std::max(s[2], s[3]);
    intr.fy = intr.fx;
    intr.cx = (s[3] - 1) / 2.0;
    intr.cy = (s[2] - 1) / 2.0;
    write_pointcloud_ply(output, depth, rgb, mask, intr);
    std::printf("export-pointcloud: %s -> %s\n", input.c_str(), output.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-level depth ensemble experiments"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string kind_flag, loc_flag, input, output;
    std::string mixers_flag = "uwf,cgf,cbf,rbf", locations_flag = "pl,fl", counts_flag;
    std::vector<double> caps_flag;
    int jobs = 1;
    int predictor = 0;

    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic dataset");
    add_common(synth, opts);

    CLI::App* train_base = app.add_subcommand("train-base", "train the base predictors");
    add_common(train_base, opts);
    train_base->add_option("--jobs", jobs, "concurrent base trainings")->check(CLI::PositiveNumber);

    CLI::App* train_mix = app.add_subcommand("train-mixer", "train a mixer over frozen bases");
    add_common(train_mix, opts);
    train_mix->add_option("--kind", kind_flag, "uwf|cgf|cbf|rbf");
    train_mix->add_option("--location", loc_flag, "penultimate|final");

    CLI::App* eval = app.add_subcommand("eval", "write metrics.csv, ranges.csv, manifest.json");
    add_common(eval, opts);
    eval->add_option("--kind", kind_flag, "uwf|cgf|cbf|rbf");
    eval->add_option("--location", loc_flag, "penultimate|final");
    eval->add_option("--caps", caps_flag, "depth-range upper bounds")->delimiter(',');

    CLI::App* fuse = app.add_subcommand("fuse", "run the ensemble on one image");
    add_common(fuse, opts);
    fuse->add_option("--input", input, "RGB image (ppm)")->required()->check(CLI::ExistingFile);
    fuse->add_option("--output", output, "depth map (pfm)")->required();
    fuse->add_option("--kind", kind_flag, "uwf|cgf|cbf|rbf");
    fuse->add_option("--location", loc_flag, "penultimate|final");

    app.add_subcommand("gradcheck", "verify every op's gradients numerically");

    CLI::App* ablate = app.add_subcommand("ablate", "sweep mixer kinds x locations x counts");
    add_common(ablate, opts);
    ablate->add_option("--mixers", mixers_flag, "comma list of mixer kinds");
    ablate->add_option("--locations", locations_flag, "comma list of pl|fl");
    ablate->add_option("--counts", counts_flag, "comma list of predictor counts");

    CLI::App* heatmap = app.add_subcommand("export-heatmap", "principal feature channel as pgm");
    add_common(heatmap, opts);
    heatmap->add_option("--input", input, "RGB image (ppm)")->required()->check(CLI::ExistingFile);
    heatmap->add_option("--output", output, "heatmap (pgm)")->required();
    heatmap->add_option("--predictor", predictor, "base predictor index");

    CLI::App* cloud = app.add_subcommand("export-pointcloud", "fused depth as an ascii ply");
    add_common(cloud, opts);
    cloud->add_option("--input", input, "RGB image (ppm)")->required()->check(CLI::ExistingFile);
    cloud->add_option("--output", output, "point cloud (ply)")->required();
    cloud->add_option("--kind", kind_flag, "uwf|cgf|cbf|rbf");
    cloud->add_option("--location", loc_flag, "penultimate|final");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help lands here too; only real usage mistakes map to exit 1.
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(opts);
        if (train_base->parsed()) return cmd_train_base(opts, jobs);
        if (train_mix->parsed()) return cmd_train_mixer(opts, kind_flag, loc_flag);
        if (eval->parsed()) return cmd_eval(opts, kind_flag, loc_flag, caps_flag);
        if (fuse->parsed()) return cmd_fuse(opts, input, output, kind_flag, loc_flag);
        if (app.get_subcommand("gradcheck")->parsed()) return cmd_gradcheck();
        if (ablate->parsed()) return cmd_ablate(opts, mixers_flag, locations_flag, counts_flag);
        if (heatmap->parsed()) return cmd_export_heatmap(opts, input, output, predictor);
        if (cloud->parsed()) return cmd_export_pointcloud(opts, input, output, kind_flag, loc_flag);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
