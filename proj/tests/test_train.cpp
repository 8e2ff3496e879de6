#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tedk/checkpoint.hpp"
#include "tedk/optim.hpp"
#include "tedk/rng.hpp"
#include "tedk/synth.hpp"
#include "tedk/train.hpp"
#include "tedk/util.hpp"

using namespace tedk;

namespace {

ParameterSet single_param(double value) {
    ParameterSet params;
    params.add("theta", Tensor::from_data({1}, {value}, true));
    return params;
}

void set_grad(ParameterSet& params, const std::string& name, double g) {
    Tensor t = params.get(name);
    t.grad()[0] = g;
}

std::filesystem::path temp_dir(const std::string& leaf) {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / leaf;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct ToyRun {
    std::vector<DepthSample> dataset;
    DatasetSplit split;
};

// Small end-to-end fixture: 16x16 scenes, most into train, a few held out.
ToyRun make_toy_run(std::uint64_t seed, int train_count = 16, int test_count = 4) {
    SceneConfig scene;
    scene.count = train_count + test_count;
    scene.height = 16;
    scene.width = 16;
    scene.seed = seed;
    ToyRun run;
    run.dataset = generate_synthetic_dataset(scene);
    std::vector<DepthSample> train(run.dataset.begin(), run.dataset.begin() + train_count);
    run.split = split_dataset(train, seed);
    for (int i = train_count; i < train_count + test_count; ++i) {
        run.split.test.push_back(run.dataset[static_cast<std::size_t>(i)].id);
    }
    return run;
}

TrainConfig fast_cfg(std::uint64_t seed, int epochs) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 4;
    cfg.seed = seed;
    cfg.base_lr = 3e-3;  // toy nets need a far hotter schedule than the default
    return cfg;
}

}  // namespace

TEST_SUITE("optim") {
    TEST_CASE("poly schedule hits the pinned values") {
        ParameterSet params = single_param(1.0);
        OptimizerState state = make_optimizer(params, 1e-4, 100, 0.0, 0.9);
        CHECK(poly_lr(state) == doctest::Approx(1e-4).epsilon(1e-12));
        state.t = 100;
        CHECK(poly_lr(state) == 0.0);
        state.t = 50;
        CHECK(poly_lr(state) == doctest::Approx(1e-4 * std::pow(0.5, 0.9)).epsilon(1e-12));
        CHECK(poly_lr(state) == doctest::Approx(5.3589e-5).epsilon(1e-4));
        state.t = 170;
        CHECK(poly_lr(state) == 0.0);
    }

    TEST_CASE("poly schedule never increases") {
        ParameterSet params = single_param(1.0);
        OptimizerState state = make_optimizer(params, 3e-3, 57, 0.0, 0.9);
        double prev = poly_lr(state);
        for (state.t = 1; state.t <= 57; ++state.t) {
            const double lr = poly_lr(state);
            CHECK(lr <= prev);
            prev = lr;
        }
    }

    TEST_CASE("first adamw step matches the closed form") {
        ParameterSet params = single_param(1.0);
        OptimizerState state = make_optimizer(params, 1e-4, 1000, 0.0, 0.9);
        set_grad(params, "theta", 0.5);
        adamw_step(params, state);
        // bias correction at t=1 gives m_hat = g and v_hat = g^2
        const double expected = 1.0 - 1e-4 * (0.5 / (0.5 + 1e-6));
        CHECK(params.get("theta").data()[0] == doctest::Approx(expected).epsilon(1e-14));
        CHECK(params.get("theta").data()[0] == doctest::Approx(0.9999).epsilon(1e-4));
        CHECK(state.t == 1);
    }

    TEST_CASE("zero gradient leaves parameters unchanged without decay") {
        ParameterSet params = single_param(0.73);
        OptimizerState state = make_optimizer(params, 1e-4, 10, 0.0, 0.9);
        set_grad(params, "theta", 0.0);
        adamw_step(params, state);
        CHECK(params.get("theta").data()[0] == 0.73);
    }

    TEST_CASE("decay is decoupled: zero gradient still shrinks weights") {
        ParameterSet params = single_param(0.73);
        OptimizerState state = make_optimizer(params, 1e-4, 10, 0.01, 0.9);
        set_grad(params, "theta", 0.0);
        adamw_step(params, state);
        CHECK(params.get("theta").data()[0] ==
              doctest::Approx(0.73 * (1.0 - 1e-6)).epsilon(1e-14));
    }

    TEST_CASE("an untouched gradient buffer counts as zero") {
        ParameterSet params = single_param(0.5);
        OptimizerState state = make_optimizer(params, 1e-4, 10, 0.0, 0.9);
        adamw_step(params, state);
        CHECK(params.get("theta").data()[0] == 0.5);
    }

    TEST_CASE("nan gradients are rejected by parameter name") {
        ParameterSet params;
        params.add("layer.weight", Tensor::from_data({2}, {1.0, 2.0}, true));
        OptimizerState state = make_optimizer(params, 1e-4, 10);
        Tensor t = params.get("layer.weight");
        t.grad()[1] = std::nan("");
        CHECK_THROWS_WITH_AS(adamw_step(params, state),
                             doctest::Contains("layer.weight"), std::runtime_error);
    }

    TEST_CASE("moments track the gradient emas") {
        ParameterSet params = single_param(0.0);
        OptimizerState state = make_optimizer(params, 1e-4, 1000, 0.0, 0.9);
        set_grad(params, "theta", 2.0);
        adamw_step(params, state);
        CHECK(state.m[0][0] == doctest::Approx(0.1 * 2.0).epsilon(1e-12));
        CHECK(state.v[0][0] == doctest::Approx(0.001 * 4.0).epsilon(1e-12));
    }

    TEST_CASE("config validation") {
        ParameterSet params = single_param(1.0);
        CHECK_THROWS_AS(make_optimizer(params, 0.0, 10), std::invalid_argument);
        CHECK_THROWS_AS(make_optimizer(params, 1e-4, 0), std::invalid_argument);
        CHECK_THROWS_AS(make_optimizer(params, 1e-4, 10, -0.1), std::invalid_argument);
    }
}

TEST_SUITE("checkpoint") {
    TEST_CASE("save, load, save is byte-identical") {
        const std::filesystem::path dir = temp_dir("tedk-ckpt-roundtrip");
        Rng rng(11);
        ParameterSet params;
        std::vector<double> a(12), b(5);
        for (auto& v : a) v = rng.uniform(-2.0, 2.0);
        for (auto& v : b) v = rng.uniform(-2.0, 2.0);
        params.add("conv.weight", Tensor::from_data({3, 4}, a));
        params.add("conv.bias", Tensor::from_data({5}, b));
        std::map<std::string, std::string> meta{{"kappa", "10"}, {"arch.depth", "2"}};

        save_checkpoint(dir / "a.tedk", params, meta);
        LoadedCheckpoint ck = load_checkpoint(dir / "a.tedk");
        save_checkpoint(dir / "b.tedk", ck.params, ck.metadata);
        CHECK(sha256_file(dir / "a.tedk") == sha256_file(dir / "b.tedk"));

        CHECK(ck.params.size() == 2);
        CHECK(ck.params.name_at(0) == "conv.weight");
        CHECK(ck.params.get("conv.bias").shape() == Shape{5});
        // values survive as their f32 roundings
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(ck.params.get("conv.weight").data()[i] ==
                  static_cast<double>(static_cast<float>(a[i])));
        }
        CHECK(ck.metadata.at("kappa") == "10");
        CHECK(ck.metadata.at("arch.depth") == "2");
    }

    TEST_CASE("magic and version open the file") {
        ParameterSet params;
        params.add("w", Tensor::from_data({1}, {1.5}));
        std::vector<std::uint8_t> bytes = encode_checkpoint(params, {});
        CHECK(bytes[0] == 'T');
        CHECK(bytes[1] == 'E');
        CHECK(bytes[2] == 'D');
        CHECK(bytes[3] == 'K');
        CHECK(bytes[4] == kCheckpointVersion);
        CHECK(bytes[5] == 0);
        CHECK(bytes[6] == 0);
        CHECK(bytes[7] == 0);
    }

    TEST_CASE("corrupted magic is rejected") {
        ParameterSet params;
        params.add("w", Tensor::from_data({1}, {1.5}));
        std::vector<std::uint8_t> bytes = encode_checkpoint(params, {});
        bytes[0] = 'X';
        CHECK_THROWS_WITH_AS(decode_checkpoint(bytes), doctest::Contains("magic"),
                             std::runtime_error);
    }

    TEST_CASE("unsupported version is rejected") {
        ParameterSet params;
        params.add("w", Tensor::from_data({1}, {1.5}));
        std::vector<std::uint8_t> bytes = encode_checkpoint(params, {});
        bytes[4] = 99;
        CHECK_THROWS_WITH_AS(decode_checkpoint(bytes), doctest::Contains("version"),
                             std::runtime_error);
    }

    TEST_CASE("truncation and trailing bytes are rejected") {
        ParameterSet params;
        params.add("w", Tensor::from_data({2, 2}, {1.0, 2.0, 3.0, 4.0}));
        std::vector<std::uint8_t> bytes = encode_checkpoint(params, {{"k", "v"}});
        for (std::size_t cut : {bytes.size() - 1, bytes.size() - 5, std::size_t{9}}) {
            std::vector<std::uint8_t> clipped(bytes.begin(),
                                              bytes.begin() + static_cast<std::ptrdiff_t>(cut));
            CHECK_THROWS_AS(decode_checkpoint(clipped), std::runtime_error);
        }
        std::vector<std::uint8_t> padded = bytes;
        padded.push_back(0);
        CHECK_THROWS_WITH_AS(decode_checkpoint(padded), doctest::Contains("trailing"),
                             std::runtime_error);
    }

    TEST_CASE("metadata map round-trips regardless of insertion order") {
        ParameterSet params;
        params.add("w", Tensor::from_data({1}, {0.25}));
        std::map<std::string, std::string> m1{{"zeta", "1"}, {"alpha", "2"}};
        std::map<std::string, std::string> m2{{"alpha", "2"}, {"zeta", "1"}};
        CHECK(encode_checkpoint(params, m1) == encode_checkpoint(params, m2));
    }

    TEST_CASE("random parameter sets round-trip bit-exactly as f32") {
        Rng rng(77);
        for (int trial = 0; trial < 20; ++trial) {
            ParameterSet params;
            const int n_tensors = rng.uniform_int(1, 4);
            for (int t = 0; t < n_tensors; ++t) {
                const int rows = rng.uniform_int(1, 5);
                const int cols = rng.uniform_int(1, 5);
                std::vector<double> data(static_cast<std::size_t>(rows * cols));
                // f32-representable payload so the roundtrip is exact in f64 too
                for (auto& v : data) v = static_cast<double>(static_cast<float>(rng.uniform(-3.0, 3.0)));
                params.add("t" + std::to_string(t), Tensor::from_data({rows, cols}, std::move(data)));
            }
            const std::vector<std::uint8_t> bytes = encode_checkpoint(params, {{"trial", std::to_string(trial)}});
            LoadedCheckpoint ck = decode_checkpoint(bytes);
            CHECK(ck.params.sha256() == params.sha256());
            CHECK(encode_checkpoint(ck.params, ck.metadata) == bytes);
        }
    }
}

TEST_SUITE("train") {
    TEST_CASE("gradients, not just decay, move freshly built parameters") {
        ToyRun run = make_toy_run(1);
        TrainConfig cfg = fast_cfg(1, 1);
        cfg.weight_decay = 0.0;
        TrainedPredictor tp = train_one_base_predictor(run.split, run.dataset, PredictorArch{}, 0,
                                                       8, 10.0, cfg);
        const ToyPredictor fresh =
            build_toy_predictor(PredictorArch{}, 8, 10.0, derive_seed(cfg.seed, 0));
        CHECK(tp.model.params.sha256() != fresh.params.sha256());

        std::vector<TrainedPredictor> bases{tp};
        TrainedMixer tm = train_mixer(bases, run.split, run.dataset, MixerKind::CBF,
                                      FeatureLocation::Penultimate, cfg);
        const MixerModel fresh_mixer =
            build_mixer(MixerKind::CBF, FeatureLocation::Penultimate, 1, 8, 10.0,
                        derive_seed(cfg.seed, 2));
        CHECK(tm.model.params.sha256() != fresh_mixer.params.sha256());
    }

    TEST_CASE("toy base training drives the loss down across seeds") {
        int improved = 0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            ToyRun run = make_toy_run(seed);
            TrainedPredictor tp = train_one_base_predictor(
                run.split, run.dataset, PredictorArch{}, 0, 8, 10.0, fast_cfg(seed, 4));
            REQUIRE(tp.epoch_losses.size() == 4);
            for (double l : tp.epoch_losses) CHECK(std::isfinite(l));
            if (tp.epoch_losses.back() < tp.epoch_losses.front()) ++improved;
            CHECK(tp.validation_rmse > 0.0);
            CHECK(std::isfinite(tp.validation_rmse));
        }
        CHECK(improved >= 4);
    }

    TEST_CASE("training a predictor alone matches its slot in the ensemble run") {
        ToyRun run = make_toy_run(5);
        const std::vector<PredictorArch> archs{
            PredictorArch{2, 8, 1, ActivationKind::Elu},
            PredictorArch{2, 6, 2, ActivationKind::Tanh},
        };
        const TrainConfig cfg = fast_cfg(5, 2);
        std::vector<TrainedPredictor> ensemble =
            train_base_predictors(run.split, run.dataset, 2, archs, 8, 10.0, cfg);
        // reverse order: slot 1 first, then slot 0
        TrainedPredictor solo1 =
            train_one_base_predictor(run.split, run.dataset, archs[1], 1, 8, 10.0, cfg);
        TrainedPredictor solo0 =
            train_one_base_predictor(run.split, run.dataset, archs[0], 0, 8, 10.0, cfg);
        CHECK(solo0.model.params.sha256() == ensemble[0].model.params.sha256());
        CHECK(solo1.model.params.sha256() == ensemble[1].model.params.sha256());
        CHECK(solo0.validation_rmse == ensemble[0].validation_rmse);
        CHECK(solo1.validation_rmse == ensemble[1].validation_rmse);
    }

    TEST_CASE("training twice with one seed is bit-identical") {
        ToyRun run = make_toy_run(9);
        const TrainConfig cfg = fast_cfg(9, 2);
        TrainedPredictor a = train_one_base_predictor(run.split, run.dataset, PredictorArch{}, 0,
                                                      8, 10.0, cfg);
        TrainedPredictor b = train_one_base_predictor(run.split, run.dataset, PredictorArch{}, 0,
                                                      8, 10.0, cfg);
        CHECK(a.model.params.sha256() == b.model.params.sha256());
        CHECK(a.epoch_losses == b.epoch_losses);
    }

    TEST_CASE("mixer training leaves every base parameter untouched") {
        ToyRun run = make_toy_run(3);
        const TrainConfig cfg = fast_cfg(3, 2);
        std::vector<TrainedPredictor> bases = train_base_predictors(
            run.split, run.dataset, 2,
            {PredictorArch{}, PredictorArch{2, 6, 2, ActivationKind::Tanh}}, 8, 10.0, cfg);
        std::vector<std::string> before;
        for (const TrainedPredictor& tp : bases) before.push_back(tp.model.params.sha256());
        for (MixerKind kind : all_mixer_kinds()) {
            TrainedMixer tm = train_mixer(bases, run.split, run.dataset, kind,
                                          FeatureLocation::Penultimate, cfg);
            CHECK(tm.model.params.size() > 0);
            for (double l : tm.epoch_losses) CHECK(std::isfinite(l));
            CHECK(std::isfinite(tm.test_metrics.rmse));
            CHECK(tm.test_metrics.valid_count > 0);
            for (std::size_t i = 0; i < bases.size(); ++i) {
                CHECK(bases[i].model.params.sha256() == before[i]);
            }
        }
    }

    TEST_CASE("rbf mixer visits worst predictor first") {
        ToyRun run = make_toy_run(4);
        const TrainConfig cfg = fast_cfg(4, 1);
        std::vector<TrainedPredictor> bases = train_base_predictors(
            run.split, run.dataset, 2,
            {PredictorArch{}, PredictorArch{3, 6, 2, ActivationKind::Tanh}}, 8, 10.0, cfg);
        TrainedMixer tm =
            train_mixer(bases, run.split, run.dataset, MixerKind::RBF, FeatureLocation::Penultimate, cfg);
        CHECK(tm.model.order == rank_predictors({bases[0].validation_rmse, bases[1].validation_rmse}));
    }

    TEST_CASE("final-layer fusion consumes depth maps as one-channel features") {
        ToyRun run = make_toy_run(6);
        const TrainConfig cfg = fast_cfg(6, 1);
        std::vector<TrainedPredictor> bases = train_base_predictors(
            run.split, run.dataset, 2, {PredictorArch{}, PredictorArch{}}, 8, 10.0, cfg);
        TrainedMixer tm = train_mixer(bases, run.split, run.dataset, MixerKind::CBF,
                                      FeatureLocation::Final, cfg);
        CHECK(tm.model.feature_channels == 1);
        CHECK(tm.model.location == FeatureLocation::Final);
        std::vector<ToyPredictor> models{bases[0].model, bases[1].model};
        const Tensor pred = ensemble_forward(models, tm.model, run.dataset[0].rgb);
        CHECK(pred.shape() == Shape{1, 1, 16, 16});
    }

    TEST_CASE("split and config validation") {
        ToyRun run = make_toy_run(2);
        const TrainConfig cfg = fast_cfg(2, 1);
        DatasetSplit empty_base = run.split;
        empty_base.train_base.clear();
        CHECK_THROWS_AS(train_one_base_predictor(empty_base, run.dataset, PredictorArch{}, 0, 8,
                                                 10.0, cfg),
                        std::invalid_argument);
        CHECK_THROWS_AS(
            train_base_predictors(run.split, run.dataset, 2, {PredictorArch{}}, 8, 10.0, cfg),
            std::invalid_argument);
        TrainConfig bad = cfg;
        bad.epochs = 0;
        CHECK_THROWS_AS(
            train_one_base_predictor(run.split, run.dataset, PredictorArch{}, 0, 8, 10.0, bad),
            std::invalid_argument);
        std::vector<TrainedPredictor> bases = train_base_predictors(
            run.split, run.dataset, 1, {PredictorArch{}}, 8, 10.0, cfg);
        DatasetSplit no_test = run.split;
        no_test.test.clear();
        CHECK_THROWS_AS(train_mixer(bases, no_test, run.dataset, MixerKind::UWF,
                                    FeatureLocation::Penultimate, cfg),
                        std::invalid_argument);
        CHECK_THROWS_AS(train_mixer({}, run.split, run.dataset, MixerKind::UWF,
                                    FeatureLocation::Penultimate, cfg),
                        std::invalid_argument);
    }

    TEST_CASE("predictor checkpoints rebuild the same model") {
        const std::filesystem::path dir = temp_dir("tedk-ckpt-models");
        ToyRun run = make_toy_run(8);
        const TrainConfig cfg = fast_cfg(8, 1);
        TrainedPredictor tp = train_one_base_predictor(
            run.split, run.dataset, PredictorArch{3, 6, 2, ActivationKind::Tanh}, 0, 4, 80.0, cfg);
        save_predictor_checkpoint(dir / "p0.tedk", tp);
        TrainedPredictor back = load_predictor_checkpoint(dir / "p0.tedk");
        CHECK(back.model.arch.depth == 3);
        CHECK(back.model.arch.width == 6);
        CHECK(back.model.arch.dilation == 2);
        CHECK(back.model.arch.activation == ActivationKind::Tanh);
        CHECK(back.model.feature_channels == 4);
        CHECK(back.model.kappa == 80.0);
        CHECK(back.validation_rmse == tp.validation_rmse);
        // weights come back as their f32 roundings, forward still runs
        const Tensor pred = back.model.forward(run.dataset[0].rgb.unsqueeze0());
        CHECK(pred.shape() == Shape{1, 1, 16, 16});
        save_predictor_checkpoint(dir / "p1.tedk", back);
        CHECK(sha256_file(dir / "p0.tedk") == sha256_file(dir / "p1.tedk"));
    }

    TEST_CASE("mixer checkpoints keep kind, location, and order") {
        const std::filesystem::path dir = temp_dir("tedk-ckpt-mixer");
        ToyRun run = make_toy_run(7);
        const TrainConfig cfg = fast_cfg(7, 1);
        std::vector<TrainedPredictor> bases = train_base_predictors(
            run.split, run.dataset, 3,
            {PredictorArch{}, PredictorArch{2, 6, 2, ActivationKind::Tanh}, PredictorArch{3, 6, 1, ActivationKind::Relu}},
            8, 10.0, cfg);
        TrainedMixer tm = train_mixer(bases, run.split, run.dataset, MixerKind::RBF,
                                      FeatureLocation::Penultimate, cfg);
        save_mixer_checkpoint(dir / "m.tedk", tm.model);
        MixerModel back = load_mixer_checkpoint(dir / "m.tedk");
        CHECK(back.kind == MixerKind::RBF);
        CHECK(back.location == FeatureLocation::Penultimate);
        CHECK(back.num_predictors == 3);
        CHECK(back.feature_channels == 8);
        CHECK(back.kappa == 10.0);
        CHECK(back.order == tm.model.order);
        std::vector<ToyPredictor> models;
        for (const TrainedPredictor& tp : bases) models.push_back(tp.model);
        const Tensor pred = ensemble_forward(models, back, run.dataset[0].rgb);
        CHECK(pred.shape() == Shape{1, 1, 16, 16});
        CHECK_THROWS_AS(load_predictor_checkpoint(dir / "m.tedk"), std::runtime_error);
    }

    TEST_CASE("uwf mixer training only moves the head") {
        ToyRun run = make_toy_run(10);
        const TrainConfig cfg = fast_cfg(10, 2);
        std::vector<TrainedPredictor> bases = train_base_predictors(
            run.split, run.dataset, 2, {PredictorArch{}, PredictorArch{}}, 8, 10.0, cfg);
        TrainedMixer tm = train_mixer(bases, run.split, run.dataset, MixerKind::UWF,
                                      FeatureLocation::Penultimate, cfg);
        CHECK(tm.model.params.size() == 2);
        CHECK(tm.model.params.contains("head.weight"));
        CHECK(tm.model.params.contains("head.bias"));
    }
}
