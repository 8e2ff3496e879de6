#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "tedk/config.hpp"
#include "tedk/gradcheck_suite.hpp"
#include "tedk/report.hpp"
#include "tedk/util.hpp"

using namespace tedk;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("tedk_report_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults describe the reference protocol") {
    ExperimentConfig cfg = default_config();
    CHECK(cfg.scene.count == 280);
    CHECK(cfg.test_count == 40);
    CHECK(cfg.scene.height == 32);
    CHECK(cfg.archs.size() == 3);
    CHECK(cfg.archs[1].dilation == 3);
    CHECK(cfg.archs[2].activation == ActivationKind::Tanh);
    CHECK(cfg.train.epochs == 30);
    CHECK(cfg.train.base_lr == doctest::Approx(5e-4));
    CHECK(cfg.mixer_lr == doctest::Approx(1e-2));
    CHECK(cfg.feature_channels == 8);
    CHECK(cfg.kappa == doctest::Approx(10.0));
    CHECK(cfg.caps == std::vector<double>{2, 4, 6, 8, 10});
}

TEST_CASE("parses dotted keys, comments, and blank lines") {
    ExperimentConfig cfg = parse_config_text(
        "# protocol tweaks\n"
        "\n"
        "train.epochs = 7   # inline note\n"
        "mixer.kind = cgf\n"
        "mixer.location = final\n"
        "archs = 1,4,1,relu; 2,6,2,tanh\n"
        "eval.caps = 3, 6, 9\n"
        "scene.seed = 42\n");
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.mixer_kind == MixerKind::CGF);
    CHECK(cfg.mixer_location == FeatureLocation::Final);
    REQUIRE(cfg.archs.size() == 2);
    CHECK(cfg.archs[0].activation == ActivationKind::Relu);
    CHECK(cfg.archs[1].width == 6);
    CHECK(cfg.caps == std::vector<double>{3, 6, 9});
    CHECK(cfg.scene.seed == 42);
    CHECK(cfg.train.batch_size == 4);  // untouched keys keep their defaults
}

TEST_CASE("rejects unknown keys with the offending line") {
    CHECK_THROWS_WITH_AS(parse_config_text("train.epoch = 3\n"),
                         doctest::Contains("unknown key 'train.epoch' (line 1)"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("# fine\ntrain.epochs = 3\nbogus = 1\n"),
                         doctest::Contains("line 3"), std::invalid_argument);
}

TEST_CASE("rejects malformed lines and duplicates") {
    CHECK_THROWS_WITH_AS(parse_config_text("train.epochs\n"),
                         doctest::Contains("expected 'key = value'"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("train.epochs =\n"), doctest::Contains("empty value"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("train.epochs = x\n"),
                         doctest::Contains("expected an integer"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("train.epochs = 3\ntrain.epochs = 4\n"),
                         doctest::Contains("duplicate key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("archs = 2,8,1\n"),
                         doctest::Contains("depth,width,dilation,activation"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("eval.caps = 4,2\n"),
                         doctest::Contains("increasing"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("scene.test_count = 280\n"),
                         doctest::Contains("training pool"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("train.mixer_lr = 0\n"),
                         doctest::Contains("mixer_lr"), std::invalid_argument);
}

TEST_CASE("serialization round trips") {
    ExperimentConfig cfg = default_config();
    cfg.train.seed = 9;
    cfg.scene.seed = 9;
    cfg.mixer_kind = MixerKind::UWF;
    cfg.caps = {1.5, 3.5};
    cfg.out_dir = "elsewhere";
    std::string text = serialize_config(cfg);
    ExperimentConfig back = parse_config_text(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.mixer_kind == MixerKind::UWF);
    CHECK(back.caps == cfg.caps);
    CHECK(back.out_dir == "elsewhere");
    // Every canonical key parses, so the echo never emits an unknown key.
    CHECK(text.find("train.mixer_lr = 0.01\n") != std::string::npos);
}

TEST_CASE("out dir resolution honors the environment override") {
    ExperimentConfig cfg = default_config();
    cfg.out_dir = "from_config";
    unsetenv("TEDK_OUT");
    CHECK(resolve_out_dir(cfg) == fs::path("from_config"));
    setenv("TEDK_OUT", "/tmp/tedk_env_dir", 1);
    CHECK(resolve_out_dir(cfg) == fs::path("/tmp/tedk_env_dir"));
    setenv("TEDK_OUT", "", 1);
    CHECK(resolve_out_dir(cfg) == fs::path("from_config"));
    unsetenv("TEDK_OUT");
}

}  // TEST_SUITE

TEST_SUITE("report") {

TEST_CASE("conv mac counts are exact products") {
    CHECK(conv3x3_macs(3, 2, 5, 7) == 3 * 2 * 9 * 5 * 7);
    ToyPredictor p = build_toy_predictor(PredictorArch{2, 8, 1, ActivationKind::Elu}, 8, 10.0, 1);
    // blocks 3->8 and 8->8, feat 8->8, head 8->1, all at 16x16.
    std::int64_t expect = conv3x3_macs(8, 3, 16, 16) + conv3x3_macs(8, 8, 16, 16) +
                          conv3x3_macs(8, 8, 16, 16) + conv3x3_macs(1, 8, 16, 16);
    CHECK(predictor_macs(p, 16, 16) == expect);
}

TEST_CASE("mixer mac counts follow each fusion structure") {
    const int c = 4, h = 8, w = 8;
    auto head = [&](int fused) { return conv3x3_macs(1, fused, h, w); };
    auto uwf = build_mixer(MixerKind::UWF, FeatureLocation::Penultimate, 3, c, 10.0, 1);
    CHECK(mixer_macs(uwf, h, w) == head(c));
    auto cgf = build_mixer(MixerKind::CGF, FeatureLocation::Penultimate, 3, c, 10.0, 1);
    CHECK(mixer_macs(cgf, h, w) == 3 * conv3x3_macs(c, c, h, w) + head(c));
    auto cbf = build_mixer(MixerKind::CBF, FeatureLocation::Penultimate, 3, c, 10.0, 1);
    CHECK(mixer_macs(cbf, h, w) == conv3x3_macs(c, 3 * c, h, w) + head(c));
    auto rbf = build_mixer(MixerKind::RBF, FeatureLocation::Penultimate, 3, c, 10.0, 1);
    // three gate convs per visited input, then the head over the state concat
    CHECK(mixer_macs(rbf, h, w) == 3 * 3 * conv3x3_macs(c, 2 * c, h, w) + head(3 * c));
    auto rbf2 = build_mixer(MixerKind::RBF, FeatureLocation::Penultimate, 2, c, 10.0, 1);
    CHECK(mixer_macs(rbf2, h, w) == 2 * 3 * conv3x3_macs(c, 2 * c, h, w) + head(2 * c));
}

TEST_CASE("uwf parameter count is the bare head") {
    auto uwf = build_mixer(MixerKind::UWF, FeatureLocation::Penultimate, 3, 8, 10.0, 1);
    CHECK(uwf.params.total_values() == 8 * 9 + 1);
}

TEST_CASE("emit_report writes deterministic csv files") {
    RunManifest run;
    run.run_id = "abc";
    run.config_hash = "deadbeef";
    ModelRow a;
    a.name = "base0";
    a.params = 11;
    a.macs = 22;
    a.metrics.rmse = 0.5;
    a.metrics.valid_count = 4;
    ModelRow b = a;
    b.name = "mixer-uwf";
    b.params = 7;
    run.models = {a, b};
    RangeRow r;
    r.name = "base0";
    r.metrics.cap = DepthCap{0.0, 2.0};
    r.metrics.rmse = 0.25;
    r.metrics.valid_count = 2;
    run.ranges = {r};

    fs::path dir = temp_dir("emit");
    auto written = emit_report(run, dir);
    REQUIRE(written.size() == 2);
    std::string metrics = read_file_text(dir / "metrics.csv");
    CHECK(metrics ==
          "model,params,abs_rel,sq_rel,rmse,rmse_log,log10,d1,d2,d3,cap_min,cap_max,valid_count\n"
          "base0,11,0,0,0.5,0,0,0,0,0,0.001,10,4\n"
          "mixer-uwf,7,0,0,0.5,0,0,0,0,0,0.001,10,4\n");
    CHECK(read_file_text(dir / "ranges.csv") ==
          "model,cap_min,cap_max,rmse,valid_count\n"
          "base0,0,2,0.25,2\n");
    std::string first = sha256_file(dir / "metrics.csv");
    emit_report(run, dir);
    CHECK(sha256_file(dir / "metrics.csv") == first);
}

TEST_CASE("manifest insists every artifact exists") {
    fs::path dir = temp_dir("manifest");
    RunManifest run;
    run.run_id = "x";
    run.config_hash = "y";
    run.checkpoint_paths = {"missing.tedk"};
    CHECK_THROWS_WITH_AS(write_manifest(run, dir / "manifest.json"),
                         doctest::Contains("missing.tedk"), std::runtime_error);
    write_file_text(dir / "missing.tedk", "stub");
    write_manifest(run, dir / "manifest.json");
    std::string j = read_file_text(dir / "manifest.json");
    CHECK(j.find("\"missing.tedk\"") != std::string::npos);
    CHECK(j.find("\"config_hash\": \"y\"") != std::string::npos);
}

}  // TEST_SUITE

TEST_SUITE("gradient suite") {

TEST_CASE("every op family is covered and passes") {
    auto cases = run_gradient_suite({0, 1}, 1e-5, 1e-4);
    CHECK(suite_passed(cases));
    auto has = [&](const std::string& name) {
        for (const auto& c : cases) {
            if (c.name == name) return true;
        }
        return false;
    };
    for (const char* name :
         {"add", "sub", "mul", "affine", "log", "clamped_sqrt", "sigmoid", "tanh", "elu", "relu",
          "unsqueeze0", "sum", "mean", "mean_sorted", "take", "conv2d_3x3_d1", "conv2d_3x3_d2",
          "concat_channels", "sum_sorted", "mixer_uwf_inputs", "mixer_cgf_params",
          "mixer_cgf_inputs", "mixer_cbf_params", "mixer_cbf_inputs", "mixer_rbf_params",
          "mixer_rbf_inputs", "mixer_uwf_params", "depth_head", "ssi_loss"}) {
        INFO(name);
        CHECK(has(name));
    }
    CHECK(cases.size() == 29);
}

TEST_CASE("a sharpened tolerance can fail a case without throwing") {
    auto cases = run_gradient_suite({3}, 1e-5, 1e-16);
    CHECK_FALSE(suite_passed(cases));
}

}  // TEST_SUITE
