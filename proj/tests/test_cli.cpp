#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "tedk/util.hpp"

namespace fs = std::filesystem;
using tedk::read_file_text;
using tedk::write_file_text;

namespace {

// Binary path baked in by the build; subcommand behavior (exit codes, artifact
// layout) is contract, so it is exercised through real processes.
const char* cli_path() { return TEDK_BIN_PATH; }

int run_cli(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(cli_path()) + " " + args + " >" + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

struct CliRun {
    fs::path dir;
    fs::path log;
    fs::path cfg;

    explicit CliRun(const std::string& tag) {
        dir = fs::temp_directory_path() / ("tedk_cli_" + tag);
        fs::remove_all(dir);
        fs::create_directories(dir);
        log = dir / "log.txt";
        cfg = dir / "run.cfg";
        write_file_text(cfg,
                        "scene.count = 24\n"
                        "scene.height = 12\n"
                        "scene.width = 12\n"
                        "scene.test_count = 4\n"
                        "train.epochs = 2\n"
                        "out.dir = " + (dir / "out").string() + "\n");
    }

    int run(const std::string& args) { return run_cli(args + " --config " + cfg.string(), log); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
    fs::path log = fs::temp_directory_path() / "tedk_cli_usage.log";
    CHECK(run_cli("definitely-not-a-subcommand", log) == 1);
    CHECK(run_cli("synth --config /no/such/file.cfg", log) == 1);
    CHECK(run_cli("eval --bogus-flag", log) == 1);
    CHECK(run_cli("", log) == 1);
    CHECK(run_cli("--help", log) == 0);
}

TEST_CASE("runtime failures exit 2") {
    CliRun t("runtime");
    CHECK(t.run("train-base") == 2);  // no dataset yet
    CHECK(read_file_text(t.log).find("run synth first") != std::string::npos);
    REQUIRE(t.run("synth") == 0);
    CHECK(t.run("eval") == 2);  // no checkpoints yet
}

TEST_CASE("pipeline produces the documented artifacts") {
    CliRun t("pipeline");
    REQUIRE(t.run("synth") == 0);
    CHECK(fs::exists(t.dir / "out/data/manifest.txt"));
    CHECK(fs::exists(t.dir / "out/resolved.cfg"));
    REQUIRE(t.run("train-base --jobs 2") == 0);
    CHECK(fs::exists(t.dir / "out/base0.tedk"));
    CHECK(fs::exists(t.dir / "out/base2.tedk"));
    REQUIRE(t.run("train-mixer --kind uwf") == 0);
    CHECK(fs::exists(t.dir / "out/mixer-uwf-penultimate.tedk"));
    REQUIRE(t.run("eval --kind uwf --caps 5,10") == 0);
    std::string metrics = read_file_text(t.dir / "out/metrics.csv");
    CHECK(metrics.find("base0,") != std::string::npos);
    CHECK(metrics.find("mixer-uwf,") != std::string::npos);
    // one header + three bases + one mixer
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 5);
    std::string ranges = read_file_text(t.dir / "out/ranges.csv");
    // one header + 4 models x 2 caps
    CHECK(std::count(ranges.begin(), ranges.end(), '\n') == 9);
    CHECK(fs::exists(t.dir / "out/manifest.json"));

    // the resolved echo reparses to the same protocol
    std::string echoed = read_file_text(t.dir / "out/resolved.cfg");
    CHECK(echoed.find("scene.count = 24\n") != std::string::npos);
    CHECK(echoed.find("train.epochs = 2\n") != std::string::npos);
}

TEST_CASE("ablate sweeps kinds x locations into csv rows") {
    CliRun t("ablate");
    REQUIRE(t.run("synth") == 0);
    REQUIRE(t.run("train-base") == 0);
    REQUIRE(t.run("ablate --mixers uwf,cgf,cbf,rbf --locations pl,fl") == 0);
    std::string csv = read_file_text(t.dir / "out/ablate.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);  // header + 4x2 rows
    CHECK(csv.find("uwf,penultimate,3,") != std::string::npos);
    CHECK(csv.find("rbf,final,3,") != std::string::npos);
}

TEST_CASE("TEDK_OUT redirects every artifact") {
    CliRun t("envout");
    fs::path redirected = t.dir / "env_redirect";
    std::string env = "TEDK_OUT=" + redirected.string() + " ";
    std::string cmd = env + cli_path() + " synth --config " + t.cfg.string() + " >" +
                      t.log.string() + " 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(redirected / "data/manifest.txt"));
    CHECK_FALSE(fs::exists(t.dir / "out"));
}

TEST_CASE("gradcheck subcommand succeeds") {
    fs::path log = fs::temp_directory_path() / "tedk_cli_gc.log";
    CHECK(run_cli("gradcheck", log) == 0);
    CHECK(read_file_text(log).find("cases ok") != std::string::npos);
}

}  // TEST_SUITE
