#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sfhn/errors.hpp"
#include "sfhn/harness/commands.hpp"
#include "sfhn/harness/setup.hpp"
#include "sfhn/harness/verify.hpp"

using namespace sfhn;
using namespace sfhn::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sfhn_harness_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig small(RunKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    c.grid.points = {49, 1};
    c.steps = 100;
    return c;
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "case.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

/// Data files only: the manifest carries timestamps.
std::map<std::string, std::string> data_files(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename() != "manifest.json") files[e.path().filename().string()] = slurp(e.path());
    }
    return files;
}

}  // namespace

TEST_CASE("config round trip and defaults") {
    const ExperimentConfig defaults;
    CHECK(parse_config("{}") == defaults);
    CHECK(parse_config(serialize_config(defaults)) == defaults);

    ExperimentConfig c = small(RunKind::control);
    c.grid.dimension = 2;
    c.grid.points = {9, 7};
    c.model.diffusion = DiffusionLaw::saturating(0.3);
    c.model.initial.shape = "values";
    c.model.initial.values.assign(63, 0.25);
    c.control.alpha = 0.0;
    c.control.mode = "ensemble";
    c.seeds = {4, 5, 6};
    c.stepper.diffusion_regularization = 1e-3;
    const std::string text = serialize_config(c);
    CHECK(parse_config(text) == c);
    CHECK(serialize_config(parse_config(text)) == text);
    CHECK(text.back() == '\n');
}

TEST_CASE("content hash is the git blob hash of the canonical text") {
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    const ExperimentConfig c;
    CHECK(content_hash(c) == git_blob_sha1(serialize_config(c)));
    CHECK(content_hash(c) == content_hash(parse_config(serialize_config(c))));
    ExperimentConfig d = c;
    d.control.alpha = 0.2;
    CHECK(content_hash(d) != content_hash(c));
}

TEST_CASE("config errors name the location") {
    CHECK(error_of("{\n  \"steps\": 3,\n}").find("case.json:3:") != std::string::npos);
    const std::string unknown = error_of(R"({"control": {"alhpa": 0.1}})");
    CHECK(unknown.find("control.alhpa") != std::string::npos);
    const std::string type = error_of(R"({"control": {"alpha": "big"}})");
    CHECK(type.find("control.alpha") != std::string::npos);
    CHECK(error_of(R"({"control": {"alpha": -1}})").find("control.alpha") != std::string::npos);
    CHECK(error_of(R"({"kind": "dance"})").find("dance") != std::string::npos);
    CHECK(error_of(R"({"time": {"steps": 0}})").find("time.steps") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/sfhn.json"), ConfigError);
}

TEST_CASE("seed ranges") {
    CHECK(parse_seed_range("3..5") == std::vector<std::uint64_t>{3, 4, 5});
    CHECK(parse_seed_range("7") == std::vector<std::uint64_t>{7});
    CHECK_THROWS_AS(parse_seed_range("5..3"), ConfigError);
    CHECK_THROWS_AS(parse_seed_range("x"), ConfigError);
    CHECK_THROWS_AS(parse_seed_range("-1"), ConfigError);
}

TEST_CASE("log slope fit") {
    const std::vector<double> x{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::sqrt(v));
    const SlopeFit exact = fit_log_slope(x, y);
    CHECK(exact.slope == doctest::Approx(0.5));
    CHECK(exact.ci_high - exact.ci_low <= 1e-10);
    y[1] *= 1.1;
    const SlopeFit noisy = fit_log_slope(x, y);
    CHECK(noisy.ci_low < noisy.slope);
    CHECK(noisy.slope < noisy.ci_high);
}

TEST_CASE("forward without seeds and without noise runs once") {
    ExperimentConfig c = small(RunKind::forward);
    c.seeds.clear();
    c.noise.enabled = false;
    const fs::path dir = scratch("det");
    const RunManifest m = cmd_forward(c, {dir, 1});
    CHECK(m.exit_code == exit_ok);
    REQUIRE(m.paths.size() == 1);
    CHECK_FALSE(m.paths.front().seed.has_value());
    CHECK(fs::exists(dir / "trajectory_deterministic.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(slurp(dir / "trajectory_deterministic.csv").rfind("t,node,y,x\n", 0) == 0);
    for (const FileRecord& f : m.files) CHECK(f.sha1 == git_blob_sha1(slurp(dir / f.name)));

    c.noise.enabled = true;
    CHECK_THROWS_AS(cmd_forward(c, {scratch("det2"), 1}), ConfigError);
}

TEST_CASE("forward output is independent of the thread count") {
    ExperimentConfig c = small(RunKind::forward);
    c.seeds = parse_seed_range("0..7");
    const fs::path a = scratch("thr1"), b = scratch("thr4");
    cmd_forward(c, {a, 1});
    cmd_forward(c, {b, 4});
    const auto fa = data_files(a), fb = data_files(b);
    CHECK(fa.size() == fb.size());
    CHECK(fa == fb);
    CHECK(fa.count("ensemble_stats.csv") == 1);
    CHECK(fa.count("trajectory_seed7.csv") == 1);
}

TEST_CASE("hundred-seed forward ensemble has no aborts") {
    ExperimentConfig c = small(RunKind::forward);
    c.seeds = parse_seed_range("0..99");
    c.output.trajectories = false;
    const RunManifest m = cmd_forward(c, {scratch("hundred"), 2});
    CHECK(m.paths.size() == 100);
    for (const PathRecord& p : m.paths) CHECK(p.status == "completed");
    CHECK(manifest_to_json(m)["aborted_paths"] == 0);
}

TEST_CASE("aborted paths are reported, not dropped") {
    ExperimentConfig c = small(RunKind::forward);
    c.seeds = {0, 1};
    c.stepper.overflow_guard = 1e-3;
    const RunManifest m = cmd_forward(c, {scratch("abort"), 1});
    REQUIRE(m.paths.size() == 2);
    for (const PathRecord& p : m.paths) CHECK(p.status == "aborted-overflow");
    CHECK(m.exit_code == exit_numeric);
}

TEST_CASE("control command") {
    SUBCASE("beats the uncontrolled baseline") {
        ExperimentConfig c = small(RunKind::control);
        const fs::path dir = scratch("ctl");
        const RunManifest m = cmd_control(c, {dir, 1});
        CHECK(m.summary["cost_final"].get<double>() < m.summary["cost_uncontrolled"].get<double>());
        for (const char* f : {"optimizer_history.csv", "optimizer_report.json", "control_final.csv", "comparison.csv",
                              "control_summary.json"}) {
            CHECK(fs::exists(dir / f));
        }
    }
    SUBCASE("zero weight goes through continuation to bang-bang") {
        ExperimentConfig c = small(RunKind::control);
        c.control.alpha = 0.0;
        const fs::path dir = scratch("bang");
        const RunManifest m = cmd_control(c, {dir, 1});
        CHECK(fs::exists(dir / "bang_bang_control.csv"));
        CHECK(fs::exists(dir / "continuation.csv"));
        CHECK(m.summary.contains("deadband_fraction"));
    }
    SUBCASE("targets on the uncontrolled run stop at iteration zero") {
        ExperimentConfig c = small(RunKind::control);
        c.control.targets_from_uncontrolled = true;
        const RunManifest m = cmd_control(c, {scratch("stay"), 1});
        CHECK(m.summary["iterations"].get<int>() == 0);
        CHECK(m.summary["termination"].get<std::string>() == "converged");
    }
    SUBCASE("ensemble mode uses every seed") {
        ExperimentConfig c = small(RunKind::control);
        c.control.mode = "ensemble";
        c.seeds = {0, 1, 2};
        CHECK(build_control_problem(c).paths.size() == 3);
        c.control.mode = "frozen";
        CHECK(build_control_problem(c).paths.size() == 1);
    }
}

TEST_CASE("flipped adjoint sign is caught by the gradient suite") {
    ExperimentConfig c = small(RunKind::verify);
    c.verify.gradient_directions = 3;
    CHECK(suite_adjoint_gradient(c, 1).passed());
    c.control.flip_adjoint_sign = true;
    CHECK_FALSE(suite_adjoint_gradient(c, 1).passed());
}

TEST_CASE("verify writes a ladder with slope intervals") {
    ExperimentConfig c = small(RunKind::verify);
    c.verify.criteria = {3, 8};
    c.verify.residual_seeds = 10;
    const fs::path dir = scratch("verify");
    const RunManifest m = cmd_verify(c, {dir, 1});
    const auto report = nlohmann::json::parse(slurp(dir / "verify_report.json"));
    bool saw_ci = false;
    for (const auto& s : report["suites"]) {
        for (const auto& [key, value] : s["details"].items()) {
            if (value.is_object() && value.contains("ci95")) saw_ci = true;
        }
    }
    CHECK(saw_ci);
    CHECK(fs::exists(dir / "convergence_ladders.csv"));
    CHECK(slurp(dir / "verify_table.csv").find("criterion") == 0);
    CHECK((m.exit_code == exit_ok || m.exit_code == exit_verification));
}

TEST_CASE("sample-noise command") {
    ExperimentConfig c = small(RunKind::sample_noise);
    c.seeds = {3, 4};
    const fs::path dir = scratch("noise");
    const RunManifest m = cmd_sample_noise(c, {dir, 1});
    CHECK(m.exit_code == exit_ok);
    CHECK(fs::exists(dir / "noise_modes.csv"));
    CHECK(fs::exists(dir / "path_seed3.csv"));
    CHECK(fs::exists(dir / "path_seed4.csv"));
    CHECK(slurp(dir / "path_seed3.csv").rfind("t,mode,beta\n", 0) == 0);
    CHECK_THROWS_AS(cmd_forward(c, {scratch("wrongkind"), 1}), ConfigError);
}
