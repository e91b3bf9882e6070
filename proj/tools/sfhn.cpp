// Command-line front end: sfhn <forward|control|verify|sample-noise> --config PATH [options]
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sfhn/errors.hpp"
#include "sfhn/harness/commands.hpp"
#include "sfhn/harness/config.hpp"
#include "sfhn/version.hpp"

using namespace sfhn;
using namespace sfhn::harness;

int main(int argc, char** argv) {
    CLI::App app{"Stochastic FitzHugh-Nagumo simulation and control"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds;
    unsigned threads = 1;
    for (const char* verb : {"forward", "control", "verify", "sample-noise"}) {
        CLI::App* sub = app.add_subcommand(verb);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (default: output.directory from the config)");
        sub->add_option("--seeds", seeds, "seed override, 'a..b' inclusive or a single seed");
        sub->add_option("--threads", threads, "worker threads; affects wall time only")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    const std::string verb = app.get_subcommands().front()->get_name();

    try {
        ExperimentConfig config = load_config(config_path);
        const RunKind kind = run_kind_from_string(verb);
        if (config.kind != kind) {
            std::cerr << "note: config kind '" << to_string(config.kind) << "' overridden by verb '" << verb << "'\n";
            config.kind = kind;
        }
        if (!seeds.empty()) config.seeds = parse_seed_range(seeds);
        RunOptions options;
        options.out = out_dir.empty() ? config.output.directory : out_dir;
        options.threads = threads;
        const RunManifest m = run_experiment(config, options);
        std::cout << manifest_to_json(m)["summary"].dump(2) << "\n";
        std::cout << "manifest: " << (options.out / "manifest.json").string() << "\n";
        return m.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << " (residual " << e.residual() << ")\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
}
