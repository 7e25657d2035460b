#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "normopt/experiment.hpp"

namespace {

struct ConfigCommand {
    CLI::App* cmd = nullptr;
    std::string config_path;
    normopt::ExperimentKind kind = normopt::ExperimentKind::Train;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometry-aware optimizer experiments: coordinate checks, stepsize-transfer "
                 "sweeps, training runs, and LMO solver benchmarks. Config files are flat JSON; "
                 "CSV comes out."};
    app.require_subcommand(1);

    std::uint64_t seed_override = 0;
    std::string out_override;
    CLI::Option* seed_opt =
        app.add_option("--seed", seed_override, "Override the config seed (lmo-bench: the seed)");
    app.add_option("--out", out_override, "Override the output CSV path");

    ConfigCommand subs[3];
    const std::pair<const char*, normopt::ExperimentKind> kinds[3] = {
        {"coordcheck", normopt::ExperimentKind::CoordCheck},
        {"transfer", normopt::ExperimentKind::Transfer},
        {"train", normopt::ExperimentKind::Train},
    };
    for (std::size_t i = 0; i < 3; ++i) {
        subs[i].kind = kinds[i].second;
        subs[i].cmd = app.add_subcommand(kinds[i].first);
        subs[i].cmd->add_option("--config", subs[i].config_path, "JSON config file")
            ->required();
        subs[i].cmd->fallthrough();
    }
    subs[0].cmd->description("Per-layer activation scales across widths, with verdicts");
    subs[1].cmd->description("Loss over a (width x lr) grid on the teacher task");
    subs[2].cmd->description("One training run with per-step loss and weight norms");

    CLI::App* bench = app.add_subcommand("lmo-bench", "Newton-Schulz vs exact-SVD polar timing");
    std::vector<std::size_t> bench_sizes = {64, 128, 256};
    std::string bench_out = "lmo_bench.csv";
    bench->add_option("--sizes", bench_sizes, "Square matrix sizes")->delimiter(',');
    bench->add_option("--out", bench_out, "Output CSV path");
    bench->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // --help is a success; every other parse problem is config
    }

    try {
        for (const ConfigCommand& sub : subs) {
            if (!sub.cmd->parsed()) continue;
            normopt::ExperimentConfig cfg = normopt::load_config(sub.config_path);
            if (cfg.experiment != sub.kind)
                throw normopt::ConfigError("config 'experiment' does not match the subcommand");
            if (seed_opt->count() > 0) cfg.seed = seed_override;
            if (!out_override.empty()) cfg.out = out_override;
            normopt::run_experiment(cfg);
            return 0;
        }
        if (bench->parsed()) {
            normopt::LmoBenchConfig cfg;
            cfg.sizes = bench_sizes;
            cfg.out = out_override.empty() ? bench_out : out_override;
            cfg.seed = seed_opt->count() > 0 ? seed_override : 1;
            normopt::run_lmo_bench(cfg);
            return 0;
        }
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const normopt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const normopt::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
