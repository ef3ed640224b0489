#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lade/errors.hpp"
#include "lade/version.hpp"
#include "ladelab/config.hpp"
#include "ladelab/experiment.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O.
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Experiment config file")
        ->required();
    cmd->add_option("--out", flags.out_dir, "Output directory (overrides out.dir)");
    cmd->add_option("--set", flags.overrides, "Override a config key (key=value, repeatable)");
    cmd->add_option("--seed", flags.seed, "Override run.seed")
        ->each([&flags](const std::string&) { flags.seed_given = true; });
}

lade::cli::ExperimentConfig resolve_config(const CommonFlags& flags) {
    lade::cli::ExperimentConfig config = lade::cli::load_config(flags.config_path);
    for (const std::string& assignment : flags.overrides) {
        lade::cli::apply_override(config, assignment);
    }
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (flags.seed_given) config.run_seed = flags.seed;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Label-shift classification lab: synthetic long-tailed worlds, "
                 "prior-compensated inference and disentangling losses"};
    app.set_version_flag("--version", std::string(lade::kArtifactVersion));
    app.require_subcommand(1);

    CommonFlags flags;
    std::string action;

    for (const auto& [name, help] :
         std::vector<std::pair<std::string, std::string>>{
             {"gen-data", "Generate train/test datasets and count profiles"},
             {"train", "Train the configured model on the generated data"},
             {"evaluate", "Evaluate inference rules across the shift grid"},
             {"sweep", "Train/evaluate across the configured hyperparameter grid"},
             {"calibrate", "Emit calibration tables on the balanced test pool"}}) {
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common_flags(cmd, flags);
        cmd->callback([&action, name = name]() { action = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return kExitConfig;
    }

    try {
        const lade::cli::ExperimentConfig config = resolve_config(flags);
        if (action == "gen-data") {
            lade::cli::cmd_gen_data(config);
        } else if (action == "train") {
            lade::cli::cmd_train(config);
        } else if (action == "evaluate") {
            lade::cli::cmd_evaluate(config);
        } else if (action == "sweep") {
            lade::cli::cmd_sweep(config);
        } else if (action == "calibrate") {
            lade::cli::cmd_calibrate(config);
        }
        return 0;
    } catch (const lade::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const lade::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        // Config errors and every invalid-parameter shape a config can cause.
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
}
