#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lade/label_space.hpp"
#include "lade/trainer.hpp"

namespace lade::cli {

enum class TargetMode { kTrueShift, kUniform, kCustom };
enum class SweepAxis { kLambda, kAlpha, kMu };

inline TrainConfig default_train_config() {
    TrainConfig config;
    config.loss = LossKind::kLade;
    return config;
}

/// Full description of one experiment. Serialises to a flat key=value file
/// with dotted section keys; unknown keys are hard errors so sweep typos
/// cannot silently fall back to defaults.
struct ExperimentConfig {
    // world
    int world_classes = 10;
    int world_dim = 2;
    double world_spread = 2.5;
    double world_stddev = 1.0;
    std::uint64_t world_seed = 7;
    // source (training) profile
    long long source_n_max = 800;
    double source_mu = 100.0;
    // shifted test grid
    std::vector<ShiftDirection> shift_directions = {ShiftDirection::kForward,
                                                    ShiftDirection::kBackward};
    std::vector<double> shift_mus = {2.0, 10.0, 50.0};
    long long shift_n_per_class = 1000;
    // model
    std::vector<int> model_hidden = {64, 64};
    // optimisation
    TrainConfig train = default_train_config();
    // evaluation target distribution
    TargetMode eval_target = TargetMode::kTrueShift;
    std::vector<double> eval_target_probs;
    // sweep
    SweepAxis sweep_axis = SweepAxis::kAlpha;
    std::vector<double> sweep_grid = {0.0, 0.1};
    // run
    std::string out_dir = "out";
    std::uint64_t run_seed = 1;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Apply one "key=value" override (the --set flag). ConfigError on unknown
/// keys or unparsable values.
void apply_override(ExperimentConfig& config, const std::string& assignment);

/// Every key in a fixed order; parses back to an identical config.
std::string canonical_text(const ExperimentConfig& config);

/// FNV-1a hash of the canonical text minus out.dir, so the same experiment
/// hashes identically wherever its outputs land.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string config_hash_hex(const ExperimentConfig& config);

std::string to_string(ShiftDirection direction);
std::string to_string(TargetMode mode);
std::string to_string(SweepAxis axis);
std::string to_string(LossKind kind);
std::string to_string(LrSchedule schedule);

}  // namespace lade::cli
