#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lade/metrics.hpp"
#include "ladelab/config.hpp"

namespace lade::cli {

/// One line of the evaluation table (method x shift point).
struct EvalRow {
    std::string method;     // softmax | pc_softmax | lade | pc_uniform
    std::string direction;  // forward | backward | uniform
    double mu = 1.0;
    double top1 = 0.0;
    std::optional<double> many;
    std::optional<double> medium;
    std::optional<double> few;
};

struct EvalResult {
    std::vector<EvalRow> rows;
};

struct SweepRow {
    std::string axis;
    double value = 0.0;
    std::string row_hash;
    double final_train_loss = 0.0;
    double top1_uniform = 0.0;
    bool skipped = false;  // satisfied from an existing row record
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

struct CalibrateResult {
    std::map<std::string, CalibrationReport> reports;  // by method
    std::map<std::string, double> accuracy;
};

/// Write train/test datasets and every count profile under out.dir.
void cmd_gen_data(const ExperimentConfig& config);

/// Train per the config's loss selection; writes checkpoint.txt, history.csv.
void cmd_train(const ExperimentConfig& config);

/// Evaluate four inference rules on every shift point plus the uniform one;
/// writes evaluation.csv and record.json.
EvalResult cmd_evaluate(const ExperimentConfig& config);

/// Train/evaluate across the configured axis grid; one row per grid point,
/// resumable by per-row config hash. Writes sweep_<axis>.csv.
SweepResult cmd_sweep(const ExperimentConfig& config);

/// Calibration tables for each inference rule on the balanced test pool;
/// writes calibration_scalars.csv plus per-method bin/probability tables.
CalibrateResult cmd_calibrate(const ExperimentConfig& config);

/// Names of the four inference rules in table order.
const std::vector<std::string>& inference_methods();

}  // namespace lade::cli
