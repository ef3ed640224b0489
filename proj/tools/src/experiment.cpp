#include "ladelab/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>

#include "json.hpp"

#include "lade/errors.hpp"
#include "lade/io.hpp"
#include "lade/losses.hpp"
#include "lade/rng.hpp"
#include "lade/synthetic.hpp"
#include "lade/trainer.hpp"
#include "lade/version.hpp"

namespace lade::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCalibrationBins = 20;

std::string header_comment(const ExperimentConfig& config) {
    return "# config_hash=" + config_hash_hex(config) + " artifact_version=" +
           std::string(kArtifactVersion) + "\n";
}

void write_output(const ExperimentConfig& config, const fs::path& path,
                  const std::string& body) {
    io::atomic_write_file(path, header_comment(config) + body);
}

fs::path out_path(const ExperimentConfig& config, const std::string& name) {
    return fs::path(config.out_dir) / name;
}

void ensure_out_dir(const ExperimentConfig& config) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + config.out_dir + " (" +
                          ec.message() + ")");
}

MixtureWorld world_of(const ExperimentConfig& config) {
    return make_world(config.world_classes, config.world_dim, config.world_spread,
                      config.world_stddev, config.world_seed);
}

CountProfile train_profile_of(const ExperimentConfig& config) {
    return make_longtail(config.world_classes, config.source_n_max, config.source_mu);
}

std::string shift_suffix(ShiftDirection direction, double mu) {
    return to_string(direction) + "_" + io::format_double(mu);
}

Dataset load_dataset(const ExperimentConfig& config, const std::string& name) {
    return dataset_from_csv(io::read_file(out_path(config, name)), config.world_classes);
}

ModelParams load_checkpoint(const ExperimentConfig& config) {
    return checkpoint_from_text(io::read_file(out_path(config, "checkpoint.txt")));
}

std::vector<int> model_dims(const ExperimentConfig& config) {
    std::vector<int> dims;
    dims.push_back(config.world_dim);
    dims.insert(dims.end(), config.model_hidden.begin(), config.model_hidden.end());
    dims.push_back(config.world_classes);
    return dims;
}

TrainConfig train_config_of(const ExperimentConfig& config) {
    TrainConfig tc = config.train;
    tc.seed = rng::derive_seed(config.run_seed, "train");
    return tc;
}

/// Target distribution for one shift point under the configured mode.
LabelDistribution resolve_target(const ExperimentConfig& config,
                                 const CountProfile& point_profile) {
    switch (config.eval_target) {
        case TargetMode::kTrueShift:
            return counts_to_distribution(point_profile);
        case TargetMode::kUniform:
            return LabelDistribution::uniform(config.world_classes);
        case TargetMode::kCustom:
            if (config.eval_target_probs.empty()) {
                throw ConfigError("eval.target=custom requires eval.target_probs");
            }
            return LabelDistribution(config.eval_target_probs);
    }
    return LabelDistribution::uniform(config.world_classes);
}

Matrix method_probs(const std::string& method, const Matrix& logits,
                    const LabelDistribution& source, const LabelDistribution& target) {
    if (method == "softmax") return softmax_rows(logits);
    if (method == "pc_softmax") return pc_softmax_probs(logits, source, target);
    if (method == "lade") return infer_probs(logits, target);
    if (method == "pc_uniform") {
        const LabelDistribution uniform = LabelDistribution::uniform(target.num_classes());
        return softmax_rows(pc_adjust_logits(logits, uniform, target));
    }
    throw ConfigError("unknown inference method: " + method);
}

std::string optional_field(const std::optional<double>& v) {
    return v.has_value() ? io::format_double(*v) : std::string();
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

const std::vector<std::string>& inference_methods() {
    static const std::vector<std::string> methods = {"softmax", "pc_softmax", "lade",
                                                     "pc_uniform"};
    return methods;
}

void cmd_gen_data(const ExperimentConfig& config) {
    ensure_out_dir(config);
    const MixtureWorld world = world_of(config);

    const CountProfile train_profile = train_profile_of(config);
    const Dataset train_set =
        sample(world, train_profile, rng::derive_seed(config.run_seed, "data"));
    write_output(config, out_path(config, "train.csv"), dataset_to_csv(train_set));
    write_output(config, out_path(config, "profile_train.csv"), profile_to_csv(train_profile));

    const CountProfile pool_profile =
        make_uniform_profile(config.world_classes, config.shift_n_per_class);
    const Dataset pool = sample(world, pool_profile, rng::derive_seed(config.run_seed, "pool"));
    write_output(config, out_path(config, "test_pool.csv"), dataset_to_csv(pool));
    write_output(config, out_path(config, "profile_uniform.csv"), profile_to_csv(pool_profile));

    for (ShiftDirection direction : config.shift_directions) {
        for (double mu : config.shift_mus) {
            const CountProfile profile =
                make_shifted_test(config.world_classes, config.shift_n_per_class, mu, direction);
            const std::string suffix = shift_suffix(direction, mu);
            write_output(config, out_path(config, "profile_" + suffix + ".csv"),
                         profile_to_csv(profile));
            write_output(config, out_path(config, "test_" + suffix + ".csv"),
                         dataset_to_csv(take_per_class(pool, profile)));
        }
    }
}

void cmd_train(const ExperimentConfig& config) {
    ensure_out_dir(config);
    const Dataset train_set = load_dataset(config, "train.csv");
    const ModelParams initial =
        init_model(model_dims(config), rng::derive_seed(config.run_seed, "init"));
    const TrainResult result = train(initial, train_set, train_config_of(config));

    write_output(config, out_path(config, "checkpoint.txt"),
                 checkpoint_to_text(result.params));

    std::ostringstream history;
    history << "epoch,mean_loss,train_accuracy\n";
    for (std::size_t e = 0; e < result.history.size(); ++e) {
        history << e << "," << io::format_double(result.history[e].mean_loss) << ","
                << io::format_double(result.history[e].train_accuracy) << "\n";
    }
    write_output(config, out_path(config, "history.csv"), history.str());
}

EvalResult cmd_evaluate(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    ensure_out_dir(config);
    const Dataset train_set = load_dataset(config, "train.csv");
    const Dataset pool = load_dataset(config, "test_pool.csv");
    const ModelParams model = load_checkpoint(config);

    CountProfile train_counts;
    train_counts.counts = train_set.class_counts;
    train_counts.kind = ProfileKind::kLongtail;
    train_counts.imbalance_ratio = config.source_mu;
    const LabelDistribution source = counts_to_distribution(train_counts);

    // Shift grid plus the uniform point.
    struct Point {
        std::string direction;
        double mu;
        CountProfile profile;
    };
    std::vector<Point> points;
    points.push_back({"uniform", 1.0,
                      make_uniform_profile(config.world_classes, config.shift_n_per_class)});
    for (ShiftDirection direction : config.shift_directions) {
        for (double mu : config.shift_mus) {
            points.push_back({to_string(direction), mu,
                              make_shifted_test(config.world_classes, config.shift_n_per_class,
                                                mu, direction)});
        }
    }

    EvalResult result;
    for (const Point& point : points) {
        const Dataset subset = take_per_class(pool, point.profile);
        const Matrix logits = predict_logits(model, subset.features);
        const LabelDistribution target = resolve_target(config, point.profile);
        for (const std::string& method : inference_methods()) {
            const Matrix probs = method_probs(method, logits, source, target);
            const GroupAccuracy groups = group_accuracy(probs, subset.labels, train_counts);
            EvalRow row;
            row.method = method;
            row.direction = point.direction;
            row.mu = point.mu;
            row.top1 = groups.all;
            row.many = groups.many;
            row.medium = groups.medium;
            row.few = groups.few;
            result.rows.push_back(row);
        }
    }

    std::ostringstream table;
    table << "method,shift_direction,shift_mu,top1,many,medium,few\n";
    for (const EvalRow& row : result.rows) {
        table << row.method << "," << row.direction << "," << io::format_double(row.mu) << ","
              << io::format_double(row.top1) << "," << optional_field(row.many) << ","
              << optional_field(row.medium) << "," << optional_field(row.few) << "\n";
    }
    write_output(config, out_path(config, "evaluation.csv"), table.str());

    json record;
    record["config_hash"] = config_hash_hex(config);
    record["artifact_version"] = kArtifactVersion;
    record["run_seed"] = config.run_seed;
    record["rows"] = json::array();
    for (const EvalRow& row : result.rows) {
        json r;
        r["method"] = row.method;
        r["shift_direction"] = row.direction;
        r["shift_mu"] = row.mu;
        r["top1"] = row.top1;
        if (row.many) r["many"] = *row.many;
        if (row.medium) r["medium"] = *row.medium;
        if (row.few) r["few"] = *row.few;
        record["rows"].push_back(r);
    }
    record["wall_clock_seconds"] = seconds_since(start);
    io::atomic_write_file(out_path(config, "record.json"), record.dump(2) + "\n");
    return result;
}

SweepResult cmd_sweep(const ExperimentConfig& config) {
    ensure_out_dir(config);
    const std::string axis = to_string(config.sweep_axis);
    if (config.sweep_grid.empty()) throw ConfigError("sweep.grid is empty");

    SweepResult result;
    for (double value : config.sweep_grid) {
        ExperimentConfig row_config = config;
        switch (config.sweep_axis) {
            case SweepAxis::kLambda: row_config.train.lambda = value; break;
            case SweepAxis::kAlpha: row_config.train.alpha = value; break;
            case SweepAxis::kMu: row_config.source_mu = value; break;
        }
        const std::string row_hash = config_hash_hex(row_config);
        row_config.out_dir =
            (fs::path(config.out_dir) / "sweep_rows" / row_hash).string();

        SweepRow row;
        row.axis = axis;
        row.value = value;
        row.row_hash = row_hash;

        const fs::path record_path = fs::path(row_config.out_dir) / "row.json";
        bool reused = false;
        if (fs::exists(record_path)) {
            const json record = json::parse(io::read_file(record_path));
            if (record.value("config_hash", "") == row_hash) {
                row.final_train_loss = record.at("final_train_loss").get<double>();
                row.top1_uniform = record.at("top1_uniform").get<double>();
                row.skipped = true;
                reused = true;
            }
        }

        if (!reused) {
            cmd_gen_data(row_config);
            cmd_train(row_config);

            const Dataset pool = load_dataset(row_config, "test_pool.csv");
            const ModelParams model = load_checkpoint(row_config);
            const Matrix logits = predict_logits(model, pool.features);
            // Loss-matched inference: prior-aware losses evaluate through the
            // uniform-target rule, plain CE through the plain softmax.
            const Matrix probs =
                row_config.train.loss == LossKind::kCrossEntropy
                    ? softmax_rows(logits)
                    : infer_probs(logits,
                                  LabelDistribution::uniform(row_config.world_classes));
            row.top1_uniform = top1_accuracy(probs, pool.labels);

            const auto history_lines =
                io::csv_lines(io::read_file(out_path(row_config, "history.csv")));
            const auto last = io::split(history_lines.back(), ',');
            row.final_train_loss = io::parse_double(last.at(1));

            json record;
            record["config_hash"] = row_hash;
            record["artifact_version"] = kArtifactVersion;
            record["axis"] = axis;
            record["value"] = value;
            record["final_train_loss"] = row.final_train_loss;
            record["top1_uniform"] = row.top1_uniform;
            io::atomic_write_file(record_path, record.dump(2) + "\n");
        }
        result.rows.push_back(row);
    }

    std::ostringstream table;
    table << "axis,value,config_hash,final_train_loss,top1_uniform\n";
    for (const SweepRow& row : result.rows) {
        table << row.axis << "," << io::format_double(row.value) << "," << row.row_hash << ","
              << io::format_double(row.final_train_loss) << ","
              << io::format_double(row.top1_uniform) << "\n";
    }
    write_output(config, out_path(config, "sweep_" + axis + ".csv"), table.str());
    return result;
}

CalibrateResult cmd_calibrate(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    ensure_out_dir(config);
    const Dataset train_set = load_dataset(config, "train.csv");
    const Dataset pool = load_dataset(config, "test_pool.csv");
    const ModelParams model = load_checkpoint(config);

    CountProfile train_counts;
    train_counts.counts = train_set.class_counts;
    const LabelDistribution source = counts_to_distribution(train_counts);
    // The pool is balanced, so the true-shift target here is uniform.
    const LabelDistribution target = config.eval_target == TargetMode::kCustom
                                         ? LabelDistribution(config.eval_target_probs)
                                         : LabelDistribution::uniform(config.world_classes);

    const Matrix logits = predict_logits(model, pool.features);

    CalibrateResult result;
    std::ostringstream scalars;
    scalars << "method,accuracy,ece,classwise_ece,brier,nll\n";
    for (const std::string& method : inference_methods()) {
        const Matrix probs = method_probs(method, logits, source, target);
        const CalibrationReport report = calibration_report(probs, pool.labels, kCalibrationBins);
        const double accuracy = top1_accuracy(probs, pool.labels);
        result.reports.emplace(method, report);
        result.accuracy.emplace(method, accuracy);

        scalars << method << "," << io::format_double(accuracy) << ","
                << io::format_double(report.ece) << "," << io::format_double(report.classwise_ece)
                << "," << io::format_double(report.brier) << "," << io::format_double(report.nll)
                << "\n";

        write_output(config, out_path(config, "reliability_" + method + ".csv"),
                     reliability_csv(report.bins));
        const std::vector<double> avg = avg_prob_per_class(probs);
        write_output(config, out_path(config, "avg_prob_" + method + ".csv"), avg_prob_csv(avg));
    }
    write_output(config, out_path(config, "calibration_scalars.csv"), scalars.str());

    // Logit statistics do not depend on the inference rule; one table.
    const std::vector<ClassLogitStats> stats = logit_stats_per_class(logits, pool.labels);
    write_output(config, out_path(config, "logit_stats.csv"), logit_stats_csv(stats));

    json record;
    record["config_hash"] = config_hash_hex(config);
    record["artifact_version"] = kArtifactVersion;
    record["run_seed"] = config.run_seed;
    for (const auto& [method, report] : result.reports) {
        json r;
        r["accuracy"] = result.accuracy.at(method);
        r["ece"] = report.ece;
        r["classwise_ece"] = report.classwise_ece;
        r["brier"] = report.brier;
        r["nll"] = report.nll;
        record["calibration"][method] = r;
    }
    record["wall_clock_seconds"] = seconds_since(start);
    io::atomic_write_file(out_path(config, "calibration_record.json"), record.dump(2) + "\n");
    return result;
}

}  // namespace lade::cli
