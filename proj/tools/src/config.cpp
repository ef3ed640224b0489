#include "ladelab/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "lade/errors.hpp"
#include "lade/io.hpp"

namespace lade::cli {

namespace {

std::uint64_t parse_u64(const std::string& text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("not an unsigned integer: '" + text + "'");
    }
    return v;
}

int parse_i(const std::string& text) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("not an integer: '" + text + "'");
    }
    return v;
}

long long parse_ll(const std::string& text) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("not an integer: '" + text + "'");
    }
    return v;
}

double parse_d(const std::string& text) {
    try {
        return io::parse_double(text);
    } catch (const ParameterError&) {
        throw ConfigError("not a number: '" + text + "'");
    }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, T (*one)(const std::string&)) {
    std::vector<T> out;
    if (text.empty()) return out;
    for (const std::string& field : io::split(text, ',')) out.push_back(one(field));
    return out;
}

template <typename T>
std::string join_list(const std::vector<T>& values,
                      const std::function<std::string(const T&)>& one) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += one(values[i]);
    }
    return out;
}

ShiftDirection parse_direction(const std::string& text) {
    if (text == "forward") return ShiftDirection::kForward;
    if (text == "backward") return ShiftDirection::kBackward;
    throw ConfigError("unknown shift direction: '" + text + "'");
}

LossKind parse_loss_kind(const std::string& text) {
    if (text == "ce") return LossKind::kCrossEntropy;
    if (text == "lade-ce") return LossKind::kLadeCe;
    if (text == "lade") return LossKind::kLade;
    throw ConfigError("unknown loss kind: '" + text + "'");
}

LrSchedule parse_schedule(const std::string& text) {
    if (text == "constant") return LrSchedule::kConstant;
    if (text == "cosine") return LrSchedule::kCosine;
    if (text == "step") return LrSchedule::kStep;
    throw ConfigError("unknown schedule: '" + text + "'");
}

TargetMode parse_target_mode(const std::string& text) {
    if (text == "true-shift") return TargetMode::kTrueShift;
    if (text == "uniform") return TargetMode::kUniform;
    if (text == "custom") return TargetMode::kCustom;
    throw ConfigError("unknown eval target mode: '" + text + "'");
}

SweepAxis parse_axis(const std::string& text) {
    if (text == "lambda") return SweepAxis::kLambda;
    if (text == "alpha") return SweepAxis::kAlpha;
    if (text == "mu") return SweepAxis::kMu;
    throw ConfigError("unknown sweep axis: '" + text + "'");
}

// Ordered key table: one setter and one getter per key. The order defines
// the canonical serialisation.
struct KeyEntry {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyEntry>& key_table() {
    static const std::vector<KeyEntry> table = {
        {"world.classes", [](ExperimentConfig& c, const std::string& v) { c.world_classes = parse_i(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.world_classes); }},
        {"world.dim", [](ExperimentConfig& c, const std::string& v) { c.world_dim = parse_i(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.world_dim); }},
        {"world.spread", [](ExperimentConfig& c, const std::string& v) { c.world_spread = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.world_spread); }},
        {"world.stddev", [](ExperimentConfig& c, const std::string& v) { c.world_stddev = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.world_stddev); }},
        {"world.seed", [](ExperimentConfig& c, const std::string& v) { c.world_seed = parse_u64(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.world_seed); }},
        {"source.n_max", [](ExperimentConfig& c, const std::string& v) { c.source_n_max = parse_ll(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.source_n_max); }},
        {"source.mu", [](ExperimentConfig& c, const std::string& v) { c.source_mu = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.source_mu); }},
        {"shift.directions",
         [](ExperimentConfig& c, const std::string& v) { c.shift_directions = parse_list(v, parse_direction); },
         [](const ExperimentConfig& c) {
             return join_list<ShiftDirection>(c.shift_directions,
                                              [](const ShiftDirection& d) { return to_string(d); });
         }},
        {"shift.mu_list",
         [](ExperimentConfig& c, const std::string& v) { c.shift_mus = parse_list(v, parse_d); },
         [](const ExperimentConfig& c) {
             return join_list<double>(c.shift_mus, [](const double& d) { return io::format_double(d); });
         }},
        {"shift.n_per_class",
         [](ExperimentConfig& c, const std::string& v) { c.shift_n_per_class = parse_ll(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.shift_n_per_class); }},
        {"model.hidden",
         [](ExperimentConfig& c, const std::string& v) { c.model_hidden = parse_list(v, parse_i); },
         [](const ExperimentConfig& c) {
             return join_list<int>(c.model_hidden, [](const int& d) { return std::to_string(d); });
         }},
        {"train.epochs", [](ExperimentConfig& c, const std::string& v) { c.train.epochs = parse_i(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.train.epochs); }},
        {"train.batch_size",
         [](ExperimentConfig& c, const std::string& v) { c.train.batch_size = parse_i(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.train.batch_size); }},
        {"train.lr", [](ExperimentConfig& c, const std::string& v) { c.train.lr = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.train.lr); }},
        {"train.momentum",
         [](ExperimentConfig& c, const std::string& v) { c.train.momentum = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.train.momentum); }},
        {"train.weight_decay",
         [](ExperimentConfig& c, const std::string& v) { c.train.weight_decay = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.train.weight_decay); }},
        {"train.schedule",
         [](ExperimentConfig& c, const std::string& v) { c.train.schedule = parse_schedule(v); },
         [](const ExperimentConfig& c) { return to_string(c.train.schedule); }},
        {"train.milestones",
         [](ExperimentConfig& c, const std::string& v) { c.train.milestones = parse_list(v, parse_i); },
         [](const ExperimentConfig& c) {
             return join_list<int>(c.train.milestones, [](const int& d) { return std::to_string(d); });
         }},
        {"train.step_factor",
         [](ExperimentConfig& c, const std::string& v) { c.train.step_factor = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.train.step_factor); }},
        {"loss.kind", [](ExperimentConfig& c, const std::string& v) { c.train.loss = parse_loss_kind(v); },
         [](const ExperimentConfig& c) { return to_string(c.train.loss); }},
        {"loss.lambda", [](ExperimentConfig& c, const std::string& v) { c.train.lambda = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.train.lambda); }},
        {"loss.alpha", [](ExperimentConfig& c, const std::string& v) { c.train.alpha = parse_d(v); },
         [](const ExperimentConfig& c) { return io::format_double(c.train.alpha); }},
        {"eval.target",
         [](ExperimentConfig& c, const std::string& v) { c.eval_target = parse_target_mode(v); },
         [](const ExperimentConfig& c) { return to_string(c.eval_target); }},
        {"eval.target_probs",
         [](ExperimentConfig& c, const std::string& v) { c.eval_target_probs = parse_list(v, parse_d); },
         [](const ExperimentConfig& c) {
             return join_list<double>(c.eval_target_probs,
                                      [](const double& d) { return io::format_double(d); });
         }},
        {"sweep.axis", [](ExperimentConfig& c, const std::string& v) { c.sweep_axis = parse_axis(v); },
         [](const ExperimentConfig& c) { return to_string(c.sweep_axis); }},
        {"sweep.grid",
         [](ExperimentConfig& c, const std::string& v) { c.sweep_grid = parse_list(v, parse_d); },
         [](const ExperimentConfig& c) {
             return join_list<double>(c.sweep_grid, [](const double& d) { return io::format_double(d); });
         }},
        {"out.dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
         [](const ExperimentConfig& c) { return c.out_dir; }},
        {"run.seed", [](ExperimentConfig& c, const std::string& v) { c.run_seed = parse_u64(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.run_seed); }},
    };
    return table;
}

const KeyEntry& find_key(const std::string& key) {
    for (const KeyEntry& entry : key_table()) {
        if (key == entry.key) return entry;
    }
    throw ConfigError("unknown config key: '" + key + "'");
}

}  // namespace

std::string to_string(ShiftDirection direction) {
    return direction == ShiftDirection::kForward ? "forward" : "backward";
}

std::string to_string(TargetMode mode) {
    switch (mode) {
        case TargetMode::kTrueShift: return "true-shift";
        case TargetMode::kUniform: return "uniform";
        case TargetMode::kCustom: return "custom";
    }
    return "true-shift";
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::kLambda: return "lambda";
        case SweepAxis::kAlpha: return "alpha";
        case SweepAxis::kMu: return "mu";
    }
    return "alpha";
}

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::kCrossEntropy: return "ce";
        case LossKind::kLadeCe: return "lade-ce";
        case LossKind::kLade: return "lade";
    }
    return "ce";
}

std::string to_string(LrSchedule schedule) {
    switch (schedule) {
        case LrSchedule::kConstant: return "constant";
        case LrSchedule::kCosine: return "cosine";
        case LrSchedule::kStep: return "step";
    }
    return "cosine";
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // strip whitespace
        const std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const std::size_t last = line.find_last_not_of(" \t");
        line = line.substr(first, last - first + 1);
        if (line.empty() || line.front() == '#') continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_number) +
                              ": expected key=value, got '" + line + "'");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.erase(0, 1);
        find_key(key).set(config, value);
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config_text(io::read_file(path));
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    }
    find_key(assignment.substr(0, eq)).set(config, assignment.substr(eq + 1));
}

std::string canonical_text(const ExperimentConfig& config) {
    std::ostringstream out;
    for (const KeyEntry& entry : key_table()) {
        out << entry.key << "=" << entry.get(config) << "\n";
    }
    return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    std::ostringstream out;
    for (const KeyEntry& entry : key_table()) {
        if (std::string_view(entry.key) == "out.dir") continue;
        out << entry.key << "=" << entry.get(config) << "\n";
    }
    return io::fnv1a64(out.str());
}

std::string config_hash_hex(const ExperimentConfig& config) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(config)));
    return buf;
}

}  // namespace lade::cli
