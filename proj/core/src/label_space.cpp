#include "lade/label_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lade/errors.hpp"
#include "lade/io.hpp"

namespace lade {

namespace {

// Round-half-up, then keep the class alive with at least one sample.
long long round_count(double x) {
    const long long r = static_cast<long long>(std::floor(x + 0.5));
    return std::max<long long>(r, 1);
}

void check_profile_args(int num_classes, long long n, double mu) {
    if (num_classes < 2) throw ParameterError("count profile: need at least 2 classes");
    if (!(mu >= 1.0)) throw ParameterError("count profile: imbalance ratio must be >= 1");
    if (static_cast<double>(n) < mu) {
        throw ParameterError("count profile: base count " + std::to_string(n) +
                             " is below the imbalance ratio; tail would round to zero");
    }
}

}  // namespace

LabelDistribution::LabelDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) throw ParameterError("LabelDistribution: need at least 2 classes");
    double total = 0.0;
    for (double p : probs_) {
        if (!(p > 0.0)) throw DomainError("LabelDistribution: entries must be strictly positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ParameterError("LabelDistribution: entries sum to " + io::format_double(total) +
                             ", expected 1 within 1e-12");
    }
}

LabelDistribution LabelDistribution::uniform(int num_classes) {
    if (num_classes < 2) throw ParameterError("LabelDistribution: need at least 2 classes");
    return LabelDistribution(
        std::vector<double>(static_cast<std::size_t>(num_classes), 1.0 / num_classes));
}

long long CountProfile::total() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
}

double CountProfile::realized_ratio() const {
    long long max_count = 0;
    long long min_count = 0;
    for (long long c : counts) {
        if (c <= 0) continue;
        max_count = std::max(max_count, c);
        min_count = min_count == 0 ? c : std::min(min_count, c);
    }
    if (min_count == 0) throw ParameterError("realized_ratio: profile has no samples");
    return static_cast<double>(max_count) / static_cast<double>(min_count);
}

CountProfile make_longtail(int num_classes, long long n_max, double mu) {
    check_profile_args(num_classes, n_max, mu);
    CountProfile profile;
    profile.imbalance_ratio = mu;
    profile.kind = ProfileKind::kLongtail;
    profile.counts.resize(static_cast<std::size_t>(num_classes));
    profile.counts[0] = n_max;
    for (int j = 1; j < num_classes; ++j) {
        const double expo = -static_cast<double>(j) / (num_classes - 1);
        profile.counts[static_cast<std::size_t>(j)] =
            round_count(static_cast<double>(n_max) * std::pow(mu, expo));
    }
    return profile;
}

CountProfile make_shifted_test(int num_classes, long long n_per_class, double mu,
                               ShiftDirection direction) {
    check_profile_args(num_classes, n_per_class, mu);
    CountProfile profile;
    profile.imbalance_ratio = mu;
    profile.kind =
        direction == ShiftDirection::kForward ? ProfileKind::kForward : ProfileKind::kBackward;
    profile.counts.resize(static_cast<std::size_t>(num_classes));
    for (int j = 0; j < num_classes; ++j) {
        const int steps = direction == ShiftDirection::kForward ? j : num_classes - 1 - j;
        const double expo = -static_cast<double>(steps) / num_classes;
        profile.counts[static_cast<std::size_t>(j)] =
            round_count(static_cast<double>(n_per_class) * std::pow(mu, expo));
    }
    return profile;
}

CountProfile make_uniform_profile(int num_classes, long long n) {
    if (num_classes < 2) throw ParameterError("count profile: need at least 2 classes");
    if (n < 1) throw ParameterError("count profile: need at least 1 sample per class");
    CountProfile profile;
    profile.imbalance_ratio = 1.0;
    profile.kind = ProfileKind::kUniform;
    profile.counts.assign(static_cast<std::size_t>(num_classes), n);
    return profile;
}

LabelDistribution counts_to_distribution(const CountProfile& profile) {
    const long long total = profile.total();
    if (total <= 0) throw ParameterError("counts_to_distribution: profile has no samples");
    std::vector<double> probs(profile.counts.size());
    for (std::size_t j = 0; j < probs.size(); ++j) {
        probs[j] = static_cast<double>(profile.counts[j]) / static_cast<double>(total);
    }
    return LabelDistribution(std::move(probs));
}

std::vector<double> importance_weights(const LabelDistribution& p_u,
                                       const LabelDistribution& p_s) {
    if (p_u.num_classes() != p_s.num_classes()) {
        throw ParameterError("importance_weights: class counts differ: " +
                             std::to_string(p_u.num_classes()) + " vs " +
                             std::to_string(p_s.num_classes()));
    }
    std::vector<double> w(static_cast<std::size_t>(p_u.num_classes()));
    for (int c = 0; c < p_u.num_classes(); ++c) w[static_cast<std::size_t>(c)] = p_u[c] / p_s[c];
    return w;
}

Matrix pc_adjust_logits(const Matrix& logits, const LabelDistribution& from,
                        const LabelDistribution& to) {
    if (from.num_classes() != to.num_classes()) {
        throw ParameterError("pc_adjust_logits: prior class counts differ");
    }
    if (logits.cols != from.num_classes()) {
        throw DimensionError("pc_adjust_logits: logits have " + std::to_string(logits.cols) +
                             " columns for " + std::to_string(from.num_classes()) + " classes");
    }
    std::vector<double> delta(static_cast<std::size_t>(logits.cols));
    for (int c = 0; c < logits.cols; ++c) {
        delta[static_cast<std::size_t>(c)] = std::log(to[c]) - std::log(from[c]);
    }
    Matrix out(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        for (int c = 0; c < logits.cols; ++c) {
            out(i, c) = logits(i, c) + delta[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    if (logits.rows == 0 || logits.cols == 0) {
        throw ParameterError("softmax_rows: empty matrix");
    }
    Matrix out(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        double m = logits(i, 0);
        for (int c = 1; c < logits.cols; ++c) m = std::max(m, logits(i, c));
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) {
            out(i, c) = std::exp(logits(i, c) - m);
            sum += out(i, c);
        }
        for (int c = 0; c < logits.cols; ++c) out(i, c) /= sum;
    }
    return out;
}

Matrix pc_softmax_probs(const Matrix& logits, const LabelDistribution& source,
                        const LabelDistribution& target) {
    return softmax_rows(pc_adjust_logits(logits, source, target));
}

std::string profile_to_csv(const CountProfile& profile) {
    std::ostringstream out;
    out << "class_index,count\n";
    for (int j = 0; j < profile.num_classes(); ++j) {
        out << j << "," << profile.counts[static_cast<std::size_t>(j)] << "\n";
    }
    return out.str();
}

std::vector<long long> profile_counts_from_csv(const std::string& text) {
    const std::vector<std::string> lines = io::csv_lines(text);
    if (lines.empty() || lines[0] != "class_index,count") {
        throw ParameterError("profile CSV: missing 'class_index,count' header");
    }
    std::vector<long long> counts;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = io::split(lines[i], ',');
        if (fields.size() != 2) throw ParameterError("profile CSV: malformed row: " + lines[i]);
        const long long index = io::parse_int(fields[0]);
        if (index != static_cast<long long>(counts.size())) {
            throw ParameterError("profile CSV: class indices must be consecutive from 0");
        }
        counts.push_back(io::parse_int(fields[1]));
    }
    return counts;
}

}  // namespace lade
