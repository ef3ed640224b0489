#include "lade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "lade/errors.hpp"
#include "lade/io.hpp"

namespace lade {

namespace {

void check_inputs(const Matrix& probs, std::span<const int> labels) {
    if (probs.rows == 0 || probs.cols == 0) throw ParameterError("metrics: empty input");
    if (static_cast<int>(labels.size()) != probs.rows) {
        throw DimensionError("metrics: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(probs.rows) + " rows");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= probs.cols) {
            throw IndexError("metrics: label " + std::to_string(labels[i]) +
                             " out of range for " + std::to_string(probs.cols) +
                             " classes at row " + std::to_string(i));
        }
    }
}

int argmax_row(const Matrix& probs, int i) {
    int best = 0;
    for (int c = 1; c < probs.cols; ++c) {
        if (probs(i, c) > probs(i, best)) best = c;
    }
    return best;
}

// 1-based bin of a probability under the ((m-1)/M, m/M] rule.
int bin_of(double p, int num_bins) {
    const int b = static_cast<int>(std::ceil(p * num_bins));
    return std::clamp(b, 1, num_bins);
}

}  // namespace

double top1_accuracy(const Matrix& probs, std::span<const int> labels) {
    check_inputs(probs, labels);
    long long correct = 0;
    for (int i = 0; i < probs.rows; ++i) {
        if (argmax_row(probs, i) == labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(probs.rows);
}

GroupAccuracy group_accuracy(const Matrix& probs, std::span<const int> labels,
                             const CountProfile& train_counts) {
    check_inputs(probs, labels);
    if (train_counts.num_classes() != probs.cols) {
        throw DimensionError("group_accuracy: profile covers " +
                             std::to_string(train_counts.num_classes()) + " classes, probs " +
                             std::to_string(probs.cols));
    }

    enum Group { kMany = 0, kMedium = 1, kFew = 2 };
    std::vector<int> group_of(static_cast<std::size_t>(probs.cols));
    for (int c = 0; c < probs.cols; ++c) {
        const long long n = train_counts.counts[static_cast<std::size_t>(c)];
        group_of[static_cast<std::size_t>(c)] = n > 100 ? kMany : (n >= 20 ? kMedium : kFew);
    }

    long long hit[3] = {0, 0, 0};
    long long seen[3] = {0, 0, 0};
    long long correct = 0;
    for (int i = 0; i < probs.rows; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        const int g = group_of[static_cast<std::size_t>(label)];
        const bool ok = argmax_row(probs, i) == label;
        ++seen[g];
        if (ok) {
            ++hit[g];
            ++correct;
        }
    }

    GroupAccuracy out;
    auto ratio = [](long long h, long long s) -> std::optional<double> {
        if (s == 0) return std::nullopt;
        return static_cast<double>(h) / static_cast<double>(s);
    };
    out.many = ratio(hit[kMany], seen[kMany]);
    out.medium = ratio(hit[kMedium], seen[kMedium]);
    out.few = ratio(hit[kFew], seen[kFew]);
    out.all = static_cast<double>(correct) / static_cast<double>(probs.rows);
    return out;
}

std::vector<BinStats> reliability_bins(const Matrix& probs, std::span<const int> labels,
                                       int num_bins) {
    check_inputs(probs, labels);
    if (num_bins < 1) throw ParameterError("reliability_bins: need at least one bin");

    std::vector<long long> count(static_cast<std::size_t>(num_bins), 0);
    std::vector<long long> correct(static_cast<std::size_t>(num_bins), 0);
    std::vector<double> conf_sum(static_cast<std::size_t>(num_bins), 0.0);
    for (int i = 0; i < probs.rows; ++i) {
        const int pred = argmax_row(probs, i);
        const double conf = probs(i, pred);
        const std::size_t b = static_cast<std::size_t>(bin_of(conf, num_bins) - 1);
        ++count[b];
        if (pred == labels[static_cast<std::size_t>(i)]) ++correct[b];
        conf_sum[b] += conf;
    }

    std::vector<BinStats> bins(static_cast<std::size_t>(num_bins));
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bins[b].count = count[b];
        if (count[b] > 0) {
            bins[b].accuracy = static_cast<double>(correct[b]) / static_cast<double>(count[b]);
            bins[b].confidence = conf_sum[b] / static_cast<double>(count[b]);
        }
    }
    return bins;
}

double ece(const Matrix& probs, std::span<const int> labels, int num_bins) {
    const std::vector<BinStats> bins = reliability_bins(probs, labels, num_bins);
    double total = 0.0;
    for (const BinStats& bin : bins) {
        total += static_cast<double>(bin.count) * std::abs(bin.accuracy - bin.confidence);
    }
    return total / static_cast<double>(probs.rows);
}

double classwise_ece(const Matrix& probs, std::span<const int> labels, int num_bins) {
    check_inputs(probs, labels);
    if (num_bins < 1) throw ParameterError("classwise_ece: need at least one bin");
    if (probs.cols < 2) throw ParameterError("classwise_ece: need at least 2 classes");

    // Normalisation: each class term divides its bin sums by N, and the class
    // terms are averaged over C.
    const double n = static_cast<double>(probs.rows);
    double total = 0.0;
    for (int j = 0; j < probs.cols; ++j) {
        std::vector<long long> count(static_cast<std::size_t>(num_bins), 0);
        std::vector<long long> hits(static_cast<std::size_t>(num_bins), 0);
        std::vector<double> conf_sum(static_cast<std::size_t>(num_bins), 0.0);
        for (int i = 0; i < probs.rows; ++i) {
            const double p = probs(i, j);
            const std::size_t b = static_cast<std::size_t>(bin_of(p, num_bins) - 1);
            ++count[b];
            if (labels[static_cast<std::size_t>(i)] == j) ++hits[b];
            conf_sum[b] += p;
        }
        double class_term = 0.0;
        for (std::size_t b = 0; b < count.size(); ++b) {
            if (count[b] == 0) continue;
            const double acc = static_cast<double>(hits[b]) / static_cast<double>(count[b]);
            const double conf = conf_sum[b] / static_cast<double>(count[b]);
            class_term += static_cast<double>(count[b]) * std::abs(acc - conf);
        }
        total += class_term / n;
    }
    return total / static_cast<double>(probs.cols);
}

double brier(const Matrix& probs, std::span<const int> labels) {
    check_inputs(probs, labels);
    double total = 0.0;
    for (int i = 0; i < probs.rows; ++i) {
        double sample = 0.0;
        for (int c = 0; c < probs.cols; ++c) {
            const double target = labels[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0;
            const double diff = probs(i, c) - target;
            sample += diff * diff;
        }
        total += sample;
    }
    return total / static_cast<double>(probs.rows);
}

double nll(const Matrix& probs, std::span<const int> labels) {
    check_inputs(probs, labels);
    double total = 0.0;
    for (int i = 0; i < probs.rows; ++i) {
        const double p = probs(i, labels[static_cast<std::size_t>(i)]);
        if (!(p > 0.0)) {
            throw DomainError("nll: zero true-class probability at row " + std::to_string(i));
        }
        total += -std::log(p);
    }
    return total / static_cast<double>(probs.rows);
}

CalibrationReport calibration_report(const Matrix& probs, std::span<const int> labels,
                                     int num_bins) {
    CalibrationReport report;
    report.num_bins = num_bins;
    report.bins = reliability_bins(probs, labels, num_bins);
    report.ece = ece(probs, labels, num_bins);
    report.classwise_ece = classwise_ece(probs, labels, num_bins);
    report.brier = brier(probs, labels);
    report.nll = nll(probs, labels);
    return report;
}

std::vector<double> avg_prob_per_class(const Matrix& probs) {
    if (probs.rows == 0 || probs.cols == 0) throw ParameterError("avg_prob_per_class: empty input");
    std::vector<double> out(static_cast<std::size_t>(probs.cols), 0.0);
    for (int i = 0; i < probs.rows; ++i) {
        for (int c = 0; c < probs.cols; ++c) out[static_cast<std::size_t>(c)] += probs(i, c);
    }
    for (double& v : out) v /= static_cast<double>(probs.rows);
    return out;
}

std::vector<ClassLogitStats> logit_stats_per_class(const Matrix& logits,
                                                   std::span<const int> labels) {
    check_inputs(logits, labels);
    std::vector<ClassLogitStats> out(static_cast<std::size_t>(logits.cols));
    for (int c = 0; c < logits.cols; ++c) {
        double pos_sum = 0.0, pos_sq = 0.0, neg_sum = 0.0, neg_sq = 0.0;
        long long pos_n = 0, neg_n = 0;
        for (int i = 0; i < logits.rows; ++i) {
            const double v = logits(i, c);
            if (labels[static_cast<std::size_t>(i)] == c) {
                pos_sum += v;
                pos_sq += v * v;
                ++pos_n;
            } else {
                neg_sum += v;
                neg_sq += v * v;
                ++neg_n;
            }
        }
        ClassLogitStats& s = out[static_cast<std::size_t>(c)];
        if (pos_n > 0) {
            const double m = pos_sum / static_cast<double>(pos_n);
            s.pos_mean = m;
            s.pos_var = pos_sq / static_cast<double>(pos_n) - m * m;
        }
        if (neg_n > 0) {
            const double m = neg_sum / static_cast<double>(neg_n);
            s.neg_mean = m;
            s.neg_var = neg_sq / static_cast<double>(neg_n) - m * m;
        }
    }
    return out;
}

std::string reliability_csv(std::span<const BinStats> bins) {
    std::ostringstream out;
    out << "bin,count,acc,conf\n";
    for (std::size_t b = 0; b < bins.size(); ++b) {
        out << (b + 1) << "," << bins[b].count << "," << io::format_double(bins[b].accuracy)
            << "," << io::format_double(bins[b].confidence) << "\n";
    }
    return out.str();
}

std::string logit_stats_csv(std::span<const ClassLogitStats> stats) {
    std::ostringstream out;
    out << "class,pos_mean,pos_var,neg_mean,neg_var\n";
    auto field = [](const std::optional<double>& v) {
        return v.has_value() ? io::format_double(*v) : std::string();
    };
    for (std::size_t c = 0; c < stats.size(); ++c) {
        out << c << "," << field(stats[c].pos_mean) << "," << field(stats[c].pos_var) << ","
            << field(stats[c].neg_mean) << "," << field(stats[c].neg_var) << "\n";
    }
    return out.str();
}

std::string avg_prob_csv(std::span<const double> avg_probs) {
    std::ostringstream out;
    out << "class,avg_prob\n";
    for (std::size_t c = 0; c < avg_probs.size(); ++c) {
        out << c << "," << io::format_double(avg_probs[c]) << "\n";
    }
    return out.str();
}

}  // namespace lade
