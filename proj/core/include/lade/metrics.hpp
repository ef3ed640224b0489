#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lade/label_space.hpp"
#include "lade/matrix.hpp"

namespace lade {

/// One confidence bin of a reliability diagram. Bin m (1-based) covers
/// ((m-1)/M, m/M]; a confidence of exactly 0 falls into bin 1. Empty bins
/// report zero accuracy and confidence and contribute nothing to the error.
struct BinStats {
    long long count = 0;
    double accuracy = 0.0;
    double confidence = 0.0;
};

struct CalibrationReport {
    int num_bins = 0;
    std::vector<BinStats> bins;
    double ece = 0.0;
    double classwise_ece = 0.0;
    double brier = 0.0;
    double nll = 0.0;
};

/// Fraction of rows whose argmax equals the label; argmax ties break to the
/// lowest class index.
double top1_accuracy(const Matrix& probs, std::span<const int> labels);

/// Per-group accuracy, with classes grouped by their training count:
/// many > 100, medium in [20, 100], few < 20. Groups with no classes are
/// reported absent rather than zero.
struct GroupAccuracy {
    std::optional<double> many;
    std::optional<double> medium;
    std::optional<double> few;
    double all = 0.0;
};
GroupAccuracy group_accuracy(const Matrix& probs, std::span<const int> labels,
                             const CountProfile& train_counts);

/// Reliability table over num_bins confidence bins, where confidence is the
/// max-class probability. ece() recomposes from this table bit-exactly.
std::vector<BinStats> reliability_bins(const Matrix& probs, std::span<const int> labels,
                                       int num_bins);

/// (1/N) sum_m |B_m| * |acc(B_m) - conf(B_m)|.
double ece(const Matrix& probs, std::span<const int> labels, int num_bins);

/// Classwise variant: for each class j every sample is binned by its class-j
/// probability, accuracy is the indicator of label == j, per-class bin sums
/// are divided by N, and the class terms are averaged over C.
double classwise_ece(const Matrix& probs, std::span<const int> labels, int num_bins);

/// Mean over samples of sum_c (p(c|x_i) - 1[y_i = c])^2. The per-sample mean
/// makes values comparable across dataset sizes; the summed form is mean * N.
double brier(const Matrix& probs, std::span<const int> labels);

/// Mean over samples of -log p(y_i | x_i); DomainError if any true-class
/// probability is zero (clamp explicitly at the call site if needed).
double nll(const Matrix& probs, std::span<const int> labels);

CalibrationReport calibration_report(const Matrix& probs, std::span<const int> labels,
                                     int num_bins);

/// Columnwise mean of a probability matrix; sums to 1.
std::vector<double> avg_prob_per_class(const Matrix& probs);

/// Per-class mean/variance of the class-c logit, split into positive samples
/// (label == c) and negative samples (label != c). Variances are population
/// variances. Sides with no samples are reported absent.
struct ClassLogitStats {
    std::optional<double> pos_mean;
    std::optional<double> pos_var;
    std::optional<double> neg_mean;
    std::optional<double> neg_var;
};
std::vector<ClassLogitStats> logit_stats_per_class(const Matrix& logits,
                                                   std::span<const int> labels);

/// CSV with header "bin,count,acc,conf".
std::string reliability_csv(std::span<const BinStats> bins);
/// CSV with header "class,pos_mean,pos_var,neg_mean,neg_var"; absent stats
/// serialise as empty fields.
std::string logit_stats_csv(std::span<const ClassLogitStats> stats);
/// CSV with header "class,avg_prob".
std::string avg_prob_csv(std::span<const double> avg_probs);

}  // namespace lade
