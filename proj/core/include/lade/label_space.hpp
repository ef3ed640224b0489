#pragma once

#include <string>
#include <vector>

#include "lade/matrix.hpp"

namespace lade {

/// Strictly positive probability vector over C >= 2 classes.
/// Entries must sum to 1 within 1e-12. A class that should be "absent" is
/// represented by an explicit epsilon (e.g. 1e-12), never by zero, so that
/// log-probabilities stay finite.
class LabelDistribution {
 public:
    explicit LabelDistribution(std::vector<double> probs);
    static LabelDistribution uniform(int num_classes);

    int num_classes() const { return static_cast<int>(probs_.size()); }
    double operator[](int c) const { return probs_[static_cast<std::size_t>(c)]; }
    const std::vector<double>& probs() const { return probs_; }

    bool operator==(const LabelDistribution& other) const = default;

 private:
    std::vector<double> probs_;
};

enum class ProfileKind { kLongtail, kForward, kBackward, kUniform };
enum class ShiftDirection { kForward, kBackward };

/// Per-class sample counts plus the imbalance ratio they were built from.
struct CountProfile {
    std::vector<long long> counts;
    double imbalance_ratio = 1.0;
    ProfileKind kind = ProfileKind::kUniform;

    int num_classes() const { return static_cast<int>(counts.size()); }
    long long total() const;
    /// max(count) / min(nonzero count) as realised after rounding.
    double realized_ratio() const;
};

/// Exponential long-tail profile: counts[j] = round(n_max * mu^(-j/(C-1))),
/// clamped to at least one sample, so the endpoint ratio is exactly mu before
/// rounding. Class 0 keeps exactly n_max samples.
CountProfile make_longtail(int num_classes, long long n_max, double mu);

/// Shifted test profile over classes sorted by descending training count.
/// Forward keeps the head-heavy order, counts[j] = round(n * mu^(-j/C));
/// Backward flips it, counts[j] = round(n * mu^(-(C-1-j)/C)). Rounding is
/// half-up with a floor of one sample.
CountProfile make_shifted_test(int num_classes, long long n_per_class, double mu,
                               ShiftDirection direction);

/// Balanced profile with n samples per class.
CountProfile make_uniform_profile(int num_classes, long long n);

LabelDistribution counts_to_distribution(const CountProfile& profile);

/// Importance weights w[c] = p_u(c) / p_s(c) for estimating expectations
/// under p_u from samples drawn under p_s.
std::vector<double> importance_weights(const LabelDistribution& p_u,
                                       const LabelDistribution& p_s);

/// Post-compensation: out[i][c] = logits[i][c] - log from(c) + log to(c).
/// Swaps the label prior baked into trained logits for another one.
Matrix pc_adjust_logits(const Matrix& logits, const LabelDistribution& from,
                        const LabelDistribution& to);

/// Row softmax of pc_adjust_logits(logits, source, target), stabilised by max
/// shift. Estimates the target-prior posterior from source-trained logits.
Matrix pc_softmax_probs(const Matrix& logits, const LabelDistribution& source,
                        const LabelDistribution& target);

/// Plain row softmax (max-shift stabilised); the identity-prior case.
Matrix softmax_rows(const Matrix& logits);

/// CSV with header "class_index,count".
std::string profile_to_csv(const CountProfile& profile);
std::vector<long long> profile_counts_from_csv(const std::string& text);

}  // namespace lade
