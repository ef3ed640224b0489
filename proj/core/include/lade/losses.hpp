#pragma once

#include <map>
#include <span>
#include <vector>

#include "lade/autodiff.hpp"
#include "lade/label_space.hpp"
#include "lade/matrix.hpp"

namespace lade {

/// Hyperparameters of the combined disentangling loss.
///   lambda        strength of the squared log-partition regulariser inside
///                 each per-class term;
///   alpha         weight of the disentangling regulariser against the
///                 cross-entropy part;
///   class_weights per-class weights of the regulariser sum; defaults to the
///                 source label distribution, so head classes are regularised
///                 harder than tail classes.
struct LadeConfig {
    double lambda = 0.1;
    double alpha = 0.1;
    std::vector<double> class_weights;

    static LadeConfig defaults(const LabelDistribution& source);
};

/// Mean over the batch of -log softmax(logits)[i][labels[i]], max-shift
/// stabilised.
Tensor softmax_ce(const Tensor& logits, std::span<const int> labels);

/// Cross entropy of the source-prior posterior: mean over the batch of
/// -log( p_s(y) e^{f[y]} / sum_c p_s(c) e^{f[c]} ). Identical to softmax_ce
/// applied to logits + log p_s. Training with this loss alone is the
/// balanced-softmax objective.
Tensor lade_ce(const Tensor& logits, std::span<const int> labels,
               const LabelDistribution& source);

/// Per-class disentangling regulariser for every class present in the batch:
///   term1_c = -(1/N_c) sum_{i: y_i = c} f[i][c]        (N_c batch-local)
///   Z_c     = log( (1/N) sum_i (p_u(y_i)/p_s(y_i)) e^{f[i][c]} )
///   out_c   = term1_c + Z_c + lambda * Z_c^2
/// The weighted partition Z_c is evaluated as a max-shifted log-sum-exp over
/// logits + log-weights; raw exponentials of logits are never summed.
std::map<int, Tensor> lader_per_class(const Tensor& logits, std::span<const int> labels,
                                      const LabelDistribution& source, double lambda);

/// Weighted sum of lader_per_class over batch-present classes. Weights are
/// taken from config.class_weights at the full class index and are not
/// renormalised when the batch misses classes.
Tensor lader(const Tensor& logits, std::span<const int> labels,
             const LabelDistribution& source, const LadeConfig& config);

/// Combined objective lade_ce + alpha * lader. With alpha == 0 this is
/// exactly lade_ce (the balanced-softmax special case); gradients propagate
/// through every term including the importance-weighted partitions.
Tensor lade_loss(const Tensor& logits, std::span<const int> labels,
                 const LabelDistribution& source, const LadeConfig& config);

/// Inference rule for disentangled logits: row i, class y gets
/// p_t(y) e^{f[i][y]} / sum_c p_t(c) e^{f[i][c]}, stabilised. Passing the
/// source distribution instead of the target recovers the training-side
/// posterior that lade_ce optimises.
Matrix infer_probs(const Matrix& logits, const LabelDistribution& target);

/// Single-batch importance-sampling estimate of E_{x~p_u(x)}[e^{f(x)[c]}]:
/// (1/N) sum_i (p_u(y_i)/p_s(y_i)) e^{class_logits[i]}. Exposed on its own so
/// the estimator's statistical behaviour is testable.
double mc_weighted_expectation(std::span<const double> class_logits,
                               std::span<const int> labels,
                               const LabelDistribution& source);

}  // namespace lade
