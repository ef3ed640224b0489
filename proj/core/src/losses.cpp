#include "lade/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lade/errors.hpp"

namespace lade {

namespace {

void check_batch(const Tensor& logits, std::span<const int> labels, int num_classes) {
    if (logits.shape().size() != 2) {
        throw DimensionError("loss: logits must be rank-2 [batch, classes]");
    }
    if (logits.rows() < 1) throw ParameterError("loss: batch must be nonempty");
    if (num_classes >= 0 && logits.cols() != num_classes) {
        throw DimensionError("loss: logits have " + std::to_string(logits.cols()) +
                             " classes, distribution has " + std::to_string(num_classes));
    }
    if (static_cast<int>(labels.size()) != logits.rows()) {
        throw DimensionError("loss: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(logits.rows()) + " rows");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= logits.cols()) {
            throw IndexError("loss: label " + std::to_string(labels[i]) +
                             " out of range for " + std::to_string(logits.cols()) +
                             " classes at row " + std::to_string(i));
        }
    }
}

std::vector<double> log_probs(const LabelDistribution& dist) {
    std::vector<double> out(static_cast<std::size_t>(dist.num_classes()));
    for (int c = 0; c < dist.num_classes(); ++c) out[static_cast<std::size_t>(c)] = std::log(dist[c]);
    return out;
}

}  // namespace

LadeConfig LadeConfig::defaults(const LabelDistribution& source) {
    LadeConfig config;
    config.class_weights = source.probs();
    return config;
}

Tensor softmax_ce(const Tensor& logits, std::span<const int> labels) {
    check_batch(logits, labels, -1);
    return mean(log_sum_exp(logits) - gather_rows(logits, labels));
}

Tensor lade_ce(const Tensor& logits, std::span<const int> labels,
               const LabelDistribution& source) {
    check_batch(logits, labels, source.num_classes());
    const Tensor log_prior = Tensor::vector(log_probs(source));
    return softmax_ce(logits + log_prior, labels);
}

std::map<int, Tensor> lader_per_class(const Tensor& logits, std::span<const int> labels,
                                      const LabelDistribution& source, double lambda) {
    check_batch(logits, labels, source.num_classes());
    if (lambda < 0.0) throw ParameterError("lader: lambda must be nonnegative");

    const int batch = logits.rows();
    const double log_batch = std::log(static_cast<double>(batch));
    const double log_uniform = -std::log(static_cast<double>(source.num_classes()));

    // log(p_u(y_i)/p_s(y_i)) per sample; folding the weights into the
    // exponent keeps the whole partition estimate on the max-shifted path.
    std::vector<double> log_weights(static_cast<std::size_t>(batch));
    std::map<int, int> batch_counts;
    for (int i = 0; i < batch; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        log_weights[static_cast<std::size_t>(i)] = log_uniform - std::log(source[y]);
        ++batch_counts[y];
    }
    const Tensor log_weight_tensor = Tensor::vector(std::move(log_weights));

    std::map<int, Tensor> out;
    for (const auto& [cls, count] : batch_counts) {
        const Tensor class_logits = column(logits, cls);

        std::vector<double> mask(static_cast<std::size_t>(batch), 0.0);
        for (int i = 0; i < batch; ++i) {
            if (labels[static_cast<std::size_t>(i)] == cls) mask[static_cast<std::size_t>(i)] = 1.0;
        }
        const Tensor positive_mean =
            sum(class_logits * Tensor::vector(std::move(mask))) / static_cast<double>(count);

        const Tensor log_partition =
            log_sum_exp(class_logits + log_weight_tensor) - log_batch;

        out.emplace(cls, -positive_mean + log_partition + lambda * square(log_partition));
    }
    return out;
}

Tensor lader(const Tensor& logits, std::span<const int> labels,
             const LabelDistribution& source, const LadeConfig& config) {
    if (static_cast<int>(config.class_weights.size()) != source.num_classes()) {
        throw ParameterError("lader: " + std::to_string(config.class_weights.size()) +
                             " class weights for " + std::to_string(source.num_classes()) +
                             " classes");
    }
    for (double w : config.class_weights) {
        if (w < 0.0) throw ParameterError("lader: class weights must be nonnegative");
    }

    const std::map<int, Tensor> per_class =
        lader_per_class(logits, labels, source, config.lambda);
    Tensor total;
    for (const auto& [cls, term] : per_class) {
        const Tensor weighted = config.class_weights[static_cast<std::size_t>(cls)] * term;
        total = total.defined() ? total + weighted : weighted;
    }
    return total;
}

Tensor lade_loss(const Tensor& logits, std::span<const int> labels,
                 const LabelDistribution& source, const LadeConfig& config) {
    if (config.alpha < 0.0) throw ParameterError("lade_loss: alpha must be nonnegative");
    const Tensor ce = lade_ce(logits, labels, source);
    if (config.alpha == 0.0) return ce;
    return ce + config.alpha * lader(logits, labels, source, config);
}

Matrix infer_probs(const Matrix& logits, const LabelDistribution& target) {
    if (logits.cols != target.num_classes()) {
        throw DimensionError("infer_probs: logits have " + std::to_string(logits.cols) +
                             " classes, distribution has " +
                             std::to_string(target.num_classes()));
    }
    const std::vector<double> log_prior = log_probs(target);
    Matrix shifted(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        for (int c = 0; c < logits.cols; ++c) {
            shifted(i, c) = logits(i, c) + log_prior[static_cast<std::size_t>(c)];
        }
    }
    return softmax_rows(shifted);
}

double mc_weighted_expectation(std::span<const double> class_logits,
                               std::span<const int> labels,
                               const LabelDistribution& source) {
    if (class_logits.size() != labels.size()) {
        throw DimensionError("mc_weighted_expectation: " + std::to_string(class_logits.size()) +
                             " logits for " + std::to_string(labels.size()) + " labels");
    }
    if (class_logits.empty()) throw ParameterError("mc_weighted_expectation: empty batch");

    const double log_uniform = -std::log(static_cast<double>(source.num_classes()));
    const std::size_t n = class_logits.size();

    // exp(lse(f_i + log w_i) - log N): same stabilised path as the loss.
    std::vector<double> shifted(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= source.num_classes()) {
            throw IndexError("mc_weighted_expectation: label " + std::to_string(y) +
                             " out of range for " + std::to_string(source.num_classes()) +
                             " classes");
        }
        shifted[i] = class_logits[i] + log_uniform - std::log(source[y]);
    }
    double m = shifted[0];
    for (double v : shifted) m = std::max(m, v);
    double sum = 0.0;
    for (double v : shifted) sum += std::exp(v - m);
    return std::exp(m + std::log(sum) - std::log(static_cast<double>(n)));
}

}  // namespace lade
