#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lade/autodiff.hpp"
#include "lade/matrix.hpp"
#include "lade/synthetic.hpp"

namespace lade {

/// Multilayer perceptron: rectifier between layers, identity at the output.
/// Logits are the raw final layer; no softmax lives inside the model.
struct ModelParams {
    std::vector<int> dims;  // layer widths including input and output
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    int num_layers() const { return static_cast<int>(weights.size()); }
    bool operator==(const ModelParams& other) const = default;
};

enum class LrSchedule { kConstant, kCosine, kStep };
enum class LossKind { kCrossEntropy, kLadeCe, kLade };

struct TrainConfig {
    int epochs = 100;
    int batch_size = 64;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    LrSchedule schedule = LrSchedule::kCosine;
    std::vector<int> milestones;   // step schedule only
    double step_factor = 0.1;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::kCrossEntropy;
    double lambda = 0.1;
    double alpha = 0.1;
};

struct EpochStats {
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> history;
};

/// Fan-in scaled uniform weights, zero biases; bit-reproducible in seed.
ModelParams init_model(std::span<const int> dims, std::uint64_t seed);

/// Learning rate for a 0-based epoch under the configured schedule.
double scheduled_lr(const TrainConfig& config, int epoch);

/// Deterministic SGD training. Per step: forward logits, selected loss,
/// backward, then v <- momentum*v + g + weight_decay*w and w <- w - lr*v.
/// Batch order reshuffles per (seed, epoch); the last partial batch is kept.
/// For the prior-aware losses the source distribution is the empirical
/// training distribution, fixed once from the dataset class counts.
/// NumericError with the epoch/step position if the loss goes non-finite.
TrainResult train(const ModelParams& init, const Dataset& data, const TrainConfig& config);

/// Raw logits for a feature matrix; batched rows equal per-row evaluation.
Matrix predict_logits(const ModelParams& params, const Matrix& features);

/// Differentiable forward pass over parameter leaves; exposed so training and
/// tests share one graph-building path.
Tensor forward_logits(std::span<const Tensor> weight_leaves,
                      std::span<const Tensor> bias_leaves, const Tensor& features);

/// Versioned text checkpoint with hexadecimal floats; round-trips bit-exactly.
std::string checkpoint_to_text(const ModelParams& params);
ModelParams checkpoint_from_text(const std::string& text);

}  // namespace lade
