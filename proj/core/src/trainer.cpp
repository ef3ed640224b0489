#include "lade/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "lade/errors.hpp"
#include "lade/io.hpp"
#include "lade/losses.hpp"
#include "lade/rng.hpp"

namespace lade {

namespace {

void check_train_config(const TrainConfig& config) {
    if (config.epochs < 1) throw ParameterError("train: epochs must be positive");
    if (config.batch_size < 1) throw ParameterError("train: batch_size must be positive");
    if (!(config.lr > 0.0)) throw ParameterError("train: lr must be positive");
    if (config.momentum < 0.0 || config.momentum >= 1.0) {
        throw ParameterError("train: momentum must lie in [0, 1)");
    }
    if (config.weight_decay < 0.0) throw ParameterError("train: weight_decay must be nonnegative");
    if (config.lambda < 0.0) throw ParameterError("train: lambda must be nonnegative");
    if (config.alpha < 0.0) throw ParameterError("train: alpha must be nonnegative");
}

}  // namespace

ModelParams init_model(std::span<const int> dims, std::uint64_t seed) {
    if (dims.size() < 2) throw ParameterError("init_model: need at least input and output sizes");
    for (int d : dims) {
        if (d < 1) throw ParameterError("init_model: layer sizes must be positive");
    }

    ModelParams params;
    params.dims.assign(dims.begin(), dims.end());
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_in, fan_out);
        rng::Stream stream = rng::Stream(seed).derive("init").derive(static_cast<std::uint64_t>(l));
        for (int i = 0; i < fan_in; ++i) {
            for (int j = 0; j < fan_out; ++j) w(i, j) = stream.uniform(-scale, scale);
        }
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
    }
    return params;
}

double scheduled_lr(const TrainConfig& config, int epoch) {
    switch (config.schedule) {
        case LrSchedule::kConstant:
            return config.lr;
        case LrSchedule::kCosine:
            return config.lr * 0.5 *
                   (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                                   static_cast<double>(config.epochs)));
        case LrSchedule::kStep: {
            double lr = config.lr;
            for (int milestone : config.milestones) {
                if (epoch >= milestone) lr *= config.step_factor;
            }
            return lr;
        }
    }
    return config.lr;
}

Tensor forward_logits(std::span<const Tensor> weight_leaves,
                      std::span<const Tensor> bias_leaves, const Tensor& features) {
    Tensor h = features;
    for (std::size_t l = 0; l < weight_leaves.size(); ++l) {
        h = matmul(h, weight_leaves[l]) + bias_leaves[l];
        if (l + 1 < weight_leaves.size()) h = relu(h);
    }
    return h;
}

TrainResult train(const ModelParams& init, const Dataset& data, const TrainConfig& config) {
    check_train_config(config);
    if (data.total < 1) throw ParameterError("train: dataset is empty");
    if (data.features.cols != init.dims.front()) {
        throw DimensionError("train: feature dimension " + std::to_string(data.features.cols) +
                             " does not match model input " + std::to_string(init.dims.front()));
    }
    if (init.dims.back() != data.num_classes()) {
        throw DimensionError("train: model emits " + std::to_string(init.dims.back()) +
                             " logits for " + std::to_string(data.num_classes()) + " classes");
    }

    // Fixed empirical source distribution; never the batch-empirical one.
    CountProfile train_profile;
    train_profile.counts = data.class_counts;
    const LabelDistribution source = counts_to_distribution(train_profile);
    LadeConfig lade_config = LadeConfig::defaults(source);
    lade_config.lambda = config.lambda;
    lade_config.alpha = config.alpha;

    TrainResult result;
    result.params = init;
    ModelParams& params = result.params;

    std::vector<Matrix> velocity_w;
    std::vector<std::vector<double>> velocity_b;
    for (int l = 0; l < params.num_layers(); ++l) {
        velocity_w.emplace_back(params.weights[static_cast<std::size_t>(l)].rows,
                                params.weights[static_cast<std::size_t>(l)].cols);
        velocity_b.emplace_back(params.biases[static_cast<std::size_t>(l)].size(), 0.0);
    }

    const long long n = data.total;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng::Stream shuffle = rng::Stream(config.seed)
                                  .derive("shuffle")
                                  .derive(static_cast<std::uint64_t>(epoch));
        for (long long i = n - 1; i > 0; --i) {
            const auto j = static_cast<long long>(shuffle.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        const double lr = scheduled_lr(config, epoch);
        double loss_sum = 0.0;
        long long hits = 0;

        for (long long start = 0; start < n; start += config.batch_size) {
            const long long batch = std::min<long long>(config.batch_size, n - start);

            Matrix x(static_cast<int>(batch), data.features.cols);
            std::vector<int> y(static_cast<std::size_t>(batch));
            for (long long b = 0; b < batch; ++b) {
                const int src = order[static_cast<std::size_t>(start + b)];
                for (int d = 0; d < data.features.cols; ++d) {
                    x(static_cast<int>(b), d) = data.features(src, d);
                }
                y[static_cast<std::size_t>(b)] = data.labels[static_cast<std::size_t>(src)];
            }

            std::vector<Tensor> w_leaves;
            std::vector<Tensor> b_leaves;
            for (int l = 0; l < params.num_layers(); ++l) {
                w_leaves.push_back(Tensor::from_matrix(params.weights[static_cast<std::size_t>(l)]));
                b_leaves.push_back(Tensor::vector(params.biases[static_cast<std::size_t>(l)]));
            }
            const Tensor logits = forward_logits(w_leaves, b_leaves, Tensor::from_matrix(x));

            Tensor loss;
            switch (config.loss) {
                case LossKind::kCrossEntropy:
                    loss = softmax_ce(logits, y);
                    break;
                case LossKind::kLadeCe:
                    loss = lade_ce(logits, y, source);
                    break;
                case LossKind::kLade:
                    loss = lade_loss(logits, y, source, lade_config);
                    break;
            }

            const double loss_value = loss.item();
            if (!std::isfinite(loss_value)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " step " + std::to_string(start / config.batch_size));
            }
            loss_sum += loss_value * static_cast<double>(batch);

            for (long long b = 0; b < batch; ++b) {
                int best = 0;
                const auto row = static_cast<int>(b);
                for (int c = 1; c < init.dims.back(); ++c) {
                    if (logits.values()[static_cast<std::size_t>(row) * init.dims.back() + c] >
                        logits.values()[static_cast<std::size_t>(row) * init.dims.back() + best]) {
                        best = c;
                    }
                }
                if (best == y[static_cast<std::size_t>(b)]) ++hits;
            }

            backward(loss);

            for (int l = 0; l < params.num_layers(); ++l) {
                const std::vector<double>& gw = w_leaves[static_cast<std::size_t>(l)].grad();
                Matrix& w = params.weights[static_cast<std::size_t>(l)];
                Matrix& vw = velocity_w[static_cast<std::size_t>(l)];
                for (std::size_t i = 0; i < w.data.size(); ++i) {
                    vw.data[i] = config.momentum * vw.data[i] + gw[i] +
                                 config.weight_decay * w.data[i];
                    w.data[i] -= lr * vw.data[i];
                }
                const std::vector<double>& gb = b_leaves[static_cast<std::size_t>(l)].grad();
                std::vector<double>& bias = params.biases[static_cast<std::size_t>(l)];
                std::vector<double>& vb = velocity_b[static_cast<std::size_t>(l)];
                for (std::size_t i = 0; i < bias.size(); ++i) {
                    vb[i] = config.momentum * vb[i] + gb[i] + config.weight_decay * bias[i];
                    bias[i] -= lr * vb[i];
                }
            }
        }

        EpochStats stats;
        stats.mean_loss = loss_sum / static_cast<double>(n);
        stats.train_accuracy = static_cast<double>(hits) / static_cast<double>(n);
        result.history.push_back(stats);
    }
    return result;
}

Matrix predict_logits(const ModelParams& params, const Matrix& features) {
    if (features.cols != params.dims.front()) {
        throw DimensionError("predict_logits: feature dimension " +
                             std::to_string(features.cols) + " does not match model input " +
                             std::to_string(params.dims.front()));
    }
    std::vector<Tensor> w_leaves;
    std::vector<Tensor> b_leaves;
    for (int l = 0; l < params.num_layers(); ++l) {
        w_leaves.push_back(Tensor::from_matrix(params.weights[static_cast<std::size_t>(l)]));
        b_leaves.push_back(Tensor::vector(params.biases[static_cast<std::size_t>(l)]));
    }
    return forward_logits(w_leaves, b_leaves, Tensor::from_matrix(features)).to_matrix();
}

std::string checkpoint_to_text(const ModelParams& params) {
    std::ostringstream out;
    out << "ladelab-checkpoint 1\n";
    out << "dims " << params.dims.size();
    for (int d : params.dims) out << " " << d;
    out << "\n";
    for (int l = 0; l < params.num_layers(); ++l) {
        const Matrix& w = params.weights[static_cast<std::size_t>(l)];
        out << "weights " << l << " " << w.rows << " " << w.cols << "\n";
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            out << io::format_hexfloat(w.data[i]) << (i + 1 == w.data.size() ? "\n" : " ");
        }
        const std::vector<double>& b = params.biases[static_cast<std::size_t>(l)];
        out << "bias " << l << " " << b.size() << "\n";
        for (std::size_t i = 0; i < b.size(); ++i) {
            out << io::format_hexfloat(b[i]) << (i + 1 == b.size() ? "\n" : " ");
        }
    }
    return out.str();
}

ModelParams checkpoint_from_text(const std::string& text) {
    // Leading '#' lines (provenance comments) are not part of the format.
    std::size_t start = 0;
    while (start < text.size() && text[start] == '#') {
        const std::size_t eol = text.find('\n', start);
        if (eol == std::string::npos) throw ParameterError("checkpoint: only comment lines");
        start = eol + 1;
    }
    std::istringstream in(text.substr(start));
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "ladelab-checkpoint" || version != 1) {
        throw ParameterError("checkpoint: unrecognised header");
    }

    std::string token;
    std::size_t dim_count = 0;
    in >> token >> dim_count;
    if (token != "dims" || dim_count < 2) throw ParameterError("checkpoint: malformed dims");
    ModelParams params;
    params.dims.resize(dim_count);
    for (std::size_t i = 0; i < dim_count; ++i) in >> params.dims[i];

    for (std::size_t l = 0; l + 1 < dim_count; ++l) {
        int layer = 0, rows = 0, cols = 0;
        in >> token >> layer >> rows >> cols;
        if (token != "weights" || layer != static_cast<int>(l) || rows != params.dims[l] ||
            cols != params.dims[l + 1]) {
            throw ParameterError("checkpoint: malformed weights block for layer " +
                                 std::to_string(l));
        }
        Matrix w(rows, cols);
        for (double& v : w.data) {
            in >> token;
            v = io::parse_hexfloat(token);
        }
        params.weights.push_back(std::move(w));

        std::size_t bias_len = 0;
        in >> token >> layer >> bias_len;
        if (token != "bias" || layer != static_cast<int>(l) ||
            bias_len != static_cast<std::size_t>(params.dims[l + 1])) {
            throw ParameterError("checkpoint: malformed bias block for layer " +
                                 std::to_string(l));
        }
        std::vector<double> b(bias_len);
        for (double& v : b) {
            in >> token;
            v = io::parse_hexfloat(token);
        }
        params.biases.push_back(std::move(b));
    }
    if (!in) throw ParameterError("checkpoint: truncated file");
    return params;
}

}  // namespace lade
