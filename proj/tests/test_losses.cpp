#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"

#include "lade/autodiff.hpp"
#include "lade/errors.hpp"
#include "lade/losses.hpp"
#include "lade/rng.hpp"

using namespace lade;

namespace {

std::vector<double> random_values(rng::Stream& stream, std::size_t n, double lo, double hi) {
    std::vector<double> out(n);
    for (double& v : out) v = stream.uniform(lo, hi);
    return out;
}

LabelDistribution random_distribution(rng::Stream& stream, int num_classes) {
    std::vector<double> p(static_cast<std::size_t>(num_classes));
    double total = 0.0;
    for (double& v : p) {
        v = stream.uniform(0.05, 1.0);
        total += v;
    }
    for (double& v : p) v /= total;
    return LabelDistribution(p);
}

std::vector<int> random_labels(rng::Stream& stream, int n, int num_classes) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int& y : labels) y = static_cast<int>(stream.below(static_cast<std::uint64_t>(num_classes)));
    return labels;
}

// Scalar cross-entropy oracle: per-element arithmetic, no shared code with
// the tensor implementation.
double ce_oracle(const Matrix& logits, const std::vector<int>& labels) {
    double total = 0.0;
    for (int i = 0; i < logits.rows; ++i) {
        double denom = 0.0;
        for (int c = 0; c < logits.cols; ++c) denom += std::exp(logits(i, c));
        const double p = std::exp(logits(i, labels[static_cast<std::size_t>(i)])) / denom;
        total += -std::log(p);
    }
    return total / logits.rows;
}

// Term-by-term enumeration of the per-class regulariser, straight from its
// definition and without max-shift stabilisation.
double lader_oracle(const Matrix& logits, const std::vector<int>& labels,
                    const LabelDistribution& source, int cls, double lambda) {
    const int n = logits.rows;
    const double uniform = 1.0 / source.num_classes();
    int count = 0;
    double positive = 0.0;
    double partition = 0.0;
    for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == cls) {
            ++count;
            positive += logits(i, cls);
        }
        partition += uniform / source[labels[static_cast<std::size_t>(i)]] * std::exp(logits(i, cls));
    }
    const double z = std::log(partition / n);
    return -positive / count + z + lambda * z * z;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("softmax cross entropy of uniform logits is log C") {
    const Tensor zeros = Tensor::matrix(2, 5, std::vector<double>(10, 0.0));
    const std::vector<int> labels = {1, 4};
    CHECK(softmax_ce(zeros, labels).item() == std::log(5.0));

    const Tensor constant = Tensor::matrix(3, 4, std::vector<double>(12, 3.7));
    const std::vector<int> more = {0, 2, 3};
    CHECK(std::abs(softmax_ce(constant, more).item() - std::log(4.0)) <= 1e-12);
}

TEST_CASE("softmax cross entropy saturates for a dominant correct logit") {
    Matrix m(2, 5, std::vector<double>(10, 0.0));
    m(0, 1) = 30.0;
    m(1, 3) = 30.0;
    const std::vector<int> labels = {1, 3};
    CHECK(softmax_ce(Tensor::from_matrix(m), labels).item() <= 1e-10);
}

TEST_CASE("softmax cross entropy against the scalar oracle") {
    rng::Stream stream(41);
    for (int round = 0; round < 20; ++round) {
        Matrix m(3, 4, random_values(stream, 12, -4.0, 4.0));
        const std::vector<int> labels = random_labels(stream, 3, 4);
        const double got = softmax_ce(Tensor::from_matrix(m), labels).item();
        CHECK(std::abs(got - ce_oracle(m, labels)) <= 1e-12);
    }
}

TEST_CASE("out-of-range labels are index errors") {
    const Tensor zeros = Tensor::matrix(2, 3, std::vector<double>(6, 0.0));
    const std::vector<int> bad = {0, 3};
    CHECK_THROWS_AS(softmax_ce(zeros, bad), IndexError);
    const std::vector<int> negative = {-1, 0};
    CHECK_THROWS_AS(softmax_ce(zeros, negative), IndexError);
}

TEST_CASE("lade_ce with a uniform source reduces to softmax_ce") {
    rng::Stream stream(42);
    const Matrix m(4, 6, random_values(stream, 24, -3.0, 3.0));
    const std::vector<int> labels = random_labels(stream, 4, 6);
    const double plain = softmax_ce(Tensor::from_matrix(m), labels).item();
    const double prior_aware =
        lade_ce(Tensor::from_matrix(m), labels, LabelDistribution::uniform(6)).item();
    CHECK(std::abs(plain - prior_aware) <= 1e-12);
}

TEST_CASE("lade_ce equals softmax_ce on prior-shifted logits") {
    rng::Stream stream(43);
    for (int round = 0; round < 20; ++round) {
        const int c = 2 + static_cast<int>(stream.below(6));
        const Matrix m(3, c, random_values(stream, static_cast<std::size_t>(3 * c), -3.0, 3.0));
        const std::vector<int> labels = random_labels(stream, 3, c);
        const LabelDistribution source = random_distribution(stream, c);

        Matrix shifted = m;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < c; ++j) shifted(i, j) += std::log(source[j]);
        }
        const double via_shift = softmax_ce(Tensor::from_matrix(shifted), labels).item();
        const double direct = lade_ce(Tensor::from_matrix(m), labels, source).item();
        CHECK(std::abs(via_shift - direct) <= 1e-12);
    }
}

TEST_CASE("lade_ce against the scalar oracle") {
    rng::Stream stream(44);
    for (int round = 0; round < 20; ++round) {
        const Matrix m(3, 4, random_values(stream, 12, -4.0, 4.0));
        const std::vector<int> labels = random_labels(stream, 3, 4);
        const LabelDistribution source = random_distribution(stream, 4);
        // Direct evaluation of -log(p_s(y) e^f / sum_c p_s(c) e^f).
        double expected = 0.0;
        for (int i = 0; i < 3; ++i) {
            double denom = 0.0;
            for (int j = 0; j < 4; ++j) denom += source[j] * std::exp(m(i, j));
            const int y = labels[static_cast<std::size_t>(i)];
            expected += -std::log(source[y] * std::exp(m(i, y)) / denom);
        }
        expected /= 3.0;
        const double got = lade_ce(Tensor::from_matrix(m), labels, source).item();
        CHECK(std::abs(got - expected) <= 1e-12);
    }
}

TEST_CASE("per-class regulariser vanishes at constant logits with unit weights") {
    // Single-class batch, uniform source, so every importance weight is one.
    const LabelDistribution uniform = LabelDistribution::uniform(2);
    const std::vector<int> labels = {0, 0, 0, 0};

    const Tensor zeros = Tensor::matrix(4, 2, std::vector<double>(8, 0.0));
    const auto at_zero = lader_per_class(zeros, labels, uniform, 0.0);
    CHECK(at_zero.at(0).item() == 0.0);

    const Tensor constant = Tensor::matrix(4, 2, std::vector<double>(8, 1.5));
    const auto at_k = lader_per_class(constant, labels, uniform, 0.0);
    CHECK(std::abs(at_k.at(0).item()) <= 1e-12);
}

TEST_CASE("per-class regulariser obeys Jensen's inequality with unit weights") {
    const LabelDistribution uniform = LabelDistribution::uniform(3);
    rng::Stream stream(45);
    for (int round = 0; round < 50; ++round) {
        const std::vector<int> labels(5, 1);
        Matrix m(5, 3, random_values(stream, 15, -2.0, 2.0));
        const auto terms = lader_per_class(Tensor::from_matrix(m), labels, uniform, 0.0);
        CHECK(terms.at(1).item() >= -1e-12);

        // Non-constant class-1 logits keep the bound strict.
        bool constant = true;
        for (int i = 1; i < 5; ++i) constant = constant && m(i, 1) == m(0, 1);
        if (!constant) CHECK(terms.at(1).item() > 0.0);
    }
}

TEST_CASE("per-class regulariser matches the enumeration oracle") {
    Matrix m(4, 2, {0.3, -0.7, 1.2, 0.4, -0.5, 0.9, 0.0, 2.0});
    const std::vector<int> labels = {0, 1, 0, 1};
    const LabelDistribution source({0.75, 0.25});
    const double lambda = 0.37;
    const auto terms = lader_per_class(Tensor::from_matrix(m), labels, source, lambda);
    REQUIRE(terms.size() == 2);
    for (int cls = 0; cls < 2; ++cls) {
        CHECK(std::abs(terms.at(cls).item() - lader_oracle(m, labels, source, cls, lambda)) <=
              1e-12);
    }
}

TEST_CASE("per-class regulariser covers only batch-present classes") {
    const Tensor logits = Tensor::matrix(3, 4, std::vector<double>(12, 0.1));
    const std::vector<int> labels = {2, 2, 0};
    const auto terms = lader_per_class(logits, labels, LabelDistribution::uniform(4), 0.1);
    CHECK(terms.size() == 2);
    CHECK(terms.contains(0));
    CHECK(terms.contains(2));
}

TEST_CASE("weighted regulariser sum") {
    rng::Stream stream(46);
    const Matrix m(6, 3, random_values(stream, 18, -2.0, 2.0));
    const std::vector<int> labels = {0, 1, 2, 1, 0, 1};
    const LabelDistribution source({0.5, 0.3, 0.2});

    LadeConfig config = LadeConfig::defaults(source);
    config.lambda = 0.2;

    SUBCASE("all-zero weights give zero") {
        config.class_weights = {0.0, 0.0, 0.0};
        CHECK(lader(Tensor::from_matrix(m), labels, source, config).item() == 0.0);
    }

    SUBCASE("single-present-class batch is one weighted term") {
        const std::vector<int> single = {1, 1, 1, 1, 1, 1};
        const auto terms = lader_per_class(Tensor::from_matrix(m), single, source, config.lambda);
        const double expected = source[1] * terms.at(1).item();
        CHECK(std::abs(lader(Tensor::from_matrix(m), single, source, config).item() - expected) <=
              1e-15);
    }

    SUBCASE("multi-class batch matches the enumeration oracle") {
        double expected = 0.0;
        for (int cls = 0; cls < 3; ++cls) {
            expected += source[cls] * lader_oracle(m, labels, source, cls, config.lambda);
        }
        CHECK(std::abs(lader(Tensor::from_matrix(m), labels, source, config).item() - expected) <=
              1e-12);
    }

    SUBCASE("weights are not renormalised over present classes") {
        const std::vector<int> missing_two = {0, 1, 1, 0, 0, 1};
        double expected = 0.0;
        for (int cls = 0; cls < 2; ++cls) {
            expected += source[cls] * lader_oracle(m, missing_two, source, cls, config.lambda);
        }
        CHECK(std::abs(lader(Tensor::from_matrix(m), missing_two, source, config).item() -
                       expected) <= 1e-12);
    }
}

TEST_CASE("regulariser is monotone in lambda") {
    rng::Stream stream(47);
    const LabelDistribution source({0.6, 0.3, 0.1});
    for (int round = 0; round < 30; ++round) {
        const Matrix m(5, 3, random_values(stream, 15, -2.0, 2.0));
        const std::vector<int> labels = random_labels(stream, 5, 3);
        LadeConfig lo = LadeConfig::defaults(source);
        LadeConfig hi = lo;
        lo.lambda = stream.uniform(0.0, 0.3);
        hi.lambda = lo.lambda + stream.uniform(0.0, 0.5);
        const double at_lo = lader(Tensor::from_matrix(m), labels, source, lo).item();
        const double at_hi = lader(Tensor::from_matrix(m), labels, source, hi).item();
        CHECK(at_hi >= at_lo - 1e-12);
    }

    // All log-partitions vanish for zero logits under a uniform source, so
    // lambda has no effect there.
    const Tensor zeros = Tensor::matrix(4, 3, std::vector<double>(12, 0.0));
    const std::vector<int> labels = {0, 1, 2, 0};
    const LabelDistribution uniform = LabelDistribution::uniform(3);
    LadeConfig a = LadeConfig::defaults(uniform);
    LadeConfig b = a;
    a.lambda = 0.0;
    b.lambda = 5.0;
    CHECK(lader(zeros, labels, uniform, a).item() == lader(zeros, labels, uniform, b).item());
}

TEST_CASE("combined loss with alpha zero is exactly lade_ce") {
    rng::Stream stream(48);
    const Matrix m(4, 3, random_values(stream, 12, -3.0, 3.0));
    const std::vector<int> labels = random_labels(stream, 4, 3);
    const LabelDistribution source = random_distribution(stream, 3);
    LadeConfig config = LadeConfig::defaults(source);
    config.alpha = 0.0;
    const double combined = lade_loss(Tensor::from_matrix(m), labels, source, config).item();
    const double ce_only = lade_ce(Tensor::from_matrix(m), labels, source).item();
    CHECK(combined == ce_only);
}

TEST_CASE("combined loss with alpha zero and uniform source is softmax_ce") {
    rng::Stream stream(49);
    const Matrix m(4, 5, random_values(stream, 20, -3.0, 3.0));
    const std::vector<int> labels = random_labels(stream, 4, 5);
    const LabelDistribution uniform = LabelDistribution::uniform(5);
    LadeConfig config = LadeConfig::defaults(uniform);
    config.alpha = 0.0;
    const double combined = lade_loss(Tensor::from_matrix(m), labels, uniform, config).item();
    CHECK(std::abs(combined - softmax_ce(Tensor::from_matrix(m), labels).item()) <= 1e-12);
}

TEST_CASE("combined loss matches lade_ce plus alpha times lader") {
    rng::Stream stream(50);
    const Matrix m(5, 4, random_values(stream, 20, -2.0, 2.0));
    const std::vector<int> labels = random_labels(stream, 5, 4);
    const LabelDistribution source = random_distribution(stream, 4);
    LadeConfig config = LadeConfig::defaults(source);
    config.alpha = 0.25;
    config.lambda = 0.15;
    const double combined = lade_loss(Tensor::from_matrix(m), labels, source, config).item();
    const double parts = lade_ce(Tensor::from_matrix(m), labels, source).item() +
                         config.alpha *
                             lader(Tensor::from_matrix(m), labels, source, config).item();
    CHECK(std::abs(combined - parts) <= 1e-15);
}

TEST_CASE("every loss stays finite on finite inputs") {
    rng::Stream stream(51);
    for (int round = 0; round < 20; ++round) {
        const int c = 2 + static_cast<int>(stream.below(5));
        const int n = 1 + static_cast<int>(stream.below(8));
        const Matrix m(n, c,
                       random_values(stream, static_cast<std::size_t>(n * c), -30.0, 30.0));
        const std::vector<int> labels = random_labels(stream, n, c);
        const LabelDistribution source = random_distribution(stream, c);
        LadeConfig config = LadeConfig::defaults(source);
        CHECK(std::isfinite(softmax_ce(Tensor::from_matrix(m), labels).item()));
        CHECK(std::isfinite(lade_ce(Tensor::from_matrix(m), labels, source).item()));
        CHECK(std::isfinite(lader(Tensor::from_matrix(m), labels, source, config).item()));
        CHECK(std::isfinite(lade_loss(Tensor::from_matrix(m), labels, source, config).item()));
    }
}

TEST_CASE("loss gradients match central finite differences") {
    rng::Stream stream(52);
    for (int round = 0; round < 10; ++round) {
        const int c = 2 + static_cast<int>(stream.below(4));
        const int n = 2 + static_cast<int>(stream.below(5));
        const std::vector<int> labels = random_labels(stream, n, c);
        const LabelDistribution source = random_distribution(stream, c);
        LadeConfig config = LadeConfig::defaults(source);
        config.lambda = stream.uniform(0.0, 0.4);
        config.alpha = stream.uniform(0.0, 0.4);
        const Tensor at = Tensor::matrix(
            n, c, random_values(stream, static_cast<std::size_t>(n * c), -2.0, 2.0));

        CHECK(grad_check([&](const Tensor& x) { return softmax_ce(x, labels); }, at, 1e-5) <=
              1e-4);
        CHECK(grad_check([&](const Tensor& x) { return lade_ce(x, labels, source); }, at,
                         1e-5) <= 1e-4);
        CHECK(grad_check([&](const Tensor& x) { return lader(x, labels, source, config); }, at,
                         1e-5) <= 1e-4);
        CHECK(grad_check([&](const Tensor& x) { return lade_loss(x, labels, source, config); },
                         at, 1e-5) <= 1e-4);
    }
}

TEST_CASE("inference rule basics") {
    Matrix zeros(1, 2, {0.0, 0.0});
    const Matrix from_prior = infer_probs(zeros, LabelDistribution({0.3, 0.7}));
    CHECK(from_prior(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(from_prior(0, 1) == doctest::Approx(0.7).epsilon(1e-12));

    rng::Stream stream(53);
    const Matrix m(4, 5, random_values(stream, 20, -3.0, 3.0));
    const Matrix via_uniform = infer_probs(m, LabelDistribution::uniform(5));
    const Matrix plain = softmax_rows(m);
    for (std::size_t i = 0; i < plain.data.size(); ++i) {
        CHECK(std::abs(via_uniform.data[i] - plain.data[i]) <= 1e-12);
    }
}

TEST_CASE("inference rule against per-element arithmetic") {
    rng::Stream stream(54);
    for (int round = 0; round < 20; ++round) {
        const Matrix m(3, 4, random_values(stream, 12, -4.0, 4.0));
        const LabelDistribution target = random_distribution(stream, 4);
        const Matrix probs = infer_probs(m, target);
        for (int i = 0; i < 3; ++i) {
            double denom = 0.0;
            for (int j = 0; j < 4; ++j) denom += target[j] * std::exp(m(i, j));
            for (int j = 0; j < 4; ++j) {
                CHECK(std::abs(probs(i, j) - target[j] * std::exp(m(i, j)) / denom) <= 1e-12);
            }
        }
    }
}

TEST_CASE("inference rule coincides with pc softmax on likelihood-ratio logits") {
    rng::Stream stream(55);
    for (int round = 0; round < 30; ++round) {
        const int c = 2 + static_cast<int>(stream.below(5));
        const Matrix m(3, c, random_values(stream, static_cast<std::size_t>(3 * c), -3.0, 3.0));
        const LabelDistribution target = random_distribution(stream, c);
        const LabelDistribution uniform = LabelDistribution::uniform(c);

        Matrix with_uniform_prior = m;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < c; ++j) with_uniform_prior(i, j) += std::log(uniform[j]);
        }
        const Matrix via_pc = pc_softmax_probs(with_uniform_prior, uniform, target);
        const Matrix direct = infer_probs(m, target);
        for (std::size_t i = 0; i < direct.data.size(); ++i) {
            CHECK(std::abs(via_pc.data[i] - direct.data[i]) <= 1e-12);
        }
    }
}

TEST_CASE("importance-weighted expectation at fixed points") {
    const LabelDistribution uniform = LabelDistribution::uniform(2);
    const std::vector<int> labels = {0, 1, 0, 1};
    const std::vector<double> zeros(4, 0.0);
    CHECK(mc_weighted_expectation(zeros, labels, uniform) == 1.0);

    // Batch concentrated on one class.
    const LabelDistribution skew({0.8, 0.2});
    const std::vector<int> ones(5, 1);
    const std::vector<double> at_k(5, 0.7);
    const double expected = 0.5 / 0.2 * std::exp(0.7);
    CHECK(mc_weighted_expectation(at_k, ones, skew) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("importance-weighted expectation is unbiased on an enumerable world") {
    // Four distinct inputs, two classes; exact expectation by enumeration.
    const std::vector<double> f = {0.3, -0.2, 0.5, 1.1};
    const std::vector<std::vector<double>> cond = {{0.4, 0.3, 0.2, 0.1},
                                                   {0.25, 0.25, 0.25, 0.25}};
    const LabelDistribution p_s({0.9, 0.1});

    double exact = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double p_u_x = 0.5 * cond[0][static_cast<std::size_t>(k)] +
                             0.5 * cond[1][static_cast<std::size_t>(k)];
        exact += p_u_x * std::exp(f[static_cast<std::size_t>(k)]);
    }

    constexpr int kBatches = 10000;
    constexpr int kBatchSize = 16;
    rng::Stream stream(56);
    std::vector<double> estimates;
    estimates.reserve(kBatches);
    for (int b = 0; b < kBatches; ++b) {
        std::vector<double> col(kBatchSize);
        std::vector<int> labels(kBatchSize);
        for (int i = 0; i < kBatchSize; ++i) {
            const int y = stream.uniform01() < 0.9 ? 0 : 1;
            const double u = stream.uniform01();
            double cumulative = 0.0;
            int k = 3;
            for (int j = 0; j < 4; ++j) {
                cumulative += cond[static_cast<std::size_t>(y)][static_cast<std::size_t>(j)];
                if (u < cumulative) {
                    k = j;
                    break;
                }
            }
            labels[static_cast<std::size_t>(i)] = y;
            col[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(k)];
        }
        estimates.push_back(mc_weighted_expectation(col, labels, p_s));
    }

    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= kBatches;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= kBatches - 1;
    const double standard_error = std::sqrt(var / kBatches);
    CHECK(std::abs(mean - exact) <= 3.0 * standard_error);
}

}  // TEST_SUITE
