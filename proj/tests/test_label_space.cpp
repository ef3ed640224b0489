#include <cmath>
#include <vector>

#include "doctest.h"

#include "lade/errors.hpp"
#include "lade/label_space.hpp"
#include "lade/rng.hpp"

using namespace lade;

namespace {

LabelDistribution random_distribution(rng::Stream& stream, int num_classes) {
    std::vector<double> p(static_cast<std::size_t>(num_classes));
    double total = 0.0;
    for (double& v : p) {
        v = stream.uniform(0.05, 1.0);
        total += v;
    }
    for (double& v : p) v /= total;
    // Exact renormalisation within the constructor tolerance.
    return LabelDistribution(p);
}

Matrix random_logits(rng::Stream& stream, int rows, int cols, double lo = -4.0,
                     double hi = 4.0) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = stream.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_SUITE("label-space") {

TEST_CASE("distribution validation") {
    CHECK_THROWS_AS(LabelDistribution({1.0}), ParameterError);
    CHECK_THROWS_AS(LabelDistribution({0.5, 0.4}), ParameterError);
    CHECK_THROWS_AS(LabelDistribution({1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(LabelDistribution({1.5, -0.5}), DomainError);
    const LabelDistribution u = LabelDistribution::uniform(4);
    CHECK(u[2] == doctest::Approx(0.25));
    // Explicit epsilon for a near-absent class is allowed.
    CHECK_NOTHROW(LabelDistribution({1.0 - 1e-12, 1e-12}));
}

TEST_CASE("make_longtail degenerates to uniform at ratio one") {
    const CountProfile p = make_longtail(2, 100, 1.0);
    CHECK(p.counts == std::vector<long long>{100, 100});
    CHECK(p.realized_ratio() == doctest::Approx(1.0));
}

TEST_CASE("make_longtail exponential profile") {
    const CountProfile p = make_longtail(3, 100, 100.0);
    CHECK(p.counts == std::vector<long long>{100, 10, 1});

    const CountProfile big = make_longtail(100, 500, 100.0);
    CHECK(big.counts.front() == 500);
    CHECK(big.counts.back() == 5);
    for (std::size_t j = 1; j < big.counts.size(); ++j) {
        CHECK(big.counts[j] <= big.counts[j - 1]);
    }
    CHECK(big.realized_ratio() == doctest::Approx(100.0));
}

TEST_CASE("make_longtail parameter errors") {
    CHECK_THROWS_AS(make_longtail(3, 100, 0.5), ParameterError);
    CHECK_THROWS_AS(make_longtail(3, 10, 100.0), ParameterError);
    CHECK_THROWS_AS(make_longtail(1, 100, 2.0), ParameterError);
}

TEST_CASE("make_shifted_test with no shift keeps counts flat") {
    for (ShiftDirection dir : {ShiftDirection::kForward, ShiftDirection::kBackward}) {
        const CountProfile p = make_shifted_test(5, 50, 1.0, dir);
        CHECK(p.counts == std::vector<long long>(5, 50));
    }
}

TEST_CASE("backward shift at the published extreme") {
    const CountProfile p = make_shifted_test(1000, 50, 50.0, ShiftDirection::kBackward);
    CHECK(p.counts.front() == 1);
    CHECK(p.counts.back() == 50);
    for (std::size_t j = 1; j < p.counts.size(); ++j) CHECK(p.counts[j] >= p.counts[j - 1]);
}

TEST_CASE("forward counts reversed equal backward counts") {
    for (double mu : {2.0, 10.0, 50.0}) {
        const CountProfile fwd = make_shifted_test(17, 50, mu, ShiftDirection::kForward);
        const CountProfile bwd = make_shifted_test(17, 50, mu, ShiftDirection::kBackward);
        std::vector<long long> reversed(fwd.counts.rbegin(), fwd.counts.rend());
        CHECK(reversed == bwd.counts);
    }
}

TEST_CASE("counts_to_distribution") {
    CountProfile pair;
    pair.counts = {1, 1};
    const LabelDistribution half = counts_to_distribution(pair);
    CHECK(half[0] == doctest::Approx(0.5));

    CountProfile tail;
    tail.counts = {100, 10, 1};
    const LabelDistribution d = counts_to_distribution(tail);
    CHECK(d[0] == doctest::Approx(100.0 / 111.0).epsilon(1e-15));
    CHECK(d[1] == doctest::Approx(10.0 / 111.0).epsilon(1e-15));
    CHECK(d[2] == doctest::Approx(1.0 / 111.0).epsilon(1e-15));

    CountProfile empty;
    empty.counts = {0, 0};
    CHECK_THROWS_AS(counts_to_distribution(empty), ParameterError);
}

TEST_CASE("counts_to_distribution sums to one for random counts") {
    rng::Stream stream(21);
    for (int round = 0; round < 50; ++round) {
        CountProfile p;
        p.counts.resize(2 + stream.below(20));
        for (long long& c : p.counts) c = 1 + static_cast<long long>(stream.below(1000));
        const LabelDistribution d = counts_to_distribution(p);
        double total = 0.0;
        for (double v : d.probs()) total += v;
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("importance weights") {
    const LabelDistribution u = LabelDistribution::uniform(2);
    CHECK(importance_weights(u, u) == std::vector<double>{1.0, 1.0});

    const LabelDistribution skew({0.9, 0.1});
    const std::vector<double> w = importance_weights(LabelDistribution({0.5, 0.5}), skew);
    CHECK(w[0] == doctest::Approx(5.0 / 9.0).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(5.0).epsilon(1e-15));

    CHECK_THROWS_AS(importance_weights(LabelDistribution::uniform(3), skew), ParameterError);
}

TEST_CASE("importance weights telescope to one under the source") {
    rng::Stream stream(22);
    for (int round = 0; round < 50; ++round) {
        const int c = 2 + static_cast<int>(stream.below(10));
        const LabelDistribution p_u = random_distribution(stream, c);
        const LabelDistribution p_s = random_distribution(stream, c);
        const std::vector<double> w = importance_weights(p_u, p_s);
        double total = 0.0;
        for (int j = 0; j < c; ++j) total += p_s[j] * w[static_cast<std::size_t>(j)];
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("pc adjustment is the identity for equal priors") {
    rng::Stream stream(23);
    const Matrix f = random_logits(stream, 3, 4);
    const LabelDistribution p = random_distribution(stream, 4);
    CHECK(pc_adjust_logits(f, p, p) == f);  // delta is exactly zero per class
}

TEST_CASE("pc adjustment against hand-computed deltas") {
    Matrix f(1, 2, {0.0, 0.0});
    const Matrix adjusted =
        pc_adjust_logits(f, LabelDistribution({0.9, 0.1}), LabelDistribution({0.5, 0.5}));
    CHECK(adjusted(0, 0) == doctest::Approx(std::log(5.0 / 9.0)).epsilon(1e-15));
    CHECK(adjusted(0, 1) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
}

TEST_CASE("inverse adjustments cancel") {
    rng::Stream stream(24);
    for (int round = 0; round < 20; ++round) {
        const Matrix f = random_logits(stream, 2, 5);
        const LabelDistribution p = random_distribution(stream, 5);
        const LabelDistribution q = random_distribution(stream, 5);
        const Matrix back = pc_adjust_logits(pc_adjust_logits(f, p, q), q, p);
        for (std::size_t i = 0; i < f.data.size(); ++i) {
            CHECK(std::abs(back.data[i] - f.data[i]) <= 1e-12);
        }
    }
}

TEST_CASE("pc softmax with equal priors is the plain softmax") {
    rng::Stream stream(25);
    const Matrix f = random_logits(stream, 4, 3);
    const LabelDistribution p = random_distribution(stream, 3);
    const Matrix pc = pc_softmax_probs(f, p, p);
    const Matrix plain = softmax_rows(f);
    for (std::size_t i = 0; i < pc.data.size(); ++i) {
        CHECK(std::abs(pc.data[i] - plain.data[i]) <= 1e-12);
    }
}

TEST_CASE("pc softmax against direct evaluation") {
    Matrix f(1, 2, {0.0, 0.0});
    const Matrix probs =
        pc_softmax_probs(f, LabelDistribution({0.9, 0.1}), LabelDistribution({0.5, 0.5}));
    CHECK(probs(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(probs(0, 1) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("ratio-weighted form and adjusted-logit form coincide") {
    // The weighted form is computed here with raw ratio arithmetic,
    // independently of the max-shift implementation path.
    rng::Stream stream(26);
    for (int round = 0; round < 100; ++round) {
        const int c = 2 + static_cast<int>(stream.below(6));
        const Matrix f = random_logits(stream, 3, c);
        const LabelDistribution p_s = random_distribution(stream, c);
        const LabelDistribution p_t = random_distribution(stream, c);
        const Matrix via_adjust = pc_softmax_probs(f, p_s, p_t);
        for (int i = 0; i < f.rows; ++i) {
            double denom = 0.0;
            for (int j = 0; j < c; ++j) denom += p_t[j] / p_s[j] * std::exp(f(i, j));
            for (int j = 0; j < c; ++j) {
                const double weighted = p_t[j] / p_s[j] * std::exp(f(i, j)) / denom;
                CHECK(std::abs(via_adjust(i, j) - weighted) <= 1e-12);
            }
        }
    }
}

TEST_CASE("pc softmax rows are distributions and shift-invariant") {
    rng::Stream stream(27);
    for (int round = 0; round < 20; ++round) {
        const int c = 2 + static_cast<int>(stream.below(6));
        Matrix f = random_logits(stream, 4, c);
        const LabelDistribution p_s = random_distribution(stream, c);
        const LabelDistribution p_t = random_distribution(stream, c);
        const Matrix probs = pc_softmax_probs(f, p_s, p_t);
        for (int i = 0; i < probs.rows; ++i) {
            double total = 0.0;
            for (int j = 0; j < c; ++j) {
                CHECK(probs(i, j) > 0.0);
                CHECK(probs(i, j) < 1.0);
                total += probs(i, j);
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }

        // Per-row constant shifts leave the probabilities unchanged.
        Matrix shifted = f;
        for (int i = 0; i < f.rows; ++i) {
            const double c_row = stream.uniform(-50.0, 50.0);
            for (int j = 0; j < c; ++j) shifted(i, j) += c_row;
        }
        const Matrix probs2 = pc_softmax_probs(shifted, p_s, p_t);
        for (std::size_t i = 0; i < probs.data.size(); ++i) {
            CHECK(std::abs(probs.data[i] - probs2.data[i]) <= 1e-12);
        }
    }
}

TEST_CASE("pc softmax with matching priors preserves the argmax") {
    rng::Stream stream(28);
    for (int round = 0; round < 20; ++round) {
        const Matrix f = random_logits(stream, 5, 6);
        const LabelDistribution p = random_distribution(stream, 6);
        const Matrix probs = pc_softmax_probs(f, p, p);
        for (int i = 0; i < f.rows; ++i) {
            int best_logit = 0;
            int best_prob = 0;
            for (int j = 1; j < 6; ++j) {
                if (f(i, j) > f(i, best_logit)) best_logit = j;
                if (probs(i, j) > probs(i, best_prob)) best_prob = j;
            }
            CHECK(best_logit == best_prob);
        }
    }
}

TEST_CASE("profile CSV round trip") {
    const CountProfile p = make_longtail(5, 200, 10.0);
    const std::string csv = profile_to_csv(p);
    CHECK(csv.rfind("class_index,count\n", 0) == 0);
    CHECK(profile_counts_from_csv(csv) == p.counts);
}

}  // TEST_SUITE
