#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lade/label_space.hpp"
#include "lade/matrix.hpp"

namespace lade {

/// Gaussian mixture with known isotropic class conditionals. The class
/// conditional p(x|y) = N(means[y], stddev^2 I) is shared between source and
/// target, which is exactly the label-shift assumption; every posterior the
/// models are trained to approximate is available here in closed form.
struct MixtureWorld {
    int num_classes = 0;
    int dim = 0;
    double spread = 0.0;
    double stddev = 0.0;
    std::uint64_t seed = 0;
    Matrix means;  // num_classes x dim

    bool operator==(const MixtureWorld& other) const = default;
};

/// Labelled sample set drawn from a MixtureWorld.
struct Dataset {
    Matrix features;  // N x dim
    std::vector<int> labels;
    std::vector<long long> class_counts;
    long long total = 0;

    int num_classes() const { return static_cast<int>(class_counts.size()); }
};

/// Deterministic world construction. Means are placed from `seed` on the
/// sphere of radius `spread` with pairwise distances >= spread/2:
/// dim 1 fixes {+spread, -spread} (two classes only), dim 2 jitters a
/// regular polygon under a random rotation, dim >= 3 rejection-samples sphere
/// directions with deterministic retries.
MixtureWorld make_world(int num_classes, int dim, double spread, double stddev,
                        std::uint64_t seed);

/// Exactly profile.counts[c] samples per class, class-major order,
/// bit-reproducible in (world.seed, seed, class, sample index).
Dataset sample(const MixtureWorld& world, const CountProfile& profile, std::uint64_t seed);

/// First `profile.counts[c]` samples of each class from a class-major pool;
/// deterministic subsampling without replacement.
Dataset take_per_class(const Dataset& pool, const CountProfile& profile);

/// log N(x; means[label], stddev^2 I).
double class_log_density(const MixtureWorld& world, std::span<const double> x, int label);

/// Exact posterior prior(y) p(x|y) / sum_c prior(c) p(x|c), evaluated in log
/// space. The oracle against which every trained model is compared.
std::vector<double> bayes_posterior(const MixtureWorld& world, std::span<const double> x,
                                    const LabelDistribution& prior);

/// Posterior for every row of xs.
Matrix bayes_posterior_matrix(const MixtureWorld& world, const Matrix& xs,
                              const LabelDistribution& prior);

/// log(p_u(x|y) / p_u(x)) with p_u(x) = (1/C) sum_c p(x|c): the prior-free
/// log-likelihood ratio that a disentangled model's logits should match.
double true_logit_target(const MixtureWorld& world, std::span<const double> x, int label);

/// CSV with header "label,x0,...,x{dim-1}".
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text, int num_classes);

}  // namespace lade
