#include "lade/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lade/errors.hpp"
#include "lade/io.hpp"
#include "lade/rng.hpp"

namespace lade {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Direction uniform on the unit sphere, scaled to the given radius.
std::vector<double> sphere_point(rng::Stream& stream, int dim, double radius) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : v) {
            x = stream.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (double& x : v) x = x / norm * radius;
    return v;
}

Matrix place_means(int num_classes, int dim, double spread, std::uint64_t seed) {
    Matrix means(num_classes, dim);
    const double min_dist = spread / 2.0;

    if (dim == 1) {
        if (num_classes != 2) {
            throw ConstructionError(
                "make_world: a 1-D sphere holds exactly two classes at the required spacing");
        }
        means(0, 0) = spread;
        means(1, 0) = -spread;
        return means;
    }

    if (dim == 2) {
        // Regular polygon under a random rotation, with per-vertex jitter
        // bounded so the minimum pairwise distance stays >= spread/2.
        const double step = 2.0 * std::numbers::pi / num_classes;
        const double half_min_angle = std::asin(std::min(1.0, min_dist / (2.0 * spread)));
        const double slack = step / 2.0 - half_min_angle;
        if (slack < 0.0) {
            throw ConstructionError("make_world: cannot fit " + std::to_string(num_classes) +
                                    " classes on a circle at spacing spread/2");
        }
        rng::Stream stream = rng::Stream(seed).derive("means2d");
        const double rotation = stream.uniform(0.0, 2.0 * std::numbers::pi);
        for (int c = 0; c < num_classes; ++c) {
            rng::Stream jitter = rng::Stream(seed).derive("jitter2d").derive(
                static_cast<std::uint64_t>(c));
            const double angle =
                rotation + step * c + jitter.uniform(-0.9 * slack, 0.9 * slack);
            means(c, 0) = spread * std::cos(angle);
            means(c, 1) = spread * std::sin(angle);
        }
        return means;
    }

    // dim >= 3: rejection sampling with per-class deterministic retries and
    // whole-placement restarts.
    constexpr int kMaxAttempts = 20000;
    constexpr int kMaxRestarts = 50;
    for (int restart = 0; restart < kMaxRestarts; ++restart) {
        bool failed = false;
        for (int c = 0; c < num_classes && !failed; ++c) {
            bool placed = false;
            for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
                rng::Stream stream = rng::Stream(seed)
                                         .derive("means")
                                         .derive(static_cast<std::uint64_t>(restart))
                                         .derive(static_cast<std::uint64_t>(c))
                                         .derive(static_cast<std::uint64_t>(attempt));
                const std::vector<double> candidate = sphere_point(stream, dim, spread);
                bool ok = true;
                for (int prev = 0; prev < c; ++prev) {
                    if (distance(candidate, means.row(prev)) < min_dist) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    for (int d = 0; d < dim; ++d) {
                        means(c, d) = candidate[static_cast<std::size_t>(d)];
                    }
                    placed = true;
                    break;
                }
            }
            if (!placed) failed = true;
        }
        if (!failed) return means;
    }
    throw ConstructionError("make_world: mean placement failed after bounded retries");
}

}  // namespace

MixtureWorld make_world(int num_classes, int dim, double spread, double stddev,
                        std::uint64_t seed) {
    if (num_classes < 2) throw ParameterError("make_world: need at least 2 classes");
    if (dim < 1) throw ParameterError("make_world: dimension must be >= 1");
    if (!(spread > 0.0)) throw ParameterError("make_world: spread must be positive");
    if (!(stddev > 0.0)) throw ParameterError("make_world: stddev must be positive");

    MixtureWorld world;
    world.num_classes = num_classes;
    world.dim = dim;
    world.spread = spread;
    world.stddev = stddev;
    world.seed = seed;
    world.means = place_means(num_classes, dim, spread, seed);
    return world;
}

Dataset sample(const MixtureWorld& world, const CountProfile& profile, std::uint64_t seed) {
    if (profile.num_classes() != world.num_classes) {
        throw ParameterError("sample: profile has " + std::to_string(profile.num_classes()) +
                             " classes, world has " + std::to_string(world.num_classes));
    }
    for (long long count : profile.counts) {
        if (count < 1) throw ParameterError("sample: every class needs at least one sample");
    }

    Dataset data;
    data.class_counts = profile.counts;
    data.total = profile.total();
    data.features = Matrix(static_cast<int>(data.total), world.dim);
    data.labels.resize(static_cast<std::size_t>(data.total));

    int row = 0;
    for (int c = 0; c < world.num_classes; ++c) {
        for (long long k = 0; k < profile.counts[static_cast<std::size_t>(c)]; ++k, ++row) {
            rng::Stream stream = rng::Stream(world.seed)
                                     .derive("sample")
                                     .derive(seed)
                                     .derive(static_cast<std::uint64_t>(c))
                                     .derive(static_cast<std::uint64_t>(k));
            for (int d = 0; d < world.dim; ++d) {
                data.features(row, d) = world.means(c, d) + world.stddev * stream.normal();
            }
            data.labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return data;
}

Dataset take_per_class(const Dataset& pool, const CountProfile& profile) {
    if (profile.num_classes() != pool.num_classes()) {
        throw ParameterError("take_per_class: class count mismatch");
    }
    for (int c = 0; c < profile.num_classes(); ++c) {
        if (profile.counts[static_cast<std::size_t>(c)] >
            pool.class_counts[static_cast<std::size_t>(c)]) {
            throw ParameterError("take_per_class: class " + std::to_string(c) + " needs " +
                                 std::to_string(profile.counts[static_cast<std::size_t>(c)]) +
                                 " samples but the pool holds " +
                                 std::to_string(pool.class_counts[static_cast<std::size_t>(c)]));
        }
        if (profile.counts[static_cast<std::size_t>(c)] < 1) {
            throw ParameterError("take_per_class: every class needs at least one sample");
        }
    }

    // Locate the class-major blocks of the pool.
    std::vector<long long> offsets(pool.class_counts.size() + 1, 0);
    for (std::size_t c = 0; c < pool.class_counts.size(); ++c) {
        offsets[c + 1] = offsets[c] + pool.class_counts[c];
    }
    for (long long i = 0; i < pool.total; ++i) {
        const int label = pool.labels[static_cast<std::size_t>(i)];
        if (i < offsets[static_cast<std::size_t>(label)] ||
            i >= offsets[static_cast<std::size_t>(label) + 1]) {
            throw ParameterError("take_per_class: pool is not in class-major order");
        }
    }

    Dataset out;
    out.class_counts = profile.counts;
    out.total = profile.total();
    out.features = Matrix(static_cast<int>(out.total), pool.features.cols);
    out.labels.resize(static_cast<std::size_t>(out.total));
    int row = 0;
    for (int c = 0; c < profile.num_classes(); ++c) {
        const long long base = offsets[static_cast<std::size_t>(c)];
        for (long long k = 0; k < profile.counts[static_cast<std::size_t>(c)]; ++k, ++row) {
            const long long src = base + k;
            for (int d = 0; d < pool.features.cols; ++d) {
                out.features(row, d) = pool.features(static_cast<int>(src), d);
            }
            out.labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return out;
}

double class_log_density(const MixtureWorld& world, std::span<const double> x, int label) {
    if (static_cast<int>(x.size()) != world.dim) {
        throw DimensionError("class_log_density: point has dimension " +
                             std::to_string(x.size()) + ", world has " +
                             std::to_string(world.dim));
    }
    if (label < 0 || label >= world.num_classes) {
        throw IndexError("class_log_density: class " + std::to_string(label) +
                         " out of range for " + std::to_string(world.num_classes));
    }
    const double var = world.stddev * world.stddev;
    double sq = 0.0;
    for (int d = 0; d < world.dim; ++d) {
        const double diff = x[static_cast<std::size_t>(d)] - world.means(label, d);
        sq += diff * diff;
    }
    return -0.5 * world.dim * std::log(2.0 * std::numbers::pi * var) - sq / (2.0 * var);
}

std::vector<double> bayes_posterior(const MixtureWorld& world, std::span<const double> x,
                                    const LabelDistribution& prior) {
    if (prior.num_classes() != world.num_classes) {
        throw ParameterError("bayes_posterior: prior has " +
                             std::to_string(prior.num_classes()) + " classes, world has " +
                             std::to_string(world.num_classes));
    }
    std::vector<double> log_joint(static_cast<std::size_t>(world.num_classes));
    for (int c = 0; c < world.num_classes; ++c) {
        log_joint[static_cast<std::size_t>(c)] = std::log(prior[c]) + class_log_density(world, x, c);
    }
    double m = log_joint[0];
    for (double v : log_joint) m = std::max(m, v);
    double sum = 0.0;
    for (double v : log_joint) sum += std::exp(v - m);
    const double log_norm = m + std::log(sum);
    std::vector<double> posterior(log_joint.size());
    for (std::size_t c = 0; c < log_joint.size(); ++c) {
        posterior[c] = std::exp(log_joint[c] - log_norm);
    }
    return posterior;
}

Matrix bayes_posterior_matrix(const MixtureWorld& world, const Matrix& xs,
                              const LabelDistribution& prior) {
    Matrix out(xs.rows, world.num_classes);
    for (int i = 0; i < xs.rows; ++i) {
        const std::vector<double> p = bayes_posterior(world, xs.row(i), prior);
        for (int c = 0; c < world.num_classes; ++c) out(i, c) = p[static_cast<std::size_t>(c)];
    }
    return out;
}

double true_logit_target(const MixtureWorld& world, std::span<const double> x, int label) {
    // log p_u(x|y) - log p_u(x), with the mixture term through a stabilised
    // log-sum-exp: log p_u(x) = lse_c(log p(x|c)) - log C.
    std::vector<double> log_cond(static_cast<std::size_t>(world.num_classes));
    for (int c = 0; c < world.num_classes; ++c) {
        log_cond[static_cast<std::size_t>(c)] = class_log_density(world, x, c);
    }
    double m = log_cond[0];
    for (double v : log_cond) m = std::max(m, v);
    double sum = 0.0;
    for (double v : log_cond) sum += std::exp(v - m);
    const double log_mixture = m + std::log(sum) - std::log(static_cast<double>(world.num_classes));
    return log_cond[static_cast<std::size_t>(label)] - log_mixture;
}

std::string dataset_to_csv(const Dataset& data) {
    std::ostringstream out;
    out << "label";
    for (int d = 0; d < data.features.cols; ++d) out << ",x" << d;
    out << "\n";
    for (int i = 0; i < data.features.rows; ++i) {
        out << data.labels[static_cast<std::size_t>(i)];
        for (int d = 0; d < data.features.cols; ++d) {
            out << "," << io::format_double(data.features(i, d));
        }
        out << "\n";
    }
    return out.str();
}

Dataset dataset_from_csv(const std::string& text, int num_classes) {
    const std::vector<std::string> lines = io::csv_lines(text);
    if (lines.empty() || lines[0].rfind("label", 0) != 0) {
        throw ParameterError("dataset CSV: missing 'label,x0,...' header");
    }
    const int dim = static_cast<int>(io::split(lines[0], ',').size()) - 1;
    if (dim < 1) throw ParameterError("dataset CSV: no feature columns");

    const int n = static_cast<int>(lines.size()) - 1;
    Dataset data;
    data.features = Matrix(n, dim);
    data.labels.resize(static_cast<std::size_t>(n));
    data.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
    data.total = n;
    for (int i = 0; i < n; ++i) {
        const auto fields = io::split(lines[static_cast<std::size_t>(i) + 1], ',');
        if (static_cast<int>(fields.size()) != dim + 1) {
            throw ParameterError("dataset CSV: malformed row: " + lines[static_cast<std::size_t>(i) + 1]);
        }
        const long long label = io::parse_int(fields[0]);
        if (label < 0 || label >= num_classes) {
            throw IndexError("dataset CSV: label " + std::to_string(label) +
                             " out of range for " + std::to_string(num_classes) + " classes");
        }
        data.labels[static_cast<std::size_t>(i)] = static_cast<int>(label);
        ++data.class_counts[static_cast<std::size_t>(label)];
        for (int d = 0; d < dim; ++d) {
            data.features(i, d) = io::parse_double(fields[static_cast<std::size_t>(d) + 1]);
        }
    }
    return data;
}

}  // namespace lade
