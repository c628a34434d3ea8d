#ifndef OMICSFLOW_PROJECT_HPP
#define OMICSFLOW_PROJECT_HPP

#include "core/errors.hpp"
#include "core/matrix.hpp"
#include "core/random.hpp"
#include "dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file project.hpp
 * @brief Exact t-SNE to any output dimension.
 *
 * All pairwise terms are computed explicitly, so the cost is O(N^2 d) per iteration.
 * That is affordable at a few thousand patients and, unlike space-partitioning approximations,
 * works for the high output dimensions (tens of components) used as classifier inputs.
 */

namespace omicsflow {

struct TsneConfig {
    int output_dims = 2;
    double perplexity = 30;
    double learning_rate = 200;
    int iterations = 1000;
    double early_exaggeration_factor = 12;
    int early_exaggeration_iters = 250;
    std::uint64_t seed = 42;
    /// Iteration at which momentum switches from 0.5 to 0.8.
    int momentum_switch_iter = 250;
    /// KL divergence is recorded every this many iterations (plus end of exaggeration and the final iteration).
    int trace_every = 50;

    void validate(std::size_t n_points) const {
        if (output_dims < 1) {
            throw ConfigError("tsne: output_dims must be at least 1");
        }
        if (!(perplexity > 0) || !(learning_rate > 0) || iterations <= 0) {
            throw ConfigError("tsne: perplexity, learning_rate and iterations must be positive");
        }
        if (early_exaggeration_factor < 1 || early_exaggeration_iters < 0) {
            throw ConfigError("tsne: early exaggeration factor must be >= 1 and its iteration count >= 0");
        }
        if (n_points < 4) {
            throw ConfigError("tsne: at least 4 points are required");
        }
        if (!(perplexity < (static_cast<double>(n_points) - 1) / 3)) {
            throw ConfigError("tsne: perplexity " + std::to_string(perplexity) + " too large for " + std::to_string(n_points) +
                              " points (must be below (N-1)/3)");
        }
    }
};

struct KlTracePoint {
    int iteration = 0;
    double kl = 0;
};

/**
 * @brief Low-dimensional coordinates, one row per patient, with the optimisation trace.
 */
struct Embedding {
    std::vector<std::string> patient_ids;
    Matrix coords;
    std::vector<KlTracePoint> kl_trace;
};

inline Matrix squared_distances(const Matrix& x) {
    const std::size_t n = x.rows();
    Matrix d(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            auto xj = x.row(j);
            double s = 0;
            for (std::size_t k = 0; k < xi.size(); ++k) {
                double diff = xi[k] - xj[k];
                s += diff * diff;
            }
            d(i, j) = s;
            d(j, i) = s;
        }
    }
    return d;
}

/**
 * Conditional affinities `P(j|i)` (row `i` sums to one) with Gaussian bandwidths chosen so each row's perplexity,
 * `exp(entropy in nats)`, matches `perplexity`.
 *
 * Each row's precision is bracketed by doubling/halving (at most 64 steps) and then refined by bisection.
 * Rows that cannot be bracketed, which happens when a point's neighbours are all at the same distance, raise `NumericalError`.
 */
inline Matrix conditional_affinities(const Matrix& x, double perplexity) {
    const std::size_t n = x.rows();
    const Matrix dist = squared_distances(x);
    const double target = std::log(perplexity);
    Matrix cond(n, n, 0.0);
    std::vector<double> shifted(n), p(n);

    for (std::size_t i = 0; i < n; ++i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                dmin = std::min(dmin, dist(i, j));
            }
        }
        double dsum = 0;
        for (std::size_t j = 0; j < n; ++j) {
            shifted[j] = j == i ? 0 : dist(i, j) - dmin;
            dsum += shifted[j];
        }

        auto entropy_at = [&](double beta) {
            double sum = 0, weighted = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    p[j] = 0;
                    continue;
                }
                p[j] = std::exp(-beta * shifted[j]);
                sum += p[j];
                weighted += shifted[j] * p[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
                p[j] /= sum;
            }
            return std::log(sum) + beta * weighted / sum;
        };

        double beta = dsum > 0 ? static_cast<double>(n - 1) / dsum : 1.0;
        double lo = 0, hi = std::numeric_limits<double>::infinity();
        int bracket_steps = 0;
        bool converged = false;
        for (int it = 0; it < 500; ++it) {
            const double h = entropy_at(beta);
            if (std::abs(std::exp(h) - perplexity) < 1e-7) {
                converged = true;
                break;
            }
            if (h > target) {
                lo = beta;
            } else {
                hi = beta;
            }
            if (std::isinf(hi) || lo == 0) {
                if (++bracket_steps > 64) {
                    break;
                }
                beta = std::isinf(hi) ? beta * 2 : beta / 2;
            } else {
                beta = std::sqrt(lo * hi);
                if (hi - lo <= 1e-15 * hi) {
                    converged = std::abs(std::exp(entropy_at(beta)) - perplexity) < 1e-4;
                    break;
                }
            }
        }
        if (!converged) {
            throw NumericalError("tsne: bandwidth search for point " + std::to_string(i) +
                                 " did not converge (duplicate or equidistant points?)");
        }
        for (std::size_t j = 0; j < n; ++j) {
            cond(i, j) = p[j];
        }
    }
    return cond;
}

/// `(P(j|i) + P(i|j)) / 2N`: symmetric, zero diagonal, sums to one.
inline Matrix symmetrize_affinities(const Matrix& cond) {
    const std::size_t n = cond.rows();
    Matrix p(n, n, 0.0);
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = (cond(i, j) + cond(j, i)) / denom;
            p(i, j) = v;
            p(j, i) = v;
        }
    }
    return p;
}

inline Matrix input_affinities(const Matrix& x, double perplexity) {
    if (x.rows() < 4) {
        throw ConfigError("tsne: at least 4 points are required");
    }
    return symmetrize_affinities(conditional_affinities(x, perplexity));
}

/// Student-t kernel `1 / (1 + |y_i - y_j|^2)` with zero diagonal, and its off-diagonal sum.
inline Matrix student_kernel(const Matrix& y, double& total) {
    const std::size_t n = y.rows();
    Matrix w(n, n, 0.0);
    total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto yi = y.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            auto yj = y.row(j);
            double s = 0;
            for (std::size_t k = 0; k < yi.size(); ++k) {
                double diff = yi[k] - yj[k];
                s += diff * diff;
            }
            double v = 1.0 / (1.0 + s);
            w(i, j) = v;
            w(j, i) = v;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            total += w(i, j);
        }
    }
    return w;
}

/// KL(P || Q) for the Student-t low-dimensional similarities of `y`.
inline double kl_divergence(const Matrix& p, const Matrix& y) {
    double z = 0;
    Matrix w = student_kernel(y, z);
    double kl = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) {
            if (i != j && p(i, j) > 0) {
                kl += p(i, j) * std::log(p(i, j) * z / w(i, j));
            }
        }
    }
    return kl;
}

/**
 * Gradient of KL(`scale` * P || Q) with respect to the embedding:
 * `4 sum_j (scale * p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j)`.
 * `scale` is the early-exaggeration factor (1 outside that phase).
 */
inline Matrix kl_gradient(const Matrix& p, const Matrix& y, double scale = 1.0) {
    if (p.rows() != y.rows() || p.cols() != y.rows()) {
        throw ConfigError("kl_gradient: affinity and embedding shapes disagree");
    }
    const std::size_t n = y.rows(), d = y.cols();
    double z = 0;
    Matrix w = student_kernel(y, z);
    Matrix grad(n, d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto yi = y.row(i);
        auto gi = grad.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const double mult = (scale * p(i, j) - w(i, j) / z) * w(i, j);
            auto yj = y.row(j);
            for (std::size_t k = 0; k < d; ++k) {
                gi[k] += mult * (yi[k] - yj[k]);
            }
        }
        for (std::size_t k = 0; k < d; ++k) {
            gi[k] *= 4.0;
        }
    }
    return grad;
}

/**
 * Exact t-SNE.
 *
 * Gradient descent with momentum (0.5 before `momentum_switch_iter`, 0.8 after), per-coordinate adaptive gains,
 * and early exaggeration of P for the first `early_exaggeration_iters` iterations.
 * Each point starts at N(0, 1e-4^2) drawn from a stream keyed by `(seed, hash(patient id))`, and all sums run in
 * patient-id order, so permuting the input rows permutes the output rows and nothing else.
 */
inline Embedding tsne(const FeatureMatrix& features, const TsneConfig& config) {
    const std::size_t n = features.rows();
    config.validate(n);
    const auto d = static_cast<std::size_t>(config.output_dims);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return features.patient_ids()[a] < features.patient_ids()[b]; });
    const Matrix x = features.values().select_rows(order);
    const Matrix p = input_affinities(x, config.perplexity);

    Matrix y(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(config.seed, fnv1a(features.patient_ids()[order[i]])));
        std::normal_distribution<double> normal(0.0, 1e-4);
        for (std::size_t k = 0; k < d; ++k) {
            y(i, k) = normal(rng);
        }
    }

    Matrix update(n, d, 0.0), gains(n, d, 1.0);
    Embedding out;
    for (int iter = 0; iter < config.iterations; ++iter) {
        const double scale = iter < config.early_exaggeration_iters ? config.early_exaggeration_factor : 1.0;
        const double momentum = iter < config.momentum_switch_iter ? 0.5 : 0.8;
        const Matrix grad = kl_gradient(p, y, scale);

        for (std::size_t idx = 0; idx < grad.data().size(); ++idx) {
            double g = grad.data()[idx];
            double& gain = gains.data()[idx];
            double& u = update.data()[idx];
            gain = ((g > 0) != (u > 0)) ? gain + 0.2 : gain * 0.8;
            gain = std::max(gain, 0.01);
            u = momentum * u - config.learning_rate * gain * g;
            y.data()[idx] += u;
        }
        for (std::size_t k = 0; k < d; ++k) {
            double mean = 0;
            for (std::size_t i = 0; i < n; ++i) {
                mean += y(i, k);
            }
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                y(i, k) -= mean;
            }
        }

        const int done = iter + 1;
        if (done == config.early_exaggeration_iters || done == config.iterations ||
            (config.trace_every > 0 && done % config.trace_every == 0)) {
            out.kl_trace.push_back({done, kl_divergence(p, y)});
        }
    }

    out.patient_ids = features.patient_ids();
    out.coords = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto src = y.row(i);
        std::copy(src.begin(), src.end(), out.coords.row(order[i]).begin());
    }
    return out;
}

/// KL recorded at the end of early exaggeration, if the trace contains it.
inline std::optional<double> kl_after_exaggeration(const Embedding& e, const TsneConfig& config) {
    for (const auto& t : e.kl_trace) {
        if (t.iteration == config.early_exaggeration_iters) {
            return t.kl;
        }
    }
    return std::nullopt;
}

inline std::vector<std::string> tsne_feature_names(std::size_t dims) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < dims; ++k) {
        names.push_back("tsne_" + std::to_string(k));
    }
    return names;
}

inline FeatureMatrix embedding_features(const Embedding& e) {
    return FeatureMatrix(e.patient_ids, tsne_feature_names(e.coords.cols()), e.coords);
}

/**
 * Projects with t-SNE and appends an `age` column taken from `clinical` (age is not part of the projection input).
 * Columns are `tsne_0 .. tsne_{d-1}, age`.
 */
inline FeatureMatrix project_with_age(const FeatureMatrix& features, const std::vector<ClinicalRecord>& clinical, const TsneConfig& config) {
    std::unordered_map<std::string, const ClinicalRecord*> by_id;
    for (const auto& rec : clinical) {
        by_id.emplace(rec.patient_id, &rec);
    }
    std::vector<double> ages(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        auto it = by_id.find(features.patient_ids()[i]);
        if (it == by_id.end() || !it->second->age_years) {
            throw DataError("project_with_age: no age for patient '" + features.patient_ids()[i] + "'");
        }
        ages[i] = *it->second->age_years;
    }

    const Embedding e = tsne(features, config);
    const std::size_t d = e.coords.cols();
    Matrix values(features.rows(), d + 1);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            values(i, k) = e.coords(i, k);
        }
        values(i, d) = ages[i];
    }
    auto names = tsne_feature_names(d);
    names.push_back("age");
    return FeatureMatrix(features.patient_ids(), std::move(names), std::move(values));
}

}

#endif
