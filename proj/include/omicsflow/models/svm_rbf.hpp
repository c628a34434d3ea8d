#ifndef OMICSFLOW_MODELS_SVM_RBF_HPP
#define OMICSFLOW_MODELS_SVM_RBF_HPP

#include "spec.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace omicsflow {

namespace detail {

inline double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double d = a[k] - b[k];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

}

/**
 * @brief C-SVM with an RBF kernel, trained by SMO.
 *
 * The dual is solved with the maximal-violating-pair working set (first-order selection as in LIBSVM).
 * Iteration stops when the violation `max_{I_up} -y G - min_{I_low} -y G` falls below `tol`.
 * When `gamma` is not given it is `1 / (n_features * Var(X))`.
 * The score is the signed decision value `sum_i y_i alpha_i K(x_i, x) - rho`.
 */
class SvmRbf {
public:
    Matrix support_vectors;
    /// `y_i * alpha_i` for each support vector.
    std::vector<double> coef;
    double rho = 0;
    double gamma = 1;

    // Training diagnostics.
    std::vector<double> alpha;
    double final_violation = 0;
    long long iterations = 0;

    static double default_gamma(const Matrix& x) {
        double mean = 0;
        for (double v : x.data()) {
            mean += v;
        }
        mean /= static_cast<double>(x.data().size());
        double var = 0;
        for (double v : x.data()) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(x.data().size());
        return var > 0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
    }

    static SvmRbf fit(const Matrix& x, const std::vector<int>& labels, const ModelSpec& spec) {
        check_binary_labels(labels, x.rows());
        const double c = spec.get("C");
        const double tol = spec.get("tol");
        const auto max_iter = static_cast<long long>(spec.get("max_iter"));
        double g = spec.get("gamma");
        if (std::isnan(g)) {
            g = default_gamma(x);
        }

        const std::size_t n = x.rows();
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = labels[i] == 1 ? 1.0 : -1.0;
        }
        Matrix k(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            k(i, i) = 1.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                double v = detail::rbf(x.row(i), x.row(j), g);
                k(i, j) = v;
                k(j, i) = v;
            }
        }

        SvmRbf model;
        model.gamma = g;
        std::vector<double> a(n, 0.0), grad(n, -1.0);
        constexpr double tau = 1e-12;

        auto in_up = [&](std::size_t t) { return (y[t] > 0 && a[t] < c) || (y[t] < 0 && a[t] > 0); };
        auto in_low = [&](std::size_t t) { return (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < c); };

        long long iter = 0;
        double violation = 0;
        while (true) {
            double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
            std::size_t i = n, j = n;
            for (std::size_t t = 0; t < n; ++t) {
                double v = -y[t] * grad[t];
                if (in_up(t) && v > gmax) {
                    gmax = v;
                    i = t;
                }
                if (in_low(t) && v < gmin) {
                    gmin = v;
                    j = t;
                }
            }
            violation = (i == n || j == n) ? 0.0 : gmax - gmin;
            if (violation < tol || iter >= max_iter) {
                break;
            }
            ++iter;

            const double old_ai = a[i], old_aj = a[j];
            const double qij = y[i] * y[j] * k(i, j);
            if (y[i] != y[j]) {
                double quad = k(i, i) + k(j, j) + 2 * qij;
                if (quad <= 0) {
                    quad = tau;
                }
                double delta = (-grad[i] - grad[j]) / quad;
                double diff = a[i] - a[j];
                a[i] += delta;
                a[j] += delta;
                if (diff > 0) {
                    if (a[j] < 0) {
                        a[j] = 0;
                        a[i] = diff;
                    }
                } else if (a[i] < 0) {
                    a[i] = 0;
                    a[j] = -diff;
                }
                if (diff > 0) {
                    if (a[i] > c) {
                        a[i] = c;
                        a[j] = c - diff;
                    }
                } else if (a[j] > c) {
                    a[j] = c;
                    a[i] = c + diff;
                }
            } else {
                double quad = k(i, i) + k(j, j) - 2 * qij;
                if (quad <= 0) {
                    quad = tau;
                }
                double delta = (grad[i] - grad[j]) / quad;
                double sum = a[i] + a[j];
                a[i] -= delta;
                a[j] += delta;
                if (sum > c) {
                    if (a[i] > c) {
                        a[i] = c;
                        a[j] = sum - c;
                    }
                } else if (a[j] < 0) {
                    a[j] = 0;
                    a[i] = sum;
                }
                if (sum > c) {
                    if (a[j] > c) {
                        a[j] = c;
                        a[i] = sum - c;
                    }
                } else if (a[i] < 0) {
                    a[i] = 0;
                    a[j] = sum;
                }
            }

            const double dai = a[i] - old_ai, daj = a[j] - old_aj;
            for (std::size_t t = 0; t < n; ++t) {
                grad[t] += y[t] * (y[i] * k(i, t) * dai + y[j] * k(j, t) * daj);
            }
        }

        // rho: mean of y*G over free variables, else midpoint of the feasible interval.
        double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity(), sum_free = 0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const double yg = y[t] * grad[t];
            if (a[t] >= c) {
                if (y[t] < 0) {
                    ub = std::min(ub, yg);
                } else {
                    lb = std::max(lb, yg);
                }
            } else if (a[t] <= 0) {
                if (y[t] > 0) {
                    ub = std::min(ub, yg);
                } else {
                    lb = std::max(lb, yg);
                }
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        model.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2;

        std::vector<std::size_t> sv;
        for (std::size_t t = 0; t < n; ++t) {
            if (a[t] > 0) {
                sv.push_back(t);
                model.coef.push_back(y[t] * a[t]);
            }
        }
        model.support_vectors = x.select_rows(sv);
        model.alpha = std::move(a);
        model.final_violation = violation;
        model.iterations = iter;
        return model;
    }

    std::vector<double> scores(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            double s = -rho;
            for (std::size_t t = 0; t < support_vectors.rows(); ++t) {
                s += coef[t] * detail::rbf(support_vectors.row(t), x.row(r), gamma);
            }
            out[r] = s;
        }
        return out;
    }
};

inline void to_json(nlohmann::json& j, const SvmRbf& m) {
    j = nlohmann::json{{"gamma", m.gamma}, {"rho", m.rho}, {"coef", m.coef}, {"n_features", m.support_vectors.cols()},
                       {"support_vectors", m.support_vectors.data()}};
}

inline void from_json(const nlohmann::json& j, SvmRbf& m) {
    j.at("gamma").get_to(m.gamma);
    j.at("rho").get_to(m.rho);
    j.at("coef").get_to(m.coef);
    auto data = j.at("support_vectors").get<std::vector<double>>();
    m.support_vectors = Matrix(m.coef.size(), j.at("n_features").get<std::size_t>(), std::move(data));
}

}

#endif
