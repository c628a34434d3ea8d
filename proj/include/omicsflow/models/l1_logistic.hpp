#ifndef OMICSFLOW_MODELS_L1_LOGISTIC_HPP
#define OMICSFLOW_MODELS_L1_LOGISTIC_HPP

#include "spec.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace omicsflow {

namespace detail {

inline double log1p_exp(double z) {
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

inline double soft_threshold(double v, double t) {
    if (v > t) {
        return v - t;
    }
    if (v < -t) {
        return v + t;
    }
    return 0.0;
}

}

/**
 * @brief L1-penalized logistic regression ("Lasso" classifier) by cyclic coordinate descent.
 *
 * Minimizes `(1/n) sum log(1 + exp(-s_i (b + w.x_i))) + lambda |w|_1` on standardized features,
 * intercept unpenalized. Each coordinate step minimizes the quadratic majorizer given by the logistic
 * curvature bound of 1/4, so the objective never increases from one sweep to the next.
 * The score is the logit `b + w.x`.
 */
class L1Logistic {
public:
    Standardizer standardizer;
    std::vector<double> weights;
    double intercept = 0;
    /// Objective after each completed sweep (index 0 is the starting point).
    std::vector<double> objective_trace;

    static double objective(const std::vector<double>& margin, const std::vector<int>& y, const std::vector<double>& w, double lambda) {
        double loss = 0;
        for (std::size_t i = 0; i < margin.size(); ++i) {
            loss += detail::log1p_exp(y[i] == 1 ? -margin[i] : margin[i]);
        }
        double pen = 0;
        for (double v : w) {
            pen += std::abs(v);
        }
        return loss / static_cast<double>(margin.size()) + lambda * pen;
    }

    static L1Logistic fit(const Matrix& raw, const std::vector<int>& y, const ModelSpec& spec) {
        check_binary_labels(y, raw.rows());
        const double lambda = spec.get("lambda");
        const auto max_sweeps = static_cast<int>(spec.get("max_sweeps"));
        const double tol = spec.get("tol");

        L1Logistic model;
        model.standardizer = Standardizer::fit(raw);
        const Matrix x = model.standardizer.apply(raw);
        const std::size_t n = x.rows(), p = x.cols();
        const double nd = static_cast<double>(n);

        std::vector<double> curvature(p, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < p; ++c) {
                curvature[c] += x(r, c) * x(r, c);
            }
        }
        for (auto& v : curvature) {
            v /= 4.0 * nd;
        }

        model.weights.assign(p, 0.0);
        std::vector<double> margin(n, 0.0);
        model.objective_trace.push_back(objective(margin, y, model.weights, lambda));

        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double max_change = 0;

            // Intercept.
            {
                double g = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    g += detail::sigmoid(margin[r]) - y[r];
                }
                g /= nd;
                double step = -g / 0.25;
                model.intercept += step;
                for (auto& m : margin) {
                    m += step;
                }
                max_change = std::max(max_change, std::abs(step));
            }

            for (std::size_t c = 0; c < p; ++c) {
                if (curvature[c] <= 0) {
                    continue;
                }
                double g = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    g += (detail::sigmoid(margin[r]) - y[r]) * x(r, c);
                }
                g /= nd;
                const double old = model.weights[c];
                const double updated = detail::soft_threshold(old - g / curvature[c], lambda / curvature[c]);
                const double delta = updated - old;
                if (delta != 0) {
                    model.weights[c] = updated;
                    for (std::size_t r = 0; r < n; ++r) {
                        margin[r] += delta * x(r, c);
                    }
                    max_change = std::max(max_change, std::abs(delta));
                }
            }

            model.objective_trace.push_back(objective(margin, y, model.weights, lambda));
            if (max_change < tol) {
                break;
            }
        }
        return model;
    }

    std::vector<double> scores(const Matrix& raw) const {
        std::vector<double> out(raw.rows());
        for (std::size_t r = 0; r < raw.rows(); ++r) {
            double s = intercept;
            for (std::size_t c = 0; c < raw.cols(); ++c) {
                s += weights[c] * (raw(r, c) - standardizer.mean[c]) / standardizer.scale[c];
            }
            out[r] = s;
        }
        return out;
    }
};

inline void to_json(nlohmann::json& j, const L1Logistic& m) {
    j = nlohmann::json{{"standardizer", m.standardizer}, {"weights", m.weights}, {"intercept", m.intercept}};
}

inline void from_json(const nlohmann::json& j, L1Logistic& m) {
    j.at("standardizer").get_to(m.standardizer);
    j.at("weights").get_to(m.weights);
    j.at("intercept").get_to(m.intercept);
}

}

#endif
