#ifndef OMICSFLOW_MODELS_GAUSSIAN_NB_HPP
#define OMICSFLOW_MODELS_GAUSSIAN_NB_HPP

#include "spec.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <vector>

namespace omicsflow {

/**
 * @brief Gaussian naive Bayes for two classes.
 *
 * Per-class feature means and population variances (floored at `var_floor`) plus empirical class priors.
 * The score is the log-posterior ratio `log p(1|x) - log p(0|x)`.
 */
class GaussianNb {
public:
    std::vector<double> mean[2];
    std::vector<double> var[2];
    double log_prior[2] = {0, 0};

    static GaussianNb fit(const Matrix& x, const std::vector<int>& y, const ModelSpec& spec) {
        check_binary_labels(y, x.rows());
        const double floor = spec.get("var_floor");
        GaussianNb nb;
        std::size_t count[2] = {0, 0};
        for (int k = 0; k < 2; ++k) {
            nb.mean[k].assign(x.cols(), 0.0);
            nb.var[k].assign(x.cols(), 0.0);
        }
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const int k = y[r];
            ++count[k];
            for (std::size_t c = 0; c < x.cols(); ++c) {
                nb.mean[k][c] += x(r, c);
            }
        }
        for (int k = 0; k < 2; ++k) {
            for (auto& m : nb.mean[k]) {
                m /= static_cast<double>(count[k]);
            }
        }
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const int k = y[r];
            for (std::size_t c = 0; c < x.cols(); ++c) {
                double d = x(r, c) - nb.mean[k][c];
                nb.var[k][c] += d * d;
            }
        }
        for (int k = 0; k < 2; ++k) {
            for (auto& v : nb.var[k]) {
                v = std::max(v / static_cast<double>(count[k]), floor);
            }
            nb.log_prior[k] = std::log(static_cast<double>(count[k]) / static_cast<double>(x.rows()));
        }
        return nb;
    }

    std::vector<double> scores(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            double ll[2];
            for (int k = 0; k < 2; ++k) {
                double s = log_prior[k];
                for (std::size_t c = 0; c < x.cols(); ++c) {
                    double d = x(r, c) - mean[k][c];
                    s -= 0.5 * (std::log(2 * std::numbers::pi * var[k][c]) + d * d / var[k][c]);
                }
                ll[k] = s;
            }
            out[r] = ll[1] - ll[0];
        }
        return out;
    }
};

inline void to_json(nlohmann::json& j, const GaussianNb& m) {
    j = nlohmann::json{{"mean0", m.mean[0]}, {"mean1", m.mean[1]}, {"var0", m.var[0]}, {"var1", m.var[1]},
                       {"log_prior", {m.log_prior[0], m.log_prior[1]}}};
}

inline void from_json(const nlohmann::json& j, GaussianNb& m) {
    j.at("mean0").get_to(m.mean[0]);
    j.at("mean1").get_to(m.mean[1]);
    j.at("var0").get_to(m.var[0]);
    j.at("var1").get_to(m.var[1]);
    m.log_prior[0] = j.at("log_prior").at(0).get<double>();
    m.log_prior[1] = j.at("log_prior").at(1).get<double>();
}

}

#endif
