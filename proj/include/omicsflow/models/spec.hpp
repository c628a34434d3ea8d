#ifndef OMICSFLOW_MODELS_SPEC_HPP
#define OMICSFLOW_MODELS_SPEC_HPP

#include "../core/errors.hpp"
#include "../core/matrix.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

/**
 * @file spec.hpp
 * @brief Model families, hyperparameter vocabularies and the feature standardizer shared by several families.
 */

namespace omicsflow {

enum class Family { gaussian_nb, svm_rbf, l1_logistic, random_forest, rectangle_mlp, mlp_regressor };

using Hyperparameters = std::map<std::string, double>;

inline const char* family_name(Family f) {
    switch (f) {
        case Family::gaussian_nb: return "gaussian_nb";
        case Family::svm_rbf: return "svm_rbf";
        case Family::l1_logistic: return "l1_logistic";
        case Family::random_forest: return "random_forest";
        case Family::rectangle_mlp: return "rectangle_mlp";
        case Family::mlp_regressor: return "mlp_regressor";
    }
    return "unknown";
}

inline Family parse_family(const std::string& name) {
    for (auto f : {Family::gaussian_nb, Family::svm_rbf, Family::l1_logistic, Family::random_forest, Family::rectangle_mlp,
                   Family::mlp_regressor}) {
        if (name == family_name(f)) {
            return f;
        }
    }
    throw ConfigError("unknown model family '" + name + "'");
}

/**
 * Allowed hyperparameter: name, inclusive range, default, and whether it must be integral.
 * A default of NaN means "derived from the data" (e.g. RBF gamma, forest mtry).
 */
struct ParamRule {
    const char* name;
    double lo;
    double hi;
    double default_value;
    bool integral;
};

inline const std::vector<ParamRule>& param_rules(Family f) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    static const std::vector<ParamRule> nb{{"var_floor", 0, inf, 1e-9, false}};
    static const std::vector<ParamRule> svm{
        {"C", 1e-12, inf, 1.0, false}, {"gamma", 1e-300, inf, nan, false}, {"tol", 1e-12, 1, 1e-3, false}, {"max_iter", 1, 1e9, 1e7, true}};
    static const std::vector<ParamRule> l1{{"lambda", 0, inf, 0.01, false}, {"max_sweeps", 1, 1e6, 200, true}, {"tol", 0, 1, 1e-7, false}};
    static const std::vector<ParamRule> rf{{"n_trees", 1, 1e5, 200, true},
                                           {"max_depth", -1, 1e4, -1, true},
                                           {"mtry", 1, 1e7, nan, true},
                                           {"bootstrap", 0, 1, 1, true},
                                           {"min_samples_split", 2, 1e7, 2, true}};
    static const std::vector<ParamRule> mlp{{"n_hidden_layers", 1, 16, 1, true}, {"width", 1, 4096, 16, true},
                                            {"epochs", 1, 1e6, 100, true},         {"learning_rate", 1e-12, 10, 0.01, false},
                                            {"batch_size", 1, 1e7, 32, true},      {"l2", 0, inf, 1e-4, false}};
    static const std::vector<ParamRule> reg = [] {
        auto r = mlp;
        r.push_back({"censor_weight", 0, 1, 1, false});
        return r;
    }();
    switch (f) {
        case Family::gaussian_nb: return nb;
        case Family::svm_rbf: return svm;
        case Family::l1_logistic: return l1;
        case Family::random_forest: return rf;
        case Family::rectangle_mlp: return mlp;
        case Family::mlp_regressor: return reg;
    }
    return nb;
}

/**
 * @brief What to fit: family, hyperparameters and the seed for any randomness in fitting.
 */
struct ModelSpec {
    Family family = Family::gaussian_nb;
    Hyperparameters hyperparameters;
    std::uint64_t seed = 0;

    /// Throws `ConfigError` for unknown names, out-of-range or non-integral values.
    void validate() const {
        const auto& rules = param_rules(family);
        for (const auto& [name, value] : hyperparameters) {
            const ParamRule* rule = nullptr;
            for (const auto& r : rules) {
                if (name == r.name) {
                    rule = &r;
                }
            }
            if (!rule) {
                throw ConfigError(std::string("hyperparameter '") + name + "' is not valid for " + family_name(family));
            }
            if (!(value >= rule->lo && value <= rule->hi)) {
                throw ConfigError(std::string(family_name(family)) + ": " + name + "=" + std::to_string(value) + " out of range");
            }
            if (rule->integral && value != std::floor(value)) {
                throw ConfigError(std::string(family_name(family)) + ": " + name + " must be an integer");
            }
        }
    }

    /// Hyperparameter value, or the family default (NaN for data-derived defaults).
    double get(const std::string& name) const {
        if (auto it = hyperparameters.find(name); it != hyperparameters.end()) {
            return it->second;
        }
        for (const auto& r : param_rules(family)) {
            if (name == r.name) {
                return r.default_value;
            }
        }
        throw ConfigError(std::string("no hyperparameter '") + name + "' for " + family_name(family));
    }

    bool is_classifier() const { return family != Family::mlp_regressor; }
};

/**
 * @brief Per-feature centering and scaling learned on training data.
 * Constant features get a scale of 1 so they map to 0.
 */
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& x) {
        Standardizer s;
        s.mean.assign(x.cols(), 0.0);
        s.scale.assign(x.cols(), 1.0);
        const double n = static_cast<double>(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
                s.mean[c] += x(r, c);
            }
        }
        for (auto& m : s.mean) {
            m /= n;
        }
        std::vector<double> ss(x.cols(), 0.0);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
                double d = x(r, c) - s.mean[c];
                ss[c] += d * d;
            }
        }
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double sd = std::sqrt(ss[c] / n);
            s.scale[c] = sd > 1e-12 ? sd : 1.0;
        }
        return s;
    }

    Matrix apply(const Matrix& x) const {
        Matrix out(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
                out(r, c) = (x(r, c) - mean[c]) / scale[c];
            }
        }
        return out;
    }
};

inline void to_json(nlohmann::json& j, const Standardizer& s) {
    j = nlohmann::json{{"mean", s.mean}, {"scale", s.scale}};
}

inline void from_json(const nlohmann::json& j, Standardizer& s) {
    j.at("mean").get_to(s.mean);
    j.at("scale").get_to(s.scale);
}

inline void check_binary_labels(const std::vector<int>& y, std::size_t n_rows) {
    if (y.size() != n_rows) {
        throw DataError("label count " + std::to_string(y.size()) + " does not match row count " + std::to_string(n_rows));
    }
    if (n_rows < 2) {
        throw DataError("at least 2 samples are required to fit a model");
    }
    bool has0 = false, has1 = false;
    for (int v : y) {
        if (v == 0) {
            has0 = true;
        } else if (v == 1) {
            has1 = true;
        } else {
            throw DataError("labels must be 0 or 1");
        }
    }
    if (!has0 || !has1) {
        throw DataError("training labels contain a single class");
    }
}

inline void check_finite(const Matrix& x) {
    for (double v : x.data()) {
        if (!std::isfinite(v)) {
            throw DataError("features contain a non-finite value");
        }
    }
}

}

#endif
