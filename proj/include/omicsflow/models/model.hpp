#ifndef OMICSFLOW_MODELS_MODEL_HPP
#define OMICSFLOW_MODELS_MODEL_HPP

#include "../survival.hpp"
#include "gaussian_nb.hpp"
#include "l1_logistic.hpp"
#include "mlp.hpp"
#include "random_forest.hpp"
#include "spec.hpp"
#include "svm_rbf.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace omicsflow {

inline constexpr const char* model_format_tag = "omicsflow-model";
inline constexpr int model_format_version = 1;

/**
 * @brief A fitted model of any family behind one contract.
 *
 * `predict_scores` is oriented so that larger means class 1 (survived past the horizon).
 * For `mlp_regressor` the score is the predicted survival time and the hard-label threshold is the horizon.
 */
struct TrainedModel {
    ModelSpec spec;
    std::size_t n_features = 0;
    double horizon_months = 0;
    std::variant<GaussianNb, SvmRbf, L1Logistic, RandomForest, RectangleMlp, MlpRegressor> params;
};

/// Per-sample regressor weights: 1 for an observed death, `censor_weight` for a censored patient.
inline std::vector<double> regressor_weights(const std::vector<bool>& events, double censor_weight) {
    std::vector<double> w(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        w[i] = events[i] ? 1.0 : censor_weight;
    }
    return w;
}

/// Fits a classifier family on (x, y).
inline TrainedModel fit_classifier(const ModelSpec& spec, const Matrix& x, const std::vector<int>& y) {
    spec.validate();
    if (!spec.is_classifier()) {
        throw ConfigError("mlp_regressor needs survival times; use fit_regressor");
    }
    check_finite(x);
    TrainedModel m{spec, x.cols(), 0, GaussianNb{}};
    switch (spec.family) {
        case Family::gaussian_nb: m.params = GaussianNb::fit(x, y, spec); break;
        case Family::svm_rbf: m.params = SvmRbf::fit(x, y, spec); break;
        case Family::l1_logistic: m.params = L1Logistic::fit(x, y, spec); break;
        case Family::random_forest: m.params = RandomForest::fit(x, y, spec); break;
        case Family::rectangle_mlp: m.params = RectangleMlp::fit(x, y, spec); break;
        case Family::mlp_regressor: break;
    }
    return m;
}

/// Fits the survival-time regressor on observed times with censoring-dependent weights.
inline TrainedModel fit_regressor(const ModelSpec& spec, const Matrix& x, const std::vector<double>& times, const std::vector<bool>& events,
                                  double horizon_months) {
    spec.validate();
    if (spec.family != Family::mlp_regressor) {
        throw ConfigError(std::string(family_name(spec.family)) + " is not a regressor");
    }
    if (events.size() != times.size()) {
        throw DataError("regressor: event flags and times differ in length");
    }
    check_finite(x);
    TrainedModel m{spec, x.cols(), horizon_months, GaussianNb{}};
    m.params = MlpRegressor::fit(x, times, regressor_weights(events, spec.get("censor_weight")), spec);
    return m;
}

inline TrainedModel fit(const ModelSpec& spec, const LabeledDataset& data) {
    if (spec.family == Family::mlp_regressor) {
        return fit_regressor(spec, data.features.values(), data.observed_times, data.events, data.horizon_months);
    }
    return fit_classifier(spec, data.features.values(), data.labels);
}

inline std::vector<double> predict_scores(const TrainedModel& model, const Matrix& x) {
    if (x.cols() != model.n_features) {
        throw DataError("model expects " + std::to_string(model.n_features) + " features, got " + std::to_string(x.cols()));
    }
    return std::visit([&](const auto& p) { return p.scores(x); }, model.params);
}

inline double label_threshold(const TrainedModel& model) {
    switch (model.spec.family) {
        case Family::random_forest: return 0.5;
        case Family::mlp_regressor: return model.horizon_months;
        default: return 0.0;
    }
}

/// Hard labels: score above the family threshold is class 1 (ties at 0.5 go to class 1 for the forest).
inline std::vector<int> predict_labels(const TrainedModel& model, const Matrix& x) {
    const auto s = predict_scores(model, x);
    const double t = label_threshold(model);
    std::vector<int> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = model.spec.family == Family::random_forest ? (s[i] >= t) : (s[i] > t);
    }
    return out;
}

/**
 * Max relative error between backprop and central finite differences for a freshly initialized network of the
 * given MLP spec on `(x, targets)`. Targets are labels in {0,1} for `rectangle_mlp`, times for `mlp_regressor`.
 */
inline double gradient_check(const ModelSpec& spec, const Matrix& x, const std::vector<double>& targets, const std::vector<double>& weights = {}) {
    spec.validate();
    if (spec.family != Family::rectangle_mlp && spec.family != Family::mlp_regressor) {
        throw ConfigError("gradient_check applies to the MLP families only");
    }
    Mlp net(x.cols(), static_cast<std::size_t>(spec.get("n_hidden_layers")), static_cast<std::size_t>(spec.get("width")), spec.seed,
            spec.get("l2"));
    const MlpLoss kind = spec.family == Family::rectangle_mlp ? MlpLoss::logistic : MlpLoss::squared;
    return mlp_gradient_check(net, x, targets, weights, kind);
}

inline nlohmann::json spec_to_json(const ModelSpec& spec) {
    nlohmann::json hp = nlohmann::json::object();
    for (const auto& [k, v] : spec.hyperparameters) {
        hp[k] = v;
    }
    return {{"family", family_name(spec.family)}, {"hyperparameters", hp}, {"seed", spec.seed}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("hyperparameters")) {
        for (const auto& [k, v] : j.at("hyperparameters").items()) {
            spec.hyperparameters[k] = v.get<double>();
        }
    }
    if (j.contains("seed")) {
        spec.seed = j.at("seed").get<std::uint64_t>();
    }
    spec.validate();
    return spec;
}

inline nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json j = spec_to_json(m.spec);
    j["format"] = model_format_tag;
    j["version"] = model_format_version;
    j["n_features"] = m.n_features;
    j["horizon_months"] = m.horizon_months;
    std::visit([&](const auto& p) { j["params"] = p; }, m.params);
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != model_format_tag) {
        throw DataError("not an omicsflow model file");
    }
    if (j.value("version", 0) != model_format_version) {
        throw DataError("unsupported model file version " + std::to_string(j.value("version", 0)));
    }
    TrainedModel m;
    m.spec = spec_from_json(j);
    m.n_features = j.at("n_features").get<std::size_t>();
    m.horizon_months = j.at("horizon_months").get<double>();
    const auto& p = j.at("params");
    switch (m.spec.family) {
        case Family::gaussian_nb: m.params = p.get<GaussianNb>(); break;
        case Family::svm_rbf: m.params = p.get<SvmRbf>(); break;
        case Family::l1_logistic: m.params = p.get<L1Logistic>(); break;
        case Family::random_forest: m.params = p.get<RandomForest>(); break;
        case Family::rectangle_mlp: m.params = p.get<RectangleMlp>(); break;
        case Family::mlp_regressor: m.params = p.get<MlpRegressor>(); break;
    }
    return m;
}

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << model_to_json(m).dump(1) << '\n';
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

}

#endif
