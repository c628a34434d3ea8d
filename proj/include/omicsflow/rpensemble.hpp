#ifndef OMICSFLOW_RPENSEMBLE_HPP
#define OMICSFLOW_RPENSEMBLE_HPP

#include "core/parallel.hpp"
#include "core/random.hpp"
#include "models/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace omicsflow {

struct RpConfig {
    std::size_t b1_groups = 100;
    std::size_t b2_per_group = 20;
    std::size_t projected_dim = 5;
    ModelSpec base{Family::gaussian_nb, {}, 0};
    /// Vote threshold; tuned on the training data when absent.
    std::optional<double> vote_threshold_alpha;
    double selection_holdout_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const {
        if (b1_groups == 0 || b2_per_group == 0) {
            throw ConfigError("rp_ensemble: b1 and b2 must be positive");
        }
        if (projected_dim == 0) {
            throw ConfigError("rp_ensemble: projected dimension must be at least 1");
        }
        if (!base.is_classifier()) {
            throw ConfigError("rp_ensemble: base model must be a classifier");
        }
        base.validate();
        if (vote_threshold_alpha && !(*vote_threshold_alpha > 0 && *vote_threshold_alpha < 1)) {
            throw ConfigError("rp_ensemble: alpha must lie in (0, 1)");
        }
        if (!(selection_holdout_fraction > 0 && selection_holdout_fraction < 1)) {
            throw ConfigError("rp_ensemble: holdout fraction must lie in (0, 1)");
        }
    }
};

/**
 * Row-orthonormal `d x m` matrix: Gram-Schmidt on a standard Gaussian matrix, which gives the Haar measure.
 * A numerically rank-deficient draw is discarded and redrawn, at most 8 times.
 */
inline Matrix sample_projection(std::size_t m, std::size_t d, Rng& rng) {
    if (d == 0 || d > m) {
        throw ConfigError("projection dimension " + std::to_string(d) + " must lie in [1, " + std::to_string(m) + "]");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int attempt = 0; attempt < 8; ++attempt) {
        Matrix a(d, m);
        for (auto& v : a.data()) {
            v = normal(rng);
        }
        bool ok = true;
        for (std::size_t i = 0; i < d && ok; ++i) {
            // Two passes of classical Gram-Schmidt keep the rows orthogonal to working precision.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < i; ++k) {
                    double dot = 0;
                    for (std::size_t c = 0; c < m; ++c) {
                        dot += a(i, c) * a(k, c);
                    }
                    for (std::size_t c = 0; c < m; ++c) {
                        a(i, c) -= dot * a(k, c);
                    }
                }
            }
            double norm = 0;
            for (std::size_t c = 0; c < m; ++c) {
                norm += a(i, c) * a(i, c);
            }
            norm = std::sqrt(norm);
            if (norm < 1e-10) {
                ok = false;
                break;
            }
            for (std::size_t c = 0; c < m; ++c) {
                a(i, c) /= norm;
            }
        }
        if (ok) {
            return a;
        }
    }
    throw NumericalError("random projection stayed rank deficient after 8 draws");
}

/**
 * Stratified split: a `fraction` share of each class (rounded, at least one when the class has two or more members)
 * goes to the holdout. Returns (train, holdout) index lists in ascending order.
 */
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(const std::vector<int>& y, double fraction, Rng& rng) {
    std::vector<std::size_t> train, hold;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == cls) {
                idx.push_back(i);
            }
        }
        shuffle_in_place(idx, rng);
        std::size_t n_hold = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
        if (idx.size() >= 2) {
            n_hold = std::clamp<std::size_t>(n_hold, 1, idx.size() - 1);
        } else {
            n_hold = 0;
        }
        hold.insert(hold.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
        train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(hold.begin(), hold.end());
    return {train, hold};
}

/**
 * @brief Random-projection ensemble.
 *
 * Projections act on the non-constant training columns only; constant columns receive zero weight
 * in every stored projection and therefore zero importance.
 */
struct RpModel {
    RpConfig config;
    std::size_t n_features = 0;
    /// Full-width `d x M` projections, one per group.
    std::vector<Matrix> projections;
    std::vector<TrainedModel> base_models;
    double alpha = 0.5;
    std::vector<double> feature_importance;
    /// Holdout error of every candidate, `group_errors[g][b]`, and the chosen index per group.
    std::vector<std::vector<double>> group_errors;
    std::vector<std::size_t> selected;
};

namespace detail {

inline Matrix project_rows(const Matrix& x, const Matrix& a) {
    return multiply_transposed(x, a);
}

inline Matrix expand_projection(const Matrix& compact, const std::vector<std::size_t>& active, std::size_t m) {
    Matrix full(compact.rows(), m);
    for (std::size_t r = 0; r < compact.rows(); ++r) {
        for (std::size_t k = 0; k < active.size(); ++k) {
            full(r, active[k]) = compact(r, k);
        }
    }
    return full;
}

inline std::vector<double> vote_fraction(const std::vector<std::vector<int>>& votes, std::size_t n) {
    std::vector<double> s(n, 0.0);
    for (const auto& v : votes) {
        for (std::size_t i = 0; i < n; ++i) {
            s[i] += v[i];
        }
    }
    for (auto& v : s) {
        v /= static_cast<double>(votes.size());
    }
    return s;
}

}

/// Seed of candidate `b` in group `g`; both the projection and the base model's seed derive from it.
inline std::uint64_t rp_task_seed(const RpConfig& config, std::size_t g, std::size_t b) {
    return derive_seed(config.seed, g, b);
}

/// The projection drawn for candidate `(g, b)` over `m_active` non-constant columns.
inline Matrix rp_candidate_projection(const RpConfig& config, std::size_t g, std::size_t b, std::size_t m_active) {
    Rng rng(derive_seed(rp_task_seed(config, g, b), 0x70726f6a));
    return sample_projection(m_active, config.projected_dim, rng);
}

inline ModelSpec rp_base_spec(const RpConfig& config, std::size_t g, std::size_t b) {
    ModelSpec s = config.base;
    s.seed = derive_seed(rp_task_seed(config, g, b), 0x62617365);
    return s;
}

/// Indices of columns whose training values are not all equal.
inline std::vector<std::size_t> non_constant_columns(const Matrix& x) {
    std::vector<std::size_t> active;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t r = 1; r < x.rows(); ++r) {
            if (x(r, c) != x(0, c)) {
                active.push_back(c);
                break;
            }
        }
    }
    return active;
}

inline std::vector<double> rp_predict_scores(const RpModel& model, const Matrix& x) {
    if (x.cols() != model.n_features) {
        throw DataError("rp_ensemble expects " + std::to_string(model.n_features) + " features, got " + std::to_string(x.cols()));
    }
    std::vector<std::vector<int>> votes;
    for (std::size_t g = 0; g < model.projections.size(); ++g) {
        votes.push_back(predict_labels(model.base_models[g], detail::project_rows(x, model.projections[g])));
    }
    return detail::vote_fraction(votes, x.rows());
}

inline std::vector<int> rp_predict_labels(const RpModel& model, const Matrix& x) {
    auto s = rp_predict_scores(model, x);
    std::vector<int> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = s[i] >= model.alpha ? 1 : 0;
    }
    return out;
}

/**
 * Trains the ensemble. For each of the B1 groups, B2 candidate projections are scored by the base model's
 * error on a stratified holdout after fitting on the rest; the best candidate (first on ties) is refit on all
 * training rows. Candidates run on up to `workers` threads; the result does not depend on the worker count.
 */
inline RpModel rp_train(const Matrix& x, const std::vector<int>& y, const RpConfig& config, std::size_t workers = 1) {
    config.validate();
    check_binary_labels(y, x.rows());
    check_finite(x);
    const auto active = non_constant_columns(x);
    if (active.empty()) {
        throw DataError("rp_ensemble: every feature column is constant");
    }
    if (config.projected_dim > active.size()) {
        throw ConfigError("rp_ensemble: projected dimension " + std::to_string(config.projected_dim) + " exceeds the " +
                          std::to_string(active.size()) + " non-constant features");
    }
    const Matrix xa = x.select_cols(active);
    const std::size_t b1 = config.b1_groups, b2 = config.b2_per_group;

    RpModel model;
    model.config = config;
    model.n_features = x.cols();
    model.group_errors.assign(b1, std::vector<double>(b2, 0.0));
    model.selected.assign(b1, 0);
    model.projections.resize(b1);
    model.base_models.resize(b1);

    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits(b1);
    for (std::size_t g = 0; g < b1; ++g) {
        Rng rng(derive_seed(config.seed, g, 0x73706c6974));
        splits[g] = stratified_holdout(y, config.selection_holdout_fraction, rng);
        std::vector<int> ytr;
        for (auto i : splits[g].first) {
            ytr.push_back(y[i]);
        }
        if (std::count(ytr.begin(), ytr.end(), 1) == 0 || std::count(ytr.begin(), ytr.end(), 0) == 0) {
            throw DataError("rp_ensemble: holdout split leaves a single-class training set");
        }
    }

    parallel_for(b1 * b2, workers, [&](std::size_t task) {
        const std::size_t g = task / b2, b = task % b2;
        const auto& [tr, ho] = splits[g];
        const Matrix a = rp_candidate_projection(config, g, b, active.size());
        const Matrix z = detail::project_rows(xa, a);
        std::vector<int> ytr, yho;
        for (auto i : tr) {
            ytr.push_back(y[i]);
        }
        for (auto i : ho) {
            yho.push_back(y[i]);
        }
        const auto m = fit_classifier(rp_base_spec(config, g, b), z.select_rows(tr), ytr);
        const auto pred = predict_labels(m, z.select_rows(ho));
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            wrong += pred[i] != yho[i];
        }
        model.group_errors[g][b] = ho.empty() ? 0.0 : static_cast<double>(wrong) / static_cast<double>(ho.size());
    });

    std::vector<std::vector<int>> train_votes(b1);
    parallel_for(b1, workers, [&](std::size_t g) {
        const auto& e = model.group_errors[g];
        const std::size_t best = static_cast<std::size_t>(std::min_element(e.begin(), e.end()) - e.begin());
        model.selected[g] = best;
        const Matrix a = rp_candidate_projection(config, g, best, active.size());
        const Matrix z = detail::project_rows(xa, a);
        model.base_models[g] = fit_classifier(rp_base_spec(config, g, best), z, y);
        model.base_models[g].n_features = config.projected_dim;
        model.projections[g] = detail::expand_projection(a, active, x.cols());
        train_votes[g] = predict_labels(model.base_models[g], z);
    });

    if (config.vote_threshold_alpha) {
        model.alpha = *config.vote_threshold_alpha;
    } else {
        // Empirical-risk minimizer over the vote-fraction grid; ties go to the value nearest 1/2, then the smaller.
        const auto score = detail::vote_fraction(train_votes, x.rows());
        std::size_t best_err = x.rows() + 1;
        for (std::size_t k = 0; k <= b1; ++k) {
            const double alpha = static_cast<double>(k) / static_cast<double>(b1);
            std::size_t err = 0;
            for (std::size_t i = 0; i < score.size(); ++i) {
                err += (score[i] >= alpha ? 1 : 0) != y[i];
            }
            if (err < best_err || (err == best_err && std::abs(alpha - 0.5) < std::abs(model.alpha - 0.5))) {
                best_err = err;
                model.alpha = alpha;
            }
        }
    }

    model.feature_importance.assign(x.cols(), 0.0);
    double total = 0;
    for (const auto& a : model.projections) {
        for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t c = 0; c < a.cols(); ++c) {
                model.feature_importance[c] += a(r, c) * a(r, c);
                total += a(r, c) * a(r, c);
            }
        }
    }
    for (auto& v : model.feature_importance) {
        v /= total;
    }
    return model;
}

inline void to_json(nlohmann::json& j, const RpConfig& c) {
    j = nlohmann::json{{"b1", c.b1_groups},       {"b2", c.b2_per_group},
                       {"d", c.projected_dim},    {"base", spec_to_json(c.base)},
                       {"holdout", c.selection_holdout_fraction}, {"seed", c.seed}};
    if (c.vote_threshold_alpha) {
        j["alpha"] = *c.vote_threshold_alpha;
    }
}

inline void from_json(const nlohmann::json& j, RpConfig& c) {
    c.b1_groups = j.value("b1", c.b1_groups);
    c.b2_per_group = j.value("b2", c.b2_per_group);
    c.projected_dim = j.value("d", c.projected_dim);
    if (j.contains("base")) {
        c.base = spec_from_json(j.at("base"));
    }
    c.selection_holdout_fraction = j.value("holdout", c.selection_holdout_fraction);
    c.seed = j.value("seed", c.seed);
    if (j.contains("alpha")) {
        c.vote_threshold_alpha = j.at("alpha").get<double>();
    }
}

inline nlohmann::json rp_model_to_json(const RpModel& m) {
    nlohmann::json j;
    j["format"] = model_format_tag;
    j["version"] = model_format_version;
    j["family"] = "rp_ensemble";
    j["config"] = m.config;
    j["n_features"] = m.n_features;
    j["alpha"] = m.alpha;
    j["feature_importance"] = m.feature_importance;
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t g = 0; g < m.projections.size(); ++g) {
        members.push_back({{"projection", m.projections[g].data()}, {"model", model_to_json(m.base_models[g])}});
    }
    j["members"] = std::move(members);
    return j;
}

inline RpModel rp_model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != model_format_tag || j.value("family", "") != "rp_ensemble") {
        throw DataError("not an rp_ensemble model file");
    }
    RpModel m;
    m.config = j.at("config").get<RpConfig>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.alpha = j.at("alpha").get<double>();
    m.feature_importance = j.at("feature_importance").get<std::vector<double>>();
    for (const auto& member : j.at("members")) {
        auto data = member.at("projection").get<std::vector<double>>();
        m.projections.emplace_back(m.config.projected_dim, m.n_features, std::move(data));
        m.base_models.push_back(model_from_json(member.at("model")));
    }
    return m;
}

}

#endif
