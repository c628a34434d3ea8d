#ifndef OMICSFLOW_SEARCH_HPP
#define OMICSFLOW_SEARCH_HPP

#include "core/parallel.hpp"
#include "core/random.hpp"
#include "eval.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace omicsflow {

enum class DistKind { uniform, log_uniform, int_uniform, categorical };

struct ParamDistribution {
    std::string name;
    DistKind kind = DistKind::uniform;
    double low = 0;
    double high = 0;
    std::vector<double> values;

    void validate() const {
        switch (kind) {
            case DistKind::uniform:
                if (!(low <= high)) {
                    throw ConfigError("distribution '" + name + "': low must not exceed high");
                }
                break;
            case DistKind::log_uniform:
                if (!(low > 0 && low <= high)) {
                    throw ConfigError("distribution '" + name + "': log_uniform needs 0 < low <= high");
                }
                break;
            case DistKind::int_uniform:
                if (low != std::floor(low) || high != std::floor(high) || low > high) {
                    throw ConfigError("distribution '" + name + "': int_uniform needs integer bounds with low <= high");
                }
                break;
            case DistKind::categorical:
                if (values.empty()) {
                    throw ConfigError("distribution '" + name + "': categorical needs at least one value");
                }
                break;
        }
    }

    double sample(Rng& rng) const {
        switch (kind) {
            case DistKind::uniform: return low + (high - low) * uniform01(rng);
            case DistKind::log_uniform: return std::exp(std::log(low) + (std::log(high) - std::log(low)) * uniform01(rng));
            case DistKind::int_uniform: return low + static_cast<double>(uniform_index(rng, static_cast<std::size_t>(high - low) + 1));
            case DistKind::categorical: return values[uniform_index(rng, values.size())];
        }
        return low;
    }
};

/**
 * A model to tune: fixed settings plus distributions for the searched hyperparameters.
 * For `rp_ensemble` the names `b1`, `b2`, `d`, `alpha` and `holdout` set the ensemble; any other name goes to the base model.
 */
struct ModelTemplate {
    std::string name;
    ModelCandidate fixed = ModelSpec{};
    std::vector<ParamDistribution> space;

    bool is_ensemble() const { return std::holds_alternative<RpConfig>(fixed); }

    void validate() const {
        for (const auto& d : space) {
            d.validate();
        }
        std::visit([](const auto& c) { c.validate(); }, fixed);
    }

    /// Candidate with `params` applied and every seed derived from `seed`.
    ModelCandidate instantiate(const std::map<std::string, double>& params, std::uint64_t seed) const {
        if (const auto* s = std::get_if<ModelSpec>(&fixed)) {
            ModelSpec spec = *s;
            for (const auto& [k, v] : params) {
                spec.hyperparameters[k] = v;
            }
            spec.seed = derive_seed(seed, 1);
            spec.validate();
            return spec;
        }
        RpConfig rp = std::get<RpConfig>(fixed);
        for (const auto& [k, v] : params) {
            if (k == "b1") {
                rp.b1_groups = static_cast<std::size_t>(v);
            } else if (k == "b2") {
                rp.b2_per_group = static_cast<std::size_t>(v);
            } else if (k == "d") {
                rp.projected_dim = static_cast<std::size_t>(v);
            } else if (k == "alpha") {
                rp.vote_threshold_alpha = v;
            } else if (k == "holdout") {
                rp.selection_holdout_fraction = v;
            } else {
                rp.base.hyperparameters[k] = v;
            }
        }
        rp.seed = derive_seed(seed, 1);
        rp.validate();
        return rp;
    }
};

struct TrialRecord {
    std::size_t index = 0;
    std::map<std::string, double> params;
    std::vector<double> fold_aucs;
    double mean_auc = 0;
    double wall_seconds = 0;
    bool ok = false;
    std::string error;
};

struct SearchResult {
    std::vector<TrialRecord> trials;
    std::size_t best = 0;

    const TrialRecord& best_trial() const { return trials[best]; }
};

/// Hyperparameters of trial `index`; a pure function of (seed, index).
inline std::map<std::string, double> sample_trial_params(const std::vector<ParamDistribution>& space, std::uint64_t seed, std::size_t index) {
    Rng rng(derive_seed(seed, index, 0x70617261));
    std::map<std::string, double> params;
    for (const auto& d : space) {
        params[d.name] = d.sample(rng);
    }
    return params;
}

/**
 * Seeded random search: `budget` trials, each scored by mean cross-validated AUC, run on up to `workers` threads.
 * The best trial has the highest mean AUC, the lowest index winning ties, so the result does not depend on scheduling.
 */
inline SearchResult random_search(const ModelTemplate& tmpl, const LabeledDataset& data, std::size_t budget, const CvPlan& plan, std::uint64_t seed,
                                  std::size_t workers = 1, const FoldTransform& transform = {}) {
    if (budget == 0) {
        throw ConfigError("search budget must be at least 1");
    }
    tmpl.validate();
    SearchResult result;
    result.trials.resize(budget);
    parallel_for(budget, workers, [&](std::size_t t) {
        TrialRecord& rec = result.trials[t];
        rec.index = t;
        const auto start = std::chrono::steady_clock::now();
        try {
            rec.params = sample_trial_params(tmpl.space, seed, t);
            const auto candidate = tmpl.instantiate(rec.params, derive_seed(seed, t));
            const auto report = cross_validate(candidate, data, plan, tmpl.name, "", 1, transform);
            for (const auto& r : report.rows) {
                rec.fold_aucs.push_back(r.auc);
            }
            rec.mean_auc = report.mean_auc();
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    bool found = false;
    std::string failures;
    for (const auto& rec : result.trials) {
        if (!rec.ok) {
            failures += "\n  trial " + std::to_string(rec.index) + ": " + rec.error;
            continue;
        }
        if (!found || rec.mean_auc > result.trials[result.best].mean_auc) {
            result.best = rec.index;
            found = true;
        }
    }
    if (!found) {
        throw NumericalError("all " + std::to_string(budget) + " search trials of '" + tmpl.name + "' failed:" + failures);
    }
    return result;
}

inline DistKind parse_dist_kind(const std::string& s) {
    if (s == "uniform") {
        return DistKind::uniform;
    }
    if (s == "log_uniform") {
        return DistKind::log_uniform;
    }
    if (s == "int_uniform") {
        return DistKind::int_uniform;
    }
    if (s == "categorical") {
        return DistKind::categorical;
    }
    throw ConfigError("unknown distribution type '" + s + "'");
}

/**
 * Parses one model entry:
 * `{"name": ..., "family": ..., "params": {fixed values}, "space": {name: {"type": ..., "low": .., "high": .., "values": [..]}}}`.
 * The `rp_ensemble` family also reads `b1`, `b2`, `d`, `alpha`, `holdout` and `base` (a family name).
 */
inline ModelTemplate parse_model_template(const nlohmann::json& j) {
    try {
        ModelTemplate t;
        const std::string family = j.at("family").get<std::string>();
        t.name = j.value("name", family);
        Hyperparameters fixed;
        if (j.contains("params")) {
            for (const auto& [k, v] : j.at("params").items()) {
                fixed[k] = v.get<double>();
            }
        }
        if (family == "rp_ensemble") {
            RpConfig rp;
            rp.b1_groups = j.value("b1", rp.b1_groups);
            rp.b2_per_group = j.value("b2", rp.b2_per_group);
            rp.projected_dim = j.value("d", rp.projected_dim);
            rp.selection_holdout_fraction = j.value("holdout", rp.selection_holdout_fraction);
            if (j.contains("alpha")) {
                rp.vote_threshold_alpha = j.at("alpha").get<double>();
            }
            rp.base.family = parse_family(j.value("base", std::string("gaussian_nb")));
            rp.base.hyperparameters = fixed;
            t.fixed = rp;
        } else {
            t.fixed = ModelSpec{parse_family(family), fixed, 0};
        }
        if (j.contains("space")) {
            for (const auto& [k, v] : j.at("space").items()) {
                ParamDistribution d;
                d.name = k;
                d.kind = parse_dist_kind(v.at("type").get<std::string>());
                d.low = v.value("low", 0.0);
                d.high = v.value("high", 0.0);
                if (v.contains("values")) {
                    d.values = v.at("values").get<std::vector<double>>();
                }
                t.space.push_back(std::move(d));
            }
        }
        t.validate();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model entry: ") + e.what());
    }
}

}

#endif
