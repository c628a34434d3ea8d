#ifndef OMICSFLOW_EVAL_HPP
#define OMICSFLOW_EVAL_HPP

#include "core/csv.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"
#include "models/model.hpp"
#include "rpensemble.hpp"
#include "survival.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace omicsflow {

namespace detail {

inline void check_scored(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw DataError("scores and labels differ in length");
    }
    bool has0 = false, has1 = false;
    for (int v : labels) {
        if (v == 1) {
            has1 = true;
        } else if (v == 0) {
            has0 = true;
        } else {
            throw DataError("labels must be 0 or 1");
        }
    }
    if (!has0 || !has1) {
        throw DataError("AUC needs both classes in the labels");
    }
}

}

/**
 * Area under the ROC curve as the Mann-Whitney pair statistic: the share of (positive, negative) pairs where the
 * positive scores higher, ties counting one half. Counting is done in integers; the only rounding is the final division.
 */
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    detail::check_scored(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // twice_wins = 2 * #(pos > neg) + #(pos == neg)
    unsigned long long twice_wins = 0, neg_below = 0, n_pos = 0, n_neg = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        unsigned long long pos = 0, neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? pos : neg) += 1;
            ++j;
        }
        twice_wins += pos * (2 * neg_below + neg);
        neg_below += neg;
        n_pos += pos;
        n_neg += neg;
        i = j;
    }
    return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct RocCurve {
    /// Descending; the first entry is +infinity and gives the (0, 0) point.
    std::vector<double> thresholds;
    std::vector<double> fpr;
    std::vector<double> tpr;
};

/// One point per distinct score: predicting class 1 when `score >= threshold`.
inline RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
    detail::check_scored(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const double n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double n_neg = static_cast<double>(labels.size()) - n_pos;

    RocCurve roc;
    roc.thresholds.push_back(std::numeric_limits<double>::infinity());
    roc.fpr.push_back(0);
    roc.tpr.push_back(0);
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        roc.thresholds.push_back(s);
        roc.fpr.push_back(static_cast<double>(fp) / n_neg);
        roc.tpr.push_back(static_cast<double>(tp) / n_pos);
    }
    return roc;
}

inline double trapezoid_area(const RocCurve& roc) {
    double area = 0;
    for (std::size_t k = 1; k < roc.fpr.size(); ++k) {
        area += (roc.fpr[k] - roc.fpr[k - 1]) * (roc.tpr[k] + roc.tpr[k - 1]) / 2;
    }
    return area;
}

inline std::string render_roc_csv(const RocCurve& roc) {
    std::ostringstream out;
    out << "threshold,fpr,tpr\n";
    for (std::size_t k = 0; k < roc.fpr.size(); ++k) {
        out << (std::isinf(roc.thresholds[k]) ? std::string("inf") : csv::format_double(roc.thresholds[k])) << ','
            << csv::format_double(roc.fpr[k]) << ',' << csv::format_double(roc.tpr[k]) << '\n';
    }
    return out.str();
}

struct CvPlan {
    std::size_t k_folds = 5;
    bool stratified = true;
    std::uint64_t seed = 0;
};

/**
 * Splits indices into `k` folds. Stratified: each class is shuffled and dealt round-robin, the dealing position
 * carrying over from one class to the next, so every fold gets the floor or ceiling of its proportional share.
 */
inline std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels, const CvPlan& plan) {
    const std::size_t k = plan.k_folds;
    if (k < 2) {
        throw ConfigError("cross-validation needs at least 2 folds");
    }
    if (k > labels.size()) {
        throw ConfigError("more folds (" + std::to_string(k) + ") than samples (" + std::to_string(labels.size()) + ")");
    }
    Rng rng(derive_seed(plan.seed, 0x666f6c64));
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t cursor = 0;
    auto deal = [&](std::vector<std::size_t> idx) {
        shuffle_in_place(idx, rng);
        for (auto i : idx) {
            folds[cursor].push_back(i);
            cursor = (cursor + 1) % k;
        }
    };
    if (plan.stratified) {
        std::vector<std::size_t> by_class[2];
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != 0 && labels[i] != 1) {
                throw DataError("labels must be 0 or 1");
            }
            by_class[labels[i]].push_back(i);
        }
        const std::size_t minority = std::min(by_class[0].size(), by_class[1].size());
        if (k > minority) {
            throw ConfigError("stratified " + std::to_string(k) + "-fold split needs at least " + std::to_string(k) +
                              " samples of each class; the minority class has " + std::to_string(minority));
        }
        deal(by_class[0]);
        deal(by_class[1]);
    } else {
        std::vector<std::size_t> all(labels.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        deal(all);
    }
    for (auto& f : folds) {
        std::sort(f.begin(), f.end());
    }
    return folds;
}

/// What to evaluate: a single model family or the random-projection ensemble.
using ModelCandidate = std::variant<ModelSpec, RpConfig>;

inline std::string candidate_name(const ModelCandidate& c) {
    if (const auto* s = std::get_if<ModelSpec>(&c)) {
        return family_name(s->family);
    }
    return "rp_ensemble";
}

/// Fits on `train` and returns scores for `test`.
inline std::vector<double> fit_and_score(const ModelCandidate& c, const LabeledDataset& train, const Matrix& test) {
    if (const auto* s = std::get_if<ModelSpec>(&c)) {
        return predict_scores(fit(*s, train), test);
    }
    const auto m = rp_train(train.features.values(), train.labels, std::get<RpConfig>(c));
    return rp_predict_scores(m, test);
}

struct EvalRow {
    std::string model;
    std::string data;
    double horizon_months = 0;
    std::size_t fold = 0;
    double auc = 0;
    std::size_t n_test = 0;
};

struct EvalSummary {
    std::string model;
    std::string data;
    double horizon_months = 0;
    double mean_auc = 0;
    /// Sample standard deviation over folds.
    double std_auc = 0;
    std::size_t n_folds = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;

    void append(const EvalReport& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

    /// One summary per (model, data, horizon), in order of first appearance.
    std::vector<EvalSummary> summaries() const {
        std::vector<EvalSummary> out;
        std::vector<std::vector<double>> aucs;
        for (const auto& r : rows) {
            std::size_t k = 0;
            while (k < out.size() && !(out[k].model == r.model && out[k].data == r.data && out[k].horizon_months == r.horizon_months)) {
                ++k;
            }
            if (k == out.size()) {
                out.push_back({r.model, r.data, r.horizon_months, 0, 0, 0});
                aucs.emplace_back();
            }
            aucs[k].push_back(r.auc);
        }
        for (std::size_t k = 0; k < out.size(); ++k) {
            const auto& a = aucs[k];
            out[k].n_folds = a.size();
            out[k].mean_auc = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
            double ss = 0;
            for (double v : a) {
                ss += (v - out[k].mean_auc) * (v - out[k].mean_auc);
            }
            out[k].std_auc = a.size() > 1 ? std::sqrt(ss / static_cast<double>(a.size() - 1)) : 0.0;
        }
        return out;
    }

    double mean_auc() const {
        double s = 0;
        for (const auto& r : rows) {
            s += r.auc;
        }
        return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
    }
};

/// Per-fold rows followed by `mean` and `std` rows for every (model, data, horizon).
inline std::string render_report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "model,data,horizon_months,fold,auc,n_test\n";
    for (const auto& r : report.rows) {
        out << r.model << ',' << r.data << ',' << csv::format_double(r.horizon_months) << ',' << r.fold << ',' << csv::format_double(r.auc)
            << ',' << r.n_test << '\n';
    }
    for (const auto& s : report.summaries()) {
        std::size_t n = 0;
        for (const auto& r : report.rows) {
            if (r.model == s.model && r.data == s.data && r.horizon_months == s.horizon_months) {
                n += r.n_test;
            }
        }
        out << s.model << ',' << s.data << ',' << csv::format_double(s.horizon_months) << ",mean," << csv::format_double(s.mean_auc) << ','
            << n << '\n';
        out << s.model << ',' << s.data << ',' << csv::format_double(s.horizon_months) << ",std," << csv::format_double(s.std_auc) << ','
            << n << '\n';
    }
    return out.str();
}

/**
 * Optional fold-internal preprocessing: receives the full dataset and the (train, test) row indices and returns the
 * transformed (train, test) feature matrices. Labels are never passed in.
 */
using FoldTransform = std::function<std::pair<Matrix, Matrix>(const FeatureMatrix&, std::span<const std::size_t>, std::span<const std::size_t>)>;

/**
 * k-fold cross-validation: fit on k-1 folds, score the held-out fold, one AUC per fold.
 * Folds may run on several workers; rows come back in fold order either way.
 */
inline EvalReport cross_validate(const ModelCandidate& candidate, const LabeledDataset& data, const CvPlan& plan, const std::string& model_name,
                                 const std::string& data_name, std::size_t workers = 1, const FoldTransform& transform = {}) {
    const auto folds = stratified_kfold(data.labels, plan);
    EvalReport report;
    report.rows.resize(folds.size());
    parallel_for(folds.size(), workers, [&](std::size_t f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g != f) {
                train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
            }
        }
        std::sort(train_idx.begin(), train_idx.end());
        LabeledDataset train = data.subset(train_idx);
        Matrix test = data.features.values().select_rows(folds[f]);
        if (transform) {
            auto [tr, te] = transform(data.features, train_idx, folds[f]);
            std::vector<std::string> names;
            for (std::size_t c = 0; c < tr.cols(); ++c) {
                names.push_back("f" + std::to_string(c));
            }
            train.features = FeatureMatrix(train.features.patient_ids(), names, std::move(tr));
            test = std::move(te);
        }
        const auto scores = fit_and_score(candidate, train, test);
        std::vector<int> y;
        for (auto i : folds[f]) {
            y.push_back(data.labels[i]);
        }
        report.rows[f] = {model_name, data_name, data.horizon_months, f, auc(scores, y), folds[f].size()};
    });
    return report;
}

}

#endif
