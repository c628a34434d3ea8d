#ifndef OMICSFLOW_SURVIVAL_HPP
#define OMICSFLOW_SURVIVAL_HPP

#include "core/errors.hpp"
#include "dataio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file survival.hpp
 * @brief Horizon labels from censored follow-up, class priors, and Kaplan-Meier curves.
 */

namespace omicsflow {

/**
 * Outcome of a patient at a fixed horizon `t`.
 * `Died` is class 0 and `Survived` class 1; `Dropped` patients were lost before `t` and carry no label.
 */
enum class SurvivalLabel { Died, Survived, Dropped };

/**
 * Labels one record at horizon `t` (months).
 *
 * Observed time strictly beyond `t` means the patient survived the horizon, whatever the event flag.
 * Otherwise an observed death is `Died` and a loss to follow-up is `Dropped`; `C == t` falls in the second branch.
 */
inline SurvivalLabel make_label(const ClinicalRecord& record, double t) {
    if (!(t > 0)) {
        throw ConfigError("horizon must be positive, got " + std::to_string(t));
    }
    if (record.observed_time_months > t) {
        return SurvivalLabel::Survived;
    }
    return record.event ? SurvivalLabel::Died : SurvivalLabel::Dropped;
}

struct ClassPriors {
    double p0 = 0;
    double p1 = 0;
};

/**
 * @brief Features with binary horizon labels; dropped patients are already removed.
 *
 * `observed_times` and `events` are carried along for the survival-time regressor.
 */
struct LabeledDataset {
    FeatureMatrix features;
    std::vector<int> labels;
    std::vector<double> observed_times;
    std::vector<bool> events;
    double horizon_months = 0;

    std::size_t size() const { return labels.size(); }

    LabeledDataset subset(std::span<const std::size_t> idx) const {
        LabeledDataset out;
        out.features = features.select_rows(idx);
        out.horizon_months = horizon_months;
        for (auto i : idx) {
            out.labels.push_back(labels[i]);
            out.observed_times.push_back(observed_times[i]);
            out.events.push_back(events[i]);
        }
        return out;
    }
};

inline ClassPriors class_priors(const std::vector<int>& labels) {
    if (labels.empty()) {
        throw DataError("class priors of an empty label set");
    }
    std::size_t ones = std::count(labels.begin(), labels.end(), 1);
    ClassPriors p;
    p.p1 = static_cast<double>(ones) / static_cast<double>(labels.size());
    p.p0 = static_cast<double>(labels.size() - ones) / static_cast<double>(labels.size());
    return p;
}

struct LabeledResult {
    LabeledDataset data;
    ClassPriors priors;
};

/**
 * Labels every feature row at horizon `t` and removes dropped patients.
 * Every feature row must have a clinical record.
 */
inline LabeledResult make_labeled_dataset(const FeatureMatrix& features, const std::vector<ClinicalRecord>& clinical, double t) {
    std::unordered_map<std::string, const ClinicalRecord*> by_id;
    for (const auto& rec : clinical) {
        by_id.emplace(rec.patient_id, &rec);
    }

    std::vector<std::size_t> keep;
    std::vector<int> labels;
    std::vector<double> times;
    std::vector<bool> events;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        auto it = by_id.find(features.patient_ids()[r]);
        if (it == by_id.end()) {
            throw DataError("patient '" + features.patient_ids()[r] + "' has features but no clinical record");
        }
        auto label = make_label(*it->second, t);
        if (label == SurvivalLabel::Dropped) {
            continue;
        }
        keep.push_back(r);
        labels.push_back(label == SurvivalLabel::Survived ? 1 : 0);
        times.push_back(it->second->observed_time_months);
        events.push_back(it->second->event);
    }
    if (keep.empty()) {
        throw DataError("every patient was lost before the " + std::to_string(t) + "-month horizon");
    }

    LabeledResult out;
    out.data.features = features.select_rows(keep);
    out.data.labels = std::move(labels);
    out.data.observed_times = std::move(times);
    out.data.events = std::move(events);
    out.data.horizon_months = t;
    out.priors = class_priors(out.data.labels);
    return out;
}

/**
 * @brief Product-limit survival estimate for one group.
 *
 * One entry per distinct time with at least one death; `at_risk_counts` is the risk set just before that time.
 */
struct SurvivalCurve {
    std::optional<std::string> group_label;
    std::vector<double> event_times;
    std::vector<double> survival_probabilities;
    std::vector<std::size_t> at_risk_counts;
};

namespace detail {

inline SurvivalCurve kaplan_meier_one(std::vector<const ClinicalRecord*> records, std::optional<std::string> label) {
    if (records.empty()) {
        throw DataError("kaplan_meier: empty group");
    }
    std::stable_sort(records.begin(), records.end(), [](const ClinicalRecord* a, const ClinicalRecord* b) {
        return a->observed_time_months < b->observed_time_months;
    });

    SurvivalCurve curve;
    curve.group_label = std::move(label);

    // The product of (1 - d/r) telescopes to (risk after deaths) / (risk at segment start) between censorings,
    // so survival is carried as base * ratio and re-based after each censoring. Without censoring this is the
    // plain empirical fraction surviving.
    double base = 1.0;
    std::size_t segment_risk = records.size();
    std::size_t at_risk = records.size();
    std::size_t i = 0;
    while (i < records.size()) {
        const double t = records[i]->observed_time_months;
        std::size_t deaths = 0, censored = 0;
        while (i < records.size() && records[i]->observed_time_months == t) {
            (records[i]->event ? deaths : censored)++;
            ++i;
        }
        // Deaths at t are processed before censorings at t.
        if (deaths > 0) {
            curve.event_times.push_back(t);
            curve.at_risk_counts.push_back(at_risk);
            at_risk -= deaths;
            curve.survival_probabilities.push_back(base * (static_cast<double>(at_risk) / static_cast<double>(segment_risk)));
        }
        if (censored > 0) {
            base = at_risk == 0 ? 0.0 : base * (static_cast<double>(at_risk) / static_cast<double>(segment_risk));
            at_risk -= censored;
            segment_risk = at_risk;
        }
    }
    return curve;
}

}

/**
 * Kaplan-Meier curves, pooled or one per `group_label` (records without a label form the group "NA").
 * Groups are returned in lexicographic order of their labels.
 */
inline std::vector<SurvivalCurve> kaplan_meier(const std::vector<ClinicalRecord>& records, bool group_by) {
    if (records.empty()) {
        throw DataError("kaplan_meier: no records");
    }
    if (!group_by) {
        std::vector<const ClinicalRecord*> all;
        for (const auto& r : records) {
            all.push_back(&r);
        }
        return {detail::kaplan_meier_one(std::move(all), std::nullopt)};
    }
    std::map<std::string, std::vector<const ClinicalRecord*>> groups;
    for (const auto& r : records) {
        groups[r.group_label.value_or("NA")].push_back(&r);
    }
    std::vector<SurvivalCurve> out;
    for (auto& [label, members] : groups) {
        out.push_back(detail::kaplan_meier_one(std::move(members), label));
    }
    return out;
}

/**
 * Step-function evaluation: the survival at the largest event time not after `t`, or 1 before the first event.
 */
inline double survival_at(const SurvivalCurve& curve, double t) {
    auto it = std::upper_bound(curve.event_times.begin(), curve.event_times.end(), t);
    if (it == curve.event_times.begin()) {
        return 1.0;
    }
    return curve.survival_probabilities[static_cast<std::size_t>(it - curve.event_times.begin()) - 1];
}

inline std::string render_km_csv(const std::vector<SurvivalCurve>& curves) {
    std::string out = "group,time,survival,at_risk\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.event_times.size(); ++i) {
            out += c.group_label.value_or("all") + ',' + csv::format_double(c.event_times[i]) + ',' +
                   csv::format_double(c.survival_probabilities[i]) + ',' + std::to_string(c.at_risk_counts[i]) + '\n';
        }
    }
    return out;
}

inline const char* to_string(SurvivalLabel l) {
    switch (l) {
        case SurvivalLabel::Died: return "died";
        case SurvivalLabel::Survived: return "survived";
        case SurvivalLabel::Dropped: return "dropped";
    }
    return "dropped";
}

/// Labels file: `patient_id,status,y,time_months,event,horizon_months`; `y` is empty for dropped patients.
inline std::string render_labels_csv(const std::vector<ClinicalRecord>& clinical, double t) {
    std::string out = "patient_id,status,y,time_months,event,horizon_months\n";
    for (const auto& r : clinical) {
        const auto l = make_label(r, t);
        out += r.patient_id + ',' + to_string(l) + ',' + (l == SurvivalLabel::Dropped ? "" : (l == SurvivalLabel::Survived ? "1" : "0")) + ',' +
               csv::format_double(r.observed_time_months) + ',' + (r.event ? "1" : "0") + ',' + csv::format_double(t) + '\n';
    }
    return out;
}

/**
 * Joins a labels file written by `render_labels_csv` onto feature rows. Dropped patients are skipped;
 * a feature row without a labels entry is an error.
 */
inline LabeledDataset load_labeled(const FeatureMatrix& features, const std::string& labels_path) {
    const auto table = csv::read_file(labels_path);
    const std::vector<std::string> expected{"patient_id", "status", "y", "time_months", "event", "horizon_months"};
    if (table.header != expected) {
        throw DataError(labels_path + ": header must be patient_id,status,y,time_months,event,horizon_months");
    }
    struct Entry {
        std::optional<int> y;
        double time;
        bool event;
    };
    std::unordered_map<std::string, Entry> by_id;
    double horizon = 0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = labels_path + " line " + std::to_string(table.line_numbers[i]);
        auto time = csv::parse_double(row[3]);
        auto ev = csv::parse_int(row[4]);
        auto h = csv::parse_double(row[5]);
        if (!time || !ev || !h || (*ev != 0 && *ev != 1)) {
            throw DataError(where + ": malformed time, event or horizon");
        }
        horizon = *h;
        Entry e{std::nullopt, *time, *ev == 1};
        if (!row[2].empty()) {
            auto y = csv::parse_int(row[2]);
            if (!y || (*y != 0 && *y != 1)) {
                throw DataError(where + ": y must be 0, 1 or empty");
            }
            e.y = static_cast<int>(*y);
        }
        by_id[row[0]] = e;
    }
    std::vector<std::size_t> keep;
    LabeledDataset out;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        auto it = by_id.find(features.patient_ids()[r]);
        if (it == by_id.end()) {
            throw DataError("patient '" + features.patient_ids()[r] + "' has features but no entry in " + labels_path);
        }
        if (!it->second.y) {
            continue;
        }
        keep.push_back(r);
        out.labels.push_back(*it->second.y);
        out.observed_times.push_back(it->second.time);
        out.events.push_back(it->second.event);
    }
    if (keep.empty()) {
        throw DataError("no labeled patient in " + labels_path + " matches the feature rows");
    }
    out.features = features.select_rows(keep);
    out.horizon_months = horizon;
    return out;
}

}

#endif
