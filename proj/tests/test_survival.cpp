#include "test_util.hpp"

#include <omicsflow/survival.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace omicsflow;

namespace {

ClinicalRecord rec(std::string id, double c, bool event, std::optional<std::string> group = std::nullopt) {
    return ClinicalRecord{std::move(id), c, event, std::nullopt, std::move(group)};
}

// Three-branch rule exactly as stated.
SurvivalLabel reference_label(double c, bool event, double t) {
    if (c > t) {
        return SurvivalLabel::Survived;
    }
    if (event) {
        return SurvivalLabel::Died;
    }
    return SurvivalLabel::Dropped;
}

FeatureMatrix features_for(const std::vector<ClinicalRecord>& records) {
    std::vector<std::string> ids;
    std::vector<double> v;
    for (std::size_t i = 0; i < records.size(); ++i) {
        ids.push_back(records[i].patient_id);
        v.push_back(static_cast<double>(i));
    }
    return FeatureMatrix(ids, {"f"}, Matrix(records.size(), 1, v));
}

}

TEST(MakeLabel, SpecExamples) {
    EXPECT_EQ(make_label(rec("a", 70, true), 60), SurvivalLabel::Survived);
    EXPECT_EQ(make_label(rec("a", 70, false), 60), SurvivalLabel::Survived);
    EXPECT_EQ(make_label(rec("a", 50, true), 60), SurvivalLabel::Died);
    EXPECT_EQ(make_label(rec("a", 50, false), 60), SurvivalLabel::Dropped);
    EXPECT_EQ(make_label(rec("a", 60, true), 60), SurvivalLabel::Died);
    EXPECT_EQ(make_label(rec("a", 60, false), 60), SurvivalLabel::Dropped);
    EXPECT_THROW(make_label(rec("a", 1, true), 0), ConfigError);
    EXPECT_THROW(make_label(rec("a", 1, true), -5), ConfigError);
}

TEST(MakeLabel, ExhaustiveGrid) {
    for (double t : {24.0, 60.0}) {
        for (int k = 0; k <= 240; ++k) {
            const double c = 0.5 * k;
            for (bool event : {false, true}) {
                const auto got = make_label(rec("a", c, event), t);
                ASSERT_EQ(got, reference_label(c, event, t)) << c << ' ' << event << ' ' << t;
                if (event) {
                    ASSERT_NE(got, SurvivalLabel::Dropped);
                }
            }
        }
    }
}

TEST(LabeledDataset, DropsAndPriors) {
    std::vector<ClinicalRecord> c{rec("a", 70, false), rec("b", 10, false), rec("c", 80, true), rec("d", 90, true), rec("e", 5, true)};
    auto res = make_labeled_dataset(features_for(c), c, 60);
    EXPECT_EQ(res.data.labels, (std::vector<int>{1, 1, 1, 0}));
    EXPECT_EQ(res.data.features.patient_ids(), (std::vector<std::string>{"a", "c", "d", "e"}));
    EXPECT_EQ(res.data.features.values().data(), (std::vector<double>{0, 2, 3, 4}));
    EXPECT_DOUBLE_EQ(res.priors.p0, 0.25);
    EXPECT_DOUBLE_EQ(res.priors.p1, 0.75);
    EXPECT_EQ(res.data.horizon_months, 60);
}

TEST(LabeledDataset, Degenerate) {
    std::vector<ClinicalRecord> all_survive{rec("a", 70, false), rec("b", 61, true)};
    auto res = make_labeled_dataset(features_for(all_survive), all_survive, 60);
    EXPECT_EQ(res.priors.p0, 0.0);
    EXPECT_EQ(res.priors.p1, 1.0);

    std::vector<ClinicalRecord> all_lost{rec("a", 7, false), rec("b", 6, false)};
    EXPECT_THROW(make_labeled_dataset(features_for(all_lost), all_lost, 60), DataError);

    std::vector<ClinicalRecord> partial{rec("a", 70, false)};
    EXPECT_THROW(make_labeled_dataset(features_for(all_survive), partial, 60), DataError);
}

TEST(LabeledDataset, PriorsSumToOne) {
    std::mt19937_64 rng(2);
    std::vector<ClinicalRecord> c;
    for (int i = 0; i < 333; ++i) {
        c.push_back(rec("p" + std::to_string(i), std::uniform_real_distribution<double>(0, 200)(rng), rng() % 3 != 0));
    }
    auto res = make_labeled_dataset(features_for(c), c, 24);
    EXPECT_NEAR(res.priors.p0 + res.priors.p1, 1.0, 1e-12);
    EXPECT_EQ(res.data.labels.size(), res.data.features.rows());
}

TEST(KaplanMeier, AllEvents) {
    std::vector<ClinicalRecord> c{rec("a", 3, true), rec("b", 1, true), rec("c", 4, true), rec("d", 2, true)};
    auto curves = kaplan_meier(c, false);
    ASSERT_EQ(curves.size(), 1u);
    EXPECT_EQ(curves[0].event_times, (std::vector<double>{1, 2, 3, 4}));
    EXPECT_EQ(curves[0].survival_probabilities, (std::vector<double>{0.75, 0.5, 0.25, 0}));
    EXPECT_EQ(curves[0].at_risk_counts, (std::vector<std::size_t>{4, 3, 2, 1}));
    EXPECT_EQ(survival_at(curves[0], 0), 1.0);
    EXPECT_EQ(survival_at(curves[0], 2.5), 0.5);
    EXPECT_EQ(survival_at(curves[0], 100), 0.0);
}

TEST(KaplanMeier, WithCensoring) {
    std::vector<ClinicalRecord> c{rec("a", 1, true), rec("b", 2, false), rec("c", 3, true)};
    auto curve = kaplan_meier(c, false)[0];
    EXPECT_EQ(curve.event_times, (std::vector<double>{1, 3}));
    EXPECT_DOUBLE_EQ(curve.survival_probabilities[0], 2.0 / 3.0);
    EXPECT_EQ(curve.survival_probabilities[1], 0.0);
}

TEST(KaplanMeier, AllCensored) {
    std::vector<ClinicalRecord> c{rec("a", 1, false), rec("b", 2, false)};
    auto curve = kaplan_meier(c, false)[0];
    EXPECT_TRUE(curve.event_times.empty());
    EXPECT_EQ(survival_at(curve, 5), 1.0);
}

TEST(KaplanMeier, MatchesProductLimitOracle) {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 40; ++rep) {
        std::vector<ClinicalRecord> c;
        for (int i = 0; i < 60; ++i) {
            c.push_back(rec("p" + std::to_string(i), static_cast<double>(rng() % 25), rng() % 3 != 0));
        }
        auto curve = kaplan_meier(c, false)[0];
        double s = 1;
        std::size_t k = 0;
        for (int u = 0; u < 25; ++u) {
            std::size_t d = 0, r = 0;
            for (const auto& x : c) {
                r += x.observed_time_months >= u;
                d += x.observed_time_months == u && x.event;
            }
            if (d == 0) {
                continue;
            }
            s *= 1.0 - static_cast<double>(d) / static_cast<double>(r);
            ASSERT_LT(k, curve.event_times.size());
            EXPECT_EQ(curve.event_times[k], u);
            EXPECT_EQ(curve.at_risk_counts[k], r);
            EXPECT_NEAR(curve.survival_probabilities[k], s, 1e-12);
            ++k;
        }
        EXPECT_EQ(k, curve.event_times.size());
        for (std::size_t i = 1; i < k; ++i) {
            EXPECT_LE(curve.survival_probabilities[i], curve.survival_probabilities[i - 1]);
            EXPECT_LE(curve.at_risk_counts[i], curve.at_risk_counts[i - 1]);
        }
    }
}

TEST(KaplanMeier, GroupsAndEmptyInput) {
    std::vector<ClinicalRecord> c{rec("a", 1, true, "B"), rec("b", 2, true, "A"), rec("c", 3, true)};
    auto curves = kaplan_meier(c, true);
    ASSERT_EQ(curves.size(), 3u);
    EXPECT_EQ(*curves[0].group_label, "A");
    EXPECT_EQ(*curves[1].group_label, "B");
    EXPECT_EQ(*curves[2].group_label, "NA");
    EXPECT_THROW(kaplan_meier({}, false), DataError);
    EXPECT_EQ(render_km_csv(curves).substr(0, 31), "group,time,survival,at_risk\nA,2");
}

TEST(KaplanMeier, AgreesWithLabelsWithoutCensoring) {
    std::mt19937_64 rng(4);
    std::vector<ClinicalRecord> c;
    for (int i = 0; i < 500; ++i) {
        c.push_back(rec("p" + std::to_string(i), std::floor(std::exponential_distribution<double>(1.0 / 50)(rng)), true));
    }
    auto curve = kaplan_meier(c, false)[0];
    for (double t : {24.0, 60.0}) {
        auto res = make_labeled_dataset(features_for(c), c, t);
        EXPECT_NEAR(res.priors.p1, survival_at(curve, t), 1e-12);
    }
}

TEST(LabelsFile, RoundTrip) {
    testutil::TempDir dir("labels");
    std::vector<ClinicalRecord> c{rec("a", 70, false), rec("b", 10, false), rec("c", 30, true)};
    dir.write("labels.csv", render_labels_csv(c, 60));
    auto data = load_labeled(features_for(c), dir.file("labels.csv"));
    EXPECT_EQ(data.labels, (std::vector<int>{1, 0}));
    EXPECT_EQ(data.features.patient_ids(), (std::vector<std::string>{"a", "c"}));
    EXPECT_EQ(data.horizon_months, 60);
    EXPECT_EQ(data.observed_times, (std::vector<double>{70, 30}));

    std::vector<ClinicalRecord> more = c;
    more.push_back(rec("z", 5, true));
    EXPECT_THROW(load_labeled(features_for(more), dir.file("labels.csv")), DataError);
}
