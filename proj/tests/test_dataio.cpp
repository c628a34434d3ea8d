#include "test_util.hpp"

#include <omicsflow/dataio.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace omicsflow;
using testutil::expr;
using testutil::TempDir;

namespace {

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}

TEST(LoadExpression, WellFormed) {
    TempDir dir("expr");
    auto path = dir.write("e.csv", "patient_id,g1,g2\np1,1.5,2\np2,0,3\np3,4,5.25\n");
    auto m = load_expression(path);
    EXPECT_EQ(m.n_patients(), 3u);
    EXPECT_EQ(m.n_genes(), 2u);
    EXPECT_EQ(m.values()(2, 1), 5.25);
    EXPECT_EQ(m.gene_ids(), (std::vector<std::string>{"g1", "g2"}));
    EXPECT_EQ(m.scale(), Scale::linear);
}

TEST(LoadExpression, NaCellIsRejectedWithPosition) {
    TempDir dir("expr");
    auto path = dir.write("e.csv", "patient_id,g1,g2\np1,1,2\np2,NA,3\n");
    auto msg = error_of([&] { load_expression(path); });
    EXPECT_NE(msg.find("non-numeric cell at (2,1)"), std::string::npos) << msg;
}

TEST(LoadExpression, DuplicateGeneRejected) {
    TempDir dir("expr");
    auto path = dir.write("e.csv", "patient_id,g1,g1\np1,1,2\n");
    auto msg = error_of([&] { load_expression(path); });
    EXPECT_NE(msg.find("duplicate gene id 'g1'"), std::string::npos) << msg;
}

TEST(LoadExpression, OtherErrors) {
    TempDir dir("expr");
    EXPECT_THROW(load_expression(dir.write("a.csv", "patient_id,g1\np1,1\np1,2\n")), DataError);
    EXPECT_THROW(load_expression(dir.write("b.csv", "patient_id,g1,g2\np1,1\n")), DataError);
    EXPECT_THROW(load_expression(dir.write("c.csv", "patient_id,g1\n")), DataError);
    EXPECT_THROW(load_expression(dir.write("d.csv", "patient_id,g1\np1,-1\n")), DataError);
    EXPECT_THROW(load_expression(dir.file("missing.csv")), DataError);
}

TEST(LoadExpression, GenesAsRowsIsTransposed) {
    TempDir dir("expr");
    auto path = dir.write("e.csv", "gene_id,p1,p2,p3\ng1,1,2,3\ng2,4,5,6\n");
    auto m = load_expression(path, Orientation::genes_as_rows);
    EXPECT_EQ(m.patient_ids(), (std::vector<std::string>{"p1", "p2", "p3"}));
    EXPECT_EQ(m.values()(1, 1), 5);
    EXPECT_EQ(m.values()(2, 0), 3);
}

TEST(LoadExpression, StoreLoadRoundTrip) {
    TempDir dir("expr");
    auto m = expr("x", {"a", "b"}, {"g1", "g2", "g3"}, {0.1, 1.0 / 3.0, 2e-17, 12345.678901234567, 0, 7});
    store_expression(m, dir.file("rt.csv"));
    auto back = load_expression(dir.file("rt.csv"));
    EXPECT_EQ(back.patient_ids(), m.patient_ids());
    EXPECT_EQ(back.gene_ids(), m.gene_ids());
    EXPECT_EQ(back.values(), m.values());
}

TEST(LoadCna, Categories) {
    TempDir dir("cna");
    auto zero = load_cna(dir.write("z.csv", "patient_id,g1,g2\np1,0,0\np2,0,0\n"));
    for (int v : zero.values().data()) {
        EXPECT_EQ(v, 0);
    }
    auto del = load_cna(dir.write("d.csv", "patient_id,g1\np1,-2\n"));
    EXPECT_EQ(del.values()(0, 0), -2);
    auto msg = error_of([&] { load_cna(dir.write("t.csv", "patient_id,g1,g2\np1,0,3\n")); });
    EXPECT_NE(msg.find("(1,2)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("-2,-1,0,1,2"), std::string::npos) << msg;
    EXPECT_THROW(load_cna(dir.write("f.csv", "patient_id,g1\np1,0.5\n")), DataError);
}

TEST(LoadCna, RoundTrip) {
    TempDir dir("cna");
    CnaMatrix m({"p1", "p2"}, {"g1", "g2"}, IntMatrix(2, 2, std::vector<int>{-2, -1, 1, 2}));
    store_cna(m, dir.file("c.csv"));
    EXPECT_EQ(load_cna(dir.file("c.csv")).values(), m.values());
}

TEST(LoadClinical, Rows) {
    TempDir dir("clin");
    auto path = dir.write("c.csv", "patient_id,time_months,event,age,group\np1,70.0,1,55,IC1\np2,12.5,0,,\n");
    auto recs = load_clinical(path);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].patient_id, "p1");
    EXPECT_EQ(recs[0].observed_time_months, 70.0);
    EXPECT_TRUE(recs[0].event);
    EXPECT_EQ(recs[0].age_years, 55.0);
    EXPECT_EQ(recs[0].group_label, "IC1");
    EXPECT_FALSE(recs[1].event);
    EXPECT_FALSE(recs[1].age_years);
    EXPECT_FALSE(recs[1].group_label);
}

TEST(LoadClinical, Errors) {
    TempDir dir("clin");
    const std::string h = "patient_id,time_months,event,age,group\n";
    EXPECT_THROW(load_clinical(dir.write("a.csv", h + "p1,-3,1,50,\n")), DataError);
    EXPECT_THROW(load_clinical(dir.write("b.csv", h + "p1,3,2,50,\n")), DataError);
    EXPECT_THROW(load_clinical(dir.write("c.csv", h + ",3,1,50,\n")), DataError);
    EXPECT_THROW(load_clinical(dir.write("d.csv", "id,time\np1,3\n")), DataError);
}

TEST(LoadClinical, RoundTrip) {
    TempDir dir("clin");
    std::vector<ClinicalRecord> recs{{"a", 1.25, true, 40.5, "G1"}, {"b", 0, false, std::nullopt, std::nullopt}};
    store_clinical(recs, dir.file("c.csv"));
    EXPECT_EQ(load_clinical(dir.file("c.csv")), recs);
}

TEST(Merge, UnionOfPatientsIntersectionOfGenes) {
    auto a = expr("A", {"p1", "p2"}, {"g1", "g2", "g3"}, {1, 2, 3, 4, 5, 6});
    auto b = expr("B", {"p2", "p3"}, {"g2", "g3", "g4"}, {10, 11, 12, 13, 14, 15});
    auto [m, report] = merge({a, b});
    EXPECT_EQ(m.patient_ids(), (std::vector<std::string>{"p1", "p2", "p3"}));
    EXPECT_EQ(m.gene_ids(), (std::vector<std::string>{"g2", "g3"}));
    // p2 comes from A
    EXPECT_EQ(m.values()(1, 0), 5);
    EXPECT_EQ(m.values()(1, 1), 6);
    EXPECT_EQ(m.values()(2, 0), 13);
    ASSERT_EQ(report.resolutions.size(), 1u);
    EXPECT_EQ(report.resolutions[0].patient_id, "p2");
    EXPECT_EQ(report.resolutions[0].winning_source, 0u);
    EXPECT_EQ(report.union_patient_count, 3u);
    EXPECT_EQ(report.intersection_gene_count, 2u);
    EXPECT_EQ(report.source_patient_counts, (std::vector<std::size_t>{2, 2}));
}

TEST(Merge, IdenticalSourcesAreIdempotent) {
    auto a = expr("A", {"p1", "p2"}, {"g1", "g2"}, {1, 2, 3, 4});
    auto [m, report] = merge({a, a});
    EXPECT_EQ(m.values(), a.values());
    EXPECT_EQ(m.patient_ids(), a.patient_ids());
    ASSERT_EQ(report.resolutions.size(), 2u);
    for (const auto& r : report.resolutions) {
        EXPECT_EQ(r.winning_source, 0u);
    }
}

TEST(Merge, Errors) {
    auto a = expr("A", {"p1"}, {"g1"}, {1});
    auto b = expr("B", {"p2"}, {"g2"}, {1});
    EXPECT_THROW(merge({a, b}), DataError);
    auto c = expr("C", {"p2"}, {"g1"}, {1}, Scale::log2);
    EXPECT_THROW(merge({a, c}), DataError);
    EXPECT_THROW(merge({a}), DataError);
}

TEST(Merge, AssociativeAndValuesFromWinningSource) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 10);
    auto make = [&](const std::string& name, std::vector<std::string> p, std::vector<std::string> g) {
        std::vector<double> v(p.size() * g.size());
        for (auto& x : v) {
            x = u(rng);
        }
        return expr(name, std::move(p), std::move(g), std::move(v));
    };
    auto a = make("A", {"p1", "p2", "p3"}, {"g1", "g2", "g3", "g4"});
    auto b = make("B", {"p3", "p4"}, {"g2", "g3", "g4", "g5"});
    auto c = make("C", {"p4", "p5", "p1"}, {"g0", "g3", "g4", "g2"});
    auto abc = merge({a, b, c}).matrix;
    auto ab_c = merge({merge({a, b}).matrix, c}).matrix;
    EXPECT_EQ(std::set<std::string>(abc.patient_ids().begin(), abc.patient_ids().end()),
              std::set<std::string>(ab_c.patient_ids().begin(), ab_c.patient_ids().end()));
    EXPECT_EQ(std::set<std::string>(abc.gene_ids().begin(), abc.gene_ids().end()),
              std::set<std::string>(ab_c.gene_ids().begin(), ab_c.gene_ids().end()));
    EXPECT_EQ(abc.n_patients(), 5u);

    const std::vector<const ExpressionMatrix*> sources{&a, &b, &c};
    for (std::size_t r = 0; r < abc.n_patients(); ++r) {
        const auto& pid = abc.patient_ids()[r];
        const ExpressionMatrix* winner = nullptr;
        for (auto* s : sources) {
            if (std::find(s->patient_ids().begin(), s->patient_ids().end(), pid) != s->patient_ids().end()) {
                winner = s;
                break;
            }
        }
        ASSERT_NE(winner, nullptr);
        auto wr = std::find(winner->patient_ids().begin(), winner->patient_ids().end(), pid) - winner->patient_ids().begin();
        for (std::size_t g = 0; g < abc.n_genes(); ++g) {
            auto wc = std::find(winner->gene_ids().begin(), winner->gene_ids().end(), abc.gene_ids()[g]) - winner->gene_ids().begin();
            EXPECT_EQ(abc.values()(r, g), winner->values()(wr, wc));
        }
    }
}

TEST(BuildFeatures, AppendsAge) {
    auto e = expr("A", {"p1", "p2"}, {"g1", "g2"}, {1, 2, 3, 4});
    std::vector<ClinicalRecord> clin{{"p1", 10, true, 5.0, {}}, {"p2", 20, false, 7.0, {}}};
    auto f = build_features(e, clin, true);
    EXPECT_EQ(f.cols(), 3u);
    EXPECT_EQ(f.values().column(2), (std::vector<double>{5, 7}));
    EXPECT_EQ(f.feature_names().back(), "age");
}

TEST(BuildFeatures, IdentityWithoutAge) {
    auto e = expr("A", {"p1", "p2"}, {"g1", "g2"}, {1, 2, 3, 4});
    std::vector<ClinicalRecord> clin{{"p1", 10, true, {}, {}}, {"p2", 20, false, {}, {}}};
    auto f = build_features(e, clin, false);
    EXPECT_EQ(f.values(), e.values());
}

TEST(BuildFeatures, RestrictsToClinicalPatients) {
    auto e = expr("A", {"p1", "p2"}, {"g1", "g2"}, {1, 2, 3, 4});
    std::vector<ClinicalRecord> clin{{"p1", 10, true, 50.0, {}}};
    auto f = build_features(e, clin, true);
    EXPECT_EQ(f.patient_ids(), (std::vector<std::string>{"p1"}));
    EXPECT_EQ(f.values().data(), (std::vector<double>{1, 2, 50}));
}

TEST(BuildFeatures, CnaColumnsAndErrors) {
    auto e = expr("A", {"p1", "p2", "p3"}, {"g1"}, {1, 2, 3});
    std::vector<ClinicalRecord> clin{{"p1", 10, true, 50.0, {}}, {"p2", 20, false, 60.0, {}}, {"p3", 1, true, {}, {}}};
    CnaMatrix cna({"p2", "p1"}, {"g1", "g2"}, IntMatrix(2, 2, std::vector<int>{-1, 2, 0, 1}));
    auto f = build_features(e, clin, false, cna);
    EXPECT_EQ(f.feature_names(), (std::vector<std::string>{"g1", "cna:g1", "cna:g2"}));
    EXPECT_EQ(f.patient_ids(), (std::vector<std::string>{"p1", "p2"}));
    EXPECT_EQ(f.values().data(), (std::vector<double>{1, 0, 1, 2, -1, 2}));
    EXPECT_THROW(build_features(e, clin, true), DataError);
    std::vector<ClinicalRecord> other{{"q", 1, true, 1.0, {}}};
    EXPECT_THROW(build_features(e, other, false), DataError);
}

TEST(FeatureMatrix, RejectsNanAndDuplicateNames) {
    EXPECT_THROW(FeatureMatrix({"a"}, {"x"}, Matrix(1, 1, std::numeric_limits<double>::quiet_NaN())), DataError);
    EXPECT_THROW(FeatureMatrix({"a"}, {"x", "x"}, Matrix(1, 2)), DataError);
}

TEST(Features, StoreLoadRoundTrip) {
    TempDir dir("feat");
    FeatureMatrix f({"a", "b"}, {"tsne_0", "age"}, Matrix(2, 2, std::vector<double>{-0.5, 40, 1e-3, 61}));
    store_features(f, dir.file("f.csv"));
    auto back = load_features(dir.file("f.csv"));
    EXPECT_EQ(back.values(), f.values());
    EXPECT_EQ(back.feature_names(), f.feature_names());
}
