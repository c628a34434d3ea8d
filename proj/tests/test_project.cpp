#include "test_util.hpp"

#include <omicsflow/project.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace omicsflow;

namespace {

std::vector<std::string> ids(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back("p" + std::to_string(i));
    }
    return out;
}

// Two Gaussian blobs `gap` apart along every axis.
FeatureMatrix blobs(std::size_t per, std::size_t dims, double gap, std::uint64_t seed) {
    auto m = testutil::random_matrix(2 * per, dims, seed);
    for (std::size_t i = per; i < 2 * per; ++i) {
        for (std::size_t k = 0; k < dims; ++k) {
            m(i, k) += gap;
        }
    }
    std::vector<std::string> names;
    for (std::size_t k = 0; k < dims; ++k) {
        names.push_back("x" + std::to_string(k));
    }
    return FeatureMatrix(ids(2 * per), names, m);
}

double max_rel_error(const Matrix& a, const Matrix& b) {
    double worst = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        double x = a.data()[i], y = b.data()[i];
        worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-6}));
    }
    return worst;
}

Matrix numeric_gradient(const Matrix& p, Matrix y) {
    Matrix g(y.rows(), y.cols());
    const double h = 1e-5;
    for (std::size_t i = 0; i < y.data().size(); ++i) {
        const double v = y.data()[i];
        y.data()[i] = v + h;
        const double up = kl_divergence(p, y);
        y.data()[i] = v - h;
        const double down = kl_divergence(p, y);
        y.data()[i] = v;
        g.data()[i] = (up - down) / (2 * h);
    }
    return g;
}

}

TEST(Affinities, SymmetricNormalizedZeroDiagonal) {
    auto x = testutil::random_matrix(40, 6, 3);
    auto p = input_affinities(x, 5);
    double sum = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_EQ(p(i, i), 0.0);
        for (std::size_t j = 0; j < 40; ++j) {
            EXPECT_GE(p(i, j), 0.0);
            EXPECT_NEAR(p(i, j), p(j, i), 1e-15);
            sum += p(i, j);
        }
    }
    EXPECT_NEAR(sum, 1.0, 1e-10);
}

TEST(Affinities, RowPerplexityMatchesTarget) {
    auto x = testutil::random_matrix(60, 4, 7);
    for (double perp : {3.0, 10.0, 19.0}) {
        auto cond = conditional_affinities(x, perp);
        for (std::size_t i = 0; i < 60; ++i) {
            double h = 0, total = 0;
            for (std::size_t j = 0; j < 60; ++j) {
                double v = cond(i, j);
                total += v;
                if (v > 0) {
                    h -= v * std::log2(v);
                }
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
            EXPECT_NEAR(std::pow(2.0, h), perp, 1e-4) << "row " << i;
        }
    }
}

TEST(Affinities, SeparatedClustersKeepMassInside) {
    auto f = blobs(20, 5, 50, 1);
    auto p = input_affinities(f.values(), 5);
    double inside = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t j = 0; j < 40; ++j) {
            if ((i < 20) == (j < 20)) {
                inside += p(i, j);
            }
        }
    }
    EXPECT_GT(inside, 0.99);
}

TEST(Affinities, DegenerateInputRaises) {
    Matrix x(10, 2, 0.0);
    EXPECT_THROW(input_affinities(x, 2), NumericalError);
}

TEST(KlGradient, SymmetricPairIsStationary) {
    Matrix p(2, 2, std::vector<double>{0, 0.5, 0.5, 0});
    Matrix y(2, 1, std::vector<double>{-0.5, 0.5});
    auto g = kl_gradient(p, y);
    EXPECT_NEAR(g(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(g(1, 0), 0.0, 1e-15);
    EXPECT_NEAR(kl_divergence(p, y), 0.0, 1e-15);
}

TEST(KlGradient, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const std::size_t n = 10, d = 1 + seed % 3;
        auto x = testutil::random_matrix(n, 5, 100 + seed);
        auto p = input_affinities(x, 2.5);
        auto y = testutil::random_matrix(n, d, 200 + seed);
        auto g = kl_gradient(p, y);
        EXPECT_LT(max_rel_error(g, numeric_gradient(p, y)), 1e-4) << "seed " << seed;
        for (std::size_t k = 0; k < d; ++k) {
            double s = 0;
            for (std::size_t i = 0; i < n; ++i) {
                s += g(i, k);
            }
            EXPECT_NEAR(s, 0.0, 1e-12);
        }
    }
}

TEST(Tsne, SeparatesBlobsDeterministically) {
    auto f = blobs(50, 50, 4, 5);
    TsneConfig cfg;
    cfg.perplexity = 20;
    cfg.iterations = 500;
    cfg.seed = 9;
    auto e = tsne(f, cfg);
    ASSERT_EQ(e.coords.rows(), 100u);
    ASSERT_EQ(e.coords.cols(), 2u);

    // Project on the line through the blob centroids: the 1D threshold there is the best rotation's first axis.
    double c[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < 100; ++i) {
        for (std::size_t k = 0; k < 2; ++k) {
            c[i >= 50][k] += e.coords(i, k) / 50;
        }
    }
    const double ax = c[1][0] - c[0][0], ay = c[1][1] - c[0][1];
    double max0 = -1e300, min1 = 1e300;
    for (std::size_t i = 0; i < 100; ++i) {
        double s = e.coords(i, 0) * ax + e.coords(i, 1) * ay;
        if (i < 50) {
            max0 = std::max(max0, s);
        } else {
            min1 = std::min(min1, s);
        }
    }
    EXPECT_LT(max0, min1);

    auto again = tsne(f, cfg);
    EXPECT_EQ(again.coords, e.coords);

    ASSERT_FALSE(e.kl_trace.empty());
    for (const auto& pt : e.kl_trace) {
        EXPECT_GE(pt.kl, 0.0);
    }
    auto after = kl_after_exaggeration(e, cfg);
    ASSERT_TRUE(after.has_value());
    EXPECT_LE(e.kl_trace.back().kl, *after);
}

TEST(Tsne, PermutationEquivariant) {
    auto f = blobs(15, 4, 3, 2);
    TsneConfig cfg;
    cfg.perplexity = 5;
    cfg.iterations = 200;
    cfg.output_dims = 3;
    auto e = tsne(f, cfg);

    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(1);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto g = tsne(f.select_rows(perm), cfg);
    for (std::size_t r = 0; r < 30; ++r) {
        EXPECT_EQ(g.patient_ids[r], e.patient_ids[perm[r]]);
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_EQ(g.coords(r, k), e.coords(perm[r], k));
        }
    }
}

TEST(Tsne, ConfigValidation) {
    auto f = blobs(5, 3, 1, 1);
    TsneConfig cfg;
    EXPECT_THROW(tsne(f, cfg), ConfigError);
    cfg.perplexity = 2;
    cfg.output_dims = 0;
    EXPECT_THROW(tsne(f, cfg), ConfigError);
}

TEST(ProjectWithAge, ShapeNamesAndAges) {
    auto f = blobs(15, 4, 3, 3);
    std::vector<ClinicalRecord> clinical;
    for (std::size_t i = 0; i < 30; ++i) {
        // Clinical order differs from feature order on purpose.
        const std::size_t r = 29 - i;
        clinical.push_back(ClinicalRecord{"p" + std::to_string(r), 10, true, 40.0 + static_cast<double>(r), std::nullopt});
    }
    TsneConfig cfg;
    cfg.perplexity = 5;
    cfg.iterations = 60;
    cfg.early_exaggeration_iters = 20;
    for (int d : {3, 5, 10, 15, 40, 70}) {
        cfg.output_dims = d;
        auto out = project_with_age(f, clinical, cfg);
        ASSERT_EQ(out.cols(), static_cast<std::size_t>(d + 1));
        EXPECT_EQ(out.feature_names().front(), "tsne_0");
        EXPECT_EQ(out.feature_names()[d - 1], "tsne_" + std::to_string(d - 1));
        EXPECT_EQ(out.feature_names().back(), "age");
        for (std::size_t i = 0; i < 30; ++i) {
            EXPECT_EQ(out.values()(i, d), 40.0 + static_cast<double>(i));
        }
    }
    clinical[4].age_years.reset();
    cfg.output_dims = 3;
    EXPECT_THROW(project_with_age(f, clinical, cfg), DataError);
}
