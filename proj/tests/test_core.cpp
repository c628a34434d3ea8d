#include <omicsflow/core/csv.hpp>
#include <omicsflow/core/matrix.hpp>
#include <omicsflow/core/parallel.hpp>
#include <omicsflow/core/random.hpp>
#include <omicsflow/core/stats.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <sstream>

using namespace omicsflow;

TEST(Matrix, TransposeAndSelect) {
    Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    auto t = m.transpose();
    EXPECT_EQ(t.rows(), 3u);
    EXPECT_EQ(t(2, 1), 6);
    std::vector<std::size_t> rows{1}, cols{2, 0};
    EXPECT_EQ(m.select_rows(rows).data(), (std::vector<double>{4, 5, 6}));
    EXPECT_EQ(m.select_cols(cols).data(), (std::vector<double>{3, 1, 6, 4}));
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Matrix, MultiplyTransposedMatchesLoops) {
    Matrix a(2, 2, std::vector<double>{1, 2, 3, 4});
    Matrix b(3, 2, std::vector<double>{1, 0, 0, 1, 1, 1});
    auto c = multiply_transposed(a, b);
    EXPECT_EQ(c.data(), (std::vector<double>{1, 2, 3, 3, 4, 7}));
}

TEST(Csv, ParsesCommaAndTab) {
    std::istringstream comma("a,b\n1,2\n\n3,4\n");
    auto t = csv::parse(comma, "x");
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.line_numbers[1], 4u);
    std::istringstream tab("\xEF\xBB\xBF" "a\tb\r\n1\t2\r\n");
    auto u = csv::parse(tab, "y");
    EXPECT_EQ(u.header[0], "a");
    EXPECT_EQ(u.rows[0][1], "2");
}

TEST(Csv, RaggedRowNamesLine) {
    std::istringstream in("a,b\n1,2\n3\n");
    try {
        csv::parse(in, "f.csv");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Csv, NumberParsingAndRoundTrip) {
    EXPECT_FALSE(csv::parse_double("NA"));
    EXPECT_FALSE(csv::parse_double("1.5x"));
    EXPECT_EQ(*csv::parse_double(" 2.5 "), 2.5);
    EXPECT_FALSE(csv::parse_int("1.0"));
    EXPECT_EQ(*csv::parse_int("-2"), -2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        double v = u(rng);
        EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
    }
}

TEST(Random, DeriveSeedIsDeterministicAndSpread) {
    EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
    EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
    EXPECT_EQ(fnv1a("abc"), fnv1a("abc"));
    EXPECT_NE(fnv1a("abc"), fnv1a("abd"));
}

TEST(Random, UniformIndexCoversRange) {
    Rng rng(9);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        auto k = uniform_index(rng, 7);
        ASSERT_LT(k, 7u);
        hits[k]++;
    }
    for (int h : hits) {
        EXPECT_GT(h, 850);
        EXPECT_LT(h, 1150);
    }
    for (int i = 0; i < 1000; ++i) {
        double u = uniform01(rng);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Random, ShuffleIsPermutation) {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    Rng rng(1);
    shuffle_in_place(v, rng);
    std::set<int> s(v.begin(), v.end());
    EXPECT_EQ(s.size(), 50u);
    std::vector<int> w(50);
    std::iota(w.begin(), w.end(), 0);
    Rng rng2(1);
    shuffle_in_place(w, rng2);
    EXPECT_EQ(v, w);
}

TEST(Stats, TwiceAverageRanks) {
    std::vector<double> x{3, 1, 3, 2};
    // sorted: 1(0) 2(1) 3,3 (2,3) -> twice average 5
    EXPECT_EQ(stats::twice_average_ranks(x), (std::vector<std::size_t>{5, 0, 5, 2}));
}

TEST(Stats, KsStatisticMatchesBruteForce) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> u(0, 20);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> a(15 + rep % 7), b(10 + rep % 5);
        for (auto& v : a) {
            v = u(rng);
        }
        for (auto& v : b) {
            v = u(rng) + 2;
        }
        double brute = 0;
        for (int t = -1; t <= 25; ++t) {
            double fa = std::count_if(a.begin(), a.end(), [&](double v) { return v <= t; }) / double(a.size());
            double fb = std::count_if(b.begin(), b.end(), [&](double v) { return v <= t; }) / double(b.size());
            brute = std::max(brute, std::abs(fa - fb));
        }
        EXPECT_DOUBLE_EQ(stats::ks_statistic(a, b), brute);
    }
}

TEST(Stats, KsPvalueLimits) {
    EXPECT_DOUBLE_EQ(stats::ks_pvalue(0.0, 100, 100), 1.0);
    EXPECT_LT(stats::ks_pvalue(0.5, 100, 100), 1e-8);
    // Critical value for alpha = 0.05 at n = m = 500 is about 1.358 * sqrt(2/500) = 0.0859.
    EXPECT_NEAR(stats::ks_pvalue(0.0859, 500, 500), 0.05, 0.01);
}

TEST(Parallel, EveryIndexOnceAndLowestErrorWins) {
    std::vector<std::atomic<int>> seen(100);
    parallel_for(100, 4, [&](std::size_t i) { seen[i]++; });
    for (auto& s : seen) {
        EXPECT_EQ(s.load(), 1);
    }
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 30) {
                throw std::runtime_error("task " + std::to_string(i));
            }
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "task 7");
    }
}
