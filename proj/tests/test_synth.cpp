#include <omicsflow/core/stats.hpp>
#include <omicsflow/eval.hpp>
#include <omicsflow/survival.hpp>
#include <omicsflow/synth.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace omicsflow;
using synth::SynthConfig;

namespace {

SynthConfig small(std::uint64_t seed = 3) {
    SynthConfig c;
    c.n_patients = 200;
    c.n_genes = 40;
    c.n_informative_genes = 5;
    c.seed = seed;
    return c;
}

}

TEST(GenLatent, NoInformativeGenesMeansFlatRisk) {
    auto c = small();
    c.n_informative_genes = 0;
    auto l = synth::gen_latent(c);
    for (double v : l.loadings.data()) {
        EXPECT_EQ(v, 0.0);
    }
    for (double r : l.risk) {
        EXPECT_EQ(r, l.risk.front());
    }
    EXPECT_TRUE(l.informative_genes.empty());
}

TEST(GenLatent, ExactlyInformativeGenesLoaded) {
    for (auto structure : {synth::LatentStructure::linear, synth::LatentStructure::clustered}) {
        auto c = small();
        c.n_informative_genes = 7;
        c.structure = structure;
        auto l = synth::gen_latent(c);
        std::size_t loaded = 0;
        for (std::size_t g = 0; g < l.loadings.cols(); ++g) {
            bool nz = false;
            for (std::size_t k = 0; k < l.loadings.rows(); ++k) {
                nz = nz || l.loadings(k, g) != 0;
            }
            loaded += nz;
            EXPECT_EQ(nz, std::binary_search(l.informative_genes.begin(), l.informative_genes.end(), g));
        }
        EXPECT_EQ(loaded, 7u);
    }
}

TEST(GenLatent, DeterministicPerSeed) {
    auto a = synth::gen_latent(small(5));
    auto b = synth::gen_latent(small(5));
    auto c = synth::gen_latent(small(6));
    EXPECT_EQ(a.factors, b.factors);
    EXPECT_EQ(a.loadings, b.loadings);
    EXPECT_NE(a.factors, c.factors);
}

TEST(GenLatent, SharedGeneSeedSharesBiology) {
    auto c1 = small(1), c2 = small(2);
    c1.gene_seed = c2.gene_seed = 77;
    auto a = synth::gen_latent(c1);
    auto b = synth::gen_latent(c2);
    EXPECT_EQ(a.loadings, b.loadings);
    EXPECT_NE(a.factors, b.factors);
}

TEST(GenMicroarray, GammaMeanWithoutSignal) {
    SynthConfig c;
    c.n_patients = 2000;
    c.n_genes = 20;
    c.n_informative_genes = 0;
    c.gamma_shape = 2;
    c.gamma_rate = 1;
    auto m = synth::gen_microarray(c, synth::gen_latent(c));
    const double mean = stats::mean(m.values().data());
    EXPECT_NEAR(mean, 2.0, 0.1);
    for (double v : m.values().data()) {
        ASSERT_GE(v, 0.0);
    }
}

TEST(GenMicroarray, ZeroLoadingsLeaveInformativeGenesUnchanged) {
    SynthConfig c;
    c.n_patients = 2000;
    c.n_genes = 20;
    c.n_informative_genes = 5;
    c.effect_size = 0;
    auto l = synth::gen_latent(c);
    auto m = synth::gen_microarray(c, l);
    std::vector<double> inf, other;
    for (std::size_t g = 0; g < m.n_genes(); ++g) {
        bool is_inf = std::binary_search(l.informative_genes.begin(), l.informative_genes.end(), g);
        if (!is_inf && other.size() >= 5 * m.n_patients()) {
            continue;
        }
        auto col = m.values().column(g);
        (is_inf ? inf : other).insert((is_inf ? inf : other).end(), col.begin(), col.end());
    }
    const double d = stats::ks_statistic(inf, other);
    EXPECT_GT(stats::ks_pvalue(d, inf.size(), other.size()), 0.01) << "KS D=" << d;
}

TEST(GenMicroarray, SignalShiftsInformativeGenes) {
    auto c = small();
    c.n_patients = 1000;
    auto l = synth::gen_latent(c);
    auto m = synth::gen_microarray(c, l);
    const auto g = l.informative_genes.front();
    std::vector<double> x, risk;
    for (std::size_t i = 0; i < m.n_patients(); ++i) {
        x.push_back(std::log(m.values()(i, g)));
        risk.push_back(l.factors(i, 0));
    }
    double mx = stats::mean(x), mr = stats::mean(risk), cov = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (risk[i] - mr);
    }
    EXPECT_GT(std::abs(cov / x.size()), 0.5);
}

TEST(GenRnaseq, NonNegativeIntegersOverdispersedDeterministic) {
    SynthConfig c;
    c.n_patients = 2000;
    c.n_genes = 10;
    c.n_informative_genes = 0;
    c.nb_gene_spread = 0;
    auto l = synth::gen_latent(c);
    auto m = synth::gen_rnaseq(c, l);
    for (double v : m.values().data()) {
        ASSERT_GE(v, 0.0);
        ASSERT_EQ(v, std::floor(v));
    }
    const auto& data = m.values().data();
    EXPECT_GT(stats::variance(data), stats::mean(data));
    // gamma-Poisson: variance = mu + dispersion * mu^2 = 100 + 0.2 * 10000
    EXPECT_NEAR(stats::variance(data) / 2100.0, 1.0, 0.1);
    EXPECT_EQ(synth::gen_rnaseq(c, l).values(), m.values());
}

TEST(GenCna, CategoriesOnly) {
    auto c = small();
    auto l = synth::gen_latent(c);
    auto cna = synth::gen_cna(c, l);
    for (int v : cna.values().data()) {
        ASSERT_GE(v, -2);
        ASSERT_LE(v, 2);
    }
}

TEST(GenClinical, NoCensoringTarget) {
    auto c = small();
    c.censoring_fraction_target = 0;
    auto clin = synth::gen_clinical(c, synth::gen_latent(c));
    for (const auto& r : clin.records) {
        EXPECT_TRUE(r.event);
    }
}

TEST(GenClinical, CensoringCalibration) {
    SynthConfig c;
    c.n_patients = 3000;
    c.n_genes = 10;
    c.n_informative_genes = 3;
    c.censoring_fraction_target = 0.446;
    auto clin = synth::gen_clinical(c, synth::gen_latent(c));
    std::size_t censored = 0;
    for (const auto& r : clin.records) {
        censored += !r.event;
    }
    const double frac = static_cast<double>(censored) / 3000.0;
    EXPECT_GE(frac, 0.396);
    EXPECT_LE(frac, 0.496);
}

TEST(GenClinical, RecordsAgreeWithTruth) {
    auto c = small(9);
    auto clin = synth::gen_clinical(c, synth::gen_latent(c));
    ASSERT_EQ(clin.records.size(), clin.truth.size());
    for (std::size_t i = 0; i < clin.records.size(); ++i) {
        const auto& r = clin.records[i];
        const auto& t = clin.truth[i];
        EXPECT_EQ(r.observed_time_months, std::min(t.true_death_time, t.true_censor_time));
        EXPECT_EQ(r.event, t.true_death_time <= t.true_censor_time);
    }
}

TEST(GenClinical, HigherRiskDecileDiesSooner) {
    SynthConfig c;
    c.n_patients = 3000;
    c.n_genes = 10;
    c.n_informative_genes = 3;
    auto l = synth::gen_latent(c);
    auto clin = synth::gen_clinical(c, l);
    std::vector<std::size_t> order(l.risk.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return l.risk[a] < l.risk[b]; });
    const std::size_t dec = order.size() / 10;
    double low = 0, high = 0;
    for (std::size_t k = 0; k < dec; ++k) {
        low += clin.records[order[k]].observed_time_months;
        high += clin.records[order[order.size() - 1 - k]].observed_time_months;
    }
    EXPECT_LT(high / dec, low / dec);
}

TEST(Synth, InformativeGeneSignalIsRecoverable) {
    SynthConfig c;
    auto cohort = synth::generate(c);
    double best = 0;
    for (auto g : cohort.latent.informative_genes) {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < cohort.clinical.records.size(); ++i) {
            auto l = make_label(cohort.clinical.records[i], 60);
            if (l == SurvivalLabel::Dropped) {
                continue;
            }
            s.push_back(cohort.microarray.values()(i, g));
            y.push_back(l == SurvivalLabel::Survived);
        }
        double a = auc(s, y);
        best = std::max(best, std::max(a, 1 - a));
    }
    EXPECT_GT(best, 0.6);
}

TEST(Synth, FullDeterminism) {
    auto a = synth::generate(small(4));
    auto b = synth::generate(small(4));
    EXPECT_EQ(a.microarray.values(), b.microarray.values());
    EXPECT_EQ(a.rnaseq.values(), b.rnaseq.values());
    EXPECT_EQ(a.cna.values(), b.cna.values());
    EXPECT_EQ(a.clinical.records, b.clinical.records);
}

TEST(SynthConfig, Validation) {
    auto c = small();
    c.n_informative_genes = 100;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.censoring_fraction_target = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
}
