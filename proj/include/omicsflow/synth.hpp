#ifndef OMICSFLOW_SYNTH_HPP
#define OMICSFLOW_SYNTH_HPP

#include "core/errors.hpp"
#include "core/matrix.hpp"
#include "core/random.hpp"
#include "dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

/**
 * @file synth.hpp
 * @brief Synthetic multi-platform cohorts with known ground truth.
 *
 * A cohort is driven by a low-rank latent structure: per-patient factor scores and per-gene loadings.
 * The factor scores shift the log-mean of informative genes on every platform and, through a risk score,
 * the hazard of an exponential survival model.
 * Gene-level quantities (which genes are informative, their loadings, platform baselines) come from `gene_seed`,
 * so cohorts drawn with different `seed`s but the same `gene_seed` share biology and can be pooled.
 */

namespace omicsflow::synth {

/**
 * Shape of the latent signal.
 * `linear`: one factor; risk equals the factor score, so expression and survival are monotonically related.
 * `clustered`: four clusters at (+-s, +-s) in a two-factor space; risk is high on one diagonal and low on the other,
 * so no single gene separates the risk groups.
 */
enum class LatentStructure { linear, clustered };

struct SynthConfig {
    int n_patients = 500;
    int n_genes = 200;
    int n_informative_genes = 10;
    std::uint64_t seed = 1;
    /// Seed for gene-level parameters; 0 means "derive from `seed`".
    std::uint64_t gene_seed = 0;

    double gamma_shape = 2.0;
    double gamma_rate = 1.0;
    double nb_mean = 100.0;
    double nb_dispersion = 0.2;
    /// Standard deviation of per-gene log baselines on the RNA-seq platform.
    double nb_gene_spread = 0.5;

    double baseline_median_survival_months = 60.0;
    double censoring_fraction_target = 0.446;
    /// Log-hazard ratio per unit of latent risk.
    double risk_coefficient = 1.0;
    /// Magnitude of each informative gene's loading, in natural-log expression units.
    double effect_size = 1.0;

    LatentStructure structure = LatentStructure::linear;
    double cluster_separation = 1.0;
    double cluster_jitter = 0.25;

    double age_mean = 60.0;
    double age_sd = 12.0;
    std::string patient_prefix = "p";

    void validate() const {
        if (n_patients <= 0 || n_genes <= 0) {
            throw ConfigError("synth: n_patients and n_genes must be positive");
        }
        if (n_informative_genes < 0 || n_informative_genes > n_genes) {
            throw ConfigError("synth: n_informative_genes must lie in [0, n_genes]");
        }
        if (!(gamma_shape > 0) || !(gamma_rate > 0) || !(nb_dispersion > 0) || !(nb_mean > 0)) {
            throw ConfigError("synth: gamma_shape, gamma_rate, nb_mean and nb_dispersion must be positive");
        }
        if (!(baseline_median_survival_months > 0)) {
            throw ConfigError("synth: baseline_median_survival_months must be positive");
        }
        if (!(censoring_fraction_target >= 0 && censoring_fraction_target <= 1)) {
            throw ConfigError("synth: censoring_fraction_target must lie in [0, 1]");
        }
    }

    std::uint64_t effective_gene_seed() const {
        return gene_seed ? gene_seed : derive_seed(seed, 0x67656e65);
    }
};

/**
 * @brief Ground-truth latent structure of a synthetic cohort.
 */
struct Latent {
    std::vector<std::string> patient_ids;
    /// Patients x factors.
    Matrix factors;
    /// Factors x genes; a gene is informative iff its column has a nonzero entry.
    Matrix loadings;
    /// Per-patient latent risk entering the hazard.
    std::vector<double> risk;
    /// Sorted indices of informative genes.
    std::vector<std::size_t> informative_genes;
    /// Per-patient cluster index (clustered structure), otherwise 0/1 for risk below/above zero.
    std::vector<int> group;

    /// Log-scale expression shift for patient `i`, gene `g`.
    double shift(std::size_t i, std::size_t g) const {
        double s = 0;
        for (std::size_t k = 0; k < factors.cols(); ++k) {
            s += factors(i, k) * loadings(k, g);
        }
        return s;
    }
};

/**
 * @brief Unobserved quantities behind each clinical record.
 */
struct TruthRecord {
    std::string patient_id;
    double true_death_time = 0;
    double true_censor_time = 0;
    double true_risk = 0;
};

struct SyntheticClinical {
    std::vector<ClinicalRecord> records;
    std::vector<TruthRecord> truth;
    /// Rate of the exponential censoring distribution found by calibration (0 = no censoring).
    double censor_rate = 0;
};

inline std::string padded_id(const std::string& prefix, int i, int width) {
    std::string digits = std::to_string(i);
    if (static_cast<int>(digits.size()) < width) {
        digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    }
    return prefix + digits;
}

inline std::vector<std::string> gene_names(int n_genes) {
    std::vector<std::string> out;
    out.reserve(n_genes);
    const int width = static_cast<int>(std::to_string(n_genes).size());
    for (int g = 0; g < n_genes; ++g) {
        out.push_back(padded_id("g", g, width));
    }
    return out;
}

/**
 * Draws per-patient factor scores and per-gene loadings.
 * Exactly `n_informative_genes` genes receive a nonzero loading of magnitude `effect_size` with random sign.
 */
inline Latent gen_latent(const SynthConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.n_patients);
    const auto m = static_cast<std::size_t>(config.n_genes);
    const auto n_inf = static_cast<std::size_t>(config.n_informative_genes);
    const std::size_t k = config.structure == LatentStructure::linear ? 1 : 2;

    Latent latent;
    const int width = static_cast<int>(std::to_string(config.n_patients).size());
    for (int i = 0; i < config.n_patients; ++i) {
        latent.patient_ids.push_back(padded_id(config.patient_prefix, i, width));
    }

    // Gene-level draws.
    Rng gene_rng(derive_seed(config.effective_gene_seed(), 1));
    std::vector<std::size_t> genes(m);
    std::iota(genes.begin(), genes.end(), std::size_t{0});
    shuffle_in_place(genes, gene_rng);
    latent.informative_genes.assign(genes.begin(), genes.begin() + static_cast<std::ptrdiff_t>(n_inf));
    std::sort(latent.informative_genes.begin(), latent.informative_genes.end());

    latent.loadings = Matrix(k, m, 0.0);
    for (std::size_t j = 0; j < latent.informative_genes.size(); ++j) {
        double sign = uniform01(gene_rng) < 0.5 ? -1.0 : 1.0;
        latent.loadings(j % k, latent.informative_genes[j]) = sign * config.effect_size;
    }

    // Patient-level draws.
    Rng rng(derive_seed(config.seed, 2));
    std::normal_distribution<double> normal(0.0, 1.0);
    latent.factors = Matrix(n, k, 0.0);
    latent.risk.assign(n, 0.0);
    latent.group.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (config.structure == LatentStructure::linear) {
            double z = normal(rng);
            latent.factors(i, 0) = z;
            latent.risk[i] = n_inf > 0 ? z : 0.0;
            latent.group[i] = latent.risk[i] > 0 ? 1 : 0;
        } else {
            int cluster = static_cast<int>(uniform_index(rng, 4));
            double s1 = (cluster & 1) ? 1.0 : -1.0;
            double s2 = (cluster & 2) ? 1.0 : -1.0;
            latent.factors(i, 0) = s1 * config.cluster_separation + config.cluster_jitter * normal(rng);
            latent.factors(i, 1) = s2 * config.cluster_separation + config.cluster_jitter * normal(rng);
            latent.risk[i] = n_inf > 0 ? s1 * s2 : 0.0;
            latent.group[i] = cluster;
        }
    }
    return latent;
}

/**
 * Microarray-like intensities: each value is Gamma(shape, rate) scaled by exp(latent shift), so informative genes
 * have their mean moved multiplicatively while every value stays non-negative.
 */
inline ExpressionMatrix gen_microarray(const SynthConfig& config, const Latent& latent) {
    const auto n = static_cast<std::size_t>(config.n_patients);
    const auto m = static_cast<std::size_t>(config.n_genes);
    if (latent.patient_ids.size() != n || latent.loadings.cols() != m) {
        throw ConfigError("synth: latent dimensions do not match config");
    }
    Rng rng(derive_seed(config.seed, 3));
    std::gamma_distribution<double> gamma(config.gamma_shape, 1.0 / config.gamma_rate);
    Matrix values(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t g = 0; g < m; ++g) {
            values(i, g) = gamma(rng) * std::exp(latent.shift(i, g));
        }
    }
    return ExpressionMatrix("microarray", latent.patient_ids, gene_names(config.n_genes), std::move(values), Scale::linear);
}

/**
 * RNA-seq-like counts: negative binomial via the gamma-Poisson mixture, with variance mu + dispersion * mu^2.
 * Gene baselines vary log-normally around `nb_mean`; the latent shift multiplies the mean.
 */
inline ExpressionMatrix gen_rnaseq(const SynthConfig& config, const Latent& latent) {
    const auto n = static_cast<std::size_t>(config.n_patients);
    const auto m = static_cast<std::size_t>(config.n_genes);
    if (latent.patient_ids.size() != n || latent.loadings.cols() != m) {
        throw ConfigError("synth: latent dimensions do not match config");
    }
    Rng gene_rng(derive_seed(config.effective_gene_seed(), 4));
    std::normal_distribution<double> normal(0.0, config.nb_gene_spread);
    std::vector<double> base(m);
    for (auto& b : base) {
        b = config.nb_mean * std::exp(normal(gene_rng));
    }

    Rng rng(derive_seed(config.seed, 5));
    const double shape = 1.0 / config.nb_dispersion;
    Matrix values(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t g = 0; g < m; ++g) {
            double mu = base[g] * std::exp(latent.shift(i, g));
            std::gamma_distribution<double> gamma(shape, mu * config.nb_dispersion);
            double lambda = gamma(rng);
            std::poisson_distribution<long long> poisson(lambda);
            values(i, g) = lambda > 0 ? static_cast<double>(poisson(rng)) : 0.0;
        }
    }
    return ExpressionMatrix("rnaseq", latent.patient_ids, gene_names(config.n_genes), std::move(values), Scale::linear);
}

/**
 * GISTIC-style copy-number calls loosely tracking the latent shift: a Gaussian around the shift is cut at +-0.5, +-1.5.
 */
inline CnaMatrix gen_cna(const SynthConfig& config, const Latent& latent) {
    const auto n = static_cast<std::size_t>(config.n_patients);
    const auto m = static_cast<std::size_t>(config.n_genes);
    Rng rng(derive_seed(config.seed, 6));
    std::normal_distribution<double> normal(0.0, 0.6);
    IntMatrix values(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t g = 0; g < m; ++g) {
            double v = latent.shift(i, g) + normal(rng);
            values(i, g) = static_cast<int>(std::clamp(std::lround(v), -2L, 2L));
        }
    }
    return CnaMatrix(latent.patient_ids, gene_names(config.n_genes), std::move(values));
}

/**
 * Exponential survival with hazard `ln2 / median * exp(risk_coefficient * risk)` and independent exponential censoring.
 *
 * The censoring rate is calibrated by bisection on the realised censored fraction, holding the underlying
 * unit-exponential draws fixed, so the achieved fraction is reproducible and close to the target.
 */
inline SyntheticClinical gen_clinical(const SynthConfig& config, const Latent& latent) {
    const auto n = latent.patient_ids.size();
    Rng rng(derive_seed(config.seed, 7));
    std::exponential_distribution<double> unit_exp(1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double base_rate = std::log(2.0) / config.baseline_median_survival_months;
    std::vector<double> death(n), censor_draw(n), age(n);
    for (std::size_t i = 0; i < n; ++i) {
        double rate = base_rate * std::exp(config.risk_coefficient * latent.risk[i]);
        death[i] = unit_exp(rng) / rate;
        censor_draw[i] = unit_exp(rng);
        age[i] = std::max(18.0, config.age_mean + config.age_sd * normal(rng));
    }

    auto censored_fraction = [&](double crate) {
        std::size_t c = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (censor_draw[i] / crate < death[i]) {
                ++c;
            }
        }
        return static_cast<double>(c) / static_cast<double>(n);
    };

    double crate = 0;
    const double target = config.censoring_fraction_target;
    if (target > 0) {
        double lo = std::log(1e-10), hi = std::log(1e10);
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (censored_fraction(std::exp(mid)) < target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // The realised fraction is a step function of the rate; take whichever bracket end lands closer.
        double flo = censored_fraction(std::exp(lo)), fhi = censored_fraction(std::exp(hi));
        crate = std::abs(flo - target) <= std::abs(fhi - target) ? std::exp(lo) : std::exp(hi);
    }

    SyntheticClinical out;
    out.censor_rate = crate;
    for (std::size_t i = 0; i < n; ++i) {
        double censor = crate > 0 ? censor_draw[i] / crate : std::numeric_limits<double>::infinity();
        ClinicalRecord rec;
        rec.patient_id = latent.patient_ids[i];
        rec.event = death[i] <= censor;
        rec.observed_time_months = std::min(death[i], censor);
        rec.age_years = age[i];
        rec.group_label = "G" + std::to_string(latent.group[i]);
        out.records.push_back(rec);
        out.truth.push_back({latent.patient_ids[i], death[i], censor, latent.risk[i]});
    }
    return out;
}

inline void store_truth(const std::vector<TruthRecord>& truth, const std::string& path) {
    std::string out = "patient_id,true_death_time,true_risk\n";
    for (const auto& t : truth) {
        out += t.patient_id + ',' + csv::format_double(t.true_death_time) + ',' + csv::format_double(t.true_risk) + '\n';
    }
    csv::write_file(path, out);
}

/**
 * @brief Everything generated for one synthetic cohort.
 */
struct Cohort {
    Latent latent;
    ExpressionMatrix microarray;
    ExpressionMatrix rnaseq;
    CnaMatrix cna;
    SyntheticClinical clinical;
};

inline Cohort generate(const SynthConfig& config) {
    Cohort c;
    c.latent = gen_latent(config);
    c.microarray = gen_microarray(config, c.latent);
    c.rnaseq = gen_rnaseq(config, c.latent);
    c.cna = gen_cna(config, c.latent);
    c.clinical = gen_clinical(config, c.latent);
    return c;
}

}

#endif
