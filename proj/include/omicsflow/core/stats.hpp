#ifndef OMICSFLOW_CORE_STATS_HPP
#define OMICSFLOW_CORE_STATS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

/**
 * @file stats.hpp
 * @brief Small statistical helpers shared by several modules.
 */

namespace omicsflow::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) {
        return 0;
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population variance (divisor n).
inline double variance(std::span<const double> x) {
    if (x.empty()) {
        return 0;
    }
    double m = mean(x);
    double s = 0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return s / static_cast<double>(x.size());
}

/// Sample variance (divisor n - 1).
inline double sample_variance(std::span<const double> x) {
    if (x.size() < 2) {
        return 0;
    }
    return variance(x) * static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
}

/**
 * Returns twice the 0-based average rank of each value, so that ranks of tied blocks stay integral.
 * A block of tied values occupying sorted positions a..b gets `a + b` for every member.
 */
inline std::vector<std::size_t> twice_average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    std::vector<std::size_t> out(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) {
            ++j;
        }
        for (std::size_t k = i; k <= j; ++k) {
            out[order[k]] = i + j;
        }
        i = j + 1;
    }
    return out;
}

/**
 * Two-sample Kolmogorov-Smirnov statistic: the supremum distance between the two empirical CDFs.
 */
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) {
            ++i;
        }
        while (j < b.size() && b[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/**
 * Asymptotic p-value for the two-sample KS statistic `d` with sample sizes `na`, `nb`.
 * Uses the Kolmogorov series with the Stephens small-sample correction.
 */
inline double ks_pvalue(double d, std::size_t na, std::size_t nb) {
    const double ne = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(na + nb);
    const double sq = std::sqrt(ne);
    const double lambda = (sq + 0.12 + 0.11 / sq) * d;
    if (lambda < 1e-3) {
        return 1.0;
    }
    double sum = 0;
    double sign = 1;
    for (int k = 1; k <= 100; ++k) {
        double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) {
            break;
        }
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}

#endif
