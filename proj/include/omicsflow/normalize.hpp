#ifndef OMICSFLOW_NORMALIZE_HPP
#define OMICSFLOW_NORMALIZE_HPP

#include "core/errors.hpp"
#include "core/stats.hpp"
#include "dataio.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <unordered_set>
#include <vector>

/**
 * @file normalize.hpp
 * @brief Feature-specific quantile normalization (FSQN) of one platform onto another.
 */

namespace omicsflow {

/**
 * Replaces every value `v` by `log2(v + 1)`. Only valid on linear-scale input.
 */
inline ExpressionMatrix log2_transform(const ExpressionMatrix& m) {
    if (m.scale() != Scale::linear) {
        throw DataError("log2_transform: '" + m.platform_id() + "' is already on the log2 scale");
    }
    Matrix out = m.values();
    for (auto& v : out.data()) {
        v = std::log2(v + 1.0);
    }
    return ExpressionMatrix(m.platform_id(), m.patient_ids(), m.gene_ids(), std::move(out), Scale::log2);
}

/**
 * Empirical quantile of a sorted sample at probability `p`.
 *
 * The sorted value at index `j` sits at probability `(j + 0.5) / n`; between those points the quantile is linear,
 * and outside them it is clamped to the first/last value.
 */
inline double empirical_quantile(std::span<const double> sorted, double p) {
    const double n = static_cast<double>(sorted.size());
    const double pos = p * n - 0.5;
    if (pos <= 0) {
        return sorted.front();
    }
    if (pos >= n - 1) {
        return sorted.back();
    }
    const auto j = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(j);
    return sorted[j] + frac * (sorted[j + 1] - sorted[j]);
}

/**
 * Maps one gene's target values onto the distribution of `sorted_reference`.
 *
 * Target value with 0-based average rank `k` (out of `n_t`) becomes the reference quantile at `(k + 0.5) / n_t`.
 * Ranks are doubled so that the interpolation position is computed from integers:
 * `pos = ((2k + 1) n_r - n_t) / (2 n_t)`, which makes the equal-size case land exactly on reference values.
 */
inline void quantile_map(std::span<const double> target, std::span<const double> sorted_reference, std::span<double> out) {
    const auto nt = static_cast<long long>(target.size());
    const auto nr = static_cast<long long>(sorted_reference.size());
    const auto ranks2 = stats::twice_average_ranks(target);
    const long long denom = 2 * nt;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const long long num = (static_cast<long long>(ranks2[i]) + 1) * nr - nt;
        if (num <= 0) {
            out[i] = sorted_reference.front();
            continue;
        }
        const long long j = num / denom;
        if (j >= nr - 1) {
            out[i] = sorted_reference.back();
            continue;
        }
        const long long rem = num % denom;
        const auto ju = static_cast<std::size_t>(j);
        if (rem == 0) {
            out[i] = sorted_reference[ju];
        } else {
            const double frac = static_cast<double>(rem) / static_cast<double>(denom);
            out[i] = sorted_reference[ju] + frac * (sorted_reference[ju + 1] - sorted_reference[ju]);
        }
    }
}

/**
 * Feature-specific quantile normalization: for each gene independently, the target's values are replaced by
 * the reference's empirical quantiles at the target values' ranks.
 *
 * Both matrices must hold the same gene set (order may differ; the output keeps the target's order)
 * and be on the same scale. The reference needs at least two patients.
 * Within each gene the output preserves the target's ordering, tied inputs stay tied,
 * and every output lies within the reference's range for that gene.
 */
inline ExpressionMatrix fsqn(const ExpressionMatrix& target, const ExpressionMatrix& reference) {
    if (target.scale() != reference.scale()) {
        throw DataError(std::string("fsqn: target is ") + to_string(target.scale()) + " but reference is " + to_string(reference.scale()));
    }
    if (target.n_genes() != reference.n_genes()) {
        throw DataError("fsqn: target and reference have different gene sets");
    }
    {
        std::unordered_set<std::string> ref_genes(reference.gene_ids().begin(), reference.gene_ids().end());
        for (const auto& g : target.gene_ids()) {
            if (!ref_genes.count(g)) {
                throw DataError("fsqn: gene '" + g + "' is missing from the reference; intersect genes first");
            }
        }
    }
    if (reference.n_patients() < 2) {
        throw DataError("fsqn: reference needs at least 2 values per gene");
    }

    const ExpressionMatrix ref = reference.gene_ids() == target.gene_ids() ? reference : reference.subset_genes(target.gene_ids());
    Matrix out(target.n_patients(), target.n_genes());
    std::vector<double> tcol, rcol, mapped(target.n_patients());
    for (std::size_t g = 0; g < target.n_genes(); ++g) {
        tcol = target.values().column(g);
        rcol = ref.values().column(g);
        std::sort(rcol.begin(), rcol.end());
        quantile_map(tcol, rcol, mapped);
        out.set_column(g, mapped);
    }
    return ExpressionMatrix(target.platform_id(), target.patient_ids(), target.gene_ids(), std::move(out), target.scale());
}

/**
 * Integrates several platforms: genes are intersected, every non-reference source is FSQN-normalized onto
 * `sources[reference_index]`, and the results are merged with the reference listed first
 * (so a patient measured on the reference platform keeps its reference values).
 */
inline MergeResult integrate(const std::vector<ExpressionMatrix>& sources, std::size_t reference_index) {
    if (reference_index >= sources.size()) {
        throw ConfigError("integrate: reference index " + std::to_string(reference_index) + " out of range for " +
                          std::to_string(sources.size()) + " sources");
    }
    auto genes = common_genes(sources);
    if (genes.empty()) {
        throw DataError("integrate: gene intersection across sources is empty");
    }
    const ExpressionMatrix reference = sources[reference_index].subset_genes(genes);
    if (sources.size() == 1) {
        MergeReport report;
        report.source_patient_counts = {reference.n_patients()};
        report.source_gene_counts = {sources.front().n_genes()};
        report.union_patient_count = reference.n_patients();
        report.intersection_gene_count = reference.n_genes();
        return {reference, std::move(report)};
    }

    std::vector<ExpressionMatrix> ordered;
    ordered.reserve(sources.size());
    ordered.push_back(reference);
    for (std::size_t s = 0; s < sources.size(); ++s) {
        if (s != reference_index) {
            ordered.push_back(fsqn(sources[s].subset_genes(genes), reference));
        }
    }
    return merge(ordered);
}

}

#endif
