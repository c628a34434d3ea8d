#ifndef OMICSFLOW_DATAIO_HPP
#define OMICSFLOW_DATAIO_HPP

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/matrix.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

/**
 * @file dataio.hpp
 * @brief Expression, copy-number and clinical tables: loading, validation, merging and feature assembly.
 */

namespace omicsflow {

enum class Scale { linear, log2 };

enum class Orientation { patients_as_rows, genes_as_rows };

inline const char* to_string(Scale s) {
    return s == Scale::linear ? "linear" : "log2";
}

namespace detail {

inline void check_unique(const std::vector<std::string>& ids, const std::string& what) {
    std::unordered_set<std::string> seen;
    seen.reserve(ids.size());
    for (const auto& id : ids) {
        if (id.empty()) {
            throw DataError("empty " + what + " id");
        }
        if (!seen.insert(id).second) {
            throw DataError("duplicate " + what + " id '" + id + "'");
        }
    }
}

inline std::unordered_map<std::string, std::size_t> index_of(const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.emplace(ids[i], i);
    }
    return out;
}

}

/**
 * @brief Patients x genes expression values from one platform.
 *
 * Invariants are checked on construction: dimensions agree with the id lists, ids are unique,
 * values are finite, and linear-scale values are non-negative.
 */
class ExpressionMatrix {
public:
    ExpressionMatrix() = default;

    ExpressionMatrix(std::string platform_id, std::vector<std::string> patient_ids, std::vector<std::string> gene_ids,
                     Matrix values, Scale scale) :
        platform_id_(std::move(platform_id)),
        patient_ids_(std::move(patient_ids)),
        gene_ids_(std::move(gene_ids)),
        values_(std::move(values)),
        scale_(scale)
    {
        if (values_.rows() != patient_ids_.size() || values_.cols() != gene_ids_.size()) {
            throw DataError("expression matrix dimensions do not match its id lists");
        }
        detail::check_unique(patient_ids_, "patient");
        detail::check_unique(gene_ids_, "gene");
        for (std::size_t r = 0; r < values_.rows(); ++r) {
            for (std::size_t c = 0; c < values_.cols(); ++c) {
                double v = values_(r, c);
                if (!std::isfinite(v)) {
                    throw DataError("non-finite expression value for patient '" + patient_ids_[r] + "', gene '" + gene_ids_[c] + "'");
                }
                if (scale_ == Scale::linear && v < 0) {
                    throw DataError("negative linear-scale expression value for patient '" + patient_ids_[r] + "', gene '" + gene_ids_[c] + "'");
                }
            }
        }
    }

    const std::string& platform_id() const { return platform_id_; }
    const std::vector<std::string>& patient_ids() const { return patient_ids_; }
    const std::vector<std::string>& gene_ids() const { return gene_ids_; }
    const Matrix& values() const { return values_; }
    Scale scale() const { return scale_; }
    std::size_t n_patients() const { return patient_ids_.size(); }
    std::size_t n_genes() const { return gene_ids_.size(); }

    /// Restrict to the patients at `rows`, in that order.
    ExpressionMatrix subset_patients(std::span<const std::size_t> rows) const {
        std::vector<std::string> ids;
        ids.reserve(rows.size());
        for (auto r : rows) {
            ids.push_back(patient_ids_[r]);
        }
        return ExpressionMatrix(platform_id_, std::move(ids), gene_ids_, values_.select_rows(rows), scale_);
    }

    ExpressionMatrix with_platform(std::string platform_id) const {
        ExpressionMatrix out = *this;
        out.platform_id_ = std::move(platform_id);
        return out;
    }

    /// Restrict to `genes`, in that order. Every requested gene must be present.
    ExpressionMatrix subset_genes(const std::vector<std::string>& genes) const {
        auto idx = detail::index_of(gene_ids_);
        std::vector<std::size_t> cols;
        cols.reserve(genes.size());
        for (const auto& g : genes) {
            auto it = idx.find(g);
            if (it == idx.end()) {
                throw DataError("gene '" + g + "' absent from platform '" + platform_id_ + "'");
            }
            cols.push_back(it->second);
        }
        return ExpressionMatrix(platform_id_, patient_ids_, genes, values_.select_cols(cols), scale_);
    }

private:
    std::string platform_id_;
    std::vector<std::string> patient_ids_;
    std::vector<std::string> gene_ids_;
    Matrix values_;
    Scale scale_ = Scale::linear;
};

/**
 * @brief Copy-number categories per patient and gene.
 *
 * Entries are the five GISTIC calls: -2 homozygous deletion, -1 hemizygous deletion,
 * 0 neutral, 1 gain, 2 high-level amplification.
 */
class CnaMatrix {
public:
    CnaMatrix() = default;

    CnaMatrix(std::vector<std::string> patient_ids, std::vector<std::string> gene_ids, IntMatrix values) :
        patient_ids_(std::move(patient_ids)), gene_ids_(std::move(gene_ids)), values_(std::move(values))
    {
        if (values_.rows() != patient_ids_.size() || values_.cols() != gene_ids_.size()) {
            throw DataError("CNA matrix dimensions do not match its id lists");
        }
        detail::check_unique(patient_ids_, "patient");
        detail::check_unique(gene_ids_, "gene");
        for (std::size_t r = 0; r < values_.rows(); ++r) {
            for (std::size_t c = 0; c < values_.cols(); ++c) {
                if (values_(r, c) < -2 || values_(r, c) > 2) {
                    throw DataError("CNA value " + std::to_string(values_(r, c)) + " for patient '" + patient_ids_[r] +
                                    "', gene '" + gene_ids_[c] + "' is not one of the categories {-2,-1,0,1,2}");
                }
            }
        }
    }

    const std::vector<std::string>& patient_ids() const { return patient_ids_; }
    const std::vector<std::string>& gene_ids() const { return gene_ids_; }
    const IntMatrix& values() const { return values_; }

private:
    std::vector<std::string> patient_ids_;
    std::vector<std::string> gene_ids_;
    IntMatrix values_;
};

/**
 * @brief Follow-up for one patient.
 *
 * `observed_time_months` is the earlier of death and loss to follow-up;
 * `event` is true when the death was observed.
 */
struct ClinicalRecord {
    std::string patient_id;
    double observed_time_months = 0;
    bool event = false;
    std::optional<double> age_years;
    std::optional<std::string> group_label;

    friend bool operator==(const ClinicalRecord&, const ClinicalRecord&) = default;
};

/**
 * @brief Model-ready design matrix: rows are patients, columns named features.
 */
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    FeatureMatrix(std::vector<std::string> patient_ids, std::vector<std::string> feature_names, Matrix values) :
        patient_ids_(std::move(patient_ids)), feature_names_(std::move(feature_names)), values_(std::move(values))
    {
        if (values_.rows() != patient_ids_.size() || values_.cols() != feature_names_.size()) {
            throw DataError("feature matrix dimensions do not match its id lists");
        }
        detail::check_unique(patient_ids_, "patient");
        detail::check_unique(feature_names_, "feature");
        for (double v : values_.data()) {
            if (std::isnan(v)) {
                throw DataError("feature matrix contains NaN");
            }
        }
    }

    const std::vector<std::string>& patient_ids() const { return patient_ids_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const Matrix& values() const { return values_; }
    std::size_t rows() const { return values_.rows(); }
    std::size_t cols() const { return values_.cols(); }

    FeatureMatrix select_rows(std::span<const std::size_t> idx) const {
        std::vector<std::string> ids;
        ids.reserve(idx.size());
        for (auto i : idx) {
            ids.push_back(patient_ids_[i]);
        }
        return FeatureMatrix(std::move(ids), feature_names_, values_.select_rows(idx));
    }

private:
    std::vector<std::string> patient_ids_;
    std::vector<std::string> feature_names_;
    Matrix values_;
};

struct MergeResolution {
    std::string patient_id;
    std::size_t winning_source = 0;
    std::string winning_platform;
};

/**
 * @brief Bookkeeping for `merge()`.
 */
struct MergeReport {
    std::vector<std::size_t> source_patient_counts;
    std::vector<std::size_t> source_gene_counts;
    std::size_t union_patient_count = 0;
    std::size_t intersection_gene_count = 0;
    /// One entry per patient found in more than one source.
    std::vector<MergeResolution> resolutions;
};

struct MergeResult {
    ExpressionMatrix matrix;
    MergeReport report;
};

namespace detail {

struct RawTable {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> line_numbers;
};

inline RawTable read_raw(const std::string& path) {
    auto table = csv::read_file(path);
    if (table.header.size() < 2 || table.rows.empty()) {
        throw DataError(path + ": empty matrix");
    }
    RawTable raw;
    raw.col_ids.assign(table.header.begin() + 1, table.header.end());
    for (auto& row : table.rows) {
        raw.row_ids.push_back(row.front());
        raw.cells.emplace_back(row.begin() + 1, row.end());
    }
    raw.line_numbers = std::move(table.line_numbers);
    return raw;
}

inline Matrix parse_real_cells(const RawTable& raw, const std::string& path) {
    Matrix values(raw.row_ids.size(), raw.col_ids.size());
    for (std::size_t r = 0; r < raw.cells.size(); ++r) {
        for (std::size_t c = 0; c < raw.col_ids.size(); ++c) {
            auto v = csv::parse_double(raw.cells[r][c]);
            if (!v || !std::isfinite(*v)) {
                throw DataError(path + ": non-numeric cell at (" + std::to_string(r + 1) + "," + std::to_string(c + 1) +
                                ") value '" + raw.cells[r][c] + "'");
            }
            values(r, c) = *v;
        }
    }
    return values;
}

inline std::string render_matrix(const std::string& corner, const std::vector<std::string>& row_ids,
                                 const std::vector<std::string>& col_ids, const auto& values) {
    std::string out = corner;
    for (const auto& c : col_ids) {
        out += ',';
        out += c;
    }
    out += '\n';
    for (std::size_t r = 0; r < row_ids.size(); ++r) {
        out += row_ids[r];
        for (std::size_t c = 0; c < col_ids.size(); ++c) {
            out += ',';
            if constexpr (std::is_same_v<std::decay_t<decltype(values(r, c))>, double>) {
                out += csv::format_double(values(r, c));
            } else {
                out += std::to_string(values(r, c));
            }
        }
        out += '\n';
    }
    return out;
}

}

/**
 * Loads an expression matrix from delimited text.
 * With `patients_as_rows` the header is `patient_id,<gene>...`; with `genes_as_rows` the file is transposed on load.
 */
inline ExpressionMatrix load_expression(const std::string& path, Orientation orientation = Orientation::patients_as_rows,
                                        Scale scale = Scale::linear, std::string platform_id = "") {
    auto raw = detail::read_raw(path);
    Matrix values = detail::parse_real_cells(raw, path);
    if (platform_id.empty()) {
        platform_id = path;
    }
    try {
        if (orientation == Orientation::genes_as_rows) {
            return ExpressionMatrix(std::move(platform_id), raw.col_ids, raw.row_ids, values.transpose(), scale);
        }
        return ExpressionMatrix(std::move(platform_id), raw.row_ids, raw.col_ids, std::move(values), scale);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline void store_expression(const ExpressionMatrix& m, const std::string& path) {
    csv::write_file(path, detail::render_matrix("patient_id", m.patient_ids(), m.gene_ids(), m.values()));
}

/**
 * Loads a GISTIC-style copy-number table; every cell must be an integer in {-2,...,2}.
 */
inline CnaMatrix load_cna(const std::string& path) {
    auto raw = detail::read_raw(path);
    IntMatrix values(raw.row_ids.size(), raw.col_ids.size());
    for (std::size_t r = 0; r < raw.cells.size(); ++r) {
        for (std::size_t c = 0; c < raw.col_ids.size(); ++c) {
            auto v = csv::parse_int(raw.cells[r][c]);
            if (!v) {
                throw DataError(path + ": non-integer cell at (" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ") value '" +
                                raw.cells[r][c] + "'");
            }
            if (*v < -2 || *v > 2) {
                throw DataError(path + ": cell at (" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ") has value " +
                                std::to_string(*v) + "; valid categories are -2,-1,0,1,2");
            }
            values(r, c) = static_cast<int>(*v);
        }
    }
    try {
        return CnaMatrix(raw.row_ids, raw.col_ids, std::move(values));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline void store_cna(const CnaMatrix& m, const std::string& path) {
    csv::write_file(path, detail::render_matrix("patient_id", m.patient_ids(), m.gene_ids(), m.values()));
}

inline std::vector<ClinicalRecord> parse_clinical(const csv::Table& table, const std::string& path) {
    const std::vector<std::string> expected{"patient_id", "time_months", "event", "age", "group"};
    if (table.header != expected) {
        throw DataError(path + ": clinical header must be patient_id,time_months,event,age,group");
    }
    std::vector<ClinicalRecord> out;
    out.reserve(table.rows.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path + " line " + std::to_string(table.line_numbers[i]);
        ClinicalRecord rec;
        rec.patient_id = row[0];
        if (rec.patient_id.empty()) {
            throw DataError(where + ": missing patient_id");
        }
        if (!seen.insert(rec.patient_id).second) {
            throw DataError(where + ": duplicate patient id '" + rec.patient_id + "'");
        }
        auto t = csv::parse_double(row[1]);
        if (!t || !std::isfinite(*t)) {
            throw DataError(where + ": time_months '" + row[1] + "' is not a number");
        }
        if (*t < 0) {
            throw DataError(where + ": negative time_months " + row[1]);
        }
        rec.observed_time_months = *t;
        if (row[2] == "1") {
            rec.event = true;
        } else if (row[2] == "0") {
            rec.event = false;
        } else {
            throw DataError(where + ": event must be 0 or 1, found '" + row[2] + "'");
        }
        if (!row[3].empty()) {
            auto age = csv::parse_double(row[3]);
            if (!age || !std::isfinite(*age) || *age < 0) {
                throw DataError(where + ": invalid age '" + row[3] + "'");
            }
            rec.age_years = *age;
        }
        if (!row[4].empty()) {
            rec.group_label = row[4];
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<ClinicalRecord> load_clinical(const std::string& path) {
    return parse_clinical(csv::read_file(path), path);
}

inline void store_clinical(const std::vector<ClinicalRecord>& records, const std::string& path) {
    std::string out = "patient_id,time_months,event,age,group\n";
    for (const auto& r : records) {
        out += r.patient_id + ',' + csv::format_double(r.observed_time_months) + ',' + (r.event ? "1" : "0") + ',';
        if (r.age_years) {
            out += csv::format_double(*r.age_years);
        }
        out += ',';
        if (r.group_label) {
            out += *r.group_label;
        }
        out += '\n';
    }
    csv::write_file(path, out);
}

/**
 * Loads a feature table (`patient_id,<feature>...`); values may be any finite real.
 */
inline FeatureMatrix load_features(const std::string& path) {
    auto raw = detail::read_raw(path);
    Matrix values = detail::parse_real_cells(raw, path);
    try {
        return FeatureMatrix(raw.row_ids, raw.col_ids, std::move(values));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline void store_features(const FeatureMatrix& m, const std::string& path) {
    csv::write_file(path, detail::render_matrix("patient_id", m.patient_ids(), m.feature_names(), m.values()));
}

/**
 * Genes shared by all sources, in the order of the first source.
 */
inline std::vector<std::string> common_genes(const std::vector<ExpressionMatrix>& sources) {
    if (sources.empty()) {
        return {};
    }
    std::vector<std::string> out = sources.front().gene_ids();
    for (std::size_t s = 1; s < sources.size(); ++s) {
        std::unordered_set<std::string> present(sources[s].gene_ids().begin(), sources[s].gene_ids().end());
        std::erase_if(out, [&](const std::string& g) { return !present.count(g); });
    }
    return out;
}

/**
 * Combines several platforms into one matrix over the union of patients and the intersection of genes.
 *
 * A patient present in several sources takes the values of the earliest source in `sources`;
 * every such case is listed in the report.
 * Output patients are ordered by first appearance; genes follow the first source's order.
 */
inline MergeResult merge(const std::vector<ExpressionMatrix>& sources) {
    if (sources.size() < 2) {
        throw DataError("merge needs at least two sources");
    }
    for (const auto& s : sources) {
        if (s.scale() != sources.front().scale()) {
            throw DataError("scale mismatch: '" + sources.front().platform_id() + "' is " + to_string(sources.front().scale()) + " but '" +
                            s.platform_id() + "' is " + to_string(s.scale()));
        }
    }

    auto genes = common_genes(sources);
    if (genes.empty()) {
        throw DataError("gene intersection across sources is empty");
    }

    MergeReport report;
    std::vector<std::unordered_map<std::string, std::size_t>> gene_index;
    for (const auto& s : sources) {
        report.source_patient_counts.push_back(s.n_patients());
        report.source_gene_counts.push_back(s.n_genes());
        gene_index.push_back(detail::index_of(s.gene_ids()));
    }

    // Winning (source, row) for every patient, in order of first appearance.
    std::vector<std::string> patients;
    std::vector<std::pair<std::size_t, std::size_t>> origin;
    std::unordered_map<std::string, std::size_t> position;
    std::vector<bool> duplicated;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto& ids = sources[s].patient_ids();
        for (std::size_t r = 0; r < ids.size(); ++r) {
            auto [it, inserted] = position.emplace(ids[r], patients.size());
            if (inserted) {
                patients.push_back(ids[r]);
                origin.emplace_back(s, r);
                duplicated.push_back(false);
            } else {
                duplicated[it->second] = true;
            }
        }
    }
    for (std::size_t p = 0; p < patients.size(); ++p) {
        if (duplicated[p]) {
            report.resolutions.push_back({patients[p], origin[p].first, sources[origin[p].first].platform_id()});
        }
    }

    Matrix values(patients.size(), genes.size());
    for (std::size_t p = 0; p < patients.size(); ++p) {
        auto [s, r] = origin[p];
        const auto& src = sources[s].values();
        for (std::size_t g = 0; g < genes.size(); ++g) {
            values(p, g) = src(r, gene_index[s].at(genes[g]));
        }
    }

    report.union_patient_count = patients.size();
    report.intersection_gene_count = genes.size();

    std::string platform;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        platform += (s ? "+" : "") + sources[s].platform_id();
    }
    return {ExpressionMatrix(std::move(platform), std::move(patients), std::move(genes), std::move(values), sources.front().scale()),
            std::move(report)};
}

/**
 * Assembles the design matrix: expression columns, then CNA columns (as reals, named `cna:<gene>`) when `cna` is given,
 * then an `age` column when `include_age` is set.
 *
 * Rows keep the expression order, restricted to patients that also appear in `clinical` and, if given, in `cna`.
 * Patients without a clinical record are dropped; a record without an age is an error when `include_age` is set.
 */
inline FeatureMatrix build_features(const ExpressionMatrix& expr, const std::vector<ClinicalRecord>& clinical, bool include_age,
                                    const std::optional<CnaMatrix>& cna = std::nullopt) {
    std::unordered_map<std::string, const ClinicalRecord*> clin;
    for (const auto& rec : clinical) {
        clin.emplace(rec.patient_id, &rec);
    }
    std::unordered_map<std::string, std::size_t> cna_rows;
    if (cna) {
        cna_rows = detail::index_of(cna->patient_ids());
    }

    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < expr.n_patients(); ++r) {
        const auto& id = expr.patient_ids()[r];
        auto it = clin.find(id);
        if (it == clin.end()) {
            continue;
        }
        if (cna && !cna_rows.count(id)) {
            continue;
        }
        if (include_age && !it->second->age_years) {
            throw DataError("patient '" + id + "' has no age but age features were requested");
        }
        rows.push_back(r);
    }
    if (rows.empty()) {
        throw DataError("no patient is present in every input; feature matrix would be empty");
    }

    std::vector<std::string> names = expr.gene_ids();
    if (cna) {
        for (const auto& g : cna->gene_ids()) {
            names.push_back("cna:" + g);
        }
    }
    if (include_age) {
        names.push_back("age");
    }

    Matrix values(rows.size(), names.size());
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& id = expr.patient_ids()[rows[i]];
        ids.push_back(id);
        auto src = expr.values().row(rows[i]);
        std::size_t c = 0;
        for (double v : src) {
            values(i, c++) = v;
        }
        if (cna) {
            auto crow = cna->values().row(cna_rows.at(id));
            for (int v : crow) {
                values(i, c++) = static_cast<double>(v);
            }
        }
        if (include_age) {
            values(i, c++) = *clin.at(id)->age_years;
        }
    }
    return FeatureMatrix(std::move(ids), std::move(names), std::move(values));
}

}

#endif
