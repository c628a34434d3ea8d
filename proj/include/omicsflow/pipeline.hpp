#ifndef OMICSFLOW_PIPELINE_HPP
#define OMICSFLOW_PIPELINE_HPP

#include "core/csv.hpp"
#include "dataio.hpp"
#include "eval.hpp"
#include "normalize.hpp"
#include "project.hpp"
#include "search.hpp"
#include "survival.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

/**
 * @file pipeline.hpp
 * @brief Experiment configuration and the end-to-end run: load, normalize, build feature sets, label, search, evaluate, report.
 */

namespace omicsflow {

struct SourceSpec {
    std::string path;
    Orientation orientation = Orientation::patients_as_rows;
    bool log2 = false;
    std::string platform;
};

struct FeatureSetSpec {
    /// "raw" or "tsne".
    std::string projection = "raw";
    std::vector<int> dims;
    bool include_age = true;
    bool include_cna = false;
};

struct ExperimentConfig {
    std::string dataset_name = "DATA";
    std::vector<SourceSpec> sources;
    std::size_t reference = 0;
    std::string clinical_path;
    std::string cna_path;
    std::vector<FeatureSetSpec> feature_sets;
    TsneConfig tsne;
    bool tsne_seed_given = false;
    std::vector<double> horizons;
    std::vector<ModelTemplate> models;
    CvPlan cv;
    bool cv_seed_given = false;
    bool project_in_fold = false;
    std::size_t budget = 1;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    /// The effective JSON document (after overrides) and its FNV-1a hash.
    nlohmann::json document;
    std::uint64_t hash = 0;
};

namespace detail {

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
    if (p.empty()) {
        return p;
    }
    std::filesystem::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline Orientation parse_orientation(const std::string& s) {
    if (s == "patients_as_rows") {
        return Orientation::patients_as_rows;
    }
    if (s == "genes_as_rows") {
        return Orientation::genes_as_rows;
    }
    throw ConfigError("orientation must be patients_as_rows or genes_as_rows, got '" + s + "'");
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}

/**
 * Applies `key.path=value` to a JSON document. The value is parsed as JSON when possible and taken as a string otherwise.
 */
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    nlohmann::json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) {
            throw ConfigError("override key '" + key + "' has an empty component");
        }
        if (!node->is_object()) {
            *node = nlohmann::json::object();
        }
        node = &(*node)[part];
        if (dot == std::string::npos) {
            break;
        }
        start = dot + 1;
    }
    *node = std::move(value);
}

/// Worker count from `OMICSFLOW_WORKERS`, if set to a positive integer.
inline std::optional<std::size_t> workers_from_env() {
    const char* v = std::getenv("OMICSFLOW_WORKERS");
    if (!v) {
        return std::nullopt;
    }
    auto n = csv::parse_int(v);
    if (!n || *n < 1) {
        throw ConfigError(std::string("OMICSFLOW_WORKERS must be a positive integer, got '") + v + "'");
    }
    return static_cast<std::size_t>(*n);
}

/**
 * Validates and parses an experiment document. Reserved top-level keys: data, labels, models, cv, search, output, seed, workers.
 * Relative paths are resolved against `base_dir`.
 */
inline ExperimentConfig parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".") {
    static const std::vector<std::string> reserved{"data", "labels", "models", "cv", "search", "output", "seed", "workers"};
    if (!doc.is_object()) {
        throw ConfigError("experiment config must be a JSON object");
    }
    for (const auto& [k, v] : doc.items()) {
        if (std::find(reserved.begin(), reserved.end(), k) == reserved.end()) {
            throw ConfigError("unknown top-level config key '" + k + "'");
        }
    }
    ExperimentConfig c;
    try {
        c.document = doc;
        c.hash = fnv1a(doc.dump());
        c.seed = doc.value("seed", std::uint64_t{0});
        if (doc.contains("workers")) {
            const auto w = doc.at("workers").get<long long>();
            if (w < 1) {
                throw ConfigError("workers must be at least 1");
            }
            c.workers = static_cast<std::size_t>(w);
        } else if (auto w = workers_from_env()) {
            c.workers = *w;
        }
        c.output_dir = detail::resolve_path(doc.value("output", std::string("out")), base_dir);

        const auto& data = doc.at("data");
        c.dataset_name = data.value("name", c.dataset_name);
        for (const auto& s : data.at("sources")) {
            SourceSpec src;
            src.path = detail::resolve_path(s.at("path").get<std::string>(), base_dir);
            src.orientation = detail::parse_orientation(s.value("orientation", std::string("patients_as_rows")));
            src.log2 = s.value("log2", false);
            src.platform = s.value("platform", std::string());
            c.sources.push_back(std::move(src));
        }
        if (c.sources.empty()) {
            throw ConfigError("data.sources must list at least one expression file");
        }
        c.reference = data.value("reference", std::size_t{0});
        if (c.reference >= c.sources.size()) {
            throw ConfigError("data.reference is out of range");
        }
        c.clinical_path = detail::resolve_path(data.at("clinical").get<std::string>(), base_dir);
        c.cna_path = detail::resolve_path(data.value("cna", std::string()), base_dir);
        if (data.contains("feature_sets")) {
            for (const auto& f : data.at("feature_sets")) {
                FeatureSetSpec fs;
                fs.projection = f.value("projection", std::string("raw"));
                if (fs.projection != "raw" && fs.projection != "tsne") {
                    throw ConfigError("feature set projection must be 'raw' or 'tsne'");
                }
                fs.dims = f.value("dims", std::vector<int>{});
                if (fs.projection == "tsne" && fs.dims.empty()) {
                    throw ConfigError("a tsne feature set needs a non-empty dims list");
                }
                for (int d : fs.dims) {
                    if (d < 1) {
                        throw ConfigError("t-SNE dimensions must be positive");
                    }
                }
                fs.include_age = f.value("include_age", true);
                fs.include_cna = f.value("include_cna", false);
                if (fs.include_cna && c.cna_path.empty()) {
                    throw ConfigError("feature set requests CNA columns but data.cna is not set");
                }
                if (fs.include_cna && fs.projection == "tsne") {
                    throw ConfigError("CNA columns are only supported for raw feature sets");
                }
                c.feature_sets.push_back(std::move(fs));
            }
        } else {
            c.feature_sets.push_back({});
        }
        if (data.contains("tsne")) {
            const auto& t = data.at("tsne");
            c.tsne.perplexity = t.value("perplexity", c.tsne.perplexity);
            c.tsne.learning_rate = t.value("learning_rate", c.tsne.learning_rate);
            c.tsne.iterations = t.value("iterations", c.tsne.iterations);
            c.tsne.early_exaggeration_factor = t.value("early_exaggeration", c.tsne.early_exaggeration_factor);
            c.tsne.early_exaggeration_iters = t.value("exaggeration_iters", c.tsne.early_exaggeration_iters);
            if (t.contains("seed")) {
                c.tsne.seed = t.at("seed").get<std::uint64_t>();
                c.tsne_seed_given = true;
            }
        }

        c.horizons = doc.at("labels").at("horizons").get<std::vector<double>>();
        if (c.horizons.empty()) {
            throw ConfigError("labels.horizons must not be empty");
        }
        for (double h : c.horizons) {
            if (!(h > 0)) {
                throw ConfigError("label horizon " + csv::format_double(h) + " must be positive");
            }
        }

        for (const auto& m : doc.at("models")) {
            c.models.push_back(parse_model_template(m));
        }
        if (c.models.empty()) {
            throw ConfigError("models must list at least one model");
        }
        for (std::size_t i = 0; i < c.models.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (c.models[i].name == c.models[j].name) {
                    throw ConfigError("duplicate model name '" + c.models[i].name + "'");
                }
            }
        }

        if (doc.contains("cv")) {
            const auto& cv = doc.at("cv");
            const auto k = cv.value("k", 5LL);
            if (k < 2) {
                throw ConfigError("cv.k must be at least 2");
            }
            c.cv.k_folds = static_cast<std::size_t>(k);
            c.cv.stratified = cv.value("stratified", true);
            if (cv.contains("seed")) {
                c.cv.seed = cv.at("seed").get<std::uint64_t>();
                c.cv_seed_given = true;
            }
            c.project_in_fold = cv.value("project_in_fold", false);
        }
        if (doc.contains("search")) {
            const auto b = doc.at("search").value("budget", 1LL);
            if (b < 1) {
                throw ConfigError("search.budget must be at least 1");
            }
            c.budget = static_cast<std::size_t>(b);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig load_experiment(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path);
    }
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        throw ConfigError(path + " is not valid JSON");
    }
    for (const auto& o : overrides) {
        apply_override(doc, o);
    }
    return parse_experiment(doc, std::filesystem::path(path).parent_path());
}

/// Feature-set descriptor used in reports, e.g. "SYNTH RNA TSNE 15 age" or "SYNTH RNA+CNA raw age".
inline std::string data_descriptor(const std::string& dataset, const FeatureSetSpec& fs, int dims = 0) {
    std::string s = dataset.empty() ? "" : dataset + " ";
    s += fs.include_cna ? "RNA+CNA" : "RNA";
    s += fs.projection == "tsne" ? " TSNE " + std::to_string(dims) : std::string(" raw");
    if (fs.include_age) {
        s += " age";
    }
    return s;
}

struct ExperimentResult {
    EvalReport report;
    std::vector<std::string> written_files;
};

/// Stage failure: carries the stage name and keeps the category of the original error.
template <typename E>
struct StageError : E {
    std::string stage;
    StageError(const std::string& s, const std::string& what) : E("stage '" + s + "' failed: " + what), stage(s) {}
};

namespace detail {

template <typename Fn>
auto run_stage(const std::string& stage, std::string& current, Fn&& fn) {
    current = stage;
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw StageError<ConfigError>(stage, e.what());
    } catch (const DataError& e) {
        throw StageError<DataError>(stage, e.what());
    } catch (const std::exception& e) {
        throw StageError<NumericalError>(stage, e.what());
    }
}

inline std::string format_params(const std::map<std::string, double>& params) {
    std::string s;
    for (const auto& [k, v] : params) {
        s += (s.empty() ? "" : ";") + k + "=" + csv::format_double(v);
    }
    return s;
}

inline void write_manifest(const ExperimentConfig& c, const std::string& status, const std::string& stage, const std::string& error,
                           const std::vector<std::string>& files) {
    std::ostringstream m;
    m << "config_hash=" << hex64(c.hash) << '\n' << "seed=" << c.seed << '\n' << "status=" << status << '\n';
    if (!stage.empty()) {
        m << "failed_stage=" << stage << '\n' << "error=" << error << '\n';
    }
    for (const auto& f : files) {
        m << "file=" << f << '\n';
    }
    csv::write_file((std::filesystem::path(c.output_dir) / "MANIFEST").string(), m.str());
}

}

/**
 * Runs the experiment matrix: every (model, feature set, horizon) is tuned by random search and the best trial
 * is cross-validated again on an independent fold assignment; those folds form the report.
 * Everything except `timings.csv` is a pure function of the config.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
    std::filesystem::create_directories(c.output_dir);
    const auto out = [&](const std::string& name) { return (std::filesystem::path(c.output_dir) / name).string(); };
    ExperimentResult result;
    std::string stage;

    try {
        csv::write_file(out("config.json"), c.document.dump(2) + "\n");
        result.written_files.push_back("config.json");

        auto sources = detail::run_stage("load", stage, [&] {
            std::vector<ExpressionMatrix> v;
            for (const auto& s : c.sources) {
                auto m = load_expression(s.path, s.orientation, Scale::linear, s.platform);
                v.push_back(s.log2 ? log2_transform(m) : std::move(m));
            }
            return v;
        });
        const auto clinical = detail::run_stage("load", stage, [&] { return load_clinical(c.clinical_path); });
        const auto cna = detail::run_stage("load", stage, [&] {
            return c.cna_path.empty() ? std::optional<CnaMatrix>{} : std::optional<CnaMatrix>{load_cna(c.cna_path)};
        });

        const ExpressionMatrix expr = detail::run_stage("normalize", stage, [&] { return integrate(sources, c.reference).matrix; });

        struct Prepared {
            std::string descriptor;
            FeatureSetSpec spec;
            int dims = 0;
            FeatureMatrix features;
        };
        const auto feature_sets = detail::run_stage("features", stage, [&] {
            std::vector<Prepared> sets;
            for (const auto& fs : c.feature_sets) {
                if (fs.projection == "raw") {
                    sets.push_back({data_descriptor(c.dataset_name, fs), fs, 0,
                                    build_features(expr, clinical, fs.include_age, fs.include_cna ? cna : std::optional<CnaMatrix>{})});
                } else {
                    for (int d : fs.dims) {
                        sets.push_back({data_descriptor(c.dataset_name, fs, d), fs, d, FeatureMatrix{}});
                    }
                }
            }
            return sets;
        });

        // Transductive default: one embedding per dimension over every patient with clinical data.
        const FeatureMatrix expression_only = detail::run_stage("features", stage, [&] { return build_features(expr, clinical, false); });
        auto embed = [&](const FeatureMatrix& base, int d, double horizon) {
            TsneConfig t = c.tsne;
            t.output_dims = d;
            if (!c.tsne_seed_given) {
                t.seed = derive_seed(c.seed, fnv1a("tsne"), static_cast<std::uint64_t>(d), c.project_in_fold ? fnv1a(csv::format_double(horizon)) : 0);
            }
            return project_with_age(base, clinical, t);
        };
        auto transductive = detail::run_stage("project", stage, [&] {
            std::vector<FeatureMatrix> v(feature_sets.size());
            if (!c.project_in_fold) {
                for (std::size_t i = 0; i < feature_sets.size(); ++i) {
                    if (feature_sets[i].spec.projection == "tsne") {
                        v[i] = embed(expression_only, feature_sets[i].dims, 0);
                    }
                }
            }
            return v;
        });

        std::ostringstream trials_csv, timings_csv, table_csv;
        trials_csv << "model,data,horizon_months,trial,params,mean_auc,fold_aucs,status\n";
        timings_csv << "model,data,horizon_months,trial,wall_seconds\n";
        table_csv << "model,data,horizon_months,mean_auc,std_auc,n_folds,best_trial,best_params\n";

        for (double horizon : c.horizons) {
            for (std::size_t fi = 0; fi < feature_sets.size(); ++fi) {
                const auto& fs = feature_sets[fi];
                const LabeledDataset data = detail::run_stage("label", stage, [&] {
                    if (fs.spec.projection == "raw") {
                        return make_labeled_dataset(fs.features, clinical, horizon).data;
                    }
                    if (!c.project_in_fold) {
                        FeatureMatrix f = transductive[fi];
                        if (!fs.spec.include_age) {
                            std::vector<std::size_t> keep(f.cols() - 1);
                            std::iota(keep.begin(), keep.end(), std::size_t{0});
                            auto names = tsne_feature_names(keep.size());
                            f = FeatureMatrix(f.patient_ids(), names, f.values().select_cols(keep));
                        }
                        return make_labeled_dataset(f, clinical, horizon).data;
                    }
                    // Strict mode: embed only the patients that carry a label at this horizon.
                    const auto cohort = make_labeled_dataset(expression_only, clinical, horizon).data;
                    FeatureMatrix f = embed(cohort.features, fs.dims, horizon);
                    if (!fs.spec.include_age) {
                        std::vector<std::size_t> keep(f.cols() - 1);
                        std::iota(keep.begin(), keep.end(), std::size_t{0});
                        f = FeatureMatrix(f.patient_ids(), tsne_feature_names(keep.size()), f.values().select_cols(keep));
                    }
                    return make_labeled_dataset(f, clinical, horizon).data;
                });

                for (const auto& tmpl : c.models) {
                    const std::string key = tmpl.name + "|" + fs.descriptor + "|" + csv::format_double(horizon);
                    const std::uint64_t combo_seed = derive_seed(c.seed, fnv1a(key));
                    CvPlan search_plan = c.cv, eval_plan = c.cv;
                    search_plan.seed = derive_seed(c.cv_seed_given ? c.cv.seed : combo_seed, fnv1a("search-folds"));
                    eval_plan.seed = derive_seed(c.cv_seed_given ? c.cv.seed : combo_seed, fnv1a("eval-folds"));

                    const auto search = detail::run_stage("search", stage, [&] {
                        return random_search(tmpl, data, c.budget, search_plan, combo_seed, c.workers);
                    });
                    for (const auto& t : search.trials) {
                        std::string folds;
                        for (double a : t.fold_aucs) {
                            folds += (folds.empty() ? "" : ";") + csv::format_double(a);
                        }
                        trials_csv << tmpl.name << ',' << fs.descriptor << ',' << csv::format_double(horizon) << ',' << t.index << ','
                                   << detail::format_params(t.params) << ',' << (t.ok ? csv::format_double(t.mean_auc) : "") << ',' << folds
                                   << ',' << (t.ok ? "ok" : "failed") << '\n';
                        timings_csv << tmpl.name << ',' << fs.descriptor << ',' << csv::format_double(horizon) << ',' << t.index << ','
                                    << csv::format_double(t.wall_seconds) << '\n';
                    }

                    const auto& best = search.best_trial();
                    const auto report = detail::run_stage("evaluate", stage, [&] {
                        const auto candidate = tmpl.instantiate(best.params, derive_seed(combo_seed, best.index));
                        return cross_validate(candidate, data, eval_plan, tmpl.name, fs.descriptor, c.workers);
                    });
                    result.report.append(report);
                    const auto s = report.summaries().front();
                    table_csv << tmpl.name << ',' << fs.descriptor << ',' << csv::format_double(horizon) << ',' << csv::format_double(s.mean_auc)
                              << ',' << csv::format_double(s.std_auc) << ',' << s.n_folds << ',' << best.index << ','
                              << detail::format_params(best.params) << '\n';
                }
            }
        }

        detail::run_stage("report", stage, [&] {
            csv::write_file(out("report.csv"), render_report_csv(result.report));
            csv::write_file(out("table1.csv"), table_csv.str());
            csv::write_file(out("trials.csv"), trials_csv.str());
            csv::write_file(out("timings.csv"), timings_csv.str());
            for (const char* f : {"report.csv", "table1.csv", "trials.csv", "timings.csv"}) {
                result.written_files.push_back(f);
            }
            return 0;
        });
        detail::write_manifest(c, "complete", "", "", result.written_files);
    } catch (const std::exception& e) {
        detail::write_manifest(c, "incomplete", stage, e.what(), result.written_files);
        throw;
    }
    return result;
}

}

#endif
