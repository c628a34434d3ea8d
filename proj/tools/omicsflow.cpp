// omicsflow command-line front end.
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.

#include <omicsflow/omicsflow.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace omicsflow;

namespace {

struct ModelFlags {
    std::string family = "gaussian_nb";
    std::vector<std::string> params;
    std::uint64_t seed = 0;
    std::size_t b1 = 100, b2 = 20, d = 5;
    std::string base = "gaussian_nb";
    double alpha = -1;
    double holdout = 0.2;

    void add_to(CLI::App* app) {
        app->add_option("--model", family, "model family, or rp_ensemble")->capture_default_str();
        app->add_option("--param", params, "hyperparameter as key=value (repeatable)");
        app->add_option("--seed", seed, "fit seed")->capture_default_str();
        app->add_option("--b1", b1, "rp_ensemble: number of groups")->capture_default_str();
        app->add_option("--b2", b2, "rp_ensemble: projections per group")->capture_default_str();
        app->add_option("--d", d, "rp_ensemble: projected dimension")->capture_default_str();
        app->add_option("--base", base, "rp_ensemble: base model family")->capture_default_str();
        app->add_option("--alpha", alpha, "rp_ensemble: vote threshold in (0,1); tuned when omitted");
        app->add_option("--holdout", holdout, "rp_ensemble: selection holdout fraction")->capture_default_str();
    }

    Hyperparameters hyperparameters() const {
        Hyperparameters hp;
        for (const auto& p : params) {
            const auto eq = p.find('=');
            auto v = eq == std::string::npos ? std::nullopt : csv::parse_double(p.substr(eq + 1));
            if (!v) {
                throw ConfigError("--param '" + p + "' must be key=number");
            }
            hp[p.substr(0, eq)] = *v;
        }
        return hp;
    }

    ModelCandidate candidate() const {
        if (family == "rp_ensemble") {
            RpConfig rp;
            rp.b1_groups = b1;
            rp.b2_per_group = b2;
            rp.projected_dim = d;
            rp.base = ModelSpec{parse_family(base), hyperparameters(), derive_seed(seed, 1)};
            if (alpha >= 0) {
                rp.vote_threshold_alpha = alpha;
            }
            rp.selection_holdout_fraction = holdout;
            rp.seed = seed;
            rp.validate();
            return rp;
        }
        ModelSpec spec{parse_family(family), hyperparameters(), seed};
        spec.validate();
        return spec;
    }
};

ExpressionMatrix read_expression(const std::string& path, bool genes_as_rows) {
    return load_expression(path, genes_as_rows ? Orientation::genes_as_rows : Orientation::patients_as_rows);
}

std::string merge_report_json(const MergeReport& r) {
    nlohmann::json j;
    j["source_patient_counts"] = r.source_patient_counts;
    j["source_gene_counts"] = r.source_gene_counts;
    j["union_patient_count"] = r.union_patient_count;
    j["intersection_gene_count"] = r.intersection_gene_count;
    nlohmann::json res = nlohmann::json::array();
    for (const auto& x : r.resolutions) {
        res.push_back({{"patient_id", x.patient_id}, {"winning_source", x.winning_source}, {"winning_platform", x.winning_platform}});
    }
    j["resolutions"] = std::move(res);
    return j.dump(2) + "\n";
}

std::string importance_csv(const RpModel& m, const std::vector<std::string>& names) {
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m.feature_importance[a] > m.feature_importance[b]; });
    std::string out = "feature,importance\n";
    for (auto i : order) {
        out += names[i] + ',' + csv::format_double(m.feature_importance[i]) + '\n';
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"omicsflow: multi-platform expression integration, survival labels, t-SNE and survival classifiers"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort (microarray, rnaseq, cna, clinical, truth CSVs)");
    synth::SynthConfig sc;
    std::string synth_dir = "synth_out", structure = "linear";
    synth_cmd->add_option("--out-dir", synth_dir)->capture_default_str();
    synth_cmd->add_option("--patients", sc.n_patients)->capture_default_str();
    synth_cmd->add_option("--genes", sc.n_genes)->capture_default_str();
    synth_cmd->add_option("--informative", sc.n_informative_genes)->capture_default_str();
    synth_cmd->add_option("--seed", sc.seed)->capture_default_str();
    synth_cmd->add_option("--gene-seed", sc.gene_seed, "seed for gene-level parameters (0: derived from --seed)")->capture_default_str();
    synth_cmd->add_option("--gamma-shape", sc.gamma_shape)->capture_default_str();
    synth_cmd->add_option("--gamma-rate", sc.gamma_rate)->capture_default_str();
    synth_cmd->add_option("--nb-mean", sc.nb_mean)->capture_default_str();
    synth_cmd->add_option("--nb-dispersion", sc.nb_dispersion)->capture_default_str();
    synth_cmd->add_option("--median-survival", sc.baseline_median_survival_months)->capture_default_str();
    synth_cmd->add_option("--censoring", sc.censoring_fraction_target)->capture_default_str();
    synth_cmd->add_option("--risk-coefficient", sc.risk_coefficient)->capture_default_str();
    synth_cmd->add_option("--effect-size", sc.effect_size)->capture_default_str();
    synth_cmd->add_option("--structure", structure, "linear or clustered")->capture_default_str();
    synth_cmd->add_option("--prefix", sc.patient_prefix, "patient id prefix")->capture_default_str();
    bool synth_split = false;
    synth_cmd->add_flag("--split-platforms", synth_split, "even patients on the microarray only, odd patients on RNA-seq only");

    // merge
    auto* merge_cmd = app.add_subcommand("merge", "merge expression matrices: patient union, gene intersection, first source wins");
    std::vector<std::string> merge_inputs;
    std::string merge_out, merge_report;
    bool merge_genes_rows = false;
    merge_cmd->add_option("--input", merge_inputs, "expression CSVs in priority order")->required()->expected(2, -1);
    merge_cmd->add_option("--output", merge_out)->required();
    merge_cmd->add_option("--report", merge_report, "write the merge report as JSON");
    merge_cmd->add_flag("--genes-as-rows", merge_genes_rows, "inputs have one row per gene");

    // normalize
    auto* norm_cmd = app.add_subcommand("normalize", "feature-specific quantile normalization of a target onto a reference");
    std::string norm_target, norm_ref, norm_out;
    bool norm_log2 = false, norm_genes_rows = false;
    norm_cmd->add_option("--target", norm_target)->required();
    norm_cmd->add_option("--reference", norm_ref)->required();
    norm_cmd->add_option("--output", norm_out)->required();
    norm_cmd->add_flag("--log2", norm_log2, "apply log2(v+1) to both inputs first");
    norm_cmd->add_flag("--genes-as-rows", norm_genes_rows, "inputs have one row per gene");

    // label
    auto* label_cmd = app.add_subcommand("label", "horizon labels from clinical records");
    std::string label_clin, label_out;
    double label_t = 60;
    label_cmd->add_option("--clinical", label_clin)->required();
    label_cmd->add_option("--t", label_t, "horizon in months")->capture_default_str();
    label_cmd->add_option("--output", label_out)->required();

    // project
    auto* proj_cmd = app.add_subcommand("project", "exact t-SNE of a feature matrix");
    std::string proj_in, proj_out, proj_clin, proj_trace;
    TsneConfig tc;
    bool proj_age = false;
    proj_cmd->add_option("--features", proj_in)->required();
    proj_cmd->add_option("--output", proj_out)->required();
    proj_cmd->add_option("--dims", tc.output_dims)->capture_default_str();
    proj_cmd->add_option("--perplexity", tc.perplexity)->capture_default_str();
    proj_cmd->add_option("--iterations", tc.iterations)->capture_default_str();
    proj_cmd->add_option("--learning-rate", tc.learning_rate)->capture_default_str();
    proj_cmd->add_option("--exaggeration", tc.early_exaggeration_factor)->capture_default_str();
    proj_cmd->add_option("--exaggeration-iters", tc.early_exaggeration_iters)->capture_default_str();
    proj_cmd->add_option("--seed", tc.seed)->capture_default_str();
    proj_cmd->add_flag("--append-age", proj_age, "append the age column from --clinical");
    proj_cmd->add_option("--clinical", proj_clin);
    proj_cmd->add_option("--trace", proj_trace, "write the KL trace as iteration,kl");

    // train / rptrain
    auto* train_cmd = app.add_subcommand("train", "fit one model and write it as JSON");
    auto* rptrain_cmd = app.add_subcommand("rptrain", "fit a random-projection ensemble and write it plus feature importance");
    ModelFlags train_flags, rp_flags;
    rp_flags.family = "rp_ensemble";
    std::string train_features, train_labels, train_out, train_importance;
    for (auto* cmd : {train_cmd, rptrain_cmd}) {
        cmd->add_option("--features", train_features)->required();
        cmd->add_option("--labels", train_labels, "labels CSV written by 'label'")->required();
        cmd->add_option("--output", train_out, "model file (JSON)")->required();
        cmd->add_option("--importance", train_importance, "rp_ensemble: feature importance CSV");
    }
    train_flags.add_to(train_cmd);
    rp_flags.add_to(rptrain_cmd);
    std::size_t train_workers = 1;
    rptrain_cmd->add_option("--workers", train_workers)->capture_default_str();

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "stratified k-fold cross-validated AUC");
    ModelFlags cv_flags;
    cv_flags.add_to(cv_cmd);
    std::string cv_features, cv_labels, cv_out, cv_roc, cv_data_name = "data";
    CvPlan cv_plan;
    std::size_t cv_workers = 1;
    bool cv_unstratified = false;
    cv_cmd->add_option("--features", cv_features)->required();
    cv_cmd->add_option("--labels", cv_labels)->required();
    cv_cmd->add_option("--k", cv_plan.k_folds)->capture_default_str();
    cv_cmd->add_option("--cv-seed", cv_plan.seed)->capture_default_str();
    cv_cmd->add_flag("--unstratified", cv_unstratified);
    cv_cmd->add_option("--workers", cv_workers)->capture_default_str();
    cv_cmd->add_option("--data-name", cv_data_name, "data descriptor written to the report")->capture_default_str();
    cv_cmd->add_option("--output", cv_out, "report CSV (default: stdout)");
    cv_cmd->add_option("--roc", cv_roc, "ROC CSV of the pooled out-of-fold scores");

    // search
    auto* search_cmd = app.add_subcommand("search", "seeded random hyperparameter search scored by CV AUC");
    std::string s_features, s_labels, s_model, s_out;
    std::size_t s_budget = 10, s_workers = 1;
    CvPlan s_plan;
    std::uint64_t s_seed = 0;
    search_cmd->add_option("--features", s_features)->required();
    search_cmd->add_option("--labels", s_labels)->required();
    search_cmd->add_option("--model", s_model, "model entry as JSON text or a path to a JSON file")->required();
    search_cmd->add_option("--budget", s_budget)->capture_default_str();
    search_cmd->add_option("--k", s_plan.k_folds)->capture_default_str();
    search_cmd->add_option("--seed", s_seed)->capture_default_str();
    search_cmd->add_option("--workers", s_workers)->capture_default_str();
    search_cmd->add_option("--output", s_out, "trials CSV");

    // report
    auto* report_cmd = app.add_subcommand("report", "run a full experiment from a config file and write summary reports");
    std::string r_config, r_output;
    std::vector<std::string> r_sets;
    std::optional<std::size_t> r_workers, r_budget;
    std::optional<std::uint64_t> r_seed;
    bool r_project_in_fold = false;
    report_cmd->add_option("--config", r_config)->required();
    report_cmd->add_option("--set", r_sets, "override a config key: key.path=value (repeatable)");
    report_cmd->add_option("--workers", r_workers);
    report_cmd->add_option("--seed", r_seed);
    report_cmd->add_option("--budget", r_budget);
    report_cmd->add_option("--output", r_output);
    report_cmd->add_flag("--project-in-fold", r_project_in_fold, "fit t-SNE on the labeled cohort of each horizon only");

    // km
    auto* km_cmd = app.add_subcommand("km", "Kaplan-Meier curves as group,time,survival,at_risk");
    std::string km_clin, km_out;
    bool km_group = false;
    km_cmd->add_option("--clinical", km_clin)->required();
    km_cmd->add_flag("--group-by", km_group, "one curve per group label");
    km_cmd->add_option("--output", km_out, "CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    auto emit = [](const std::string& path, const std::string& text) {
        if (path.empty()) {
            std::cout << text;
        } else {
            csv::write_file(path, text);
        }
    };

    if (*synth_cmd) {
        if (structure == "linear") {
            sc.structure = synth::LatentStructure::linear;
        } else if (structure == "clustered") {
            sc.structure = synth::LatentStructure::clustered;
        } else {
            throw ConfigError("--structure must be linear or clustered");
        }
        sc.validate();
        const auto cohort = synth::generate(sc);
        fs::create_directories(synth_dir);
        const fs::path d(synth_dir);
        if (synth_split) {
            std::vector<std::size_t> even, odd;
            for (std::size_t i = 0; i < cohort.microarray.n_patients(); ++i) {
                (i % 2 ? odd : even).push_back(i);
            }
            store_expression(cohort.microarray.subset_patients(even), (d / "microarray.csv").string());
            store_expression(cohort.rnaseq.subset_patients(odd), (d / "rnaseq.csv").string());
        } else {
            store_expression(cohort.microarray, (d / "microarray.csv").string());
            store_expression(cohort.rnaseq, (d / "rnaseq.csv").string());
        }
        store_cna(cohort.cna, (d / "cna.csv").string());
        store_clinical(cohort.clinical.records, (d / "clinical.csv").string());
        synth::store_truth(cohort.clinical.truth, (d / "truth.csv").string());
        std::size_t censored = 0;
        for (const auto& r : cohort.clinical.records) {
            censored += !r.event;
        }
        std::cout << "wrote " << sc.n_patients << " patients x " << sc.n_genes << " genes to " << synth_dir << " (censored fraction "
                  << static_cast<double>(censored) / sc.n_patients << ")\n";
    } else if (*merge_cmd) {
        std::vector<ExpressionMatrix> sources;
        for (const auto& p : merge_inputs) {
            sources.push_back(read_expression(p, merge_genes_rows));
        }
        const auto merged = merge(sources);
        store_expression(merged.matrix, merge_out);
        if (!merge_report.empty()) {
            csv::write_file(merge_report, merge_report_json(merged.report));
        }
        std::cout << "merged " << merged.report.union_patient_count << " patients x " << merged.report.intersection_gene_count << " genes\n";
    } else if (*norm_cmd) {
        auto target = read_expression(norm_target, norm_genes_rows);
        auto reference = read_expression(norm_ref, norm_genes_rows);
        if (norm_log2) {
            target = log2_transform(target);
            reference = log2_transform(reference);
        }
        const auto genes = common_genes({target, reference});
        if (genes.empty()) {
            throw DataError("target and reference share no genes");
        }
        store_expression(fsqn(target.subset_genes(genes), reference.subset_genes(genes)), norm_out);
    } else if (*label_cmd) {
        const auto clinical = load_clinical(label_clin);
        csv::write_file(label_out, render_labels_csv(clinical, label_t));
        std::vector<int> y;
        for (const auto& r : clinical) {
            const auto l = make_label(r, label_t);
            if (l != SurvivalLabel::Dropped) {
                y.push_back(l == SurvivalLabel::Survived);
            }
        }
        if (y.empty()) {
            throw DataError("every patient was lost before the horizon");
        }
        const auto p = class_priors(y);
        std::cout << "labeled " << y.size() << " of " << clinical.size() << " patients; priors p0=" << p.p0 << " p1=" << p.p1 << '\n';
    } else if (*proj_cmd) {
        const auto features = load_features(proj_in);
        Embedding e;
        if (proj_age) {
            if (proj_clin.empty()) {
                throw ConfigError("--append-age needs --clinical");
            }
            store_features(project_with_age(features, load_clinical(proj_clin), tc), proj_out);
        } else {
            e = tsne(features, tc);
            store_features(embedding_features(e), proj_out);
        }
        if (!proj_trace.empty()) {
            if (e.kl_trace.empty()) {
                e = tsne(features, tc);
            }
            std::string t = "iteration,kl\n";
            for (const auto& p : e.kl_trace) {
                t += std::to_string(p.iteration) + ',' + csv::format_double(p.kl) + '\n';
            }
            csv::write_file(proj_trace, t);
        }
    } else if (*train_cmd || *rptrain_cmd) {
        const auto& flags = *train_cmd ? train_flags : rp_flags;
        const auto data = load_labeled(load_features(train_features), train_labels);
        const auto candidate = flags.candidate();
        if (const auto* spec = std::get_if<ModelSpec>(&candidate)) {
            const auto model = fit(*spec, data);
            save_model(model, train_out);
        } else {
            const auto model = rp_train(data.features.values(), data.labels, std::get<RpConfig>(candidate), train_workers);
            csv::write_file(train_out, rp_model_to_json(model).dump(1) + "\n");
            if (!train_importance.empty()) {
                csv::write_file(train_importance, importance_csv(model, data.features.feature_names()));
            }
        }
        std::cout << "trained " << flags.family << " on " << data.size() << " patients x " << data.features.cols() << " features\n";
    } else if (*cv_cmd) {
        const auto data = load_labeled(load_features(cv_features), cv_labels);
        cv_plan.stratified = !cv_unstratified;
        const auto candidate = cv_flags.candidate();
        const auto report = cross_validate(candidate, data, cv_plan, cv_flags.family, cv_data_name, cv_workers);
        emit(cv_out, render_report_csv(report));
        if (!cv_roc.empty()) {
            std::vector<double> scores(data.size());
            for (const auto& fold : stratified_kfold(data.labels, cv_plan)) {
                std::vector<std::size_t> train_idx;
                std::vector<bool> in_fold(data.size(), false);
                for (auto i : fold) {
                    in_fold[i] = true;
                }
                for (std::size_t i = 0; i < data.size(); ++i) {
                    if (!in_fold[i]) {
                        train_idx.push_back(i);
                    }
                }
                const auto s = fit_and_score(candidate, data.subset(train_idx), data.features.values().select_rows(fold));
                for (std::size_t k = 0; k < fold.size(); ++k) {
                    scores[fold[k]] = s[k];
                }
            }
            csv::write_file(cv_roc, render_roc_csv(roc_curve(scores, data.labels)));
        }
    } else if (*search_cmd) {
        const auto data = load_labeled(load_features(s_features), s_labels);
        nlohmann::json mj;
        if (fs::exists(s_model)) {
            std::ifstream in(s_model);
            mj = nlohmann::json::parse(in, nullptr, false);
        } else {
            mj = nlohmann::json::parse(s_model, nullptr, false);
        }
        if (mj.is_discarded()) {
            throw ConfigError("--model is neither a JSON file nor JSON text");
        }
        const auto tmpl = parse_model_template(mj);
        s_plan.seed = derive_seed(s_seed, fnv1a("search-folds"));
        const auto result = random_search(tmpl, data, s_budget, s_plan, s_seed, s_workers);
        std::ostringstream t;
        t << "trial,params,mean_auc,status\n";
        for (const auto& r : result.trials) {
            std::string params;
            for (const auto& [k, v] : r.params) {
                params += (params.empty() ? "" : ";") + k + "=" + csv::format_double(v);
            }
            t << r.index << ',' << params << ',' << (r.ok ? csv::format_double(r.mean_auc) : "") << ',' << (r.ok ? "ok" : "failed") << '\n';
        }
        emit(s_out, t.str());
        std::cout << "best trial " << result.best << " mean AUC " << result.best_trial().mean_auc << '\n';
    } else if (*report_cmd) {
        std::vector<std::string> overrides = r_sets;
        if (r_workers) {
            overrides.push_back("workers=" + std::to_string(*r_workers));
        }
        if (r_seed) {
            overrides.push_back("seed=" + std::to_string(*r_seed));
        }
        if (r_budget) {
            overrides.push_back("search.budget=" + std::to_string(*r_budget));
        }
        if (!r_output.empty()) {
            overrides.push_back("output=" + nlohmann::json(fs::absolute(r_output).string()).dump());
        }
        if (r_project_in_fold) {
            overrides.push_back("cv.project_in_fold=true");
        }
        const auto config = load_experiment(r_config, overrides);
        const auto result = run_experiment(config);
        for (const auto& s : result.report.summaries()) {
            std::cout << s.model << " | " << s.data << " | t=" << s.horizon_months << " | AUC " << s.mean_auc << " +- " << s.std_auc << '\n';
        }
        std::cout << "reports written to " << config.output_dir << '\n';
    } else if (*km_cmd) {
        emit(km_out, render_km_csv(kaplan_meier(load_clinical(km_clin), km_group)));
    }
    return 0;
}

}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
