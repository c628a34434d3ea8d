#pragma once

#include <omicsflow/dataio.hpp>
#include <omicsflow/synth.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

namespace testutil {

// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("omicsflow_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string file(const std::string& name) const { return (path / name).string(); }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(file(name)) << text;
        return file(name);
    }
};

inline omicsflow::ExpressionMatrix expr(const std::string& platform, std::vector<std::string> patients, std::vector<std::string> genes,
                                       std::vector<double> values, omicsflow::Scale scale = omicsflow::Scale::linear) {
    const auto n = patients.size(), m = genes.size();
    return omicsflow::ExpressionMatrix(platform, std::move(patients), std::move(genes), omicsflow::Matrix(n, m, std::move(values)), scale);
}

inline omicsflow::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sd);
    omicsflow::Matrix m(r, c);
    for (auto& v : m.data()) {
        v = nd(rng);
    }
    return m;
}

// Synthetic cohort split across two platforms: even patients on the microarray, odd ones on RNA-seq.
// Writes microarray.csv, rnaseq.csv, cna.csv and clinical.csv into `dir`.
inline omicsflow::synth::Cohort write_two_platform_cohort(const std::filesystem::path& dir, const omicsflow::synth::SynthConfig& sc) {
    auto cohort = omicsflow::synth::generate(sc);
    std::vector<std::size_t> even, odd;
    for (std::size_t i = 0; i < cohort.microarray.n_patients(); ++i) {
        (i % 2 ? odd : even).push_back(i);
    }
    omicsflow::store_expression(cohort.microarray.subset_patients(even), (dir / "microarray.csv").string());
    omicsflow::store_expression(cohort.rnaseq.subset_patients(odd), (dir / "rnaseq.csv").string());
    omicsflow::store_cna(cohort.cna, (dir / "cna.csv").string());
    omicsflow::store_clinical(cohort.clinical.records, (dir / "clinical.csv").string());
    return cohort;
}

}
