#pragma once

// Experiment configuration documents, run directories and manifests.

#include "qlbm/cases.hpp"
#include "qlbm/dataset.hpp"
#include "qlbm/hybrid.hpp"
#include "qlbm/training.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qlbm::config {

/// Training corpus harvested from a reference run.
struct HarvestSpec {
    lbm::LatticeConfig lattice;
    int steps = 50;
    std::size_t n = 0;          ///< random subset size (0 keeps every sample)
    std::uint64_t seed = 1;
    int stratify_bins = 0;      ///< > 0 resamples evenly over log-spaced speed bins
    double u_lo = 1e-4;
    double u_hi = 0.2;
};

/// Artificial corpus default for config documents: perturbation widths up to
/// 1e-4 in every channel.
inline data::ArtificialSpec default_artificial() {
    data::ArtificialSpec s;
    s.sigma_max.fill(1e-4);
    return s;
}

struct DatasetConfig {
    data::Source source = data::Source::Artificial;
    data::ArtificialSpec artificial = default_artificial();
    HarvestSpec harvest;
};

struct HybridConfig {
    hybrid::HybridOptions options;
    int steps = 50;
};

struct CaseConfig {
    std::string kind = "jets";  ///< kolmogorov, plate, jets, precision
    int steps = 100;
    int handoff_steps = 10;
    double digits_u = 6.0;
    double digits_f = 6.0;
};

struct AnalysisConfig {
    std::vector<double> u_list{0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2};
    std::vector<double> taus{0.6, 0.8, 1.0, 1.5, 2.0};
    std::vector<double> lambdas{0.0, 1e-2, 1e-1, 1.0, 10.0};
    double u = 0.05;
    std::string map_kind = "effective";
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string output_dir;  ///< empty: <output root>/<command>-<config hash>
    lbm::LatticeConfig lattice;
    DatasetConfig dataset;
    train::TrainConfig train;
    HybridConfig hybrid;
    CaseConfig case_;
    AnalysisConfig analysis;

    /// Throws ConfigError on any invalid section.
    void validate() const;
};

/// Parses a document; unknown keys and wrongly typed values are ConfigErrors.
ExperimentConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json lattice_to_json(const lbm::LatticeConfig& c);
lbm::LatticeConfig lattice_from_json(const nlohmann::json& j);

/// Hash of the resolved document (hex).
std::string config_hash(const ExperimentConfig& c);

/// Default output root: $QLBM_OUTPUT_ROOT or ./runs.
std::filesystem::path output_root();

/// Creates the run directory. An existing non-empty directory is a
/// ConfigError unless `force`.
std::filesystem::path prepare_output_dir(const std::filesystem::path& dir, bool force);

/// Writes config.resolved.json.
std::filesystem::path write_resolved_config(const std::filesystem::path& dir, const ExperimentConfig& c);

/// Writes manifest.json listing the files with their sizes and hashes.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& c,
                    const std::vector<std::filesystem::path>& files);

/// Writes <path>.json next to a report with the config hash and seed.
void write_sidecar(const std::filesystem::path& report, const ExperimentConfig& c, const nlohmann::json& extra = {});

/// Builds the corpus described by the dataset section.
std::vector<data::CollisionSample> make_dataset(const DatasetConfig& d);

std::string code_version();

} // namespace qlbm::config
