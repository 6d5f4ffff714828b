#pragma once

// Collision training corpora: harvested from LBM trajectories or drawn
// from the artificial near-equilibrium sampler.

#include "qlbm/lattice.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qlbm::data {

using lbm::Populations;
using lbm::Velocity;

enum class Source : int { Harvested = 0, Artificial = 1 };

struct CollisionSample {
    Populations f_str{};
    Populations f_lin{};
    Populations f_ref{};
    double rho = 1.0;
    Velocity u;
    double tau = 1.0;
    Source source = Source::Harvested;
};

/// Number of doubles in one serialized record.
inline constexpr int kRecordWidth = 32;

enum class Correlation { TGVAngle, Independent };

struct ArtificialSpec {
    double u0_max = 0.05;
    Populations sigma_min{};
    Populations sigma_max{};
    Correlation correlation = Correlation::TGVAngle;
    std::size_t n = 200000;
    std::uint64_t seed = 1;
    double tau = 1.0;
    bool project_neq = false;  ///< remove mass/momentum from the perturbation
    int max_retries = 100;

    void validate() const;
};

/// Builds a sample from a post-streaming state by applying both collision orders.
CollisionSample make_sample(const Populations& f_str, double tau, Source source);

/// One artificial draw. Throws NumericalError after max_retries non-positive draws.
CollisionSample sample_artificial(const ArtificialSpec& spec, std::mt19937_64& rng);

/// RNG for sample k of a corpus; independent of thread scheduling.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t k);

std::vector<CollisionSample> generate_artificial(const ArtificialSpec& spec);

/// Emits one sample per fluid site for frames 1..T (the post-streaming
/// states). Requires a full-field trajectory.
std::vector<CollisionSample> harvest(const lbm::Trajectory& trajectory, double tau,
                                     const lbm::SolidMask* mask = nullptr);

/// Keeps an equal number of samples per log-spaced speed bin.
std::vector<CollisionSample> stratify_by_speed(std::span<const CollisionSample> samples, int bins,
                                               double u_lo, double u_hi, std::uint64_t seed);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
};

struct DatasetReport {
    std::size_t count = 0;
    std::array<Histogram, lbm::kQ> neq_hist;  ///< f_str − f_eq(ρ,u) per channel
    Populations neq_mean{};
    Populations neq_std{};
    double ux_min = 0, ux_max = 0, uy_min = 0, uy_max = 0;
    double ux_mean = 0, uy_mean = 0;
    std::vector<double> speed_quantile_levels;
    std::vector<double> speed_quantiles;
};

/// Throws InvalidInput on an empty corpus.
DatasetReport stats(std::span<const CollisionSample> samples, int bins = 50);

/// Writes <stem>_neq_hist.csv, <stem>_summary.csv and <stem>_velocity.csv.
std::vector<std::filesystem::path> write_report(const DatasetReport& report,
                                                std::span<const CollisionSample> samples,
                                                const std::filesystem::path& dir,
                                                const std::string& stem);

/// Index batches of a seeded permutation; the last batch may be partial.
std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, std::size_t batch_size,
                                                      std::uint64_t seed);

void write_dataset(const std::filesystem::path& path, std::span<const CollisionSample> samples);
std::vector<CollisionSample> read_dataset(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, std::span<const CollisionSample> samples);

} // namespace qlbm::data
