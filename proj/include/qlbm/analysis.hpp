#pragma once

// Operator diagnostics of the collision (frozen-velocity maps and their
// singular values), curve fits and training sweeps.

#include "qlbm/training.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace qlbm::analysis {

using Matrix9 = Eigen::Matrix<double, 9, 9>;

enum class MapKind { LinearA, QuadraticAB, EffectiveNonlinear, EffectiveNonlinearOmega };

MapKind parse_map_kind(const std::string& s);

/// Collision with one velocity factor of the quadratic terms frozen:
/// ρ u_α u_β → u_α^frozen j_β with j = Σ f c. Linear in f.
lbm::Populations frozen_collide(const lbm::Populations& f, lbm::Velocity u_frozen, double tau,
                                lbm::EqOrder order);

struct FrozenCollisionMap {
    Matrix9 matrix = Matrix9::Zero();
    lbm::Velocity u;
    double tau = 1.0;
    MapKind kind = MapKind::LinearA;
};

/// Column probing of the frozen collision. LinearA and QuadraticAB are the
/// post-collision maps at τ; B(u) = QuadraticAB − LinearA. EffectiveNonlinear
/// is I + B(u)A⁻¹ at τ = 1 and EffectiveNonlinearOmega is I + ωBÃ⁻¹ with
/// B, Ã the τ = 1 forms and Ã = I + ω(A − I). A singular A is inverted on its
/// range (group inverse).
FrozenCollisionMap build_frozen_map(lbm::Velocity u, double tau, MapKind kind);

/// X A⁻¹ by LU when A is invertible, else X A^# with A^# = A (A³)⁺ A.
Matrix9 right_divide(const Matrix9& x, const Matrix9& a);

struct NonUnitarity {
    double metric = 0.0;  ///< Σ(1 − σ_i)²
    double sigma_max = 0.0;
    std::array<double, 9> sigmas{};  ///< descending
};

NonUnitarity nonunitarity(const Matrix9& m);
inline NonUnitarity nonunitarity(const FrozenCollisionMap& m) { return nonunitarity(m.matrix); }

// ---------------------------------------------------------------------------
// Fits

struct ExpQuadFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double r2 = 0.0;  ///< in log space; 1 when residual and variance are both zero
};

/// Least squares of log(mse) = log c + a u + b u². Needs ≥ 4 points, mse > 0.
ExpQuadFit fit_exp_quadratic(std::span<const double> u, std::span<const double> mse);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit fit_linear(std::span<const double> x, std::span<const double> y);

/// Rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Sweeps

/// Prediction errors of a model on a corpus.
struct PredictionStats {
    double mse_pred = 0.0;   ///< mean over samples of the channel-mean (f_vqc − f_target)²
    double mse_base = 0.0;   ///< same for the untrained input (f_lin or f_str)
    double eta = 0.0;        ///< Σ(f_vqc − f_target)² / Σ(f_in − f_target)², NaN on 0/0
    double eta_mean = 0.0;   ///< per-sample mean of the same ratio (samples with a zero denominator skipped)
    double mse_max = 0.0;    ///< spread of per-sample MSE
    double mse_median = 0.0;
    double mse_min = 0.0;
    double mse_to_input = 0.0;  ///< mean channel MSE between prediction and the input
    double mse_pxx_pyy = 0.0;
    double mse_pxy = 0.0;
    double mse_energy = 0.0;
};

PredictionStats prediction_stats(const ansatz::Model& model, std::span<const data::CollisionSample> samples,
                                 train::TargetKind target);

/// Trains a model or returns it from a cache directory keyed by the hash of
/// the corpus and the training configuration.
class ModelCache {
  public:
    explicit ModelCache(std::optional<std::filesystem::path> dir = std::nullopt) : dir_(std::move(dir)) {}

    ansatz::Model get_or_train(const train::TrainConfig& config, std::span<const data::CollisionSample> samples,
                               const train::Validator& validator = {});

  private:
    std::optional<std::filesystem::path> dir_;
};

std::uint64_t corpus_hash(std::span<const data::CollisionSample> samples);
std::uint64_t train_config_hash(const train::TrainConfig& config);

using DatasetProvider = std::function<std::vector<data::CollisionSample>(double u, double tau)>;

struct VelocityRow {
    double u = 0.0;
    PredictionStats stats;
};

std::vector<VelocityRow> velocity_sweep(const train::TrainConfig& base, std::span<const double> u_list,
                                        const DatasetProvider& dataset, ModelCache& cache);

struct TauRow {
    double tau = 1.0;
    double nu = 0.0;
    PredictionStats stats;
    double vel_err = std::numeric_limits<double>::quiet_NaN();  ///< from the validator
    double omega_nonunitarity = 0.0;
};

/// `validator(model)` runs the hybrid check at the model's τ.
std::vector<TauRow> tau_sweep(const train::TrainConfig& base, std::span<const double> taus, double u,
                              const DatasetProvider& dataset, const train::Validator& validator,
                              ModelCache& cache);

struct LambdaRow {
    double lambda_u = 0.0;
    PredictionStats stats;
    double vel_err = std::numeric_limits<double>::quiet_NaN();
};

std::vector<LambdaRow> lambda_u_sweep(const train::TrainConfig& base, std::span<const double> lambdas,
                                      std::span<const data::CollisionSample> samples,
                                      const train::Validator& validator, ModelCache& cache);

struct SpectrumRow {
    double u = 0.0;
    double tau = 1.0;
    NonUnitarity nu;
};

/// Non-unitarity of one map kind over velocities (along direction (dx, dy)) and τ values.
std::vector<SpectrumRow> spectrum_sweep(MapKind kind, std::span<const double> u_list,
                                        std::span<const double> taus, lbm::Velocity direction = {1.0, 0.0});

void write_velocity_csv(const std::filesystem::path& path, std::span<const VelocityRow> rows);
void write_tau_csv(const std::filesystem::path& path, std::span<const TauRow> rows);
void write_lambda_csv(const std::filesystem::path& path, std::span<const LambdaRow> rows);
void write_spectrum_csv(const std::filesystem::path& path, std::span<const SpectrumRow> rows);

} // namespace qlbm::analysis
