#pragma once

// LBM time stepping with the collision replaced by linear collision followed
// by a trained circuit, run in lockstep with the quadratic reference and the
// linear baseline.

#include "qlbm/ansatz.hpp"
#include "qlbm/lattice.hpp"

#include <complex>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qlbm::hybrid {

using lbm::DistributionField;
using lbm::LatticeConfig;
using ComplexField = lbm::BasicField<std::complex<double>>;

enum class HybridMode { MeasuredPerStep, Coherent, NonUnitaryPostSelect };

HybridMode parse_mode(const std::string& s);
std::string mode_name(HybridMode m);

/// Throws ConfigError when the model cannot run in the mode or lattice.
void check_compatibility(const ansatz::Model& model, HybridMode mode, const LatticeConfig& config);

struct VelocityError {
    double max_rel = 0.0;
    double mean_rel = 0.0;
};

/// Pointwise |u − u_ref| / max(|u_ref|, 1e-12) over fluid sites.
VelocityError velocity_error(const lbm::MacroField& u, const lbm::MacroField& ref,
                             const lbm::SolidMask* mask = nullptr);

/// Output of the circuit collision at one site.
struct SiteCollision {
    lbm::Populations f{};
    std::array<std::complex<double>, lbm::kQ> amp{};  ///< renormalized physical amplitudes · sqrt(ρ)
    double leakage = 0.0;
};

/// Linear collision of f_str, circuit, then projection to the physical states
/// renormalized to the site mass. `phases` carries input phases (coherent
/// runs); null means zero phases.
SiteCollision collide_site(const ansatz::Model& model, const lbm::Populations& f_str, double tau,
                           const std::array<double, lbm::kQ>* phases = nullptr);

struct HybridOptions {
    HybridMode mode = HybridMode::MeasuredPerStep;
    double force_scale = 1.0;     ///< applied to the circuit run only
    bool carry_phases_postselect = false;
    double leakage_limit = 0.9;
    bool keep_macros = false;     ///< store per-step macroscopic fields of all runs
};

/// Advances a single circuit-collision run.
class HybridStepper {
  public:
    HybridStepper(const LatticeConfig& config, const ansatz::Model& model, HybridOptions options);

    void reset(const DistributionField& initial);
    /// One step; `t` is the index reported on instability.
    void step(int t);

    DistributionField populations() const;
    double mean_leakage() const { return mean_leakage_; }
    double max_leakage() const { return max_leakage_; }
    const lbm::Solver& solver() const { return solver_; }

  private:
    lbm::Solver solver_;
    const ansatz::Model& model_;
    HybridOptions options_;
    bool complex_state_ = false;
    DistributionField f_;
    ComplexField amp_;
    double mean_leakage_ = 0.0;
    double max_leakage_ = 0.0;
};

struct StepMetrics {
    int step = 0;
    double max_rel_u = 0.0;       ///< circuit run vs reference
    double mean_rel_u = 0.0;
    double lin_max_rel_u = 0.0;   ///< linear baseline vs reference
    double lin_mean_rel_u = 0.0;
    double channel_mse = 0.0;
    double lin_channel_mse = 0.0;
    double eta = 0.0;             ///< Σ(f_qml − f_ref)² / Σ(f_lin − f_ref)²
    double eta_eps = 0.0;         ///< lin_max_rel_u / max_rel_u
    double leakage = 0.0;
    double max_leakage = 0.0;
    double mse_pxx_pyy = 0.0;
    double mse_pxy = 0.0;
    double mse_energy = 0.0;
    double umax_ref = 0.0;
    double umax_lin = 0.0;
    double umax_qml = 0.0;
};

struct RunMetrics {
    std::vector<StepMetrics> steps;

    const StepMetrics& final() const { return steps.back(); }
    void write_csv(const std::filesystem::path& path) const;
};

struct HybridRun {
    RunMetrics metrics;
    DistributionField final_reference;
    DistributionField final_linear;
    DistributionField final_qml;
    std::vector<lbm::MacroField> macro_reference;  ///< filled when keep_macros
    std::vector<lbm::MacroField> macro_linear;
    std::vector<lbm::MacroField> macro_qml;
};

/// Lockstep run of reference, linear and circuit collisions from a common
/// initial field (the configured flow case when none is given). With no
/// model only the two classical runs advance and the circuit columns repeat
/// the linear ones.
HybridRun run_hybrid(const LatticeConfig& config, const ansatz::Model* model, int steps,
                     const HybridOptions& options = {},
                     const std::optional<DistributionField>& initial = std::nullopt);

/// Metrics of one step from the three fields.
StepMetrics compare_fields(const DistributionField& ref, const DistributionField& lin,
                           const DistributionField& qml, const lbm::SolidMask* mask);

} // namespace qlbm::hybrid
