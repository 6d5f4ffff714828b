#pragma once

// Flow-case suites built on the hybrid runner: decaying Kolmogorov flow,
// flat-plate handoff and forced Gaussian jets, plus the fixed-precision study.

#include "qlbm/hybrid.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qlbm::cases {

using hybrid::HybridOptions;
using lbm::DistributionField;
using lbm::LatticeConfig;

/// Scalar field on the nx×ny grid, x-major.
struct ScalarField {
    int nx = 0;
    int ny = 0;
    std::vector<double> v;

    double& at(int x, int y) { return v[static_cast<std::size_t>(x) * ny + y]; }
    double at(int x, int y) const { return v[static_cast<std::size_t>(x) * ny + y]; }
    double max() const;
    void write_csv(const std::filesystem::path& path, const std::string& column) const;
};

/// ∂u_y/∂x − ∂u_x/∂y by central differences; periodic in y, and in x unless
/// periodic_x is false (one-sided at the x edges). Solid sites are 0.
ScalarField vorticity(const lbm::MacroField& m, const lbm::SolidMask* mask = nullptr,
                      bool periodic_x = true);

/// |u_a − u_b| per site.
ScalarField velocity_difference(const lbm::MacroField& a, const lbm::MacroField& b);

/// Pearson correlation of the stacked (u_x, u_y) fields; 1 for identical shape.
double shape_similarity(const lbm::MacroField& a, const lbm::MacroField& b);

// ---------------------------------------------------------------------------

struct DecayReport {
    double u0 = 0.0;
    std::vector<int> t;
    std::vector<double> ref, lin, qml;  ///< u_max(t) / u0
    double mean_abs_err_lin = 0.0;      ///< mean |lin − ref| of the curves
    double mean_abs_err_qml = 0.0;
    hybrid::RunMetrics metrics;

    void write_csv(const std::filesystem::path& path) const;
};

/// Decaying Kolmogorov flow from the configured shear.
DecayReport kolmogorov_decay(const LatticeConfig& config, const ansatz::Model* model, int steps,
                             const HybridOptions& options = {});

struct HandoffReport {
    int total_steps = 0;
    int handoff_steps = 0;
    ScalarField vort_ref;
    ScalarField err_lin;  ///< |ω_lin − ω_ref|
    ScalarField err_qml;
    double max_err_lin = 0.0, max_err_qml = 0.0;
    double mean_err_lin = 0.0, mean_err_qml = 0.0;
    hybrid::RunMetrics metrics;
};

/// Quadratic reference for T − k steps, then k steps each of reference,
/// linear and circuit collisions from the common state.
HandoffReport plate_handoff(const LatticeConfig& config, const ansatz::Model* model, int total_steps,
                            int handoff_steps, const HybridOptions& options = {});

struct JetsReport {
    ScalarField err_lin;  ///< final |u_lin − u_ref|
    ScalarField err_qml;
    double similarity_lin = 0.0;  ///< shape_similarity with the reference
    double similarity_qml = 0.0;
    hybrid::RunMetrics metrics;
    lbm::MacroField final_ref, final_lin, final_qml;
};

/// Jets from rest; options.force_scale rescales the force of the circuit run only.
JetsReport jets(const LatticeConfig& config, const ansatz::Model* model, int steps,
                const HybridOptions& options = {});

// ---------------------------------------------------------------------------

/// Rounds to `digits` decimals. Fractional digit counts blend the two
/// neighbouring integer precisions linearly in the fractional part.
double quantize(double x, double digits);

struct PrecisionReport {
    double digits_u = 0.0;
    double digits_f = 0.0;
    ScalarField rel_err;  ///< final |u_q − u| / max(|u|, 1e-12)
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    std::vector<double> max_rel_err_t;  ///< per step
};

/// Quadratic run of the configured case in which the collision uses a
/// velocity quantized to digits_u and a nonlinear equilibrium part quantized
/// to digits_f, compared with the full-precision run.
PrecisionReport fixed_precision_study(const LatticeConfig& config, double digits_u, double digits_f,
                                      int steps);

} // namespace qlbm::cases
