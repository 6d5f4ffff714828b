#pragma once

// Training losses on emulated output states and their gradients with respect
// to the output amplitudes.
//
// Gradient convention: g_k = ∂L/∂Re ψ_k + i ∂L/∂Im ψ_k, so that a state
// perturbation dψ changes the loss by Re Σ conj(g_k) dψ_k.

#include "qlbm/qsim.hpp"

#include <string>
#include <vector>

namespace qlbm::train {

using qs::cplx;
using qs::PureState;

enum class LossKind { AmpPhase, Rho, AmpOnly, Rho1 };
enum class MacroMode { MSEVel, RelVel, FullM };
enum class PhaseWeight { Predicted, Reference };

struct LossSpec {
    LossKind kind = LossKind::Rho;
    double lambda = 1e-4;     ///< phase weight of AmpPhase
    double lambda_u = 0.0;    ///< macroscopic penalty weight
    MacroMode macro = MacroMode::MSEVel;
    bool nonunitary = false;  ///< physical-subspace ratio target, leakage unconstrained
    PhaseWeight phase_weight = PhaseWeight::Predicted;

    /// Throws ConfigError for invalid weights or unsupported combinations.
    void validate() const;
    /// Whether the loss constrains relative phases of the output state.
    bool phase_aware() const;
    std::string name() const;
};

LossKind parse_loss_kind(const std::string& s);
MacroMode parse_macro_mode(const std::string& s);

/// Reference for one sample: the encoded target register state and f_ref.
struct Target {
    PureState psi_ref;  ///< 16-dim
    lbm::Populations f_ref{};
    double rho = 1.0;   ///< site mass used to decode predictions
};

Target make_target(const lbm::Populations& f_target, double rho_site);

struct LossValue {
    double total = 0.0;
    double amp = 0.0;      ///< amplitude term (before the (1−λ) weight)
    double phase = 0.0;    ///< phase term (before the λ weight)
    double macro = 0.0;    ///< macroscopic penalty (before λ_u)
    double success = 1.0;  ///< probability on the physical channel states
};

/// Evaluates the loss of an output state (16-dim for R1, 256-dim for R2) and,
/// when grad is non-null, writes ∂L/∂ψ in the convention above.
LossValue evaluate_loss(const LossSpec& spec, const PureState& out, const Target& target,
                        std::vector<cplx>* grad = nullptr);

// Standalone loss terms for direct use and testing.

/// (1−λ) Σ(|ψ|²−|ψ_ref|²)² + λ Σ|ψ|² wrap(ΔΦ)²/(4π²).
double loss_amp_phase(const PureState& psi, const PureState& psi_ref, double lambda);

/// ||ρ_ref − |ψ><ψ|||_F².
double loss_rho(const PureState& psi, const qs::DensityMatrix& rho_ref);
double loss_rho(const qs::DensityMatrix& rho, const qs::DensityMatrix& rho_ref);

/// λ_u times the selected velocity or moment penalty.
double loss_macro(const lbm::Populations& f_vqc, const lbm::Populations& f_ref, double lambda_u,
                  MacroMode mode);

/// Ratio target: sqrt(f_ref / Σf_ref) on the physical indices, zero elsewhere.
PureState nonunitary_target(const lbm::Populations& f_ref);

/// Loss on the 9 physical indices of normalized probability ratios.
double loss_ratio(const PureState& psi, const PureState& target);

/// Basis index used for phase alignment of the reference: 0 unless |ref_0| < 1e-9.
int alignment_index(const PureState& psi_ref);

/// Marginal probabilities of the 16 register-1 basis states.
std::array<double, 16> register_probabilities(const PureState& out);

/// Decoded channel populations of a prediction (renormalized to the physical
/// subspace when nonunitary).
lbm::Populations predicted_populations(const PureState& out, double rho, bool nonunitary);

} // namespace qlbm::train
