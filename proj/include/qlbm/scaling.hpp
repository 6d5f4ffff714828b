#pragma once

// Diffusive-scaling calculator: refining the lattice by β at fixed viscosity
// and the crossover where the scaled circuit algorithm stops paying off.
// All logarithms are natural.

#include <string>

namespace qlbm::scaling {

struct ScalingParams {
    double beta = 1.0;    ///< Δx_S / Δx_B, in (0, 1]
    double n_base = 1e4;  ///< lattice sites of the base run
    double t_base = 1e3;  ///< time steps of the base run
    int dim = 2;

    void validate() const;
};

struct ScalingReport {
    ScalingParams params;
    double cs_factor = 1.0;        ///< c_s^phys scaled / base = 1/β
    double u_lattice_factor = 1.0; ///< β
    double pressure_factor = 1.0;  ///< 1/β²
    double n_scaled = 0.0;         ///< N_B / β^D
    double t_scaled = 0.0;         ///< T_B / β²
    double classical_base = 0.0;   ///< T_B N_B
    double classical_scaled = 0.0; ///< T_S N_S
    double quantum_base = 0.0;     ///< log²(N_B) T_B
    double quantum_scaled = 0.0;   ///< log²(N_S) T_S
    double eta = 0.0;              ///< classical_base / quantum_scaled
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta_crossover = 0.0;   ///< exact root of η(N_B, β) = 1, NaN if none in (0, 1]
};

/// N_B β² / log²(N_B / β^D).
double eta(double n_base, double beta, int dim = 2);
/// log(N_B) / √N_B.
double beta0(double n_base);
/// 2 (log N_B − log log N_B) / √N_B; throws InvalidInput for N_B ≤ e.
double beta1(double n_base);
/// Root of η(N_B, β) = 1 in (0, 1]; NaN when η(N_B, 1) < 1.
double crossover_beta(double n_base, int dim = 2);
/// N_B at which beta1(N_B) equals the given β (β1 decreases for N_B > e).
double crossover_sites(double beta);

ScalingReport diffusive_scaling(const ScalingParams& params);

void write_scaling_csv(const std::string& path, const ScalingReport& report);

} // namespace qlbm::scaling
