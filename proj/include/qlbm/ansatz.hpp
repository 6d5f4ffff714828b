#pragma once

// Parameterized collision circuits with shared angles and their D8 check.

#include "qlbm/qsim.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace qlbm::ansatz {

using qs::Axis;
using ParamVector = std::vector<double>;

enum class GateKind { Rot, Ising, CNOT };
enum class ModelKind { R1, R2 };

/// One gate occurrence. Rotations act on q1; Ising gates on (q1, q2); CNOT
/// uses q1 as control and q2 as target.
struct Gate {
    GateKind kind = GateKind::Rot;
    Axis axis = Axis::X;
    int q1 = 0;
    int q2 = -1;
    int param = -1;  ///< shared parameter index, -1 for CNOT
};

enum class EdgeSet { AllQubits, Axial, Diag };

inline constexpr std::array<std::pair<int, int>, 4> kAxialEdges{{{0, 1}, {1, 2}, {2, 3}, {3, 0}}};
inline constexpr std::array<std::pair<int, int>, 2> kDiagEdges{{{0, 2}, {1, 3}}};

/// One shared-angle layer entry of the per-layer template.
struct LayerOp {
    GateKind kind = GateKind::Rot;
    Axis axis = Axis::X;
    EdgeSet targets = EdgeSet::AllQubits;
};

/// Rx, Rz, Rx on all qubits, then XX and ZZ on the axial and diagonal edges.
std::vector<LayerOp> default_layer();

struct CircuitSpec {
    ModelKind kind = ModelKind::R1;
    int n_qubits = 4;
    int n_params = 0;
    int layers = 0;
    std::vector<Gate> gates;

    std::size_t count(GateKind k) const;
};

CircuitSpec build_r1(int layers, const std::vector<LayerOp>& layer = default_layer());
CircuitSpec build_r2(int layers, const std::vector<LayerOp>& layer = default_layer());

/// Gives every rotation occurrence its own parameter (breaks D8 symmetry).
CircuitSpec unshare_rotations(const CircuitSpec& circuit);

/// U[-scale, scale] draws from a seeded generator.
ParamVector init_params(const CircuitSpec& circuit, std::uint64_t seed, double scale = 0.01);

/// Applies one gate occurrence with angle theta.
void apply_gate(std::span<qs::cplx> amp, const Gate& g, double theta);

/// Applies the circuit in place. Throws InvalidInput on a length mismatch.
void apply(const CircuitSpec& circuit, std::span<const double> params, qs::PureState& state);
qs::PureState applied(const CircuitSpec& circuit, std::span<const double> params, qs::PureState state);

/// max over D8 elements and basis states of |U_σ U(θ)|b> − U(θ) U_σ|b>|,
/// with σ acting on every 4-qubit register simultaneously.
double check_d8_equivariance(const CircuitSpec& circuit, std::span<const double> params);

nlohmann::json to_json(const CircuitSpec& circuit);
CircuitSpec circuit_from_json(const nlohmann::json& j);

/// Trained model artifact: circuit, parameters and training provenance.
struct Model {
    CircuitSpec circuit;
    ParamVector params;
    double tau = 1.0;
    std::string loss = "rho";
    bool nonunitary = false;
    bool phase_aware = false;  ///< trained against reference phases
    std::uint64_t seed = 0;
    std::string config_hash;

    ModelKind kind() const { return circuit.kind; }
};

/// Identity model of the requested kind (all angles zero).
Model identity_model(ModelKind kind, int layers = 1, double tau = 1.0);

/// Writes <stem>.json (metadata + gate list) and <stem>_params.csv.
void save_model(const Model& model, const std::filesystem::path& stem);
/// Accepts either the stem or the .json path.
Model load_model(const std::filesystem::path& path);

} // namespace qlbm::ansatz
