#pragma once

// Dense statevector emulation for the 4-qubit (one register) and 8-qubit
// (two register) collision circuits.
//
// Qubit k is the occupation indicator of cardinal channel c_{k+1}; qubit 0 is
// the least significant bit. Diagonal channels set both constituent bits, so
// f5 -> |0011>, f6 -> |0110>, f7 -> |1100>, f8 -> |1001>. In the two-register
// space register 1 holds qubits 0-3 and the basis index is r1 + 16*r2.

#include "qlbm/lattice.hpp"

#include <array>
#include <complex>
#include <span>
#include <utility>
#include <vector>

namespace qlbm::qs {

using cplx = std::complex<double>;
using lbm::kQ;
using lbm::Populations;

inline constexpr int kRegisterQubits = 4;
inline constexpr int kRegisterDim = 16;

inline constexpr std::array<int, kQ> kChannelIndex{0, 1, 2, 4, 8, 3, 6, 12, 9};
inline constexpr std::array<int, 7> kLeakageIndex{5, 7, 10, 11, 13, 14, 15};

/// Channel encoded by a 4-bit basis index, or -1 for a non-physical index.
int channel_of_index(int index);

class PureState {
  public:
    PureState() = default;
    explicit PureState(int n_qubits);  ///< |0...0>
    PureState(int n_qubits, std::vector<cplx> amp);

    int qubits() const { return n_qubits_; }
    int dim() const { return static_cast<int>(amp_.size()); }
    cplx& operator[](int i) { return amp_[static_cast<std::size_t>(i)]; }
    const cplx& operator[](int i) const { return amp_[static_cast<std::size_t>(i)]; }
    std::span<cplx> amp() { return amp_; }
    std::span<const cplx> amp() const { return amp_; }

    double norm2() const;
    void normalize();

  private:
    int n_qubits_ = 0;
    std::vector<cplx> amp_;
};

/// Row-major Hermitian matrix.
class DensityMatrix {
  public:
    DensityMatrix() = default;
    explicit DensityMatrix(int dim) : dim_(dim), m_(static_cast<std::size_t>(dim) * dim) {}

    int dim() const { return dim_; }
    cplx& operator()(int r, int c) { return m_[static_cast<std::size_t>(r) * dim_ + c]; }
    const cplx& operator()(int r, int c) const { return m_[static_cast<std::size_t>(r) * dim_ + c]; }
    cplx trace() const;
    /// Max |ρ − ρ†| entry.
    double hermiticity_error() const;
    /// Eigenvalues in ascending order.
    std::vector<double> eigenvalues() const;

  private:
    int dim_ = 0;
    std::vector<cplx> m_;
};

enum class Axis { X, Y, Z };

// ---------------------------------------------------------------------------
// Encoding

/// amp[index(i)] = sqrt(f_i / ρ). Throws EncodingError on negative or
/// non-finite f or zero mass.
PureState encode_r1(const Populations& f);

/// Embeds nine complex channel amplitudes (need not be normalized).
PureState embed_r1(const std::array<cplx, kQ>& channel_amp);

struct Decoded {
    Populations f{};                   ///< |amp|² · ρ_site
    double leakage = 0.0;              ///< probability on the 7 non-physical states
    std::array<double, kQ> phases{};   ///< aligned to the reference basis state
    int phase_reference = 0;           ///< basis index used for alignment
};

/// Reads channel populations and phases. Phases are aligned to |0000>, or to
/// the largest physical amplitude when |amp_0| < 1e-9.
Decoded decode_r1(const PureState& state, double rho_site = 1.0);

/// Basis index used for phase alignment of a 16-dim state.
int phase_reference_index(std::span<const cplx> amp);

/// encode_r1(f) ⊗ encode_r1(f).
PureState encode_r2(const Populations& f);

// ---------------------------------------------------------------------------
// Gates

/// One- or two-qubit Pauli operator; q2 < 0 means single qubit.
struct PauliOp {
    Axis axis = Axis::X;
    int q1 = 0;
    int q2 = -1;
};

/// ψ ← α ψ + β P ψ. Every gate of the ansatz is of this form.
void apply_pauli_combo(std::span<cplx> amp, const PauliOp& op, cplx alpha, cplx beta);

/// exp(−iθ/2 P) = cos(θ/2) I − i sin(θ/2) P.
inline void apply_pauli_rotation(std::span<cplx> amp, const PauliOp& op, double theta) {
    apply_pauli_combo(amp, op, {std::cos(0.5 * theta), 0.0}, {0.0, -std::sin(0.5 * theta)});
}

void apply_rotation(PureState& state, Axis axis, std::span<const int> qubits, double theta);
void apply_ising(PureState& state, Axis axis, std::span<const std::pair<int, int>> pairs,
                 double theta);
void apply_cnot(std::span<cplx> amp, int control, int target);
inline void apply_cnot(PureState& state, int control, int target) {
    apply_cnot(state.amp(), control, target);
}

// ---------------------------------------------------------------------------
// Density matrices

DensityMatrix density(const PureState& state);

enum class Register { First = 0, Second = 1 };

/// Reduced density matrix of one 4-qubit register of a 256-dim state.
DensityMatrix partial_trace(const PureState& state, Register keep);

// ---------------------------------------------------------------------------
// D8 action

/// Group element r^k s^m, k in 0..3, m in 0..1.
struct D8Element {
    int rotation = 0;
    bool reflect = false;
};

std::array<D8Element, 8> d8_elements();

/// Destination qubit of each qubit under the element (s first, then r^k).
std::array<int, kRegisterQubits> qubit_permutation(D8Element g);

/// Destination channel of each channel under the element.
std::array<int, kQ> channel_permutation(D8Element g);

/// U_σ|b> = |σ(b)> on the register starting at qubit `offset`.
void permute_qubits(std::span<cplx> amp, const std::array<int, kRegisterQubits>& perm, int offset = 0);

/// CSV dump (index,re,im).
void write_state_csv(const std::string& path, const PureState& state);

} // namespace qlbm::qs
