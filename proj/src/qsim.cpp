#include "qlbm/qsim.hpp"

#include "qlbm/errors.hpp"

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace qlbm::qs {

int channel_of_index(int index) {
    for (int i = 0; i < kQ; ++i)
        if (kChannelIndex[i] == index) return i;
    return -1;
}

PureState::PureState(int n_qubits)
    : n_qubits_(n_qubits), amp_(std::size_t{1} << n_qubits, cplx{0.0, 0.0}) {
    amp_[0] = 1.0;
}

PureState::PureState(int n_qubits, std::vector<cplx> amp) : n_qubits_(n_qubits), amp_(std::move(amp)) {
    if (amp_.size() != (std::size_t{1} << n_qubits))
        throw InvalidInput("PureState: amplitude count does not match qubit count");
}

double PureState::norm2() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return s;
}

void PureState::normalize() {
    const double n = std::sqrt(norm2());
    if (!(n > 0.0)) throw NumericalError("cannot normalize a zero state");
    for (auto& a : amp_) a /= n;
}

cplx DensityMatrix::trace() const {
    cplx t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double DensityMatrix::hermiticity_error() const {
    double e = 0.0;
    for (int r = 0; r < dim_; ++r)
        for (int c = 0; c < dim_; ++c) e = std::max(e, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
    return e;
}

std::vector<double> DensityMatrix::eigenvalues() const {
    Eigen::MatrixXcd m(dim_, dim_);
    for (int r = 0; r < dim_; ++r)
        for (int c = 0; c < dim_; ++c) m(r, c) = (*this)(r, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

PureState encode_r1(const Populations& f) {
    double rho = 0.0;
    for (double v : f) {
        if (!std::isfinite(v)) throw EncodingError("encode: non-finite population");
        if (v < 0.0) throw EncodingError("encode: negative population");
        rho += v;
    }
    if (!(rho > 0.0)) throw EncodingError("encode: zero total mass");
    PureState s(kRegisterQubits);
    s[0] = 0.0;
    for (int i = 0; i < kQ; ++i) s[kChannelIndex[i]] = std::sqrt(f[i] / rho);
    return s;
}

PureState embed_r1(const std::array<cplx, kQ>& channel_amp) {
    PureState s(kRegisterQubits);
    s[0] = 0.0;
    for (int i = 0; i < kQ; ++i) s[kChannelIndex[i]] = channel_amp[i];
    return s;
}

int phase_reference_index(std::span<const cplx> amp) {
    if (std::abs(amp[0]) >= 1e-9) return 0;
    int best = 0;
    double best_abs = -1.0;
    for (int idx : kChannelIndex) {
        if (std::abs(amp[static_cast<std::size_t>(idx)]) > best_abs) {
            best_abs = std::abs(amp[static_cast<std::size_t>(idx)]);
            best = idx;
        }
    }
    return best;
}

Decoded decode_r1(const PureState& state, double rho_site) {
    if (state.dim() != kRegisterDim) throw InvalidInput("decode_r1: expected a 16-dim state");
    Decoded d;
    d.phase_reference = phase_reference_index(state.amp());
    if (d.phase_reference != 0)
        spdlog::debug("decode: |amp_0| below 1e-9, phases aligned to basis state {}", d.phase_reference);
    const double ref_phase = std::arg(state[d.phase_reference]);
    for (int i = 0; i < kQ; ++i) {
        const cplx a = state[kChannelIndex[i]];
        d.f[i] = std::norm(a) * rho_site;
        double ph = std::arg(a) - ref_phase;
        ph = std::remainder(ph, 2.0 * std::numbers::pi);
        d.phases[i] = std::abs(a) > 0.0 ? ph : 0.0;
    }
    for (int idx : kLeakageIndex) d.leakage += std::norm(state[idx]);
    return d;
}

PureState encode_r2(const Populations& f) {
    const PureState a = encode_r1(f);
    std::vector<cplx> amp(256);
    for (int r2 = 0; r2 < kRegisterDim; ++r2)
        for (int r1 = 0; r1 < kRegisterDim; ++r1) amp[static_cast<std::size_t>(r1 + 16 * r2)] = a[r1] * a[r2];
    return PureState(2 * kRegisterQubits, std::move(amp));
}

void apply_pauli_combo(std::span<cplx> amp, const PauliOp& op, cplx alpha, cplx beta) {
    const std::size_t dim = amp.size();
    const std::size_t m1 = std::size_t{1} << op.q1;
    const std::size_t m2 = op.q2 >= 0 ? std::size_t{1} << op.q2 : 0;
    const std::size_t mask = m1 | m2;
    constexpr cplx I{0.0, 1.0};

    if (op.axis == Axis::Z) {
        for (std::size_t b = 0; b < dim; ++b) {
            int parity = (b & m1) ? 1 : 0;
            if (m2 && (b & m2)) parity ^= 1;
            amp[b] *= parity ? alpha - beta : alpha + beta;
        }
        return;
    }

    // Flip-type operators: P|b> = phase(b) |b ^ mask>. Each pair is visited
    // once from the member with bit q1 clear.
    const auto phase = [&](std::size_t b) -> cplx {
        if (op.axis == Axis::X) return 1.0;
        if (!m2) return (b & m1) ? -I : I;
        const bool b1 = (b & m1) != 0;
        const bool b2 = (b & m2) != 0;
        return b1 == b2 ? -1.0 : 1.0;
    };
    for (std::size_t b = 0; b < dim; ++b) {
        if (b & m1) continue;
        const std::size_t p = b ^ mask;
        const cplx vb = amp[b];
        const cplx vp = amp[p];
        amp[b] = alpha * vb + beta * phase(p) * vp;
        amp[p] = alpha * vp + beta * phase(b) * vb;
    }
}

void apply_rotation(PureState& state, Axis axis, std::span<const int> qubits, double theta) {
    for (int q : qubits) apply_pauli_rotation(state.amp(), {axis, q, -1}, theta);
}

void apply_ising(PureState& state, Axis axis, std::span<const std::pair<int, int>> pairs,
                 double theta) {
    for (const auto& [a, b] : pairs) apply_pauli_rotation(state.amp(), {axis, a, b}, theta);
}

void apply_cnot(std::span<cplx> amp, int control, int target) {
    if (control == target) throw InvalidInput("cnot: control equals target");
    const std::size_t cm = std::size_t{1} << control;
    const std::size_t tm = std::size_t{1} << target;
    for (std::size_t b = 0; b < amp.size(); ++b)
        if ((b & cm) && !(b & tm)) std::swap(amp[b], amp[b | tm]);
}

DensityMatrix density(const PureState& state) {
    DensityMatrix rho(state.dim());
    for (int r = 0; r < state.dim(); ++r)
        for (int c = 0; c < state.dim(); ++c) rho(r, c) = state[r] * std::conj(state[c]);
    return rho;
}

DensityMatrix partial_trace(const PureState& state, Register keep) {
    if (state.dim() != kRegisterDim * kRegisterDim)
        throw InvalidInput("partial_trace: expected a 256-dim state");
    DensityMatrix rho(kRegisterDim);
    const auto idx = [keep](int kept, int traced) {
        return keep == Register::First ? kept + 16 * traced : traced + 16 * kept;
    };
    for (int a = 0; a < kRegisterDim; ++a) {
        for (int b = 0; b < kRegisterDim; ++b) {
            cplx s = 0.0;
            for (int t = 0; t < kRegisterDim; ++t) s += state[idx(a, t)] * std::conj(state[idx(b, t)]);
            rho(a, b) = s;
        }
    }
    return rho;
}

std::array<D8Element, 8> d8_elements() {
    std::array<D8Element, 8> out;
    for (int k = 0; k < 4; ++k) {
        out[static_cast<std::size_t>(k)] = {k, false};
        out[static_cast<std::size_t>(k + 4)] = {k, true};
    }
    return out;
}

std::array<int, kRegisterQubits> qubit_permutation(D8Element g) {
    std::array<int, kRegisterQubits> perm{0, 1, 2, 3};
    if (g.reflect) perm = {0, 3, 2, 1};
    for (auto& q : perm) q = (q + g.rotation) % kRegisterQubits;
    return perm;
}

std::array<int, kQ> channel_permutation(D8Element g) {
    const auto perm = qubit_permutation(g);
    std::array<int, kQ> out{};
    for (int i = 0; i < kQ; ++i) {
        const int b = kChannelIndex[i];
        int nb = 0;
        for (int q = 0; q < kRegisterQubits; ++q)
            if (b & (1 << q)) nb |= 1 << perm[q];
        out[i] = channel_of_index(nb);
    }
    return out;
}

void permute_qubits(std::span<cplx> amp, const std::array<int, kRegisterQubits>& perm, int offset) {
    std::vector<cplx> out(amp.size());
    const std::size_t reg_mask = std::size_t{0xF} << offset;
    for (std::size_t b = 0; b < amp.size(); ++b) {
        std::size_t nb = b & ~reg_mask;
        for (int q = 0; q < kRegisterQubits; ++q)
            if (b & (std::size_t{1} << (q + offset))) nb |= std::size_t{1} << (perm[q] + offset);
        out[nb] = amp[b];
    }
    std::copy(out.begin(), out.end(), amp.begin());
}

void write_state_csv(const std::string& path, const PureState& state) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(17);
    os << "index,re,im\n";
    for (int i = 0; i < state.dim(); ++i) os << i << ',' << state[i].real() << ',' << state[i].imag() << '\n';
}

} // namespace qlbm::qs
