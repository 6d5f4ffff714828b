#include "qlbm/losses.hpp"

#include "qlbm/errors.hpp"

#include <cmath>
#include <numbers>

namespace qlbm::train {

namespace {

using lbm::kD2Q9;
using lbm::kQ;
using qs::kChannelIndex;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi2 = 4.0 * std::numbers::pi * std::numbers::pi;

// Rows of the macroscopic vector M as channel coefficients.
constexpr std::array<std::array<double, kQ>, 5> kMomentRows{{
    {0, 1, 0, -1, 0, 1, -1, -1, 1},
    {0, 0, 1, 0, -1, 1, 1, -1, -1},
    {0, 1, -1, 1, -1, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 1, -1, 1, -1},
    {-4, -1, -1, -1, -1, 2, 2, 2, 2},
}};

double physical_mass(const std::array<double, 16>& p) {
    double s = 0.0;
    for (int idx : kChannelIndex) s += p[static_cast<std::size_t>(idx)];
    return s;
}

// Value and ∂L/∂f of the macroscopic penalty (without λ_u).
double macro_term(const lbm::Populations& f, const lbm::Populations& f_ref, MacroMode mode,
                  lbm::Populations* dLdf) {
    if (dLdf) dLdf->fill(0.0);
    if (mode == MacroMode::FullM) {
        double value = 0.0;
        for (const auto& row : kMomentRows) {
            double d = 0.0;
            for (int k = 0; k < kQ; ++k) d += row[k] * (f[k] - f_ref[k]);
            value += d * d;
            if (dLdf)
                for (int k = 0; k < kQ; ++k) (*dLdf)[k] += 2.0 * d * row[k];
        }
        return value;
    }
    double s = 0.0, jx = 0.0, jy = 0.0, sr = 0.0, jxr = 0.0, jyr = 0.0;
    for (int k = 0; k < kQ; ++k) {
        s += f[k];
        jx += f[k] * kD2Q9.cx[k];
        jy += f[k] * kD2Q9.cy[k];
        sr += f_ref[k];
        jxr += f_ref[k] * kD2Q9.cx[k];
        jyr += f_ref[k] * kD2Q9.cy[k];
    }
    const double ux = jx / s, uy = jy / s;
    const double uxr = jxr / sr, uyr = jyr / sr;
    const double dx = ux - uxr, dy = uy - uyr;
    const double scale = mode == MacroMode::RelVel ? 1.0 / (uxr * uxr + uyr * uyr + 1e-6) : 1.0;
    if (dLdf) {
        for (int k = 0; k < kQ; ++k)
            (*dLdf)[k] = scale * 2.0 * (dx * (kD2Q9.cx[k] - ux) + dy * (kD2Q9.cy[k] - uy)) / s;
    }
    return scale * (dx * dx + dy * dy);
}

} // namespace

void LossSpec::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("loss: lambda must lie in [0, 1]");
    if (!(lambda_u >= 0.0)) throw ConfigError("loss: lambda_u must be non-negative");
    if (nonunitary && (kind == LossKind::Rho || kind == LossKind::Rho1))
        throw ConfigError("loss: the non-unitary target needs an amplitude loss (amp_only or amp_phase)");
}

bool LossSpec::phase_aware() const {
    if (nonunitary) return false;
    return kind == LossKind::Rho || (kind == LossKind::AmpPhase && lambda > 0.0);
}

std::string LossSpec::name() const {
    std::string n;
    switch (kind) {
    case LossKind::AmpPhase: n = "amp_phase"; break;
    case LossKind::Rho: n = "rho"; break;
    case LossKind::AmpOnly: n = "amp_only"; break;
    case LossKind::Rho1: n = "rho1"; break;
    }
    if (nonunitary) n += "+nonunitary";
    return n;
}

LossKind parse_loss_kind(const std::string& s) {
    if (s == "amp_phase") return LossKind::AmpPhase;
    if (s == "rho") return LossKind::Rho;
    if (s == "amp_only") return LossKind::AmpOnly;
    if (s == "rho1") return LossKind::Rho1;
    throw ConfigError("unknown loss '" + s + "' (expected amp_phase, rho, amp_only or rho1)");
}

MacroMode parse_macro_mode(const std::string& s) {
    if (s == "mse_vel") return MacroMode::MSEVel;
    if (s == "rel_vel") return MacroMode::RelVel;
    if (s == "full_m") return MacroMode::FullM;
    throw ConfigError("unknown macro penalty '" + s + "' (expected mse_vel, rel_vel or full_m)");
}

Target make_target(const lbm::Populations& f_target, double rho_site) {
    return {qs::encode_r1(f_target), f_target, rho_site};
}

int alignment_index(const PureState& psi_ref) { return qs::phase_reference_index(psi_ref.amp()); }

std::array<double, 16> register_probabilities(const PureState& out) {
    std::array<double, 16> p{};
    for (int b = 0; b < out.dim(); ++b) p[static_cast<std::size_t>(b & 15)] += std::norm(out[b]);
    return p;
}

lbm::Populations predicted_populations(const PureState& out, double rho, bool nonunitary) {
    const auto p = register_probabilities(out);
    const double norm = nonunitary ? physical_mass(p) : 1.0;
    lbm::Populations f{};
    for (int k = 0; k < kQ; ++k) f[k] = rho * p[static_cast<std::size_t>(kChannelIndex[k])] / norm;
    return f;
}

LossValue evaluate_loss(const LossSpec& spec, const PureState& out, const Target& target,
                        std::vector<cplx>* grad) {
    const int dim = out.dim();
    const bool r2 = dim == 256;
    if (r2 != (spec.kind == LossKind::Rho1))
        throw ConfigError("loss " + spec.name() + " does not match a " + std::to_string(dim) +
                          "-dim output state");
    if (grad) grad->assign(static_cast<std::size_t>(dim), cplx{0.0, 0.0});

    LossValue v;
    const auto p = register_probabilities(out);
    const double P = physical_mass(p);
    v.success = P;
    std::array<double, 16> q{};
    for (int b = 0; b < 16; ++b) q[static_cast<std::size_t>(b)] = std::norm(target.psi_ref[b]);

    std::array<double, 16> dLdp{};  // accumulated ∂L/∂p_b over register-1 marginals

    // Physical-channel ratio term shared by the non-unitary amplitude losses.
    const auto ratio_term = [&](double weight) {
        double value = 0.0;
        double sp = 0.0;
        std::array<double, kQ> s{};
        for (int k = 0; k < kQ; ++k) {
            const auto b = static_cast<std::size_t>(kChannelIndex[k]);
            s[k] = p[b] / P - q[b];
            value += s[k] * s[k];
            sp += s[k] * p[b] / P;
        }
        for (int k = 0; k < kQ; ++k)
            dLdp[static_cast<std::size_t>(kChannelIndex[k])] += weight * 2.0 / P * (s[k] - sp);
        return value;
    };
    const auto full_amp_term = [&](double weight) {
        double value = 0.0;
        for (std::size_t b = 0; b < 16; ++b) {
            const double d = p[b] - q[b];
            value += d * d;
            dLdp[b] += weight * 2.0 * d;
        }
        return value;
    };

    switch (spec.kind) {
    case LossKind::AmpPhase: {
        const double wa = 1.0 - spec.lambda;
        v.amp = spec.nonunitary ? ratio_term(wa) : full_amp_term(wa);

        const int a = alignment_index(target.psi_ref);
        const double phase_a = std::arg(out[a]);
        const double ref_a = std::arg(target.psi_ref[a]);
        const double pa = std::norm(out[a]);
        const bool predicted = spec.phase_weight == PhaseWeight::Predicted;
        for (int i = 0; i < 16; ++i) {
            if (i == a) continue;
            const double delta = (std::arg(out[i]) - phase_a) - (std::arg(target.psi_ref[i]) - ref_a);
            const double w = std::remainder(delta, kTwoPi);
            const double h = w * w / kFourPi2;
            const double weight = predicted ? p[static_cast<std::size_t>(i)] : q[static_cast<std::size_t>(i)];
            v.phase += weight * h;
            if (!grad) continue;
            const double lam = spec.lambda;
            if (predicted) (*grad)[static_cast<std::size_t>(i)] += lam * h * 2.0 * out[i];
            // d arg ψ = Re conj(iψ/|ψ|²) dψ
            const double pi_i = std::norm(out[i]);
            if (pi_i > 0.0) {
                const double c = lam * weight * 2.0 * w / kFourPi2;
                (*grad)[static_cast<std::size_t>(i)] += c * cplx{0.0, 1.0} * out[i] / pi_i;
                if (pa > 0.0) (*grad)[static_cast<std::size_t>(a)] -= c * cplx{0.0, 1.0} * out[a] / pa;
            }
        }
        v.total = wa * v.amp + spec.lambda * v.phase;
        break;
    }
    case LossKind::AmpOnly:
        v.amp = spec.nonunitary ? ratio_term(1.0) : full_amp_term(1.0);
        v.total = v.amp;
        break;
    case LossKind::Rho: {
        double n2 = out.norm2();
        double r2n = target.psi_ref.norm2();
        cplx c = 0.0;
        for (int k = 0; k < 16; ++k) c += std::conj(target.psi_ref[k]) * out[k];
        v.amp = n2 * n2 + r2n * r2n - 2.0 * std::norm(c);
        if (grad)
            for (int k = 0; k < 16; ++k)
                (*grad)[static_cast<std::size_t>(k)] += 4.0 * n2 * out[k] - 4.0 * c * target.psi_ref[k];
        v.total = v.amp;
        break;
    }
    case LossKind::Rho1: {
        const auto rho1 = qs::partial_trace(out, qs::Register::First);
        qs::DensityMatrix diff(16);
        double value = 0.0;
        for (int a = 0; a < 16; ++a) {
            for (int b = 0; b < 16; ++b) {
                diff(a, b) = rho1(a, b) - target.psi_ref[a] * std::conj(target.psi_ref[b]);
                value += std::norm(diff(a, b));
            }
        }
        v.amp = value;
        if (grad) {
            for (int t = 0; t < 16; ++t)
                for (int a = 0; a < 16; ++a) {
                    cplx s = 0.0;
                    for (int b = 0; b < 16; ++b) s += diff(a, b) * out[b + 16 * t];
                    (*grad)[static_cast<std::size_t>(a + 16 * t)] += 4.0 * s;
                }
        }
        v.total = v.amp;
        break;
    }
    }

    if (spec.lambda_u > 0.0) {
        const auto f = predicted_populations(out, target.rho, spec.nonunitary);
        lbm::Populations dLdf{};
        v.macro = macro_term(f, target.f_ref, spec.macro, grad ? &dLdf : nullptr);
        v.total += spec.lambda_u * v.macro;
        if (grad) {
            if (spec.nonunitary) {
                double sp = 0.0;
                for (int k = 0; k < kQ; ++k) sp += dLdf[k] * p[static_cast<std::size_t>(kChannelIndex[k])] / P;
                for (int k = 0; k < kQ; ++k)
                    dLdp[static_cast<std::size_t>(kChannelIndex[k])] +=
                        spec.lambda_u * target.rho / P * (dLdf[k] - sp);
            } else {
                for (int k = 0; k < kQ; ++k)
                    dLdp[static_cast<std::size_t>(kChannelIndex[k])] += spec.lambda_u * target.rho * dLdf[k];
            }
        }
    }

    if (grad)
        for (int b = 0; b < dim; ++b)
            (*grad)[static_cast<std::size_t>(b)] += dLdp[static_cast<std::size_t>(b & 15)] * 2.0 * out[b];
    return v;
}

double loss_amp_phase(const PureState& psi, const PureState& psi_ref, double lambda) {
    LossSpec spec;
    spec.kind = LossKind::AmpPhase;
    spec.lambda = lambda;
    Target t{psi_ref, {}, 1.0};
    return evaluate_loss(spec, psi, t).total;
}

double loss_rho(const qs::DensityMatrix& rho, const qs::DensityMatrix& rho_ref) {
    if (rho.dim() != rho_ref.dim()) throw InvalidInput("loss_rho: dimension mismatch");
    double s = 0.0;
    for (int a = 0; a < rho.dim(); ++a)
        for (int b = 0; b < rho.dim(); ++b) s += std::norm(rho(a, b) - rho_ref(a, b));
    return s;
}

double loss_rho(const PureState& psi, const qs::DensityMatrix& rho_ref) {
    return loss_rho(qs::density(psi), rho_ref);
}

double loss_macro(const lbm::Populations& f_vqc, const lbm::Populations& f_ref, double lambda_u,
                  MacroMode mode) {
    if (lambda_u == 0.0) return 0.0;
    return lambda_u * macro_term(f_vqc, f_ref, mode, nullptr);
}

PureState nonunitary_target(const lbm::Populations& f_ref) { return qs::encode_r1(f_ref); }

double loss_ratio(const PureState& psi, const PureState& target) {
    LossSpec spec;
    spec.kind = LossKind::AmpOnly;
    spec.nonunitary = true;
    Target t{target, {}, 1.0};
    return evaluate_loss(spec, psi, t).total;
}

} // namespace qlbm::train
