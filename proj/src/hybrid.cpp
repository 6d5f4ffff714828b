#include "qlbm/hybrid.hpp"

#include "qlbm/errors.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <limits>

namespace qlbm::hybrid {

using lbm::kD2Q9;
using lbm::kQ;
using qs::cplx;
using qs::kChannelIndex;

HybridMode parse_mode(const std::string& s) {
    if (s == "measured") return HybridMode::MeasuredPerStep;
    if (s == "coherent") return HybridMode::Coherent;
    if (s == "postselect") return HybridMode::NonUnitaryPostSelect;
    throw ConfigError("unknown hybrid mode '" + s + "' (expected measured, coherent or postselect)");
}

std::string mode_name(HybridMode m) {
    switch (m) {
    case HybridMode::MeasuredPerStep: return "measured";
    case HybridMode::Coherent: return "coherent";
    case HybridMode::NonUnitaryPostSelect: return "postselect";
    }
    return "?";
}

void check_compatibility(const ansatz::Model& model, HybridMode mode, const LatticeConfig& config) {
    if (std::abs(model.tau - config.tau) > 1e-12)
        throw ConfigError("model was trained at tau=" + std::to_string(model.tau) +
                          " but the lattice runs at tau=" + std::to_string(config.tau));
    if (model.kind() == ansatz::ModelKind::R2 && mode != HybridMode::MeasuredPerStep)
        throw ConfigError("two-register models run only with per-step measurement");
    if (mode == HybridMode::Coherent) {
        if (model.nonunitary)
            throw ConfigError("coherent mode needs a unitary model; this one was trained with a "
                              "non-unitary target (use postselect)");
        if (!model.phase_aware)
            throw ConfigError("coherent mode needs a model trained with a phase-aware loss "
                              "(amp_phase or rho); '" + model.loss + "' constrains amplitudes only");
    }
}

VelocityError velocity_error(const lbm::MacroField& u, const lbm::MacroField& ref,
                             const lbm::SolidMask* mask) {
    VelocityError e;
    std::size_t n = 0;
    for (int x = 0; x < ref.nx; ++x) {
        for (int y = 0; y < ref.ny; ++y) {
            if (mask && mask->is_solid(x, y)) continue;
            const auto k = ref.index(x, y);
            const double d = std::hypot(u.ux[k] - ref.ux[k], u.uy[k] - ref.uy[k]);
            const double r = d / std::max(std::hypot(ref.ux[k], ref.uy[k]), 1e-12);
            e.max_rel = std::max(e.max_rel, r);
            e.mean_rel += r;
            ++n;
        }
    }
    if (n > 0) e.mean_rel /= static_cast<double>(n);
    return e;
}

SiteCollision collide_site(const ansatz::Model& model, const lbm::Populations& f_str, double tau,
                           const std::array<double, kQ>* phases) {
    const lbm::Populations f_lin = lbm::bgk_collide(f_str, tau, lbm::EqOrder::Linear);
    double rho = 0.0;
    for (double v : f_lin) rho += v;

    SiteCollision out;
    double P = 0.0;
    std::array<cplx, 16> reg{};
    if (model.kind() == ansatz::ModelKind::R1) {
        std::array<cplx, kQ> a{};
        for (int i = 0; i < kQ; ++i) {
            if (!(f_lin[i] >= 0.0)) throw EncodingError("negative post-linear population at channel " + std::to_string(i));
            const double mag = std::sqrt(f_lin[i] / rho);
            a[i] = phases ? std::polar(mag, (*phases)[i]) : cplx{mag, 0.0};
        }
        qs::PureState psi = qs::embed_r1(a);
        ansatz::apply(model.circuit, model.params, psi);
        for (int b = 0; b < 16; ++b) reg[static_cast<std::size_t>(b)] = psi[b];
        for (int idx : kChannelIndex) P += std::norm(psi[idx]);
        const double scale = std::sqrt(rho / P);
        for (int i = 0; i < kQ; ++i) {
            out.amp[i] = reg[static_cast<std::size_t>(kChannelIndex[i])] * scale;
            out.f[i] = std::norm(out.amp[i]);
        }
    } else {
        qs::PureState psi = qs::encode_r2(f_lin);
        ansatz::apply(model.circuit, model.params, psi);
        std::array<double, 16> p{};
        for (int b = 0; b < psi.dim(); ++b) p[static_cast<std::size_t>(b & 15)] += std::norm(psi[b]);
        for (int idx : kChannelIndex) P += p[static_cast<std::size_t>(idx)];
        for (int i = 0; i < kQ; ++i) {
            out.f[i] = rho * p[static_cast<std::size_t>(kChannelIndex[i])] / P;
            out.amp[i] = std::sqrt(out.f[i]);
        }
    }
    out.leakage = 1.0 - P;
    return out;
}

namespace {

void inlet_outlet_complex(ComplexField& field, double inlet_u) {
    const int nx = field.nx();
    const auto inflow = lbm::equilibrium(1.0, {inlet_u, 0.0}, lbm::EqOrder::Quadratic);
    for (int y = 0; y < field.ny(); ++y) {
        for (int i = 0; i < kQ; ++i) {
            field.at(i, 0, y) = std::sqrt(inflow[i]);
            field.at(i, nx - 1, y) = field.at(i, nx - 2, y);
        }
    }
}

} // namespace

HybridStepper::HybridStepper(const LatticeConfig& config, const ansatz::Model& model, HybridOptions options)
    : solver_(config), model_(model), options_(options) {
    check_compatibility(model, options.mode, config);
    complex_state_ = options.mode == HybridMode::Coherent ||
                     (options.mode == HybridMode::NonUnitaryPostSelect && options.carry_phases_postselect);
}

void HybridStepper::reset(const DistributionField& initial) {
    if (!complex_state_) {
        f_ = initial;
        return;
    }
    amp_ = ComplexField(initial.nx(), initial.ny());
    for (std::size_t k = 0; k < initial.raw().size(); ++k) {
        const double v = initial.raw()[k];
        if (v < 0.0) throw EncodingError("coherent initial field has a negative population");
        amp_.raw()[k] = std::sqrt(v);
    }
}

DistributionField HybridStepper::populations() const {
    if (!complex_state_) return f_;
    DistributionField f(amp_.nx(), amp_.ny());
    for (std::size_t k = 0; k < amp_.raw().size(); ++k) f.raw()[k] = std::norm(amp_.raw()[k]);
    return f;
}

void HybridStepper::step(int t) {
    const auto& cfg = solver_.config();
    const auto& mask = solver_.mask();
    const int nx = cfg.nx;
    const int ny = cfg.ny;
    double leak_sum = 0.0;
    double leak_max = 0.0;
    std::exception_ptr failure;

#pragma omp parallel for schedule(static) reduction(+ : leak_sum) reduction(max : leak_max)
    for (int x = 0; x < nx; ++x) {
        for (int y = 0; y < ny; ++y) {
            if (mask.is_solid(x, y)) continue;
            try {
                if (complex_state_) {
                    const auto b = amp_.site(x, y);
                    lbm::Populations f{};
                    std::array<double, kQ> ph{};
                    for (int i = 0; i < kQ; ++i) {
                        f[i] = std::norm(b[i]);
                        ph[i] = std::arg(b[i]);
                    }
                    const auto sc = collide_site(model_, f, cfg.tau, &ph);
                    amp_.set_site(x, y, sc.amp);
                    leak_sum += sc.leakage;
                    leak_max = std::max(leak_max, sc.leakage);
                } else {
                    const auto sc = collide_site(model_, f_.site(x, y), cfg.tau);
                    f_.set_site(x, y, sc.f);
                    leak_sum += sc.leakage;
                    leak_max = std::max(leak_max, sc.leakage);
                }
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            throw InstabilityError(std::string("circuit collision failed: ") + e.what(), t);
        }
    }
    const std::size_t fluid = mask.fluid_count();
    mean_leakage_ = fluid ? leak_sum / static_cast<double>(fluid) : 0.0;
    max_leakage_ = leak_max;
    if (leak_max > options_.leakage_limit)
        throw InstabilityError("site leakage " + std::to_string(leak_max) + " exceeds " +
                               std::to_string(options_.leakage_limit), t);

    const lbm::SolidMask* mp = mask.empty() ? nullptr : &mask;
    if (complex_state_) {
        if (!std::holds_alternative<std::monostate>(cfg.force) &&
            !std::holds_alternative<lbm::KolmogorovInit>(cfg.force)) {
            for (int x = 0; x < nx; ++x) {
                for (int y = 0; y < ny; ++y) {
                    if (mask.is_solid(x, y)) continue;
                    const auto g = lbm::force_at(cfg.force, x, y, nx, ny);
                    for (int i = 1; i < kQ; ++i) {
                        cplx& b = amp_.at(i, x, y);
                        const double f = std::norm(b) + options_.force_scale * kD2Q9.w[i] *
                                                            (kD2Q9.cx[i] * g.x + kD2Q9.cy[i] * g.y) / kD2Q9.cs2;
                        b = std::polar(std::sqrt(std::max(f, 0.0)), std::arg(b));
                    }
                }
            }
        }
        amp_ = solver_.propagate(amp_);
        if (cfg.boundary == lbm::Boundary::InletOutletWithMask) inlet_outlet_complex(amp_, cfg.plate.inlet_u);
    } else {
        lbm::apply_force(f_, cfg.force, options_.force_scale, mp);
        f_ = solver_.propagate(f_);
        if (cfg.boundary == lbm::Boundary::InletOutletWithMask) lbm::apply_inlet_outlet(f_, cfg.plate.inlet_u);
    }
}

StepMetrics compare_fields(const DistributionField& ref, const DistributionField& lin,
                           const DistributionField& qml, const lbm::SolidMask* mask) {
    StepMetrics m;
    const auto mref = lbm::MacroField::from(ref);
    const auto mlin = lbm::MacroField::from(lin);
    const auto mqml = lbm::MacroField::from(qml);
    const auto eq = velocity_error(mqml, mref, mask);
    const auto el = velocity_error(mlin, mref, mask);
    m.max_rel_u = eq.max_rel;
    m.mean_rel_u = eq.mean_rel;
    m.lin_max_rel_u = el.max_rel;
    m.lin_mean_rel_u = el.mean_rel;
    m.eta_eps = el.max_rel / eq.max_rel;

    double sq = 0.0, sl = 0.0;
    std::size_t sites = 0;
    for (int x = 0; x < ref.nx(); ++x) {
        for (int y = 0; y < ref.ny(); ++y) {
            if (mask && mask->is_solid(x, y)) continue;
            ++sites;
            const auto fr = ref.site(x, y);
            const auto fl = lin.site(x, y);
            const auto fq = qml.site(x, y);
            for (int i = 0; i < kQ; ++i) {
                sq += (fq[i] - fr[i]) * (fq[i] - fr[i]);
                sl += (fl[i] - fr[i]) * (fl[i] - fr[i]);
            }
            const auto Mr = lbm::moments(fr);
            const auto Mq = lbm::moments(fq);
            m.mse_pxx_pyy += (Mq.pxx_minus_pyy - Mr.pxx_minus_pyy) * (Mq.pxx_minus_pyy - Mr.pxx_minus_pyy);
            m.mse_pxy += (Mq.pxy - Mr.pxy) * (Mq.pxy - Mr.pxy);
            m.mse_energy += (Mq.energy - Mr.energy) * (Mq.energy - Mr.energy);
            const auto k = mref.index(x, y);
            m.umax_ref = std::max(m.umax_ref, std::hypot(mref.ux[k], mref.uy[k]));
            m.umax_lin = std::max(m.umax_lin, std::hypot(mlin.ux[k], mlin.uy[k]));
            m.umax_qml = std::max(m.umax_qml, std::hypot(mqml.ux[k], mqml.uy[k]));
        }
    }
    const double n = static_cast<double>(std::max<std::size_t>(sites, 1));
    m.channel_mse = sq / (n * kQ);
    m.lin_channel_mse = sl / (n * kQ);
    m.eta = sq / sl;
    m.mse_pxx_pyy /= n;
    m.mse_pxy /= n;
    m.mse_energy /= n;
    return m;
}

HybridRun run_hybrid(const LatticeConfig& config, const ansatz::Model* model, int steps,
                     const HybridOptions& options, const std::optional<DistributionField>& initial) {
    config.validate();
    if (steps < 0) throw ConfigError("run_hybrid: negative step count");
    const lbm::Solver solver(config);
    const DistributionField f0 = initial ? *initial : lbm::init_case(config);
    if (f0.nx() != config.nx || f0.ny() != config.ny)
        throw ConfigError("run_hybrid: initial field does not match the lattice");

    std::optional<HybridStepper> qml;
    if (model) {
        qml.emplace(config, *model, options);
        qml->reset(f0);
    }
    const lbm::SolidMask* mask = solver.mask().empty() ? nullptr : &solver.mask();

    HybridRun run;
    DistributionField ref = f0;
    DistributionField lin = f0;
    const auto keep = [&](const DistributionField& q) {
        if (!options.keep_macros) return;
        run.macro_reference.push_back(lbm::MacroField::from(ref));
        run.macro_linear.push_back(lbm::MacroField::from(lin));
        run.macro_qml.push_back(lbm::MacroField::from(q));
    };
    keep(f0);
    DistributionField q = f0;
    for (int t = 1; t <= steps; ++t) {
        solver.step(ref, lbm::EqOrder::Quadratic, 1.0);
        solver.step(lin, lbm::EqOrder::Linear, 1.0);
        lbm::check_field(ref, t);
        lbm::check_field(lin, t);
        if (qml) {
            qml->step(t);
            q = qml->populations();
            for (double v : q.raw())
                if (!std::isfinite(v)) throw InstabilityError("non-finite population in circuit run", t);
        } else {
            q = lin;
        }
        StepMetrics m = compare_fields(ref, lin, q, mask);
        m.step = t;
        if (qml) {
            m.leakage = qml->mean_leakage();
            m.max_leakage = qml->max_leakage();
        }
        run.metrics.steps.push_back(m);
        keep(q);
    }
    run.final_reference = std::move(ref);
    run.final_linear = std::move(lin);
    run.final_qml = std::move(q);
    return run;
}

void RunMetrics::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.precision(12);
    os << "step,max_rel_u,mean_rel_u,lin_max_rel_u,lin_mean_rel_u,channel_mse,lin_channel_mse,eta,"
          "eta_eps,leakage,max_leakage,mse_pxx_pyy,mse_pxy,mse_energy,umax_ref,umax_lin,umax_qml\n";
    for (const auto& m : steps) {
        os << m.step << ',' << m.max_rel_u << ',' << m.mean_rel_u << ',' << m.lin_max_rel_u << ','
           << m.lin_mean_rel_u << ',' << m.channel_mse << ',' << m.lin_channel_mse << ',' << m.eta << ','
           << m.eta_eps << ',' << m.leakage << ',' << m.max_leakage << ',' << m.mse_pxx_pyy << ','
           << m.mse_pxy << ',' << m.mse_energy << ',' << m.umax_ref << ',' << m.umax_lin << ','
           << m.umax_qml << '\n';
    }
}

} // namespace qlbm::hybrid
