#include "qlbm/cases.hpp"

#include "qlbm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace qlbm::cases {

using lbm::EqOrder;
using lbm::kD2Q9;
using lbm::kQ;
using lbm::MacroField;

double ScalarField::max() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

void ScalarField::write_csv(const std::filesystem::path& path, const std::string& column) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.precision(12);
    os << "x,y," << column << '\n';
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y) os << x << ',' << y << ',' << at(x, y) << '\n';
}

ScalarField vorticity(const MacroField& m, const lbm::SolidMask* mask, bool periodic_x) {
    ScalarField w{m.nx, m.ny, std::vector<double>(static_cast<std::size_t>(m.nx) * m.ny, 0.0)};
    for (int x = 0; x < m.nx; ++x) {
        int xl = x - 1, xr = x + 1;
        double hx = 2.0;
        if (periodic_x) {
            xl = (xl + m.nx) % m.nx;
            xr %= m.nx;
        } else if (x == 0) {
            xl = 0;
            hx = 1.0;
        } else if (x == m.nx - 1) {
            xr = x;
            hx = 1.0;
        }
        for (int y = 0; y < m.ny; ++y) {
            if (mask && mask->is_solid(x, y)) continue;
            const int yd = (y - 1 + m.ny) % m.ny;
            const int yu = (y + 1) % m.ny;
            const double duy_dx = (m.uy[m.index(xr, y)] - m.uy[m.index(xl, y)]) / hx;
            const double dux_dy = (m.ux[m.index(x, yu)] - m.ux[m.index(x, yd)]) / 2.0;
            w.at(x, y) = duy_dx - dux_dy;
        }
    }
    return w;
}

ScalarField velocity_difference(const MacroField& a, const MacroField& b) {
    ScalarField d{a.nx, a.ny, std::vector<double>(a.ux.size())};
    for (std::size_t k = 0; k < a.ux.size(); ++k) d.v[k] = std::hypot(a.ux[k] - b.ux[k], a.uy[k] - b.uy[k]);
    return d;
}

double shape_similarity(const MacroField& a, const MacroField& b) {
    std::vector<double> va(a.ux), vb(b.ux);
    va.insert(va.end(), a.uy.begin(), a.uy.end());
    vb.insert(vb.end(), b.uy.begin(), b.uy.end());
    const double n = static_cast<double>(va.size());
    double ma = 0, mb = 0;
    for (std::size_t k = 0; k < va.size(); ++k) {
        ma += va[k];
        mb += vb[k];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < va.size(); ++k) {
        sab += (va[k] - ma) * (vb[k] - mb);
        saa += (va[k] - ma) * (va[k] - ma);
        sbb += (vb[k] - mb) * (vb[k] - mb);
    }
    if (saa == 0.0 && sbb == 0.0) return 1.0;
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------

void DecayReport::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.precision(12);
    os << "t,ref,lin,qml,abs_err_lin,abs_err_qml\n";
    for (std::size_t k = 0; k < t.size(); ++k)
        os << t[k] << ',' << ref[k] << ',' << lin[k] << ',' << qml[k] << ',' << std::abs(lin[k] - ref[k])
           << ',' << std::abs(qml[k] - ref[k]) << '\n';
}

DecayReport kolmogorov_decay(const LatticeConfig& config, const ansatz::Model* model, int steps,
                             const HybridOptions& options) {
    LatticeConfig cfg = config;
    cfg.flow = lbm::FlowCase::Kolmogorov;
    if (!std::holds_alternative<lbm::KolmogorovInit>(cfg.force)) cfg.force = lbm::KolmogorovInit{};
    const DistributionField f0 = lbm::init_case(cfg);
    const MacroField m0 = MacroField::from(f0);

    DecayReport r;
    for (int x = 0; x < m0.nx; ++x)
        for (int y = 0; y < m0.ny; ++y) r.u0 = std::max(r.u0, m0.speed(x, y));
    if (!(r.u0 > 0.0)) throw ConfigError("Kolmogorov case needs a non-zero initial shear");

    auto run = hybrid::run_hybrid(cfg, model, steps, options, f0);
    r.metrics = std::move(run.metrics);
    r.t.push_back(0);
    r.ref.push_back(1.0);
    r.lin.push_back(1.0);
    r.qml.push_back(1.0);
    for (const auto& m : r.metrics.steps) {
        r.t.push_back(m.step);
        r.ref.push_back(m.umax_ref / r.u0);
        r.lin.push_back(m.umax_lin / r.u0);
        r.qml.push_back(m.umax_qml / r.u0);
        r.mean_abs_err_lin += std::abs(r.lin.back() - r.ref.back());
        r.mean_abs_err_qml += std::abs(r.qml.back() - r.ref.back());
    }
    if (steps > 0) {
        r.mean_abs_err_lin /= steps;
        r.mean_abs_err_qml /= steps;
    }
    return r;
}

HandoffReport plate_handoff(const LatticeConfig& config, const ansatz::Model* model, int total_steps,
                            int handoff_steps, const HybridOptions& options) {
    if (handoff_steps < 0 || handoff_steps > total_steps)
        throw ConfigError("plate handoff: need 0 <= handoff steps <= total steps");
    LatticeConfig cfg = config;
    cfg.flow = lbm::FlowCase::Plate;
    cfg.boundary = lbm::Boundary::InletOutletWithMask;
    cfg.order = EqOrder::Quadratic;
    cfg.validate();

    DistributionField f = lbm::init_case(cfg);
    const lbm::Solver solver(cfg);
    for (int t = 1; t <= total_steps - handoff_steps; ++t) {
        solver.step(f);
        if (t % 100 == 0) lbm::check_field(f, t);
    }

    auto run = hybrid::run_hybrid(cfg, model, handoff_steps, options, f);
    const lbm::SolidMask* mask = solver.mask().empty() ? nullptr : &solver.mask();
    HandoffReport r;
    r.total_steps = total_steps;
    r.handoff_steps = handoff_steps;
    r.vort_ref = vorticity(MacroField::from(run.final_reference), mask, false);
    const auto wl = vorticity(MacroField::from(run.final_linear), mask, false);
    const auto wq = vorticity(MacroField::from(run.final_qml), mask, false);
    r.err_lin = r.err_qml = r.vort_ref;
    std::size_t n = 0;
    for (int x = 0; x < cfg.nx; ++x) {
        for (int y = 0; y < cfg.ny; ++y) {
            const double el = std::abs(wl.at(x, y) - r.vort_ref.at(x, y));
            const double eq = std::abs(wq.at(x, y) - r.vort_ref.at(x, y));
            r.err_lin.at(x, y) = el;
            r.err_qml.at(x, y) = eq;
            if (mask && mask->is_solid(x, y)) continue;
            ++n;
            r.mean_err_lin += el;
            r.mean_err_qml += eq;
        }
    }
    r.max_err_lin = r.err_lin.max();
    r.max_err_qml = r.err_qml.max();
    if (n) {
        r.mean_err_lin /= static_cast<double>(n);
        r.mean_err_qml /= static_cast<double>(n);
    }
    r.metrics = std::move(run.metrics);
    return r;
}

JetsReport jets(const LatticeConfig& config, const ansatz::Model* model, int steps,
                const HybridOptions& options) {
    LatticeConfig cfg = config;
    cfg.flow = lbm::FlowCase::Jets;
    if (!std::holds_alternative<lbm::GaussianJets>(cfg.force)) cfg.force = lbm::GaussianJets{};

    auto run = hybrid::run_hybrid(cfg, model, steps, options);
    JetsReport r;
    r.final_ref = MacroField::from(run.final_reference);
    r.final_lin = MacroField::from(run.final_linear);
    r.final_qml = MacroField::from(run.final_qml);
    r.err_lin = velocity_difference(r.final_lin, r.final_ref);
    r.err_qml = velocity_difference(r.final_qml, r.final_ref);
    r.similarity_lin = shape_similarity(r.final_lin, r.final_ref);
    r.similarity_qml = shape_similarity(r.final_qml, r.final_ref);
    r.metrics = std::move(run.metrics);
    return r;
}

// ---------------------------------------------------------------------------

namespace {

double round_digits(double x, int d) {
    const double s = std::pow(10.0, d);
    return std::round(x * s) / s;
}

} // namespace

double quantize(double x, double digits) {
    if (!(digits >= 1.0)) throw ConfigError("quantize: digits must be >= 1");
    const double lo = std::floor(digits);
    const double frac = digits - lo;
    const double q = round_digits(x, static_cast<int>(lo));
    if (frac == 0.0) return q;
    return (1.0 - frac) * q + frac * round_digits(x, static_cast<int>(lo) + 1);
}

PrecisionReport fixed_precision_study(const LatticeConfig& config, double digits_u, double digits_f,
                                      int steps) {
    if (!(digits_u >= 1.0) || !(digits_f >= 1.0)) throw ConfigError("precision study: digits must be >= 1");
    const lbm::Solver solver(config);
    const auto& mask = solver.mask();
    const lbm::SolidMask* mp = mask.empty() ? nullptr : &mask;
    DistributionField full = lbm::init_case(config);
    DistributionField quant = full;

    const auto error_field = [&](PrecisionReport& r) {
        const auto a = MacroField::from(quant);
        const auto b = MacroField::from(full);
        r.rel_err = ScalarField{a.nx, a.ny, std::vector<double>(a.ux.size(), 0.0)};
        r.max_rel_err = r.mean_rel_err = 0.0;
        std::size_t n = 0;
        for (int x = 0; x < a.nx; ++x) {
            for (int y = 0; y < a.ny; ++y) {
                if (mask.is_solid(x, y)) continue;
                const auto k = a.index(x, y);
                const double e = std::hypot(a.ux[k] - b.ux[k], a.uy[k] - b.uy[k]) /
                                 std::max(std::hypot(b.ux[k], b.uy[k]), 1e-12);
                r.rel_err.at(x, y) = e;
                r.max_rel_err = std::max(r.max_rel_err, e);
                r.mean_rel_err += e;
                ++n;
            }
        }
        if (n) r.mean_rel_err /= static_cast<double>(n);
    };

    PrecisionReport r;
    r.digits_u = digits_u;
    r.digits_f = digits_f;
    for (int t = 1; t <= steps; ++t) {
        solver.step(full, EqOrder::Quadratic, 1.0);

#pragma omp parallel for schedule(static)
        for (int x = 0; x < config.nx; ++x) {
            for (int y = 0; y < config.ny; ++y) {
                if (mask.is_solid(x, y)) continue;
                auto f = quant.site(x, y);
                const auto m = lbm::macroscopic(f);
                const lbm::Velocity uq{quantize(m.u.x, digits_u), quantize(m.u.y, digits_u)};
                const auto lin = lbm::equilibrium(m.rho, uq, EqOrder::Linear);
                const auto quad = lbm::equilibrium(m.rho, uq, EqOrder::Quadratic);
                for (int i = 0; i < kQ; ++i) {
                    const double feq = lin[i] + quantize(quad[i] - lin[i], digits_f);
                    f[i] += (feq - f[i]) / config.tau;
                }
                quant.set_site(x, y, f);
            }
        }
        lbm::apply_force(quant, config.force, 1.0, mp);
        quant = solver.propagate(quant);
        if (config.boundary == lbm::Boundary::InletOutletWithMask)
            lbm::apply_inlet_outlet(quant, config.plate.inlet_u);
        lbm::check_field(quant, t);

        error_field(r);
        r.max_rel_err_t.push_back(r.max_rel_err);
    }
    if (steps == 0) error_field(r);
    return r;
}

} // namespace qlbm::cases
