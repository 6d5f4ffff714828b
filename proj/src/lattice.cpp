#include "qlbm/lattice.hpp"

#include "qlbm/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace qlbm::lbm {

namespace {

constexpr double kCs = 0.5773502691896258; // sqrt(1/3)

bool finite(double v) { return std::isfinite(v); }

// Collision kernel without validation; a degenerate site yields NaN that the
// trajectory check reports with its step index.
inline void collide_site(double* f, double omega, EqOrder order) {
    double rho = 0.0;
    double jx = 0.0;
    double jy = 0.0;
    for (int i = 0; i < kQ; ++i) {
        rho += f[i];
        jx += f[i] * kD2Q9.cx[i];
        jy += f[i] * kD2Q9.cy[i];
    }
    const double ux = jx / rho;
    const double uy = jy / rho;
    const double usq = ux * ux + uy * uy;
    for (int i = 0; i < kQ; ++i) {
        const double cu = kD2Q9.cx[i] * ux + kD2Q9.cy[i] * uy;
        double feq = 1.0 + 3.0 * cu;
        if (order == EqOrder::Quadratic) feq += 4.5 * cu * cu - 1.5 * usq;
        feq *= kD2Q9.w[i] * rho;
        f[i] += omega * (feq - f[i]);
    }
}

} // namespace

Populations equilibrium(double rho, Velocity u, EqOrder order) {
    if (!finite(rho) || !finite(u.x) || !finite(u.y))
        throw InvalidInput("equilibrium: non-finite density or velocity");
    if (rho <= 0.0) throw InvalidInput("equilibrium: density must be positive");
    const double usq = u.x * u.x + u.y * u.y;
    const double inv_cs2 = 1.0 / kD2Q9.cs2;
    Populations feq{};
    for (int i = 0; i < kQ; ++i) {
        const double cu = kD2Q9.cx[i] * u.x + kD2Q9.cy[i] * u.y;
        double poly = 1.0 + cu * inv_cs2;
        if (order == EqOrder::Quadratic)
            poly += 0.5 * cu * cu * inv_cs2 * inv_cs2 - 0.5 * usq * inv_cs2;
        feq[i] = kD2Q9.w[i] * rho * poly;
    }
    return feq;
}

Macroscopic macroscopic(const Populations& f) {
    const double rho = f[0] + f[1] + f[2] + f[3] + f[4] + f[5] + f[6] + f[7] + f[8];
    if (!(rho > 0.0) || !finite(rho)) throw DegenerateDensity("macroscopic: non-positive density");
    const double jx = f[1] + f[5] + f[8] - f[3] - f[6] - f[7];
    const double jy = f[2] + f[5] + f[6] - f[4] - f[7] - f[8];
    return {rho, {jx / rho, jy / rho}};
}

MacroVector moments(const Populations& f) {
    MacroVector m;
    m.ux = f[1] + f[5] + f[8] - f[3] - f[6] - f[7];
    m.uy = f[2] + f[5] + f[6] - f[4] - f[7] - f[8];
    m.pxx_minus_pyy = f[1] + f[3] - f[2] - f[4];
    m.pxy = f[5] + f[7] - f[6] - f[8];
    m.energy = -4.0 * f[0] - f[1] - f[2] - f[3] - f[4] + 2.0 * (f[5] + f[6] + f[7] + f[8]);
    return m;
}

Populations bgk_collide(const Populations& f, double tau, EqOrder order) {
    if (!(tau > 0.5)) throw InvalidInput("bgk_collide: tau must exceed 0.5");
    for (double v : f)
        if (!finite(v)) throw InvalidInput("bgk_collide: non-finite population");
    const auto [rho, u] = macroscopic(f);
    const Populations feq = equilibrium(rho, u, order);
    Populations out{};
    for (int i = 0; i < kQ; ++i) out[i] = f[i] + (feq[i] - f[i]) / tau;
    return out;
}

void LatticeConfig::validate() const {
    if (nx < 4 || ny < 4)
        throw ConfigError("lattice must be at least 4x4 (got " + std::to_string(nx) + "x" +
                          std::to_string(ny) + ")");
    if (!(tau > 0.5) || !finite(tau))
        throw ConfigError("tau must be finite and > 0.5 (got " + std::to_string(tau) + ")");
    if (flow == FlowCase::TGV && !(std::abs(u_max) < kCs))
        throw ConfigError("TGV peak velocity must be subsonic");
    if (const auto* jets = std::get_if<GaussianJets>(&force)) {
        if (!(jets->amplitude >= 0.0) || !(jets->width > 0.0))
            throw ConfigError("Gaussian jets need amplitude >= 0 and width > 0");
    }
    if (const auto* k = std::get_if<KolmogorovInit>(&force)) {
        if (!(std::abs(k->ax) < kCs) || !(std::abs(k->ay) < kCs))
            throw ConfigError("Kolmogorov amplitudes must be subsonic");
    }
    if (flow == FlowCase::Plate) {
        if (boundary != Boundary::InletOutletWithMask)
            throw ConfigError("plate case needs boundary = InletOutletWithMask");
        const auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
        if (!in_unit(plate.x_frac) || !in_unit(plate.center_frac) || !in_unit(plate.length_frac))
            throw ConfigError("plate fractions must lie in (0, 1)");
        if (!(std::abs(plate.inlet_u) < kCs)) throw ConfigError("plate inlet velocity must be subsonic");
    }
}

Velocity force_at(const ForceSpec& spec, int x, int y, int nx, int ny) {
    if (const auto* g = std::get_if<UniformForce>(&spec)) return {g->gx, g->gy};
    if (const auto* j = std::get_if<GaussianJets>(&spec)) {
        const double w2 = j->width * j->width;
        const auto bump = [w2](double d) { return std::exp(-d * d / w2); };
        const double gx = j->amplitude * (bump(y - j->y_h1 * ny) - bump(y - j->y_h2 * ny));
        const double gy = j->amplitude * (bump(x - j->x_v1 * nx) - bump(x - j->x_v2 * nx));
        return {gx, gy};
    }
    return {};
}

std::size_t SolidMask::solid_count() const {
    return static_cast<std::size_t>(std::count(solid_.begin(), solid_.end(), std::uint8_t{1}));
}

SolidMask build_mask(const LatticeConfig& config) {
    SolidMask mask(config.nx, config.ny);
    if (config.flow != FlowCase::Plate) return mask;
    const int xp = std::clamp(static_cast<int>(std::lround(config.plate.x_frac * config.nx)), 1,
                              config.nx - 2);
    const double half = 0.5 * config.plate.length_frac * config.ny;
    const double yc = config.plate.center_frac * config.ny;
    const int y0 = std::max(0, static_cast<int>(std::lround(yc - half)));
    const int y1 = std::min(config.ny - 1, static_cast<int>(std::lround(yc + half)) - 1);
    for (int y = y0; y <= y1; ++y) mask.set_solid(xp, y);
    return mask;
}

DistributionField bounce_back(DistributionField field, const SolidMask& mask) {
    if (mask.nx() > 0 && mask.fluid_count() == 0)
        throw ConfigError("solid mask covers the whole domain");
    apply_bounce_back(field, mask);
    return field;
}

void apply_force(DistributionField& field, const ForceSpec& spec, double scale,
                 const SolidMask* mask) {
    if (std::holds_alternative<std::monostate>(spec) || std::holds_alternative<KolmogorovInit>(spec))
        return;
    const int nx = field.nx();
    const int ny = field.ny();
    const double inv_cs2 = 1.0 / kD2Q9.cs2;
#pragma omp parallel for schedule(static)
    for (int x = 0; x < nx; ++x) {
        for (int y = 0; y < ny; ++y) {
            if (mask && mask->is_solid(x, y)) continue;
            const Velocity g = force_at(spec, x, y, nx, ny);
            for (int i = 1; i < kQ; ++i) {
                const double cg = kD2Q9.cx[i] * g.x + kD2Q9.cy[i] * g.y;
                field.at(i, x, y) += scale * kD2Q9.w[i] * cg * inv_cs2;
            }
        }
    }
}

void collide(DistributionField& field, double tau, EqOrder order, const SolidMask* mask) {
    const int nx = field.nx();
    const int ny = field.ny();
    const double omega = 1.0 / tau;
#pragma omp parallel for schedule(static)
    for (int x = 0; x < nx; ++x) {
        double f[kQ];
        for (int y = 0; y < ny; ++y) {
            if (mask && mask->is_solid(x, y)) continue;
            for (int i = 0; i < kQ; ++i) f[i] = field.at(i, x, y);
            collide_site(f, omega, order);
            for (int i = 0; i < kQ; ++i) field.at(i, x, y) = f[i];
        }
    }
}

void apply_inlet_outlet(DistributionField& field, double inlet_u) {
    const int nx = field.nx();
    const int ny = field.ny();
    const Populations inflow = equilibrium(1.0, {inlet_u, 0.0}, EqOrder::Quadratic);
    for (int y = 0; y < ny; ++y) {
        for (int i = 0; i < kQ; ++i) {
            field.at(i, 0, y) = inflow[i];
            field.at(i, nx - 1, y) = field.at(i, nx - 2, y);
        }
    }
}

Velocity tgv_velocity(const LatticeConfig& config, int x, int y) {
    const double kx = std::numbers::pi / config.nx;
    const double ky = std::numbers::pi / config.ny;
    const double xc = x + 0.5;
    const double yc = y + 0.5;
    return {config.u_max * std::sin(kx * xc) * std::cos(ky * yc),
            -config.u_max * std::cos(kx * xc) * std::sin(ky * yc)};
}

DistributionField init_case(FlowCase flow, const LatticeConfig& config) {
    config.validate();
    DistributionField field(config.nx, config.ny);
    const auto fill_rest = [&] {
        for (int i = 0; i < kQ; ++i) std::ranges::fill(field.channel(i), kD2Q9.w[i]);
    };
    switch (flow) {
    case FlowCase::TGV:
        for (int x = 0; x < config.nx; ++x)
            for (int y = 0; y < config.ny; ++y)
                field.set_site(x, y, equilibrium(1.0, tgv_velocity(config, x, y), EqOrder::Quadratic));
        return field;
    case FlowCase::Kolmogorov: {
        const KolmogorovInit k = std::holds_alternative<KolmogorovInit>(config.force)
                                     ? std::get<KolmogorovInit>(config.force)
                                     : KolmogorovInit{};
        const double two_pi = 2.0 * std::numbers::pi;
        for (int x = 0; x < config.nx; ++x) {
            for (int y = 0; y < config.ny; ++y) {
                const double sx = k.ax * std::cos(two_pi * k.kx * y / config.ny);
                const double sy = k.ay * std::cos(two_pi * k.ky * x / config.nx);
                for (int i = 0; i < kQ; ++i)
                    field.at(i, x, y) = kD2Q9.w[i] * (1.0 + sx * kD2Q9.cx[i] + sy * kD2Q9.cy[i]);
            }
        }
        return field;
    }
    case FlowCase::Plate: {
        fill_rest();
        apply_bounce_back(field, build_mask(config));
        return field;
    }
    case FlowCase::Jets:
        fill_rest();
        return field;
    }
    throw ConfigError("init_case: unknown flow case");
}

double total_mass(const DistributionField& field) {
    double m = 0.0;
    for (double v : field.raw()) m += v;
    return m;
}

Solver::Solver(LatticeConfig config) : config_(std::move(config)) {
    config_.validate();
    mask_ = build_mask(config_);
    if (mask_.fluid_count() == 0) throw ConfigError("solid mask covers the whole domain");
}

void Solver::step(DistributionField& field, double force_scale) const {
    step(field, config_.order, force_scale);
}

void Solver::step(DistributionField& field, EqOrder order, double force_scale) const {
    const SolidMask* mask = mask_.empty() ? nullptr : &mask_;
    collide(field, config_.tau, order, mask);
    apply_force(field, config_.force, force_scale, mask);
    field = propagate(field);
    if (config_.boundary == Boundary::InletOutletWithMask)
        apply_inlet_outlet(field, config_.plate.inlet_u);
}

double MacroField::speed(int x, int y) const {
    const auto k = index(x, y);
    return std::hypot(ux[k], uy[k]);
}

MacroField MacroField::from(const DistributionField& field) {
    MacroField m;
    m.nx = field.nx();
    m.ny = field.ny();
    m.rho.assign(field.sites(), 0.0);
    m.ux.assign(field.sites(), 0.0);
    m.uy.assign(field.sites(), 0.0);
    for (int x = 0; x < m.nx; ++x) {
        for (int y = 0; y < m.ny; ++y) {
            const Populations f = field.site(x, y);
            double rho = 0.0;
            for (double v : f) rho += v;
            const auto k = m.index(x, y);
            m.rho[k] = rho;
            if (rho == 0.0) continue;
            const MacroVector mv = moments(f);
            m.ux[k] = mv.ux / rho;
            m.uy[k] = mv.uy / rho;
        }
    }
    return m;
}

std::size_t check_field(const DistributionField& field, int step) {
    std::size_t negatives = 0;
    std::size_t first_negative = 0;
    const auto raw = field.raw();
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (!finite(raw[k])) throw InstabilityError("non-finite population", step);
        if (raw[k] < 0.0 && negatives++ == 0) first_negative = k;
    }
    if (negatives > 0) {
        const std::size_t sites = field.sites();
        const std::size_t i = first_negative / sites;
        const std::size_t s = first_negative % sites;
        spdlog::warn("step {}: {} negative populations (first at channel {}, x={}, y={})", step,
                     negatives, i, s / field.ny(), s % field.ny());
    }
    return negatives;
}

Trajectory run_reference(const LatticeConfig& config, const DistributionField& initial, int steps,
                         SnapshotMode mode) {
    if (steps < 0) throw ConfigError("run_reference: negative step count");
    if (initial.nx() != config.nx || initial.ny() != config.ny)
        throw ConfigError("run_reference: initial field does not match the lattice size");
    const Solver solver(config);
    Trajectory traj;
    traj.mode = mode;
    traj.steps = steps;
    const auto record = [&](const DistributionField& f) {
        if (mode == SnapshotMode::FullFields)
            traj.fields.push_back(f);
        else
            traj.macros.push_back(MacroField::from(f));
    };
    DistributionField f = initial;
    record(f);
    bool warned = false;
    for (int t = 1; t <= steps; ++t) {
        solver.step(f);
        if (warned) {
            for (double v : f.raw())
                if (!finite(v)) throw InstabilityError("non-finite population", t);
        } else {
            warned = check_field(f, t) > 0;
        }
        record(f);
    }
    return traj;
}

Trajectory run_reference(const LatticeConfig& config, int steps, SnapshotMode mode) {
    return run_reference(config, init_case(config), steps, mode);
}

} // namespace qlbm::lbm
