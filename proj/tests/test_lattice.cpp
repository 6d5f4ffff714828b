#include "doctest.h"
#include "support.hpp"

#include "qlbm/errors.hpp"
#include "qlbm/field_io.hpp"
#include "qlbm/lattice.hpp"

#include <algorithm>
#include <filesystem>

using namespace qlbm;
using namespace qlbm::lbm;
using qlbm::testing::Gen;
using qlbm::testing::for_all;

namespace {

// Written out channel by channel from the D2Q9 tables, independently of the
// library's loop.
Populations equilibrium_oracle(double rho, double ux, double uy, bool quadratic) {
    const double w[9] = {4.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 36, 1.0 / 36, 1.0 / 36, 1.0 / 36};
    const double cu[9] = {0, ux, uy, -ux, -uy, ux + uy, -ux + uy, -ux - uy, ux - uy};
    const double uu = ux * ux + uy * uy;
    Populations f;
    for (int i = 0; i < 9; ++i) {
        double s = 1.0 + 3.0 * cu[i];
        if (quadratic) s += 4.5 * cu[i] * cu[i] - 1.5 * uu;
        f[i] = w[i] * rho * s;
    }
    return f;
}

double mass(const Populations& f) {
    double m = 0.0;
    for (double v : f) m += v;
    return m;
}

std::pair<double, double> momentum(const Populations& f) {
    double jx = 0.0, jy = 0.0;
    for (int i = 0; i < kQ; ++i) {
        jx += f[i] * kD2Q9.cx[i];
        jy += f[i] * kD2Q9.cy[i];
    }
    return {jx, jy};
}

int rotated_channel(int i) {
    // r: (cx, cy) -> (-cy, cx)
    for (int j = 0; j < kQ; ++j)
        if (kD2Q9.cx[j] == -kD2Q9.cy[i] && kD2Q9.cy[j] == kD2Q9.cx[i]) return j;
    return -1;
}

DistributionField rotate(const DistributionField& f) {
    const int n = f.nx();
    DistributionField out(n, n);
    for (int i = 0; i < kQ; ++i)
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) out.at(rotated_channel(i), n - 1 - y, x) = f.at(i, x, y);
    return out;
}

double max_field_diff(const DistributionField& a, const DistributionField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.raw().size(); ++k) m = std::max(m, std::abs(a.raw()[k] - b.raw()[k]));
    return m;
}

} // namespace

TEST_CASE("equilibrium matches the closed form for both orders") {
    for_all(200, 11, [](Gen& g, int) {
        const double rho = g.uniform(0.5, 1.5);
        const auto u = g.velocity(0.2);
        for (bool q : {false, true}) {
            const auto f = equilibrium(rho, u, q ? EqOrder::Quadratic : EqOrder::Linear);
            CHECK(testing::max_abs_diff(f, equilibrium_oracle(rho, u.x, u.y, q)) < 1e-15);
        }
    });
}

TEST_CASE("equilibrium to macroscopic round trip") {
    for_all(200, 12, [](Gen& g, int) {
        const double rho = g.uniform(0.5, 1.5);
        const auto u = g.velocity(0.2);
        for (auto order : {EqOrder::Linear, EqOrder::Quadratic}) {
            const auto m = macroscopic(equilibrium(rho, u, order));
            CHECK(m.rho == doctest::Approx(rho).epsilon(1e-14));
            CHECK(std::abs(m.u.x - u.x) < 1e-14);
            CHECK(std::abs(m.u.y - u.y) < 1e-14);
        }
    });
}

TEST_CASE("bgk collision conserves mass and momentum") {
    for_all(500, 13, [](Gen& g, int) {
        const auto f = g.populations(0.15, 0.3);
        const double tau = g.uniform(0.51, 3.0);
        const auto [jx, jy] = momentum(f);
        for (auto order : {EqOrder::Linear, EqOrder::Quadratic}) {
            const auto out = bgk_collide(f, tau, order);
            CHECK(std::abs(mass(out) - mass(f)) < 1e-14);
            const auto [ox, oy] = momentum(out);
            CHECK(std::abs(ox - jx) < 1e-14);
            CHECK(std::abs(oy - jy) < 1e-14);
        }
    });
}

TEST_CASE("bgk at tau 1 returns the equilibrium") {
    Gen g(3);
    const auto f = g.populations();
    const auto m = macroscopic(f);
    CHECK(testing::max_abs_diff(bgk_collide(f, 1.0, EqOrder::Quadratic),
                                equilibrium_oracle(m.rho, m.u.x, m.u.y, true)) < 1e-15);
}

TEST_CASE("macroscopic rejects non-positive density") {
    Populations f{};
    CHECK_THROWS_AS(macroscopic(f), DegenerateDensity);
    f[1] = -1.0;
    CHECK_THROWS_AS(macroscopic(f), DegenerateDensity);
}

TEST_CASE("moments of a rest equilibrium") {
    const auto m = moments(equilibrium(1.0, {}, EqOrder::Quadratic));
    CHECK(std::abs(m.ux) < 1e-16);
    CHECK(std::abs(m.pxx_minus_pyy) < 1e-16);
    CHECK(std::abs(m.pxy) < 1e-16);
}

TEST_CASE("stream is a permutation that moves channel i by c_i") {
    for_all(5, 14, [](Gen& g, int) {
        const int nx = g.integer(4, 9), ny = g.integer(4, 9);
        const auto f = g.field(nx, ny);
        const auto s = stream(f);
        auto a = std::vector<double>(f.raw().begin(), f.raw().end());
        auto b = std::vector<double>(s.raw().begin(), s.raw().end());
        std::ranges::sort(a);
        std::ranges::sort(b);
        CHECK(a == b);
        for (int i = 0; i < kQ; ++i)
            for (int x = 0; x < nx; ++x)
                for (int y = 0; y < ny; ++y)
                    CHECK(s.at(i, (x + kD2Q9.cx[i] + nx) % nx, (y + kD2Q9.cy[i] + ny) % ny) == f.at(i, x, y));
    });
}

TEST_CASE("bounce-back reverses populations entering a solid site") {
    DistributionField f(6, 6);
    SolidMask mask(6, 6);
    mask.set_solid(3, 3);
    f.at(1, 3, 3) = 0.7;  // arrived from (2,3) moving +x
    f.at(5, 3, 3) = 0.2;  // arrived from (2,2) moving +x+y
    apply_bounce_back(f, mask);
    CHECK(f.at(3, 2, 3) == 0.7);
    CHECK(f.at(7, 2, 2) == 0.2);
    for (int i = 0; i < kQ; ++i) CHECK(f.at(i, 3, 3) == 0.0);
}

TEST_CASE("bounce-back with an all-solid mask is a config error") {
    SolidMask mask(4, 4);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) mask.set_solid(x, y);
    CHECK_THROWS_AS(bounce_back(DistributionField(4, 4), mask), ConfigError);
}

TEST_CASE("periodic force-free runs conserve global mass") {
    for (auto order : {EqOrder::Linear, EqOrder::Quadratic}) {
        LatticeConfig c;
        c.nx = 24;
        c.ny = 20;
        c.tau = 0.8;
        c.order = order;
        Solver solver(c);
        auto f = init_case(c);
        const double m0 = total_mass(f);
        for (int t = 0; t < 100; ++t) solver.step(f);
        CHECK(std::abs(total_mass(f) - m0) < 1e-10);
    }
}

TEST_CASE("TGV initial field samples the analytic velocity at cell centres") {
    LatticeConfig c;
    c.nx = 16;
    c.ny = 12;
    c.u_max = 0.07;
    const auto m = MacroField::from(init_case(c));
    for (int x = 0; x < c.nx; ++x) {
        for (int y = 0; y < c.ny; ++y) {
            const double ux = 0.07 * std::sin(M_PI * (x + 0.5) / 16) * std::cos(M_PI * (y + 0.5) / 12);
            const double uy = -0.07 * std::cos(M_PI * (x + 0.5) / 16) * std::sin(M_PI * (y + 0.5) / 12);
            CHECK(std::abs(m.ux[m.index(x, y)] - ux) < 1e-14);
            CHECK(std::abs(m.uy[m.index(x, y)] - uy) < 1e-14);
        }
    }
}

TEST_CASE("quadratic TGV decays monotonically in max |u|") {
    for (double u : {0.01, 0.05, 0.1}) {
        LatticeConfig c;
        c.nx = c.ny = 32;
        c.u_max = u;
        const auto traj = run_reference(c, 60, SnapshotMode::MacroOnly);
        double prev = 1e300;
        for (const auto& m : traj.macros) {
            double umax = 0.0;
            for (int x = 0; x < c.nx; ++x)
                for (int y = 0; y < c.ny; ++y) umax = std::max(umax, m.speed(x, y));
            CHECK(umax <= prev * (1.0 + 1e-12));
            prev = umax;
        }
    }
}

TEST_CASE("solver is covariant under a quarter turn") {
    for_all(3, 15, [](Gen& g, int) {
        LatticeConfig c;
        c.nx = c.ny = g.integer(5, 10);
        c.tau = g.uniform(0.6, 1.5);
        Solver solver(c);
        auto a = g.field(c.nx, c.ny, 0.08);
        auto b = rotate(a);
        for (int t = 0; t < 10; ++t) {
            solver.step(a);
            solver.step(b);
        }
        CHECK(max_field_diff(rotate(a), b) < 1e-14);
    });
}

TEST_CASE("inlet/outlet sets equilibrium inflow and copies the outflow column") {
    Gen g(5);
    auto f = g.field(8, 5);
    apply_inlet_outlet(f, 0.03);
    const auto in = equilibrium(1.0, {0.03, 0.0}, EqOrder::Quadratic);
    for (int y = 0; y < 5; ++y) {
        CHECK(testing::max_abs_diff(f.site(0, y), in) < 1e-15);
        CHECK(f.site(7, y) == f.site(6, y));
    }
}

TEST_CASE("forcing adds w_i c_i.G / cs2") {
    DistributionField f(4, 4);
    apply_force(f, UniformForce{1e-3, -2e-3});
    for (int i = 0; i < kQ; ++i)
        CHECK(f.at(i, 1, 2) == doctest::Approx(kD2Q9.w[i] * 3.0 * (1e-3 * kD2Q9.cx[i] - 2e-3 * kD2Q9.cy[i])));
}

TEST_CASE("plate mask is a solid column segment") {
    LatticeConfig c;
    c.nx = 40;
    c.ny = 30;
    c.flow = FlowCase::Plate;
    c.boundary = Boundary::InletOutletWithMask;
    const auto mask = build_mask(c);
    CHECK(mask.solid_count() > 0);
    CHECK(mask.solid_count() < static_cast<std::size_t>(c.ny));
}

TEST_CASE("lattice config validation") {
    LatticeConfig c;
    c.tau = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.tau = 1.0;
    c.nx = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("NaN in a field raises an instability at the step") {
    DistributionField f(4, 4, 0.1);
    f.at(3, 1, 1) = std::nan("");
    try {
        check_field(f, 7);
        FAIL("no throw");
    } catch (const InstabilityError& e) {
        CHECK(e.step() == 7);
    }
}

TEST_CASE("binary field round trip") {
    Gen g(6);
    const auto f = g.field(5, 7);
    const auto path = std::filesystem::temp_directory_path() / "qlbm_test_field.bin";
    io::write_field_binary(path, f);
    CHECK(io::read_field_binary(path) == f);
    std::filesystem::remove(path);
}
