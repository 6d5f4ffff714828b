#include "doctest.h"
#include "support.hpp"

#include "qlbm/analysis.hpp"
#include "qlbm/errors.hpp"
#include "qlbm/scaling.hpp"

#include <filesystem>

using namespace qlbm;
using namespace qlbm::analysis;
using qlbm::testing::Gen;
using qlbm::testing::for_all;

namespace {

constexpr double kCs2 = 1.0 / 3.0;

double cdot(int i, int j) { return lbm::kD2Q9.cx[i] * lbm::kD2Q9.cx[j] + lbm::kD2Q9.cy[i] * lbm::kD2Q9.cy[j]; }
double ucdot(lbm::Velocity u, int i) { return u.x * lbm::kD2Q9.cx[i] + u.y * lbm::kD2Q9.cy[i]; }

// Closed forms of the τ = 1 frozen maps.
Matrix9 equilibrium_projector() {
    Matrix9 e;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) e(i, j) = lbm::kD2Q9.w[i] * (1.0 + cdot(i, j) / kCs2);
    return e;
}

Matrix9 frozen_b(lbm::Velocity u) {
    Matrix9 b;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            b(i, j) = lbm::kD2Q9.w[i] *
                      (ucdot(u, i) * cdot(j, i) / (2 * kCs2 * kCs2) - ucdot(u, j) / (2 * kCs2));
    return b;
}

// Gram-Schmidt on a Gaussian matrix.
Matrix9 random_orthogonal(Gen& g) {
    Matrix9 q;
    for (int c = 0; c < 9; ++c) {
        Eigen::Matrix<double, 9, 1> v;
        for (int r = 0; r < 9; ++r) v(r) = g.normal();
        for (int k = 0; k < c; ++k) v -= q.col(k).dot(v) * q.col(k);
        q.col(c) = v / v.norm();
    }
    return q;
}

} // namespace

TEST_CASE("frozen collision at the site velocity is the true collision") {
    for_all(100, 51, [](Gen& g, int) {
        const auto f = g.populations(0.15, 0.2);
        const double tau = g.uniform(0.55, 2.0);
        const auto u = lbm::macroscopic(f).u;
        for (auto o : {lbm::EqOrder::Linear, lbm::EqOrder::Quadratic})
            CHECK(testing::max_abs_diff(frozen_collide(f, u, tau, o), lbm::bgk_collide(f, tau, o)) < 1e-15);
    });
}

TEST_CASE("frozen maps match the closed forms") {
    for_all(20, 52, [](Gen& g, int) {
        const auto u = g.velocity(0.2);
        const double tau = g.uniform(0.6, 2.0);
        const Matrix9 id = Matrix9::Identity();
        const Matrix9 a_oracle = (1.0 - 1.0 / tau) * id + equilibrium_projector() / tau;
        const auto a = build_frozen_map(u, tau, MapKind::LinearA).matrix;
        const auto ab = build_frozen_map(u, tau, MapKind::QuadraticAB).matrix;
        CHECK((a - a_oracle).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((ab - a - frozen_b(u) / tau).cwiseAbs().maxCoeff() < 1e-14);
    });
}

TEST_CASE("effective map sends the linear image to the quadratic one") {
    for_all(50, 53, [](Gen& g, int) {
        const auto f = g.populations(0.1, 0.2);
        const auto u = lbm::macroscopic(f).u;
        const auto m = build_frozen_map(u, 1.0, MapKind::EffectiveNonlinear).matrix;
        const auto lin = lbm::bgk_collide(f, 1.0, lbm::EqOrder::Linear);
        const auto ref = lbm::bgk_collide(f, 1.0, lbm::EqOrder::Quadratic);
        Eigen::Matrix<double, 9, 1> x;
        for (int i = 0; i < 9; ++i) x(i) = lin[i];
        const Eigen::Matrix<double, 9, 1> y = m * x;
        for (int i = 0; i < 9; ++i) CHECK(std::abs(y(i) - ref[i]) < 1e-14);
    });
}

TEST_CASE("omega map at tau 1 equals the effective map") {
    for_all(20, 54, [](Gen& g, int) {
        const auto u = g.velocity(0.2);
        const auto a = build_frozen_map(u, 1.0, MapKind::EffectiveNonlinear).matrix;
        const auto b = build_frozen_map(u, 1.0, MapKind::EffectiveNonlinearOmega).matrix;
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    });
}

TEST_CASE("omega map is I + B / tau") {
    for (double tau : {0.6, 0.8, 1.5, 2.0}) {
        const lbm::Velocity u{0.05, 0.0};
        const auto m = build_frozen_map(u, tau, MapKind::EffectiveNonlinearOmega).matrix;
        CHECK((m - Matrix9::Identity() - frozen_b(u) / tau).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("orthogonal matrices are unitary to the metric") {
    for_all(50, 55, [](Gen& g, int) {
        const auto nu = nonunitarity(random_orthogonal(g));
        CHECK(nu.metric < 1e-12);
        CHECK(nu.sigma_max == doctest::Approx(1.0).epsilon(1e-12));
    });
}

TEST_CASE("linear projector non-unitarity") {
    // E is a rank-3 projector onto the conserved moments: three unit singular
    // values would give 6; the metric is the distance of its spectrum from 1.
    const auto e = build_frozen_map({}, 1.0, MapKind::LinearA);
    const auto svd = Eigen::JacobiSVD<Matrix9>(equilibrium_projector());
    double m = 0.0;
    for (int k = 0; k < 9; ++k) m += std::pow(1.0 - svd.singularValues()(k), 2);
    CHECK(nonunitarity(e).metric == doctest::Approx(m).epsilon(1e-12));
    CHECK(m == doctest::Approx(6.35).epsilon(0.01));
}

TEST_CASE("group inverse on a singular matrix") {
    const Matrix9 e = equilibrium_projector();
    const Matrix9 x = right_divide(e, e);
    // E E^# = E^# E is the projector onto the range of E.
    CHECK((x * e - e).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix9 id = Matrix9::Identity() * 2.0;
    CHECK((right_divide(id, id) - Matrix9::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("exp-quadratic fit recovers its coefficients") {
    std::vector<double> u{0.01, 0.03, 0.05, 0.08, 0.1, 0.15, 0.2};
    std::vector<double> y;
    for (double v : u) y.push_back(2e-7 * std::exp(30.0 * v - 40.0 * v * v));
    const auto f = fit_exp_quadratic(u, y);
    CHECK(f.a == doctest::Approx(30.0).epsilon(1e-8));
    CHECK(f.b == doctest::Approx(-40.0).epsilon(1e-8));
    CHECK(f.c == doctest::Approx(2e-7).epsilon(1e-8));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_exp_quadratic(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), InvalidInput);
    y[2] = 0.0;
    CHECK_THROWS_AS(fit_exp_quadratic(u, y), InvalidInput);
}

TEST_CASE("linear fit") {
    const std::vector<double> x{0, 1, 2, 3};
    const std::vector<double> y{1, 3, 5, 7};
    const auto f = fit_linear(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("spearman rank correlation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(spearman(x, std::vector<double>{1, 4, 9, 16, 25}) == doctest::Approx(1.0));
    CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
    // ranks (1, 2.5, 2.5, 4) vs (1, 3, 2, 4): 4.5 / sqrt(4.5 * 5)
    CHECK(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 3, 2, 4}) ==
          doctest::Approx(std::sqrt(0.9)).epsilon(1e-12));
}

TEST_CASE("identity model has eta 1 on any corpus") {
    Gen g(56);
    std::vector<data::CollisionSample> ss;
    for (int k = 0; k < 100; ++k) ss.push_back(data::make_sample(g.populations(0.1, 0.1), 1.0, data::Source::Harvested));
    const auto m = ansatz::identity_model(ansatz::ModelKind::R1, 1);
    const auto st = prediction_stats(m, ss, train::TargetKind::NonlinearFromLin);
    CHECK(st.eta == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(st.eta_mean == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(st.mse_pred == doctest::Approx(st.mse_base).epsilon(1e-10));
    CHECK(st.mse_to_input < 1e-28);
}

TEST_CASE("model cache returns the stored model") {
    Gen g(57);
    std::vector<data::CollisionSample> ss;
    for (int k = 0; k < 16; ++k) ss.push_back(data::make_sample(g.populations(0.1, 0.1), 1.0, data::Source::Harvested));
    const auto dir = std::filesystem::temp_directory_path() / "qlbm_test_cache";
    std::filesystem::remove_all(dir);
    train::TrainConfig tc;
    tc.layers = 1;
    tc.epochs = 1;
    ModelCache cache(dir);
    const auto a = cache.get_or_train(tc, ss);
    int files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
    CHECK(files > 0);
    const auto b = cache.get_or_train(tc, ss);
    CHECK(a.params == b.params);
    tc.seed = 2;
    CHECK(train_config_hash(tc) != train_config_hash(train::TrainConfig{}));
    std::filesystem::remove_all(dir);
}

TEST_CASE("effective non-unitarity vanishes with u and sigma_max grows linearly") {
    const std::vector<double> us{0.01, 0.02, 0.05, 0.1, 0.15, 0.2};
    const std::vector<double> taus{1.0};
    const auto rows = spectrum_sweep(MapKind::EffectiveNonlinear, us, taus);
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].nu.metric > rows[k - 1].nu.metric);
    const auto small = spectrum_sweep(MapKind::EffectiveNonlinear, std::vector<double>{1e-6}, taus);
    CHECK(small[0].nu.metric < 1e-9);
    std::vector<double> s;
    for (const auto& r : rows) s.push_back(r.nu.sigma_max);
    CHECK(fit_linear(us, s).r2 > 0.95);
}

// ---------------------------------------------------------------------------

TEST_CASE("beta1 reference values") {
    CHECK(scaling::beta1(2.4e4) == doctest::Approx(0.100).epsilon(0.05));
    CHECK(scaling::beta1(6.7e6) == doctest::Approx(0.0100).epsilon(0.05));
    CHECK(scaling::beta1(1e4) == doctest::Approx(2.0 * (std::log(1e4) - std::log(std::log(1e4))) / 100.0));
    CHECK_THROWS_AS(scaling::beta1(2.0), InvalidInput);
    CHECK(scaling::beta0(1e4) == doctest::Approx(std::log(1e4) / 100.0));
}

TEST_CASE("eta closed form") {
    const double n = 1e4, b = 0.3;
    CHECK(scaling::eta(n, b) == doctest::Approx(n * b * b / std::pow(std::log(n / (b * b)), 2)));
    CHECK(scaling::eta(n, 1.0) == doctest::Approx(n / std::pow(std::log(n), 2)));
}

TEST_CASE("eta is strictly increasing in beta") {
    for (double n : {10.0, 1e3, 1e4, 1e6}) {
        double prev = -1.0;
        for (int k = 1; k <= 200; ++k) {
            const double e = scaling::eta(n, k / 200.0);
            CHECK(e > prev);
            prev = e;
        }
    }
}

TEST_CASE("crossover solves eta = 1 and inverts beta1") {
    const double b = scaling::crossover_beta(1e4);
    CHECK(scaling::eta(1e4, b) == doctest::Approx(1.0).epsilon(1e-9));
    const double n = scaling::crossover_sites(0.1);
    CHECK(scaling::beta1(n) == doctest::Approx(0.1).epsilon(1e-9));
    // N / ln²N ≥ e²/4 > 1, so a root exists for every N.
    CHECK(scaling::crossover_beta(3.0) > 0.0);
}

TEST_CASE("beta 1 scaling is the identity") {
    scaling::ScalingParams p;
    p.beta = 1.0;
    const auto r = scaling::diffusive_scaling(p);
    CHECK(r.n_scaled == p.n_base);
    CHECK(r.t_scaled == p.t_base);
    CHECK(r.cs_factor == 1.0);
    CHECK(r.classical_scaled == r.classical_base);
    CHECK(r.quantum_scaled == r.quantum_base);
    p.beta = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
