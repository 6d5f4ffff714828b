#include "doctest.h"
#include "support.hpp"

#include "qlbm/dataset.hpp"
#include "qlbm/errors.hpp"

#include <filesystem>
#include <set>

using namespace qlbm;
using namespace qlbm::data;
using qlbm::testing::Gen;
using qlbm::testing::for_all;

namespace {

void check_consistent(const CollisionSample& s) {
    double rho = 0.0;
    for (double v : s.f_str) rho += v;
    CHECK(s.rho == doctest::Approx(rho).epsilon(1e-14));
    const auto m = lbm::macroscopic(s.f_str);
    CHECK(std::abs(s.u.x - m.u.x) < 1e-14);
    CHECK(std::abs(s.u.y - m.u.y) < 1e-14);
    CHECK(testing::max_abs_diff(s.f_lin, lbm::bgk_collide(s.f_str, s.tau, lbm::EqOrder::Linear)) < 1e-12);
    CHECK(testing::max_abs_diff(s.f_ref, lbm::bgk_collide(s.f_str, s.tau, lbm::EqOrder::Quadratic)) < 1e-12);
}

ArtificialSpec small_spec(std::size_t n, std::uint64_t seed) {
    ArtificialSpec s;
    s.n = n;
    s.seed = seed;
    s.sigma_max.fill(1e-4);
    return s;
}

} // namespace

TEST_CASE("artificial samples are self-consistent") {
    for (const auto& s : generate_artificial(small_spec(500, 3))) check_consistent(s);
}

TEST_CASE("artificial sampler at zero noise and zero velocity returns the weights") {
    auto spec = small_spec(10, 4);
    spec.sigma_max.fill(0.0);
    spec.u0_max = 0.0;
    for (const auto& s : generate_artificial(spec)) {
        for (int i = 0; i < 9; ++i) CHECK(s.f_str[i] == doctest::Approx(lbm::kD2Q9.w[i]).epsilon(1e-15));
        CHECK(testing::max_abs_diff(s.f_ref, s.f_str) < 1e-15);
    }
}

TEST_CASE("TGV-angle velocities stay inside the u0 disk") {
    auto spec = small_spec(2000, 5);
    spec.sigma_max.fill(0.0);
    spec.u0_max = 0.05;
    double max_ux = 0.0, max_uy = 0.0;
    for (const auto& s : generate_artificial(spec)) {
        const double r2 = (s.u.x * s.u.x + s.u.y * s.u.y) / (0.05 * 0.05);
        CHECK(r2 <= 1.0 + 1e-12);
        max_ux = std::max(max_ux, std::abs(s.u.x));
        max_uy = std::max(max_uy, std::abs(s.u.y));
        // τ = 1 relaxes straight to the quadratic equilibrium.
        CHECK(testing::max_abs_diff(s.f_ref, lbm::equilibrium(s.rho, s.u, lbm::EqOrder::Quadratic)) < 1e-15);
    }
    CHECK(max_ux > 0.04);
    CHECK(max_uy > 0.04);
}

TEST_CASE("TGV-angle velocity lies on the ellipse of its own amplitudes") {
    // Replays the three uniform draws of one sample.
    auto spec = small_spec(1, 6);
    spec.sigma_max.fill(0.0);
    for (std::uint64_t k = 0; k < 50; ++k) {
        auto rng = sample_rng(9, k);
        auto replay = rng;
        const auto s = sample_artificial(spec, rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double ux0 = spec.u0_max * unit(replay);
        const double uy0 = spec.u0_max * unit(replay);
        CHECK(std::pow(s.u.x / ux0, 2) + std::pow(s.u.y / uy0, 2) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("per-channel noise has the requested width") {
    auto spec = small_spec(20000, 7);
    spec.sigma_min.fill(2e-3);
    spec.sigma_max.fill(2e-3);
    spec.u0_max = 0.0;
    const auto samples = generate_artificial(spec);
    const auto rep = stats(samples);
    for (int i = 0; i < 9; ++i) CHECK(rep.neq_std[i] == doctest::Approx(2e-3).epsilon(0.05));
}

TEST_CASE("projected noise carries no mass or momentum") {
    auto spec = small_spec(200, 8);
    spec.project_neq = true;
    spec.sigma_max.fill(1e-3);
    for (const auto& s : generate_artificial(spec)) {
        const auto feq = lbm::equilibrium(1.0, s.u, lbm::EqOrder::Quadratic);
        CHECK(testing::max_abs_diff(s.f_ref, lbm::bgk_collide(feq, 1.0, lbm::EqOrder::Quadratic)) < 1e-12);
    }
}

TEST_CASE("generation is independent of thread scheduling") {
    const auto a = generate_artificial(small_spec(300, 10));
    const auto b = generate_artificial(small_spec(300, 10));
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].f_str == b[k].f_str);
}

TEST_CASE("harvest emits one sample per site and step") {
    lbm::LatticeConfig c;
    c.nx = c.ny = 32;
    const auto traj = lbm::run_reference(c, 50);
    const auto samples = harvest(traj, c.tau);
    CHECK(samples.size() == 32u * 32u * 50u);
    for (std::size_t k = 0; k < samples.size(); k += 997) check_consistent(samples[k]);
}

TEST_CASE("harvest of a uniform equilibrium is trivial") {
    lbm::LatticeConfig c;
    c.nx = c.ny = 6;
    c.u_max = 0.0;
    const auto samples = harvest(lbm::run_reference(c, 1), 1.0);
    CHECK(samples.size() == 36);
    for (const auto& s : samples) {
        CHECK(testing::max_abs_diff(s.f_lin, s.f_str) < 1e-15);
        CHECK(testing::max_abs_diff(s.f_ref, s.f_str) < 1e-15);
    }
}

TEST_CASE("harvest needs full fields") {
    lbm::LatticeConfig c;
    c.nx = c.ny = 6;
    CHECK_THROWS_AS(harvest(lbm::run_reference(c, 2, lbm::SnapshotMode::MacroOnly), 1.0), ConfigError);
}

TEST_CASE("equilibrium corpus has zero non-equilibrium spread") {
    auto spec = small_spec(50, 11);
    spec.sigma_max.fill(0.0);
    const auto rep = stats(generate_artificial(spec));
    for (int i = 0; i < 9; ++i) CHECK(rep.neq_std[i] < 1e-15);
    CHECK_THROWS_AS(stats(std::vector<CollisionSample>{}), InvalidInput);
}

TEST_CASE("shuffle batches") {
    CHECK(shuffle_batches(64, 32, 1).size() == 2);
    const auto b = shuffle_batches(65, 32, 1);
    CHECK(b.size() == 3);
    CHECK(b.back().size() == 1);
    CHECK(shuffle_batches(65, 32, 1) == b);
    std::set<std::size_t> all;
    for (const auto& v : b) all.insert(v.begin(), v.end());
    CHECK(all.size() == 65);
}

TEST_CASE("stratified resampling balances speed bins") {
    lbm::LatticeConfig c;
    c.nx = c.ny = 16;
    const auto samples = harvest(lbm::run_reference(c, 5), 1.0);
    const auto out = stratify_by_speed(samples, 4, 1e-4, 0.1, 2);
    CHECK(!out.empty());
    CHECK(out.size() % 4 == 0);
}

TEST_CASE("dataset binary round trip") {
    const auto a = generate_artificial(small_spec(20, 12));
    const auto path = std::filesystem::temp_directory_path() / "qlbm_test_ds.bin";
    write_dataset(path, a);
    const auto b = read_dataset(path);
    REQUIRE(b.size() == a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(b[k].f_str == a[k].f_str);
        CHECK(b[k].f_ref == a[k].f_ref);
        CHECK(b[k].source == Source::Artificial);
    }
    std::filesystem::remove(path);
}
