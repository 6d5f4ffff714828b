#pragma once

// Hand-rolled generators for property tests.

#include "qlbm/lattice.hpp"
#include "qlbm/qsim.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace qlbm::testing {

class Gen {
  public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng_); }
    bool coin() { return integer(0, 1) == 1; }

    lbm::Velocity velocity(double umax) {
        const double r = uniform(0.0, umax);
        const double a = uniform(0.0, 2.0 * M_PI);
        return {r * std::cos(a), r * std::sin(a)};
    }

    /// Positive populations near a random equilibrium.
    lbm::Populations populations(double umax = 0.1, double noise = 0.2) {
        const double rho = uniform(0.8, 1.2);
        auto f = lbm::equilibrium(rho, velocity(umax), lbm::EqOrder::Quadratic);
        for (double& v : f) v *= 1.0 + uniform(-noise, noise);
        return f;
    }

    /// Arbitrary positive populations on the simplex scale.
    lbm::Populations any_populations() {
        lbm::Populations f;
        for (double& v : f) v = uniform(1e-3, 1.0);
        return f;
    }

    std::vector<qs::cplx> state(int dim) {
        std::vector<qs::cplx> a(static_cast<std::size_t>(dim));
        double n = 0.0;
        for (auto& z : a) {
            z = {normal(), normal()};
            n += std::norm(z);
        }
        for (auto& z : a) z /= std::sqrt(n);
        return a;
    }

    std::vector<double> params(int n, double scale) {
        std::vector<double> p(static_cast<std::size_t>(n));
        for (double& v : p) v = uniform(-scale, scale);
        return p;
    }

    lbm::DistributionField field(int nx, int ny, double umax = 0.05) {
        lbm::DistributionField f(nx, ny);
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y) f.set_site(x, y, populations(umax, 0.05));
        return f;
    }

    std::mt19937_64& engine() { return rng_; }

  private:
    std::mt19937_64 rng_;
};

/// Runs `body(gen, case_index)` for n cases drawn from consecutive seeds.
template <typename F> void for_all(int n, std::uint64_t seed, F&& body) {
    for (int k = 0; k < n; ++k) {
        Gen g(seed * 1000003ULL + static_cast<std::uint64_t>(k));
        body(g, k);
    }
}

inline double max_abs_diff(const lbm::Populations& a, const lbm::Populations& b) {
    double m = 0.0;
    for (int i = 0; i < lbm::kQ; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace qlbm::testing
