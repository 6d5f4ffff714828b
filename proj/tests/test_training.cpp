#include "doctest.h"
#include "support.hpp"

#include "qlbm/errors.hpp"
#include "qlbm/training.hpp"

#include <map>

using namespace qlbm;
using namespace qlbm::train;
using qlbm::testing::Gen;
using qlbm::testing::for_all;

namespace {

const std::array<LossKind, 4> kAllLosses{LossKind::AmpPhase, LossKind::Rho, LossKind::AmpOnly, LossKind::Rho1};

LossSpec spec_for(LossKind k) {
    LossSpec s;
    s.kind = k;
    s.lambda = 0.3;
    return s;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num = std::max(num, std::abs(a[k] - b[k]));
        den = std::max(den, std::abs(b[k]));
    }
    return num / std::max(den, 1e-300);
}

data::CollisionSample sample(Gen& g) { return data::make_sample(g.populations(0.1, 0.05), 1.0, data::Source::Harvested); }

} // namespace

TEST_CASE("losses vanish on the target and are non-negative") {
    for_all(50, 41, [](Gen& g, int) {
        const auto f = g.populations();
        const auto t = make_target(f, 1.0);
        const PureState other(4, g.state(16));
        for (auto k : kAllLosses) {
            if (k == LossKind::Rho1) continue;  // needs an 8-qubit output
            const auto s = spec_for(k);
            CHECK(evaluate_loss(s, t.psi_ref, t, nullptr).total < 1e-15);
            CHECK(evaluate_loss(s, other, t, nullptr).total >= 0.0);
        }
        const auto r2 = qs::encode_r2(f);
        CHECK(evaluate_loss(spec_for(LossKind::Rho1), r2, t, nullptr).total < 1e-15);
    });
}

TEST_CASE("rho loss equals 2 - 2 |<a|b>|^2 for pure states") {
    for_all(50, 42, [](Gen& g, int) {
        const PureState a(4, g.state(16)), b(4, g.state(16));
        qs::cplx ov = 0;
        for (int k = 0; k < 16; ++k) ov += std::conj(a[k]) * b[k];
        CHECK(loss_rho(a, qs::density(b)) == doctest::Approx(2.0 - 2.0 * std::norm(ov)).epsilon(1e-12));
    });
}

TEST_CASE("amplitude loss without phase weight is the squared probability difference") {
    Gen g(43);
    const PureState a(4, g.state(16)), b(4, g.state(16));
    double s = 0.0;
    for (int k = 0; k < 16; ++k) s += std::pow(std::norm(a[k]) - std::norm(b[k]), 2);
    CHECK(loss_amp_phase(a, b, 0.0) == doctest::Approx(s).epsilon(1e-13));
}

TEST_CASE("phase-aware losses ignore a global phase") {
    for_all(30, 44, [](Gen& g, int) {
        const auto t = make_target(g.populations(), 1.0);
        const PureState a(4, g.state(16));
        PureState b = a;
        const auto ph = std::polar(1.0, g.uniform(-3, 3));
        for (int k = 0; k < 16; ++k) b[k] *= ph;
        for (auto k : {LossKind::AmpPhase, LossKind::Rho}) {
            const auto s = spec_for(k);
            CHECK(evaluate_loss(s, a, t).total == doctest::Approx(evaluate_loss(s, b, t).total).epsilon(1e-12));
        }
    });
}

TEST_CASE("adjoint gradients match finite differences for every loss kind") {
    for_all(8, 45, [](Gen& g, int) {
        const auto s = sample(g);
        for (auto k : kAllLosses) {
            const auto circuit = k == LossKind::Rho1 ? ansatz::build_r2(2) : ansatz::build_r1(2);
            const auto p = g.params(circuit.n_params, 1.0);
            auto spec = spec_for(k);
            spec.lambda_u = 0.5;
            const auto in = input_state(circuit, s, TargetKind::NonlinearFromLin);
            const auto t = sample_target(s, TargetKind::NonlinearFromLin);
            const auto exact = loss_and_grad(circuit, p, in, t, spec).grad;
            const auto fd = finite_difference_grad(circuit, p, in, t, spec, 1e-6);
            const auto ps = param_shift_grad(circuit, p, in, t, spec);
            CHECK(rel_err(exact, fd) < 1e-5);
            CHECK(rel_err(ps, exact) < 1e-10);
        }
    });
}

TEST_CASE("shared gradients are sums of occurrence gradients") {
    Gen g(46);
    const auto s = sample(g);
    const auto shared = ansatz::build_r1(2);
    const auto unshared = ansatz::unshare_rotations(shared);
    const auto p = g.params(shared.n_params, 1.0);
    ansatz::ParamVector q(static_cast<std::size_t>(unshared.n_params));
    for (std::size_t k = 0; k < p.size(); ++k) q[k] = p[k];
    for (std::size_t n = 0; n < shared.gates.size(); ++n)
        if (shared.gates[n].param >= 0) q[unshared.gates[n].param] = p[shared.gates[n].param];

    const auto spec = spec_for(LossKind::AmpPhase);
    const auto in = input_state(shared, s, TargetKind::NonlinearFromLin);
    const auto t = sample_target(s, TargetKind::NonlinearFromLin);
    const auto gs = loss_and_grad(shared, p, in, t, spec).grad;
    const auto gu = loss_and_grad(unshared, q, in, t, spec).grad;

    std::vector<double> summed(p.size(), 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) summed[k] += gu[k];  // Ising parameters keep their index
    for (std::size_t n = 0; n < shared.gates.size(); ++n)
        if (shared.gates[n].kind == ansatz::GateKind::Rot) summed[shared.gates[n].param] += gu[unshared.gates[n].param];
    CHECK(rel_err(summed, gs) < 1e-12);
}

TEST_CASE("nonunitary target drops leakage and normalizes the physical ratios") {
    Gen g(47);
    const auto f = g.populations();
    const auto t = nonunitary_target(f);
    CHECK(t.norm2() == doctest::Approx(1.0).epsilon(1e-14));
    for (int b : qs::kLeakageIndex) CHECK(std::abs(t[b]) == 0.0);
    CHECK(loss_ratio(t, t) < 1e-15);
    // Scaling the physical block leaves the ratio loss unchanged.
    PureState scaled = t;
    for (int k = 0; k < 16; ++k) scaled[k] *= 0.5;
    scaled[5] = 0.8;
    CHECK(loss_ratio(scaled, t) < 1e-14);
}

TEST_CASE("rho plus nonunitary is rejected") {
    LossSpec s;
    s.kind = LossKind::Rho;
    s.nonunitary = true;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("adam first step moves each parameter by lr against the gradient sign") {
    std::vector<double> p{1.0, -2.0, 0.5};
    const std::vector<double> g{0.3, -4.0, 0.0};
    AdamState st;
    adam_step(p, g, st, 0.01);
    CHECK(p[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)));
    CHECK(p[1] == doctest::Approx(-2.0 + 0.01));
    CHECK(p[2] == 0.5);
}

TEST_CASE("adam minimizes a quadratic") {
    std::vector<double> p{3.0, -1.0};
    AdamState st;
    for (int k = 0; k < 5000; ++k) {
        const std::vector<double> g{2.0 * (p[0] - 1.0), 20.0 * (p[1] + 0.5)};
        adam_step(p, g, st, 0.01);
    }
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p[1] == doctest::Approx(-0.5).epsilon(1e-3));
}

TEST_CASE("batch gradient is the mean of sample gradients") {
    Gen g(48);
    std::vector<data::CollisionSample> ss;
    for (int k = 0; k < 5; ++k) ss.push_back(sample(g));
    const auto c = ansatz::build_r1(1);
    const auto p = g.params(c.n_params, 0.5);
    const auto spec = spec_for(LossKind::Rho);
    const std::vector<std::size_t> idx{0, 2, 4};
    const auto bg = batch_grad(c, p, ss, idx, spec, TargetKind::NonlinearFromLin);
    std::vector<double> mean(p.size(), 0.0);
    for (auto i : idx) {
        const auto e = loss_and_grad(c, p, input_state(c, ss[i], TargetKind::NonlinearFromLin),
                                     sample_target(ss[i], TargetKind::NonlinearFromLin), spec);
        for (std::size_t k = 0; k < p.size(); ++k) mean[k] += e.grad[k] / 3.0;
    }
    CHECK(rel_err(bg.grad, mean) < 1e-14);
}

TEST_CASE("training lowers the loss and is deterministic") {
    Gen g(49);
    std::vector<data::CollisionSample> ss;
    for (int k = 0; k < 64; ++k) ss.push_back(data::make_sample(g.populations(0.1, 0.1), 1.0, data::Source::Harvested));
    TrainConfig tc;
    tc.layers = 2;
    tc.epochs = 5;
    tc.learning_rate = 1e-2;
    tc.batch_size = 8;
    tc.seed = 3;
    const auto a = train::train(tc, ss);
    const auto b = train::train(tc, ss);
    CHECK(a.model.params == b.model.params);
    CHECK(a.history.size() == 5);
    const auto spec = tc.loss;
    ansatz::Model init = a.model;
    init.params = ansatz::init_params(init.circuit, tc.seed, tc.init_scale);
    CHECK(mean_loss(a.model, ss, spec, tc.target).total < mean_loss(init, ss, spec, tc.target).total);
}

TEST_CASE("validator picks the best checkpoint") {
    Gen g(50);
    std::vector<data::CollisionSample> ss;
    for (int k = 0; k < 16; ++k) ss.push_back(sample(g));
    TrainConfig tc;
    tc.layers = 1;
    tc.epochs = 4;
    tc.validate_every = 1;
    int calls = 0;
    const auto r = train::train(tc, ss, [&](const ansatz::Model&) { return std::array{3.0, 1.0, 2.0, 5.0}[calls++]; });
    CHECK(calls == 4);
    CHECK(r.best_epoch == 2);
    CHECK(r.best_validation == 1.0);
}
