#include "qlbm/training.hpp"

#include "qlbm/errors.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace qlbm::train {

using ansatz::Gate;
using ansatz::GateKind;

PureState input_state(const CircuitSpec& circuit, const data::CollisionSample& s, TargetKind target) {
    const auto& f = target == TargetKind::NonlinearFromLin ? s.f_lin : s.f_str;
    return circuit.kind == ModelKind::R1 ? qs::encode_r1(f) : qs::encode_r2(f);
}

Target sample_target(const data::CollisionSample& s, TargetKind target) {
    const auto& in = target == TargetKind::NonlinearFromLin ? s.f_lin : s.f_str;
    const auto& out = target == TargetKind::NonlinearFromLin ? s.f_ref : s.f_lin;
    double rho = 0.0;
    for (double v : in) rho += v;
    return make_target(out, rho);
}

LossValue forward_loss(const CircuitSpec& circuit, std::span<const double> params,
                       const PureState& input, const Target& target, const LossSpec& spec) {
    PureState psi = input;
    ansatz::apply(circuit, params, psi);
    return evaluate_loss(spec, psi, target);
}

namespace {

qs::PauliOp op_of(const Gate& g) { return {g.axis, g.q1, g.kind == GateKind::Ising ? g.q2 : -1}; }

double re_inner(std::span<const cplx> a, std::span<const cplx> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k].real() * b[k].real() + a[k].imag() * b[k].imag();
    return s;
}

} // namespace

SampleEval loss_and_grad(const CircuitSpec& circuit, std::span<const double> params,
                         const PureState& input, const Target& target, const LossSpec& spec) {
    PureState psi = input;
    ansatz::apply(circuit, params, psi);
    std::vector<cplx> lam;
    SampleEval out;
    out.loss = evaluate_loss(spec, psi, target, &lam);
    out.grad.assign(static_cast<std::size_t>(circuit.n_params), 0.0);

    std::vector<cplx> tmp(lam.size());
    auto psi_amp = psi.amp();
    for (auto it = circuit.gates.rbegin(); it != circuit.gates.rend(); ++it) {
        const Gate& g = *it;
        if (g.kind == GateKind::CNOT) {
            qs::apply_cnot(psi_amp, g.q1, g.q2);
            qs::apply_cnot(lam, g.q1, g.q2);
            continue;
        }
        const double theta = params[static_cast<std::size_t>(g.param)];
        const auto op = op_of(g);
        qs::apply_pauli_rotation(psi_amp, op, -theta);
        std::copy(psi_amp.begin(), psi_amp.end(), tmp.begin());
        // dU/dθ = −½ sin(θ/2) I − (i/2) cos(θ/2) P
        qs::apply_pauli_combo(tmp, op, {-0.5 * std::sin(0.5 * theta), 0.0},
                              {0.0, -0.5 * std::cos(0.5 * theta)});
        out.grad[static_cast<std::size_t>(g.param)] += re_inner(lam, tmp);
        qs::apply_pauli_rotation(lam, op, -theta);
    }
    return out;
}

std::vector<double> param_shift_grad(const CircuitSpec& circuit, std::span<const double> params,
                                     const PureState& input, const Target& target,
                                     const LossSpec& spec) {
    PureState psi = input;
    ansatz::apply(circuit, params, psi);
    std::vector<cplx> g;
    evaluate_loss(spec, psi, target, &g);

    std::vector<double> grad(static_cast<std::size_t>(circuit.n_params), 0.0);
    const double inv = 1.0 / (2.0 * std::numbers::sqrt2);
    for (std::size_t k = 0; k < circuit.gates.size(); ++k) {
        const int p = circuit.gates[k].param;
        if (p < 0) continue;
        PureState plus = input;
        PureState minus = input;
        for (std::size_t j = 0; j < circuit.gates.size(); ++j) {
            const Gate& gate = circuit.gates[j];
            const double theta = gate.param >= 0 ? params[static_cast<std::size_t>(gate.param)] : 0.0;
            const double shift = j == k ? 0.5 * std::numbers::pi : 0.0;
            ansatz::apply_gate(plus.amp(), gate, theta + shift);
            ansatz::apply_gate(minus.amp(), gate, theta - shift);
        }
        std::vector<cplx> dpsi(g.size());
        for (std::size_t b = 0; b < g.size(); ++b) dpsi[b] = (plus[static_cast<int>(b)] - minus[static_cast<int>(b)]) * inv;
        grad[static_cast<std::size_t>(p)] += re_inner(g, dpsi);
    }
    return grad;
}

std::vector<double> finite_difference_grad(const CircuitSpec& circuit, std::span<const double> params,
                                           const PureState& input, const Target& target,
                                           const LossSpec& spec, double h) {
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> grad(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double orig = p[k];
        p[k] = orig + h;
        const double lp = forward_loss(circuit, p, input, target, spec).total;
        p[k] = orig - h;
        const double lm = forward_loss(circuit, p, input, target, spec).total;
        p[k] = orig;
        grad[k] = (lp - lm) / (2.0 * h);
    }
    return grad;
}

SampleEval batch_grad(const CircuitSpec& circuit, std::span<const double> params,
                      std::span<const data::CollisionSample> samples,
                      std::span<const std::size_t> batch, const LossSpec& spec, TargetKind target) {
    std::vector<SampleEval> evals(batch.size());
    const auto n = static_cast<std::int64_t>(batch.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < n; ++j) {
        try {
            const auto& s = samples[batch[static_cast<std::size_t>(j)]];
            evals[static_cast<std::size_t>(j)] =
                loss_and_grad(circuit, params, input_state(circuit, s, target), sample_target(s, target), spec);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    SampleEval mean;
    mean.grad.assign(static_cast<std::size_t>(circuit.n_params), 0.0);
    mean.loss.success = 0.0;
    const double inv = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
    for (std::size_t j = 0; j < evals.size(); ++j) {
        const auto& e = evals[j];
        if (!std::isfinite(e.loss.total)) {
            double norm = 0.0;
            for (double v : params) norm += v * v;
            throw NumericalError("non-finite loss at sample " + std::to_string(batch[j]) +
                                 " (parameter norm " + std::to_string(std::sqrt(norm)) + ")");
        }
        mean.loss.total += e.loss.total * inv;
        mean.loss.amp += e.loss.amp * inv;
        mean.loss.phase += e.loss.phase * inv;
        mean.loss.macro += e.loss.macro * inv;
        mean.loss.success += e.loss.success * inv;
        for (std::size_t k = 0; k < e.grad.size(); ++k) mean.grad[k] += e.grad[k] * inv;
    }
    return mean;
}

void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state, double lr) {
    if (grad.size() != params.size()) throw InvalidInput("adam_step: gradient/parameter size mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw InvalidInput("adam_step: optimizer state size mismatch");
    ++state.t;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grad[k];
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grad[k] * grad[k];
        const double mhat = state.m[k] / c1;
        const double vhat = state.v[k] / c2;
        params[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

void TrainConfig::validate() const {
    if (layers < 1) throw ConfigError("train: layers must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (!(tau > 0.5)) throw ConfigError("train: tau must exceed 0.5");
    loss.validate();
    if ((model == ModelKind::R2) != (loss.kind == LossKind::Rho1))
        throw ConfigError("train: the two-register model trains with the rho1 loss, and only it");
}

LossValue mean_loss(const ansatz::Model& model, std::span<const data::CollisionSample> samples,
                    const LossSpec& spec, TargetKind target) {
    std::vector<std::size_t> all(samples.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return batch_grad(model.circuit, model.params, samples, all, spec, target).loss;
}

TrainResult train(const TrainConfig& config, std::span<const data::CollisionSample> samples,
                  const Validator& validator, const EpochCallback& on_epoch) {
    config.validate();
    if (config.epochs > 0 && samples.empty()) throw ConfigError("train: empty dataset");

    TrainResult result;
    ansatz::Model& model = result.model;
    model.circuit = config.model == ModelKind::R1 ? ansatz::build_r1(config.layers)
                                                  : ansatz::build_r2(config.layers);
    model.params = ansatz::init_params(model.circuit, config.seed, config.init_scale);
    model.tau = config.tau;
    model.loss = config.loss.name();
    model.nonunitary = config.loss.nonunitary;
    model.phase_aware = config.loss.phase_aware();
    model.seed = config.seed;
    result.best = model;

    AdamState adam;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const auto epoch_seed = data::sample_rng(config.seed, 0x9E3779B97F4A7C15ULL + epoch)();
        const auto batches = data::shuffle_batches(samples.size(), config.batch_size, epoch_seed);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.success = 0.0;
        const double inv_n = 1.0 / static_cast<double>(samples.size());
        for (const auto& batch : batches) {
            const SampleEval e = batch_grad(model.circuit, model.params, samples, batch, config.loss, config.target);
            const double w = static_cast<double>(batch.size()) * inv_n;
            rec.loss += e.loss.total * w;
            rec.amp += e.loss.amp * w;
            rec.phase += e.loss.phase * w;
            rec.macro += e.loss.macro * w;
            rec.success += e.loss.success * w;
            adam_step(model.params, e.grad, adam, config.learning_rate);
        }

        if (validator && config.validate_every > 0 &&
            (epoch % config.validate_every == 0 || epoch == config.epochs)) {
            rec.validation = validator(model);
            if (std::isfinite(rec.validation) &&
                (!std::isfinite(result.best_validation) || rec.validation < result.best_validation)) {
                result.best_validation = rec.validation;
                result.best_epoch = epoch;
                result.best = model;
            }
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        spdlog::info("epoch {:4d}  loss {:.6e}  success {:.4f}{}", epoch, rec.loss, rec.success,
                     std::isfinite(rec.validation) ? fmt::format("  validation {:.4f}", rec.validation)
                                                   : std::string{});
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec, model);
    }
    if (!std::isfinite(result.best_validation)) {
        result.best = model;
        result.best_epoch = config.epochs;
    }
    return result;
}

lbm::Populations predict(const ansatz::Model& model, const data::CollisionSample& s, TargetKind target) {
    PureState psi = input_state(model.circuit, s, target);
    ansatz::apply(model.circuit, model.params, psi);
    return predicted_populations(psi, sample_target(s, target).rho, model.nonunitary);
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.precision(12);
    // Wall time is left out so that reruns produce identical files.
    os << "epoch,loss,amp,phase,macro,success,validation\n";
    for (const auto& r : history) {
        os << r.epoch << ',' << r.loss << ',' << r.amp << ',' << r.phase << ',' << r.macro << ','
           << r.success << ',';
        if (std::isfinite(r.validation)) os << r.validation;
        os << '\n';
    }
}

} // namespace qlbm::train
