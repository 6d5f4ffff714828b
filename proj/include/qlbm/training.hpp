#pragma once

// Gradients, Adam and the training loop for the collision circuits.

#include "qlbm/ansatz.hpp"
#include "qlbm/dataset.hpp"
#include "qlbm/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace qlbm::train {

using ansatz::CircuitSpec;
using ansatz::ModelKind;
using ansatz::ParamVector;

/// Which pair of a sample is (input, target).
enum class TargetKind { NonlinearFromLin, LinearFromStr };

struct SampleEval {
    LossValue loss;
    std::vector<double> grad;  ///< dL/dθ per shared parameter
};

/// Input state of a sample for the circuit kind.
PureState input_state(const CircuitSpec& circuit, const data::CollisionSample& s, TargetKind target);
Target sample_target(const data::CollisionSample& s, TargetKind target);

LossValue forward_loss(const CircuitSpec& circuit, std::span<const double> params,
                       const PureState& input, const Target& target, const LossSpec& spec);

/// Loss and exact gradient of one sample. Each gate occurrence contributes
/// Re<λ, (dU/dθ) ψ> where dU/dθ = [U(θ+π/2) − U(θ−π/2)]/(2√2) for the
/// ±1-eigenvalue generators used here; λ is the loss gradient pulled back
/// through the later gates.
SampleEval loss_and_grad(const CircuitSpec& circuit, std::span<const double> params,
                         const PureState& input, const Target& target, const LossSpec& spec);

/// Occurrence-wise shift rule on whole circuits: dψ/dθ_g is taken from the
/// outputs with occurrence g shifted by ±π/2, then contracted with the loss
/// gradient at the unshifted output. Slow; used to cross-check loss_and_grad.
std::vector<double> param_shift_grad(const CircuitSpec& circuit, std::span<const double> params,
                                     const PureState& input, const Target& target,
                                     const LossSpec& spec);

/// Central finite differences of the loss (test oracle).
std::vector<double> finite_difference_grad(const CircuitSpec& circuit, std::span<const double> params,
                                           const PureState& input, const Target& target,
                                           const LossSpec& spec, double h = 1e-6);

/// Batch-mean gradient; per-sample gradients are summed in sample order.
SampleEval batch_grad(const CircuitSpec& circuit, std::span<const double> params,
                      std::span<const data::CollisionSample> samples,
                      std::span<const std::size_t> batch, const LossSpec& spec, TargetKind target);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
};

/// One bias-corrected Adam update in place.
void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state, double lr);

struct TrainConfig {
    ModelKind model = ModelKind::R1;
    int layers = 20;
    std::size_t batch_size = 32;
    double learning_rate = 1e-4;
    int epochs = 100;
    std::uint64_t seed = 1;
    LossSpec loss;
    TargetKind target = TargetKind::NonlinearFromLin;
    double init_scale = 0.01;
    int validate_every = 0;  ///< run the validator every k epochs (0 = never)
    double tau = 1.0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double amp = 0.0;
    double phase = 0.0;
    double macro = 0.0;
    double success = 1.0;
    double validation = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

struct TrainResult {
    ansatz::Model model;   ///< final parameters
    ansatz::Model best;    ///< best validation checkpoint (final if never validated)
    int best_epoch = -1;
    double best_validation = std::numeric_limits<double>::quiet_NaN();
    std::vector<EpochRecord> history;
};

/// Validation error of a model (lower is better).
using Validator = std::function<double(const ansatz::Model&)>;
/// Called after each epoch; a checkpoint writer or progress logger.
using EpochCallback = std::function<void(const EpochRecord&, const ansatz::Model&)>;

/// Throws NumericalError on a non-finite loss with the offending sample id.
TrainResult train(const TrainConfig& config, std::span<const data::CollisionSample> samples,
                  const Validator& validator = {}, const EpochCallback& on_epoch = {});

/// Mean loss over a corpus at fixed parameters.
LossValue mean_loss(const ansatz::Model& model, std::span<const data::CollisionSample> samples,
                    const LossSpec& spec, TargetKind target);

/// Decoded prediction of the model for one sample (no renormalization unless
/// the model was trained non-unitary).
lbm::Populations predict(const ansatz::Model& model, const data::CollisionSample& s, TargetKind target);

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);

} // namespace qlbm::train
