#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ntnpred/checkpoint.hpp"
#include "ntnpred/cmatrix.hpp"
#include "ntnpred/errors.hpp"
#include "ntnpred/estimation.hpp"
#include "ntnpred/layers.hpp"
#include "ntnpred/optim.hpp"
#include "ntnpred/rng.hpp"

namespace ntnpred {

/// Where the TimeFlip ordering is undone. FlipBackAtOutput runs the decoder
/// in flipped order and mirrors the final output; UnflipAfterLstm mirrors the
/// LSTM output before the decoder. FlipBeforeLstm never undoes it: LSTM step
/// j, driven first by the most recent input symbol, becomes output symbol j.
/// NoFlip drops TimeFlip entirely (ablation).
enum class FlipPlacement { FlipBackAtOutput, UnflipAfterLstm, FlipBeforeLstm, NoFlip };
std::string_view to_string(FlipPlacement f);
FlipPlacement flip_placement_from_string(std::string_view s);

/// The seven trainable layers: Conv2D_1, Conv2D_S1, Conv2D_S2, LSTM,
/// TConv2D_1, TConv2D_2, Conv2D_2.
std::vector<LayerSpec> default_architecture();

inline constexpr std::size_t kModelSubcarriers = 48;
inline constexpr std::size_t kModelSymbols = 14;

/// Stacked-tensor scale: sqrt(mean |h|^2 / 2), so the real (48,14,2) tensor
/// has unit mean square and mse_loss equals NMSE relative to the input power.
double norm_scale(const CMatrix& m);
/// (48,14) complex -> (48,14,2) real, divided by scale (zeros when scale == 0).
Tensor stack_complex(const CMatrix& m, double scale);
/// Rank-3 (Lf,Lt,2) tensor, or sample b of a rank-4 batch, times scale.
CMatrix unstack_complex(const Tensor& t, double scale, std::size_t b = 0);

class PredictorModel {
public:
    /// Fresh model: He-uniform kernels (effective fan-in), uniform
    /// +-1/sqrt(U) LSTM weights, forget-gate bias 1, other biases zero,
    /// BatchNorm scale 1 / shift 0 with running stats (0, 1).
    explicit PredictorModel(std::uint64_t seed, FlipPlacement flip = FlipPlacement::FlipBackAtOutput);

    const std::vector<LayerSpec>& architecture() const { return arch_; }
    FlipPlacement flip() const { return flip_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    /// Weights and biases of the seven layers; BatchNorm excluded.
    std::size_t parameter_count() const { return params_.parameter_count(true); }

    bool trained = false;

    /// Activations kept for backward.
    struct Cache {
        Tensor x, a1, z1, seq, h4, sb_pre, sb, t1, u1, d1, d2;
        BnCache bn1, bn_s2, bn_t1;
        LstmCache lstm;
    };

    /// x is (B,48,14,2) or (48,14,2). Train mode uses batch statistics and
    /// updates the running statistics with the given momentum.
    Tensor forward(const Tensor& x, BnMode mode, Cache* cache = nullptr, double bn_momentum = 0.1);
    /// Infer-mode forward; read-only, safe to call concurrently.
    Tensor infer(const Tensor& x) const;
    /// Accumulates parameter gradients for d(loss)/d(output) = grad_out.
    void backward(const Tensor& grad_out, const Cache& cache);

    /// Normalize, stack, infer, unstack, denormalize. Input must be 48x14.
    CMatrix predict(const CMatrix& estimate) const;
    std::vector<CMatrix> predict_batch(const std::vector<CMatrix>& estimates) const;

private:
    Tensor run(const Tensor& x, BnMode mode, Cache* cache, double momentum, std::vector<Tensor>& bn_stats) const;

    std::vector<LayerSpec> arch_;
    FlipPlacement flip_;
    ParamStore params_;
};

/// Wraps PredictorModel::predict and tags the result as Predicted.
ChannelEstimate predict_slot(const PredictorModel& model, const ChannelEstimate& est_slot_n);

Checkpoint make_checkpoint(const PredictorModel& model, const Adam* optimizer = nullptr, std::uint64_t epoch = 0,
                           nlohmann::json metadata = nlohmann::json::object());
/// Throws CheckpointMismatch when the stored architecture or tensor layout
/// differs from the built model.
PredictorModel model_from_checkpoint(const Checkpoint& ckpt);

// ---------------------------------------------------------------------------
// Datasets and training.

struct TrainConfig {
    std::size_t batch_size = 1024;
    std::vector<double> eb_n0_grid_db{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    LrSchedule lr_schedule{};
    double l2 = 1e-6;
    int early_stop_patience_cycles = 3;
    std::string channel_profile = "NTN-TDL-C";
    double ue_speed_kmh = 5.0;
    int data_mod_order = 16;
    std::uint64_t seed = 1;

    double carrier_hz = 2e9;
    double delay_spread_s = 30e-9;
    double code_rate = 0.75;
    FlipPlacement flip = FlipPlacement::FlipBackAtOutput;
    /// Desk-scale controls. validation_size 0 means batch_size.
    int max_epochs = 3000;
    int steps_per_epoch = 1;
    std::size_t validation_size = 0;
    std::optional<double> constant_lr;
    double bn_momentum = 0.1;
    /// Reuse the epoch-0 training and validation batches every epoch.
    bool freeze_dataset = false;

    void validate() const;
    int patience_epochs() const { return early_stop_patience_cycles * lr_schedule.annealing_period_epochs; }
};

struct TrainingSample {
    CMatrix input_estimate;  // data-aided LS estimate of slot n
    CMatrix target_truth;    // true CFR of slot n+1
    double norm_scale = 1.0;
    double eb_n0_db = 0.0;
};

/// Sample i uses an RNG stream derived from (seed, stream, index, i), so
/// batches with different (stream, index) never share randomness.
/// eb_n0_override replaces the uniform draw from the training grid.
std::vector<TrainingSample> make_dataset(const TrainConfig& cfg, std::size_t n_samples, Stream stream,
                                         std::uint64_t index, std::optional<double> eb_n0_override = std::nullopt);

/// Normalized inputs and targets, both divided by the input's scale.
struct Batch {
    Tensor inputs;   // (B,48,14,2)
    Tensor targets;  // (B,48,14,2)
};
Batch make_batch(const std::vector<TrainingSample>& samples);

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_nmse = 0.0;  // linear
};

struct TrainResult {
    std::vector<EpochLog> history;
    int best_epoch = -1;  // -1: the initial weights were never beaten
    double best_val_nmse = 0.0;
    double initial_val_nmse = 0.0;
    int epochs_run = 0;
    bool early_stopped = false;
};

/// Non-finite loss during training.
class TrainingDiverged : public NumericalError {
public:
    TrainingDiverged(const std::string& what, int epoch) : NumericalError(what), epoch(epoch) {}
    int epoch;
};

/// Runs the training loop in place; the model ends holding the best
/// validation weights. Early stopping compares against the initial weights
/// too, so patience counts epochs since the last strict improvement.
TrainResult train(PredictorModel& model, Adam& optimizer, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

struct NmseSummary {
    double predicted = 0.0;    // mean per-sample NMSE against the true next slot
    double persistence = 0.0;  // reusing the slot-n estimate
    std::size_t samples = 0;
};
NmseSummary evaluate_nmse(const PredictorModel& model, const std::vector<TrainingSample>& samples);

double to_db(double linear);

}  // namespace ntnpred
