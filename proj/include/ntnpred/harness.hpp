#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ntnpred/layers.hpp"
#include "ntnpred/predictor.hpp"

namespace ntnpred {

// ---------------------------------------------------------------------------
// Throughput (bits per second). N_SC = 48, 14 symbols per slot, two pilot
// symbols in a pilot-bearing slot, 1 ms slots.

double throughput_estimation(double bler_e, int mod_order, double code_rate);
/// Mean of a pilot-bearing slot at BLER_e and a pilot-free slot at BLER_p.
double throughput_prediction(double bler_e, double bler_p, int mod_order, double code_rate);

/// N_sym / (N_sym - |I_pi|) = 28/26.
double peak_uplift_nominal();
/// Data-RE ratio of the two layouts, (12 + 14) / (12 + 12) = 13/12.
double peak_uplift_layout();

// ---------------------------------------------------------------------------
// Binomial confidence.

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};
/// Wilson score interval; z = 1.96 gives 95 %.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

// ---------------------------------------------------------------------------
// Monte Carlo link evaluation.

struct ScenarioConfig {
    double eb_n0_db = 10.0;
    int data_mod_order = 16;
    double code_rate = 0.75;
    std::string channel_profile = "NTN-TDL-C";
    double ue_speed_kmh = 5.0;
    double carrier_hz = 2e9;
    double delay_spread_s = 30e-9;
    std::optional<std::filesystem::path> checkpoint;
    std::uint64_t max_iterations = 100000;
    std::uint64_t min_block_errors = 100;
    std::uint64_t seed = 1;
    /// Genie receiver: both branches equalize with the true CFR.
    bool perfect_csi = false;
    int ldpc_iterations = 25;

    void validate() const;
};

struct MetricsRecord {
    std::string label;  // series name
    std::string channel_profile;
    double ue_speed_kmh = 0.0;
    int mod_order = 0;
    double eb_n0_db = 0.0;

    double ber_uncoded_est = 0.0;
    double ber_uncoded_pred = 0.0;
    Interval ber_est_ci, ber_pred_ci;
    double bler_e = 0.0;
    double bler_p = 0.0;
    Interval bler_e_ci, bler_p_ci;
    double tp_e_bps = 0.0;
    double tp_p_bps = 0.0;
    double nmse_pred_db = 0.0;
    double nmse_est_db = 0.0;
    double nmse_persist_db = 0.0;

    std::uint64_t iterations_run = 0;
    std::uint64_t bit_errors_est = 0, bits_est = 0;
    std::uint64_t bit_errors_pred = 0, bits_pred = 0;
    std::uint64_t block_errors_e = 0, blocks_e = 0;
    std::uint64_t block_errors_p = 0, blocks_p = 0;
    double wall_time_s = 0.0;
    std::vector<std::string> warnings;
};

/// Per iteration: one burst channel and one noise draw shared by both
/// branches. (e) pilots in both slots, interpolated LS in each. (p) slot 0 as
/// in (e), slot 1 pilot-free and equalized with the prediction made from the
/// data-aided slot-0 estimate. Without a model the (p) branch falls back to
/// persistence and says so in `warnings`.
///
/// Stops after max_iterations, or at the first iteration where both branches
/// have at least min_block_errors block errors. BLER_e counts both (e) slots,
/// BLER_p the predicted slot only; BER_pred covers slot 0 plus the predicted
/// slot. Results do not depend on the thread count.
MetricsRecord run_scenario(const ScenarioConfig& cfg, const PredictorModel* model);
/// Loads cfg.checkpoint when set. Throws CheckpointMismatch on a bad file.
MetricsRecord run_scenario(const ScenarioConfig& cfg);

enum class SweepAxis { EbN0, UeSpeed, ChannelModel, ModOrder };
std::string_view to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(std::string_view s);

/// One run_scenario per value with the base seed (paired realizations).
/// Numeric axes parse values as numbers; ChannelModel takes profile names.
std::vector<MetricsRecord> sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                                 const PredictorModel* model);

// ---------------------------------------------------------------------------
// Analytic complexity: multiplications per inference and trainable params.

struct LayerComplexity {
    std::string name;
    LayerKind kind = LayerKind::Conv2D;
    Shape input;
    Shape output;
    std::uint64_t multiplications = 0;
    std::uint64_t parameters = 0;
};

struct ComplexityReport {
    std::vector<LayerComplexity> layers;
    std::uint64_t total_multiplications = 0;
    std::uint64_t trainable_params = 0;

    nlohmann::json to_json() const;
    static ComplexityReport from_json(const nlohmann::json& j);
    std::string table() const;
};

/// Conv2D: L_f' L_t' N W_f W_t C (output extents); TConv2D: L_f L_t N W_f W_t C
/// (input extents); LSTM: L_t U (4N + 4U + 3). Other kinds count zero.
/// input_shapes[i] is layer i's input: (Lf, Lt, N), or (Lt, N) for an LSTM.
ComplexityReport complexity_report(const std::vector<LayerSpec>& arch, const std::vector<Shape>& input_shapes);
ComplexityReport complexity_report(const PredictorModel& model);
/// Input shapes of the seven default layers for a (48, 14, 2) input.
std::vector<Shape> default_layer_inputs();

/// Architecture file: {"input_shape": [...], "layers": [spec, ...]} where a
/// spec may carry its own "input_shape"; otherwise it takes the previous
/// layer's output (an LSTM flattens (Lf, Lt, C) into (Lt, Lf*C) and yields
/// (1, Lt, U)).
std::pair<std::vector<LayerSpec>, std::vector<Shape>> architecture_from_json(const nlohmann::json& j);

inline constexpr std::uint64_t kPaperMultiplications = 156576;
inline constexpr std::uint64_t kPaperParameters = 5806;

}  // namespace ntnpred
