#include "ntnpred/harness.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "ntnpred/channel.hpp"
#include "ntnpred/errors.hpp"
#include "ntnpred/link.hpp"

namespace ntnpred {

namespace {

constexpr double kSubcarriers = 48.0;
constexpr double kSlotSymbols = 14.0;
constexpr double kPilotSymbols = 2.0;

double bits_per_symbol(int mod_order) { return std::log2(static_cast<double>(mod_order)); }

// Iterations are evaluated in rounds of this size and reduced in order.
constexpr std::uint64_t kRound = 64;

struct IterationResult {
    std::uint64_t bit_err_e = 0, bits_e = 0;
    std::uint64_t bit_err_p = 0, bits_p = 0;
    std::uint64_t blk_err_e = 0, blk_e = 0;
    std::uint64_t blk_err_p = 0, blk_p = 0;
    double nmse_pred = 0.0, nmse_est = 0.0, nmse_persist = 0.0;
};

}  // namespace

double throughput_estimation(double bler_e, int mod_order, double code_rate) {
    return bits_per_symbol(mod_order) * code_rate * kSubcarriers * (kSlotSymbols - kPilotSymbols) / kSlotDurationS *
           (1.0 - bler_e);
}

double throughput_prediction(double bler_e, double bler_p, int mod_order, double code_rate) {
    const double pilot_free = bits_per_symbol(mod_order) * code_rate * kSubcarriers * kSlotSymbols / kSlotDurationS;
    return (throughput_estimation(bler_e, mod_order, code_rate) + pilot_free * (1.0 - bler_p)) / 2.0;
}

double peak_uplift_nominal() { return (2.0 * kSlotSymbols) / (2.0 * kSlotSymbols - kPilotSymbols); }

double peak_uplift_layout() {
    return (kSlotSymbols - kPilotSymbols + kSlotSymbols) / (2.0 * (kSlotSymbols - kPilotSymbols));
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double center = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    // The bounds touch 0 and 1 exactly at the extremes; cancellation would leave ~1e-18.
    return {successes == 0 ? 0.0 : std::max(0.0, center - half),
            successes == trials ? 1.0 : std::min(1.0, center + half)};
}

void ScenarioConfig::validate() const {
    if (max_iterations < 1) throw ConfigError("scenario.max_iterations must be >= 1");
    if (!(code_rate > 0.0 && code_rate <= 1.0)) throw ConfigError("scenario.code_rate must lie in (0, 1]");
    if (data_mod_order != 4 && data_mod_order != 16 && data_mod_order != 64)
        throw ConfigError("scenario.data_mod_order must be 4, 16 or 64");
    if (!(ue_speed_kmh >= 0.0)) throw ConfigError("scenario.ue_speed_kmh must be >= 0");
    if (!(carrier_hz > 0.0)) throw ConfigError("scenario.carrier_hz must be > 0");
    if (std::isnan(eb_n0_db)) throw ConfigError("scenario.eb_n0_db must be a number");
    if (ldpc_iterations < 1) throw ConfigError("scenario.ldpc_iterations must be >= 1");
}

MetricsRecord run_scenario(const ScenarioConfig& cfg) {
    if (!cfg.checkpoint) return run_scenario(cfg, nullptr);
    const auto model = model_from_checkpoint(load_checkpoint(*cfg.checkpoint));
    return run_scenario(cfg, &model);
}

MetricsRecord run_scenario(const ScenarioConfig& cfg, const PredictorModel* model) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto profile = load_profile(cfg.channel_profile, default_profile_path(), cfg.delay_spread_s);
    const double fd = doppler_from_speed(cfg.ue_speed_kmh, cfg.carrier_hz);
    const double sigma = CfoProcess::default_sigma(cfg.carrier_hz);
    const LinkChain chain_e(cfg.data_mod_order, GridLayout::pilot_full(), cfg.code_rate, 0x1d5eed, cfg.ldpc_iterations);
    const LinkChain chain_p(cfg.data_mod_order, GridLayout::pilot_removal(), cfg.code_rate, 0x1d5eed,
                            cfg.ldpc_iterations);
    const double n0 = noise_variance(es_n0_from_eb_n0(cfg.eb_n0_db, cfg.data_mod_order, cfg.code_rate));
    const std::size_t nsc = chain_e.layout().n_subcarriers, nsym = chain_e.layout().slot_symbols;

    MetricsRecord rec;
    rec.channel_profile = cfg.channel_profile;
    rec.ue_speed_kmh = cfg.ue_speed_kmh;
    rec.mod_order = cfg.data_mod_order;
    rec.eb_n0_db = cfg.eb_n0_db;
    if (!model && !cfg.perfect_csi)
        rec.warnings.push_back("no predictor checkpoint: the prediction branch uses the persistence estimate");
    if (model && !model->trained && !cfg.perfect_csi)
        rec.warnings.push_back("predictor checkpoint is marked untrained");

    auto iterate = [&](std::uint64_t it) {
        IterationResult r;
        Rng rng(cfg.seed, Stream::MonteCarlo, it);
        const auto h = draw_burst_cfr(profile, fd, sigma, nsc, 2 * nsym, rng).entries;
        const auto tx_e = chain_e.transmit(rng);
        const auto tx_p = chain_p.transmit(rng, &tx_e, 1);
        const auto w = awgn_matrix(nsc, 2 * nsym, n0, rng);
        ResourceGrid y_e{CMatrix(nsc, 2 * nsym), chain_e.layout()}, y_p{CMatrix(nsc, 2 * nsym), chain_p.layout()};
        for (std::size_t i = 0; i < h.size(); ++i) {
            y_e.entries.values()[i] = h.values()[i] * tx_e.x.entries.values()[i] + w.values()[i];
            y_p.entries.values()[i] = h.values()[i] * tx_p.x.entries.values()[i] + w.values()[i];
        }
        const CMatrix h1 = h.columns(nsym, nsym);

        auto count_e = [&](const SlotRx& rx) {
            r.bit_err_e += rx.bit_errors;
            r.bits_e += rx.bits;
            r.blk_err_e += rx.block_error;
            ++r.blk_e;
        };
        auto count_p_bits = [&](const SlotRx& rx) {
            r.bit_err_p += rx.bit_errors;
            r.bits_p += rx.bits;
        };

        if (cfg.perfect_csi) {
            for (std::size_t s = 0; s < 2; ++s) {
                const auto rx = chain_e.receive_slot(y_e.entries.columns(s * nsym, nsym), h.columns(s * nsym, nsym), n0,
                                                     tx_e, s);
                count_e(rx);
                if (s == 0) count_p_bits(rx);
            }
            const auto rx1 = chain_p.receive_slot(y_p.entries.columns(nsym, nsym), h1, n0, tx_p, 1);
            count_p_bits(rx1);
            r.blk_err_p += rx1.block_error;
            ++r.blk_p;
            return r;
        }

        const auto slot0 = receive_pilot_slot(chain_e, y_e, tx_e, 0, n0, true);
        count_e(slot0.rx);
        count_p_bits(slot0.rx);
        const auto slot1_e = receive_pilot_slot(chain_e, y_e, tx_e, 1, n0, true);
        count_e(slot1_e.rx);

        const CMatrix pred = model ? model->predict(slot0.data_aided.entries) : slot0.data_aided.entries;
        const auto rx1 = chain_p.receive_slot(y_p.entries.columns(nsym, nsym), pred, n0, tx_p, 1);
        count_p_bits(rx1);
        r.blk_err_p += rx1.block_error;
        ++r.blk_p;

        r.nmse_pred = nmse(pred, h1);
        r.nmse_est = nmse(slot1_e.interpolated.entries, h1);
        r.nmse_persist = nmse(slot0.data_aided.entries, h1);
        return r;
    };

    double sum_pred = 0.0, sum_est = 0.0, sum_persist = 0.0;
    bool done = false;
    std::vector<IterationResult> round;
    for (std::uint64_t start = 0; start < cfg.max_iterations && !done; start += kRound) {
        const std::uint64_t count = std::min(kRound, cfg.max_iterations - start);
        round.assign(count, {});
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i)
            round[static_cast<std::size_t>(i)] = iterate(start + static_cast<std::uint64_t>(i));
        for (const auto& r : round) {
            rec.bit_errors_est += r.bit_err_e;
            rec.bits_est += r.bits_e;
            rec.bit_errors_pred += r.bit_err_p;
            rec.bits_pred += r.bits_p;
            rec.block_errors_e += r.blk_err_e;
            rec.blocks_e += r.blk_e;
            rec.block_errors_p += r.blk_err_p;
            rec.blocks_p += r.blk_p;
            sum_pred += r.nmse_pred;
            sum_est += r.nmse_est;
            sum_persist += r.nmse_persist;
            ++rec.iterations_run;
            if (rec.block_errors_e >= cfg.min_block_errors && rec.block_errors_p >= cfg.min_block_errors) {
                done = true;
                break;
            }
        }
    }

    auto ratio = [](std::uint64_t a, std::uint64_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    rec.ber_uncoded_est = ratio(rec.bit_errors_est, rec.bits_est);
    rec.ber_uncoded_pred = ratio(rec.bit_errors_pred, rec.bits_pred);
    rec.ber_est_ci = wilson_interval(rec.bit_errors_est, rec.bits_est);
    rec.ber_pred_ci = wilson_interval(rec.bit_errors_pred, rec.bits_pred);
    rec.bler_e = ratio(rec.block_errors_e, rec.blocks_e);
    rec.bler_p = ratio(rec.block_errors_p, rec.blocks_p);
    rec.bler_e_ci = wilson_interval(rec.block_errors_e, rec.blocks_e);
    rec.bler_p_ci = wilson_interval(rec.block_errors_p, rec.blocks_p);
    rec.tp_e_bps = throughput_estimation(rec.bler_e, cfg.data_mod_order, cfg.code_rate);
    rec.tp_p_bps = throughput_prediction(rec.bler_e, rec.bler_p, cfg.data_mod_order, cfg.code_rate);
    const double n = static_cast<double>(rec.iterations_run);
    if (cfg.perfect_csi) {
        rec.nmse_pred_db = rec.nmse_est_db = rec.nmse_persist_db = -std::numeric_limits<double>::infinity();
    } else {
        rec.nmse_pred_db = to_db(sum_pred / n);
        rec.nmse_est_db = to_db(sum_est / n);
        rec.nmse_persist_db = to_db(sum_persist / n);
    }
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

std::string_view to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::EbN0: return "ebn0";
        case SweepAxis::UeSpeed: return "speed";
        case SweepAxis::ChannelModel: return "channel";
        case SweepAxis::ModOrder: return "mod";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(std::string_view s) {
    for (auto a : {SweepAxis::EbN0, SweepAxis::UeSpeed, SweepAxis::ChannelModel, SweepAxis::ModOrder})
        if (s == to_string(a)) return a;
    throw ConfigError("unknown sweep axis '" + std::string(s) + "' (expected ebn0, speed, channel or mod)");
}

std::vector<MetricsRecord> sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                                 const PredictorModel* model) {
    if (values.empty()) throw ConfigError("sweep: no values given");
    auto number = [](const std::string& v) {
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v.size()) throw ConfigError("sweep: '" + v + "' is not a number");
        return d;
    };
    std::vector<MetricsRecord> out;
    for (const auto& v : values) {
        ScenarioConfig c = base;
        switch (axis) {
            case SweepAxis::EbN0: c.eb_n0_db = number(v); break;
            case SweepAxis::UeSpeed: c.ue_speed_kmh = number(v); break;
            case SweepAxis::ChannelModel: c.channel_profile = v; break;
            case SweepAxis::ModOrder: c.data_mod_order = static_cast<int>(number(v)); break;
        }
        out.push_back(run_scenario(c, model));
    }
    return out;
}

}  // namespace ntnpred
