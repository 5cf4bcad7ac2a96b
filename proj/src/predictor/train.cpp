#include <algorithm>
#include <cmath>
#include <string>

#include "ntnpred/channel.hpp"
#include "ntnpred/errors.hpp"
#include "ntnpred/link.hpp"
#include "ntnpred/predictor.hpp"

namespace ntnpred {

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
    if (eb_n0_grid_db.empty()) throw ConfigError("train.eb_n0_grid_db must not be empty");
    for (double v : eb_n0_grid_db)
        if (!std::isfinite(v)) throw ConfigError("train.eb_n0_grid_db entries must be finite");
    lr_schedule.validate();
    if (!(l2 >= 0.0)) throw ConfigError("train.l2 must be >= 0");
    if (early_stop_patience_cycles < 1) throw ConfigError("train.early_stop_patience_cycles must be >= 1");
    if (!(ue_speed_kmh >= 0.0)) throw ConfigError("train.ue_speed_kmh must be >= 0");
    if (data_mod_order != 4 && data_mod_order != 16 && data_mod_order != 64)
        throw ConfigError("train.data_mod_order must be 4, 16 or 64");
    if (!(carrier_hz > 0.0)) throw ConfigError("train.carrier_hz must be > 0");
    if (!(delay_spread_s >= 0.0)) throw ConfigError("train.delay_spread_s must be >= 0");
    if (!(code_rate > 0.0 && code_rate <= 1.0)) throw ConfigError("train.code_rate must lie in (0, 1]");
    if (max_epochs < 0) throw ConfigError("train.max_epochs must be >= 0");
    if (steps_per_epoch < 1) throw ConfigError("train.steps_per_epoch must be >= 1");
    if (constant_lr && !(*constant_lr >= 0.0)) throw ConfigError("train.constant_lr must be >= 0");
    if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ConfigError("train.bn_momentum must lie in [0, 1]");
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

std::vector<TrainingSample> make_dataset(const TrainConfig& cfg, std::size_t n_samples, Stream stream,
                                         std::uint64_t index, std::optional<double> eb_n0_override) {
    cfg.validate();
    const auto profile = load_profile(cfg.channel_profile, default_profile_path(), cfg.delay_spread_s);
    const double fd = doppler_from_speed(cfg.ue_speed_kmh, cfg.carrier_hz);
    const double sigma = CfoProcess::default_sigma(cfg.carrier_hz);
    const LinkChain chain(cfg.data_mod_order, GridLayout::pilot_removal(), cfg.code_rate);
    const auto& lay = chain.layout();
    const std::uint64_t base = derive_seed(cfg.seed, static_cast<std::uint64_t>(stream), index);

    std::vector<TrainingSample> out(n_samples);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_samples); ++i) {
        Rng rng(base, Stream::Misc, static_cast<std::uint64_t>(i));
        const double eb = eb_n0_override ? *eb_n0_override : cfg.eb_n0_grid_db[rng.below(cfg.eb_n0_grid_db.size())];
        const auto h = draw_burst_cfr(profile, fd, sigma, lay.n_subcarriers, lay.n_symbols(), rng).entries;
        const auto tx = chain.transmit(rng);
        const double n0 = noise_variance(es_n0_from_eb_n0(eb, cfg.data_mod_order, cfg.code_rate));
        // Only slot 0 is observed; slot 1 of y stays empty.
        ResourceGrid y{CMatrix(lay.n_subcarriers, lay.n_symbols()), lay};
        const auto w = awgn_matrix(lay.n_subcarriers, lay.slot_symbols, n0, rng);
        for (std::size_t k = 0; k < lay.n_subcarriers; ++k)
            for (std::size_t l = 0; l < lay.slot_symbols; ++l) y.entries(k, l) = h(k, l) * tx.x.entries(k, l) + w(k, l);
        auto rx = receive_pilot_slot(chain, y, tx, 0, n0, false);

        auto& s = out[static_cast<std::size_t>(i)];
        s.input_estimate = std::move(rx.data_aided.entries);
        s.target_truth = h.columns(lay.slot_symbols, lay.slot_symbols);
        s.norm_scale = norm_scale(s.input_estimate);
        s.eb_n0_db = eb;
    }
    return out;
}

Batch make_batch(const std::vector<TrainingSample>& samples) {
    const std::size_t per = kModelSubcarriers * kModelSymbols * 2;
    Batch b{Tensor({samples.size(), kModelSubcarriers, kModelSymbols, 2}),
            Tensor({samples.size(), kModelSubcarriers, kModelSymbols, 2})};
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const auto x = stack_complex(s.input_estimate, s.norm_scale);
        const auto t = stack_complex(s.target_truth, s.norm_scale);
        const auto off = static_cast<std::ptrdiff_t>(i * per);
        std::copy(x.values().begin(), x.values().end(), b.inputs.values().begin() + off);
        std::copy(t.values().begin(), t.values().end(), b.targets.values().begin() + off);
    }
    return b;
}

namespace {

struct Snapshot {
    std::vector<std::vector<double>> values;

    static Snapshot take(const ParamStore& p) {
        Snapshot s;
        for (const auto& g : p.groups())
            for (const auto& t : g.tensors) s.values.push_back(t.values());
        for (const auto& g : p.buffer_groups())
            for (const auto& t : g.tensors) s.values.push_back(t.values());
        return s;
    }
    void restore(ParamStore& p) const {
        std::size_t i = 0;
        for (auto& g : p.groups())
            for (auto& t : g.tensors) t.values() = values[i++];
        for (auto& g : p.buffer_groups())
            for (auto& t : g.tensors) t.values() = values[i++];
    }
};

}  // namespace

TrainResult train(PredictorModel& model, Adam& optimizer, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    cfg.validate();
    const std::size_t val_n = cfg.validation_size ? cfg.validation_size : cfg.batch_size;
    auto train_batch = [&](int e) {
        return make_batch(make_dataset(cfg, cfg.batch_size, Stream::TrainData, static_cast<std::uint64_t>(e)));
    };
    auto val_batch = [&](int e) {
        return make_batch(make_dataset(cfg, val_n, Stream::ValidationData, static_cast<std::uint64_t>(e)));
    };
    auto val_loss = [&](const Batch& b) { return mse_loss(model.infer(b.inputs), b.targets); };

    TrainResult res;
    Batch frozen_train, frozen_val = val_batch(0);
    if (cfg.freeze_dataset) frozen_train = train_batch(0);

    res.initial_val_nmse = res.best_val_nmse = val_loss(frozen_val);
    if (!std::isfinite(res.initial_val_nmse))
        throw TrainingDiverged("non-finite validation loss for the initial weights", -1);
    Snapshot best = Snapshot::take(model.params());
    int since_best = 0;

    for (int e = 0; e < cfg.max_epochs; ++e) {
        const double lr = cfg.constant_lr ? *cfg.constant_lr : lr_at_epoch(cfg.lr_schedule, e);
        const Batch fresh = cfg.freeze_dataset ? Batch{} : train_batch(e);
        const Batch& tb = cfg.freeze_dataset ? frozen_train : fresh;

        double loss = 0.0;
        for (int step = 0; step < cfg.steps_per_epoch; ++step) {
            model.params().zero_grad();
            PredictorModel::Cache cache;
            const Tensor out = model.forward(tb.inputs, BnMode::Train, &cache, cfg.bn_momentum);
            loss = mse_loss(out, tb.targets);
            if (!std::isfinite(loss))
                throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(e) +
                                           " (lr " + std::to_string(lr) + ")", e);
            model.backward(mse_loss_grad(out, tb.targets), cache);
            optimizer.step(model.params(), lr, cfg.l2);
        }

        const double val = cfg.freeze_dataset ? val_loss(frozen_val) : val_loss(e == 0 ? frozen_val : val_batch(e));
        if (!std::isfinite(val))
            throw TrainingDiverged("non-finite validation loss at epoch " + std::to_string(e), e);

        const EpochLog log{e, lr, loss, val};
        res.history.push_back(log);
        res.epochs_run = e + 1;
        if (on_epoch) on_epoch(log);

        if (val < res.best_val_nmse) {
            res.best_val_nmse = val;
            res.best_epoch = e;
            best = Snapshot::take(model.params());
            since_best = 0;
        } else if (++since_best >= cfg.patience_epochs()) {
            res.early_stopped = true;
            break;
        }
    }
    best.restore(model.params());
    model.trained = true;
    return res;
}

NmseSummary evaluate_nmse(const PredictorModel& model, const std::vector<TrainingSample>& samples) {
    NmseSummary out;
    constexpr std::size_t kChunk = 256;
    for (std::size_t lo = 0; lo < samples.size(); lo += kChunk) {
        const std::size_t hi = std::min(samples.size(), lo + kChunk);
        std::vector<CMatrix> inputs;
        for (std::size_t i = lo; i < hi; ++i) inputs.push_back(samples[i].input_estimate);
        const auto preds = model.predict_batch(inputs);
        for (std::size_t i = lo; i < hi; ++i) {
            out.predicted += nmse(preds[i - lo], samples[i].target_truth);
            out.persistence += nmse(samples[i].input_estimate, samples[i].target_truth);
        }
    }
    out.samples = samples.size();
    if (out.samples) {
        out.predicted /= static_cast<double>(out.samples);
        out.persistence /= static_cast<double>(out.samples);
    }
    return out;
}

}  // namespace ntnpred
