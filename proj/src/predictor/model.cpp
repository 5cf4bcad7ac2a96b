#include <cmath>
#include <string>

#include "ntnpred/errors.hpp"
#include "ntnpred/predictor.hpp"

namespace ntnpred {

namespace {

enum Layer { kC1, kS1, kS2, kLstm, kT1, kT2, kC2 };
const char* const kBn[3] = {"BN_1", "BN_S2", "BN_T1"};

void accumulate(Tensor& param, const Tensor& g) {
    auto dst = param.grad();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void init_uniform(Tensor& t, double bound, Rng& rng) {
    for (auto& v : t.values()) v = rng.uniform(-bound, bound);
}

Tensor flip_if(const Tensor& t, bool on) { return on ? time_flip(t) : t; }

}  // namespace

std::string_view to_string(FlipPlacement f) {
    switch (f) {
        case FlipPlacement::FlipBackAtOutput: return "flip_back_at_output";
        case FlipPlacement::UnflipAfterLstm: return "unflip_after_lstm";
        case FlipPlacement::FlipBeforeLstm: return "flip_before_lstm";
        case FlipPlacement::NoFlip: return "no_flip";
    }
    return "?";
}

FlipPlacement flip_placement_from_string(std::string_view s) {
    for (auto f : {FlipPlacement::FlipBackAtOutput, FlipPlacement::UnflipAfterLstm, FlipPlacement::FlipBeforeLstm,
                   FlipPlacement::NoFlip})
        if (s == to_string(f)) return f;
    throw ConfigError("unknown flip placement '" + std::string(s) +
                      "' (expected flip_back_at_output, unflip_after_lstm, flip_before_lstm or no_flip)");
}

std::vector<LayerSpec> default_architecture() {
    using K = LayerKind;
    return {
        {"Conv2D_1", K::Conv2D, 8, {6, 3}, {12, 1}, {0, 0, 1, 1}, Activation::None},
        {"Conv2D_S1", K::Conv2D, 2, {1, 3}, {1, 1}, {0, 0, 1, 1}, Activation::None},
        {"Conv2D_S2", K::Conv2D, 8, {1, 3}, {1, 1}, {0, 0, 1, 1}, Activation::None},
        {"LSTM", K::LSTM, 16, {1, 1}, {1, 1}, {0, 0, 0, 0}, Activation::None},
        {"TConv2D_1", K::TConv2D, 8, {4, 3}, {1, 1}, {0, 0, 1, 1}, Activation::None},
        {"TConv2D_2", K::TConv2D, 2, {12, 3}, {12, 1}, {0, 0, 1, 1}, Activation::None},
        {"Conv2D_2", K::Conv2D, 2, {3, 3}, {1, 1}, {1, 1, 1, 1}, Activation::None},
    };
}

double norm_scale(const CMatrix& m) { return std::sqrt(m.mean_power() / 2.0); }

Tensor stack_complex(const CMatrix& m, double scale) {
    Tensor t({m.rows(), m.cols(), 2});
    if (scale == 0.0) return t;
    for (std::size_t k = 0; k < m.rows(); ++k)
        for (std::size_t l = 0; l < m.cols(); ++l) {
            t[(k * m.cols() + l) * 2] = m(k, l).real() / scale;
            t[(k * m.cols() + l) * 2 + 1] = m(k, l).imag() / scale;
        }
    return t;
}

CMatrix unstack_complex(const Tensor& t, double scale, std::size_t b) {
    const bool batched = t.rank() == 4;
    if ((t.rank() != 3 && !batched) || t.shape().back() != 2)
        throw UsageError("unstack_complex: expected (Lf,Lt,2) or (B,Lf,Lt,2), got " + shape_str(t.shape()));
    const std::size_t rows = t.dim(batched ? 1 : 0), cols = t.dim(batched ? 2 : 1);
    const std::size_t base = batched ? b * rows * cols * 2 : 0;
    CMatrix m(rows, cols);
    for (std::size_t k = 0; k < rows; ++k)
        for (std::size_t l = 0; l < cols; ++l) {
            const std::size_t i = base + (k * cols + l) * 2;
            m(k, l) = cplx(t[i], t[i + 1]) * scale;
        }
    return m;
}

PredictorModel::PredictorModel(std::uint64_t seed, FlipPlacement flip) : arch_(default_architecture()), flip_(flip) {
    params_.rng_seed = seed;
    Rng rng(seed, Stream::Init, 0);
    const std::size_t in_ch[7] = {2, 2, 8, 32, 16, 8, 2};
    for (std::size_t i = 0; i < arch_.size(); ++i) {
        const auto& s = arch_[i];
        const std::size_t c_in = in_ch[i], c_out = s.filters_or_units;
        params_.add_group(s.name);
        if (s.kind == LayerKind::LSTM) {
            const std::size_t u = c_out;
            Tensor wx({4 * u, c_in}), wh({4 * u, u}), b({4 * u});
            const double bound = 1.0 / std::sqrt(static_cast<double>(u));
            init_uniform(wx, bound, rng);
            init_uniform(wh, bound, rng);
            for (std::size_t j = u; j < 2 * u; ++j) b[j] = 1.0;  // forget gate
            params_.add(s.name, "w_input", std::move(wx));
            params_.add(s.name, "w_recurrent", std::move(wh));
            params_.add(s.name, "bias", std::move(b));
            continue;
        }
        // Effective fan-in: a transposed conv output sees ceil(W/stride) taps per axis.
        const bool tconv = s.kind == LayerKind::TConv2D;
        const std::size_t ff = tconv ? (s.kernel.freq + s.stride.freq - 1) / s.stride.freq : s.kernel.freq;
        const std::size_t ft = tconv ? (s.kernel.time + s.stride.time - 1) / s.stride.time : s.kernel.time;
        Tensor w(tconv ? Shape{c_in, c_out, s.kernel.freq, s.kernel.time} : Shape{c_out, c_in, s.kernel.freq, s.kernel.time});
        init_uniform(w, std::sqrt(6.0 / static_cast<double>(c_in * ff * ft)), rng);
        params_.add(s.name, "weight", std::move(w));
        params_.add(s.name, "bias", Tensor({c_out}));
    }
    for (const char* name : kBn) {
        params_.add_group(name, false);
        params_.add(name, "gamma", Tensor({8}, 1.0));
        params_.add(name, "beta", Tensor({8}));
        auto& g = params_.add_buffer_group(name);
        g.names = {"running_mean", "running_var"};
        g.tensors = {Tensor({8}), Tensor({8}, 1.0)};
    }
}

Tensor PredictorModel::run(const Tensor& x_in, BnMode mode, Cache* cache, double momentum,
                           std::vector<Tensor>& bn_stats) const {
    const Shape want{kModelSubcarriers, kModelSymbols, 2};
    const bool batched = x_in.rank() == 4;
    if (!(x_in.rank() == 3 && x_in.shape() == want) &&
        !(batched && Shape(x_in.shape().begin() + 1, x_in.shape().end()) == want))
        throw UsageError("predictor: input must be (48,14,2) or (B,48,14,2), got " + shape_str(x_in.shape()));
    const Tensor x = batched ? x_in : x_in.reshaped({1, kModelSubcarriers, kModelSymbols, 2});
    const std::size_t B = x.dim(0);
    const bool flip_in = flip_ != FlipPlacement::NoFlip;

    auto p = [&](Layer l) -> const std::vector<Tensor>& { return params_.at(arch_[l].name); };
    auto bn = [&](const Tensor& in, int which, BnCache* c) {
        const auto& g = params_.at(kBn[which]);
        return batchnorm_forward(in, g[0], g[1], bn_stats[2 * which], bn_stats[2 * which + 1], mode, momentum, c);
    };

    Tensor a1 = conv2d_forward(x, arch_[kC1], p(kC1)[0], p(kC1)[1]);
    Tensor z1 = leaky_relu(bn(a1, 0, cache ? &cache->bn1 : nullptr));

    Tensor seq = flip_if(frequency_flatten(z1), flip_in);
    seq.reshape({B, kModelSymbols, seq.dim(3)});
    Tensor h = lstm_forward(seq, arch_[kLstm].filters_or_units, p(kLstm)[0], p(kLstm)[1], p(kLstm)[2],
                            cache ? &cache->lstm : nullptr);
    h.reshape({B, 1, kModelSymbols, h.dim(2)});
    Tensor h4 = flip_if(h, flip_ == FlipPlacement::UnflipAfterLstm);

    Tensor sa = conv2d_forward(x, arch_[kS1], p(kS1)[0], p(kS1)[1]);
    Tensor sb_pre = conv2d_forward(z1, arch_[kS2], p(kS2)[0], p(kS2)[1]);
    Tensor sb = leaky_relu(bn(sb_pre, 1, cache ? &cache->bn_s2 : nullptr));

    Tensor t1 = tconv2d_forward(h4, arch_[kT1], p(kT1)[0], p(kT1)[1]);
    Tensor u1 = leaky_relu(bn(t1, 2, cache ? &cache->bn_t1 : nullptr));
    Tensor d1 = add(u1, sb);
    Tensor d2 = add(tconv2d_forward(d1, arch_[kT2], p(kT2)[0], p(kT2)[1]), sa);
    Tensor out = flip_if(conv2d_forward(d2, arch_[kC2], p(kC2)[0], p(kC2)[1]), flip_ == FlipPlacement::FlipBackAtOutput);

    if (cache) {
        cache->x = x;
        cache->a1 = std::move(a1);
        cache->z1 = std::move(z1);
        cache->seq = std::move(seq);
        cache->h4 = std::move(h4);
        cache->sb_pre = std::move(sb_pre);
        cache->sb = std::move(sb);
        cache->t1 = std::move(t1);
        cache->u1 = std::move(u1);
        cache->d1 = std::move(d1);
        cache->d2 = std::move(d2);
    }
    if (!batched) out.reshape(want);
    return out;
}

Tensor PredictorModel::forward(const Tensor& x, BnMode mode, Cache* cache, double bn_momentum) {
    std::vector<Tensor> stats;
    for (const char* name : kBn) {
        const auto& b = params_.buffers(name);
        stats.push_back(b[0]);
        stats.push_back(b[1]);
    }
    Tensor out = run(x, mode, cache, bn_momentum, stats);
    if (mode == BnMode::Train)
        for (std::size_t i = 0; i < 3; ++i) {
            auto& b = params_.buffers(kBn[i]);
            b[0] = std::move(stats[2 * i]);
            b[1] = std::move(stats[2 * i + 1]);
        }
    return out;
}

Tensor PredictorModel::infer(const Tensor& x) const {
    std::vector<Tensor> stats;
    for (const auto& g : params_.buffer_groups()) stats.insert(stats.end(), g.tensors.begin(), g.tensors.end());
    return run(x, BnMode::Infer, nullptr, 0.0, stats);
}

void PredictorModel::backward(const Tensor& grad_out, const Cache& c) {
    if (c.x.empty()) throw InternalError("predictor backward: forward cache is empty");
    const std::size_t B = c.x.dim(0);
    Tensor g = grad_out.rank() == 4 ? grad_out : grad_out.reshaped({1, kModelSubcarriers, kModelSymbols, 2});
    const bool flip_in = flip_ != FlipPlacement::NoFlip;

    auto p = [&](Layer l) -> std::vector<Tensor>& { return params_.at(arch_[l].name); };
    auto take = [&](Layer l, const ParamGrads& r) {
        auto& t = p(l);
        for (std::size_t i = 0; i < t.size(); ++i) accumulate(t[i], r.params[i]);
        return r.input;
    };
    auto bn_back = [&](const Tensor& gy, const Tensor& act_out, const BnCache& bc, int which) {
        auto& t = params_.at(kBn[which]);
        const auto r = batchnorm_backward(leaky_relu_backward(gy, act_out), bc, t[0]);
        accumulate(t[0], r.params[0]);
        accumulate(t[1], r.params[1]);
        return r.input;
    };

    g = flip_if(g, flip_ == FlipPlacement::FlipBackAtOutput);
    const Tensor g_d2 = take(kC2, conv2d_backward(g, c.d2, arch_[kC2], p(kC2)[0]));
    const Tensor& g_sa = g_d2;
    const Tensor g_d1 = take(kT2, tconv2d_backward(g_d2, c.d1, arch_[kT2], p(kT2)[0]));
    const Tensor& g_sb = g_d1;

    const Tensor g_t1 = bn_back(g_d1, c.u1, c.bn_t1, 2);
    Tensor g_h4 = take(kT1, tconv2d_backward(g_t1, c.h4, arch_[kT1], p(kT1)[0]));
    g_h4 = flip_if(g_h4, flip_ == FlipPlacement::UnflipAfterLstm);
    g_h4.reshape({B, kModelSymbols, g_h4.dim(3)});
    Tensor g_seq = take(kLstm, lstm_backward(g_h4, c.lstm, p(kLstm)[0], p(kLstm)[1]));
    g_seq.reshape({B, 1, kModelSymbols, g_seq.dim(2)});
    Tensor g_z1 = frequency_unflatten(flip_if(g_seq, flip_in), c.z1.dim(1));

    const Tensor g_sb_pre = bn_back(g_sb, c.sb, c.bn_s2, 1);
    g_z1 = add(g_z1, take(kS2, conv2d_backward(g_sb_pre, c.z1, arch_[kS2], p(kS2)[0])));

    const Tensor g_a1 = bn_back(g_z1, c.z1, c.bn1, 0);
    take(kC1, conv2d_backward(g_a1, c.x, arch_[kC1], p(kC1)[0]));
    take(kS1, conv2d_backward(g_sa, c.x, arch_[kS1], p(kS1)[0]));
}

CMatrix PredictorModel::predict(const CMatrix& estimate) const {
    if (estimate.rows() != kModelSubcarriers || estimate.cols() != kModelSymbols)
        throw UsageError("predict: estimate must be 48x14, got " + std::to_string(estimate.rows()) + "x" +
                         std::to_string(estimate.cols()));
    const double s = norm_scale(estimate);
    if (s == 0.0) return CMatrix(kModelSubcarriers, kModelSymbols);
    return unstack_complex(infer(stack_complex(estimate, s)), s);
}

std::vector<CMatrix> PredictorModel::predict_batch(const std::vector<CMatrix>& estimates) const {
    if (estimates.empty()) return {};
    const std::size_t per = kModelSubcarriers * kModelSymbols * 2;
    Tensor x({estimates.size(), kModelSubcarriers, kModelSymbols, 2});
    std::vector<double> scales(estimates.size());
    for (std::size_t b = 0; b < estimates.size(); ++b) {
        if (estimates[b].rows() != kModelSubcarriers || estimates[b].cols() != kModelSymbols)
            throw UsageError("predict_batch: every estimate must be 48x14");
        scales[b] = norm_scale(estimates[b]);
        const auto t = stack_complex(estimates[b], scales[b]);
        std::copy(t.values().begin(), t.values().end(), x.values().begin() + static_cast<std::ptrdiff_t>(b * per));
    }
    const Tensor y = infer(x);
    std::vector<CMatrix> out;
    out.reserve(estimates.size());
    for (std::size_t b = 0; b < estimates.size(); ++b) out.push_back(unstack_complex(y, scales[b], b));
    return out;
}

ChannelEstimate predict_slot(const PredictorModel& model, const ChannelEstimate& est_slot_n) {
    return {model.predict(est_slot_n.entries), EstimateSource::Predicted, {}};
}

Checkpoint make_checkpoint(const PredictorModel& model, const Adam* optimizer, std::uint64_t epoch,
                           nlohmann::json metadata) {
    Checkpoint ck;
    ck.architecture = model.architecture();
    ck.params = model.params();
    if (optimizer) ck.optimizer = *optimizer;
    ck.epoch = epoch;
    metadata["flip_placement"] = std::string(to_string(model.flip()));
    metadata["trained"] = model.trained;
    ck.metadata = std::move(metadata);
    return ck;
}

PredictorModel model_from_checkpoint(const Checkpoint& ck) {
    if (ck.architecture != default_architecture())
        throw CheckpointMismatch("checkpoint architecture " + architecture_fingerprint(ck.architecture).dump() +
                                 " does not match the built model");
    FlipPlacement flip = FlipPlacement::FlipBackAtOutput;
    try {
        flip = flip_placement_from_string(ck.metadata.value("flip_placement", "flip_back_at_output"));
    } catch (const ConfigError& e) {
        throw CheckpointMismatch(e.what());
    }
    PredictorModel model(ck.params.rng_seed, flip);
    auto check_groups = [](const std::vector<ParamGroup>& want, const std::vector<ParamGroup>& have, const char* what) {
        if (want.size() != have.size()) throw CheckpointMismatch(std::string("checkpoint: wrong number of ") + what);
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (want[i].layer != have[i].layer || want[i].tensors.size() != have[i].tensors.size())
                throw CheckpointMismatch(std::string("checkpoint: ") + what + " group '" + have[i].layer +
                                         "' does not match '" + want[i].layer + "'");
            for (std::size_t j = 0; j < want[i].tensors.size(); ++j)
                if (want[i].tensors[j].shape() != have[i].tensors[j].shape())
                    throw CheckpointMismatch("checkpoint: tensor " + have[i].layer + "." + have[i].names[j] +
                                             " has shape " + shape_str(have[i].tensors[j].shape()) + ", expected " +
                                             shape_str(want[i].tensors[j].shape()));
        }
    };
    check_groups(model.params().groups(), ck.params.groups(), "parameter");
    check_groups(model.params().buffer_groups(), ck.params.buffer_groups(), "buffer");
    for (std::size_t i = 0; i < ck.params.groups().size(); ++i)
        for (std::size_t j = 0; j < ck.params.groups()[i].tensors.size(); ++j)
            model.params().groups()[i].tensors[j].values() = ck.params.groups()[i].tensors[j].values();
    for (std::size_t i = 0; i < ck.params.buffer_groups().size(); ++i)
        for (std::size_t j = 0; j < ck.params.buffer_groups()[i].tensors.size(); ++j)
            model.params().buffer_groups()[i].tensors[j].values() = ck.params.buffer_groups()[i].tensors[j].values();
    model.trained = ck.metadata.value("trained", false);
    return model;
}

}  // namespace ntnpred
