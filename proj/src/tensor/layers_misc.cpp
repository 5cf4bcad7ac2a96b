#include <algorithm>
#include <cmath>
#include <string>

#include "detail.hpp"
#include "ntnpred/layers.hpp"

namespace ntnpred {

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::TConv2D: return "TConv2D";
        case LayerKind::LSTM: return "LSTM";
        case LayerKind::BatchNorm: return "BatchNorm";
        case LayerKind::LeakyReLU: return "LeakyReLU";
        case LayerKind::FrequencyFlatten: return "FrequencyFlatten";
        case LayerKind::TimeFlip: return "TimeFlip";
        case LayerKind::Add: return "Add";
    }
    return "?";
}

LayerKind layer_kind_from_string(std::string_view s) {
    for (auto k : {LayerKind::Conv2D, LayerKind::TConv2D, LayerKind::LSTM, LayerKind::BatchNorm, LayerKind::LeakyReLU,
                   LayerKind::FrequencyFlatten, LayerKind::TimeFlip, LayerKind::Add})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown layer kind '" + std::string(s) + "'");
}

std::string_view to_string(Activation a) { return a == Activation::LeakyReLU ? "LeakyReLU" : "None"; }

Activation activation_from_string(std::string_view s) {
    if (s == "None") return Activation::None;
    if (s == "LeakyReLU") return Activation::LeakyReLU;
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

void LayerSpec::validate() const {
    if (filters_or_units == 0) throw ConfigError(name + ": filters/units must be >= 1");
    if (kernel.freq == 0 || kernel.time == 0) throw ConfigError(name + ": kernel extents must be >= 1");
    if (stride.freq == 0 || stride.time == 0) throw ConfigError(name + ": stride must be >= 1");
}

// ---------------------------------------------------------------------------

Tensor batchnorm_forward(const Tensor& input, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                         Tensor& running_var, BnMode mode, double momentum, BnCache* cache) {
    if (input.rank() < 2) throw UsageError("batchnorm: input rank must be >= 2");
    const std::size_t C = input.shape().back();
    const std::size_t M = input.size() / C;
    if (gamma.size() != C || beta.size() != C || running_mean.size() != C || running_var.size() != C)
        throw ConfigError("batchnorm: parameter length does not match channel count " + std::to_string(C));

    std::vector<double> mean(C), inv_std(C);
    if (mode == BnMode::Train) {
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < M; ++i) s += input[i * C + c];
            const double mu = s / static_cast<double>(M);
            double v = 0.0;
            for (std::size_t i = 0; i < M; ++i) {
                const double d = input[i * C + c] - mu;
                v += d * d;
            }
            const double var = v / static_cast<double>(M);
            mean[c] = mu;
            inv_std[c] = 1.0 / std::sqrt(var + kBatchNormEps);
            const double unbiased = M > 1 ? v / static_cast<double>(M - 1) : var;
            running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mu;
            running_var[c] = (1.0 - momentum) * running_var[c] + momentum * unbiased;
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mean[c] = running_mean[c];
            inv_std[c] = 1.0 / std::sqrt(running_var[c] + kBatchNormEps);
        }
    }

    Tensor out(input.shape());
    Tensor xhat(input.shape());
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t c = 0; c < C; ++c) {
            const double n = (input[i * C + c] - mean[c]) * inv_std[c];
            xhat[i * C + c] = n;
            out[i * C + c] = gamma[c] * n + beta[c];
        }
    if (cache) {
        cache->mode = mode;
        cache->normalized = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

ParamGrads batchnorm_backward(const Tensor& grad_out, const BnCache& cache, const Tensor& gamma) {
    if (cache.normalized.empty()) throw InternalError("batchnorm_backward: missing saved forward activations");
    const std::size_t C = gamma.size();
    const std::size_t M = grad_out.size() / C;
    if (grad_out.shape() != cache.normalized.shape()) throw UsageError("batchnorm_backward: shape mismatch");

    std::vector<double> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t c = 0; c < C; ++c) {
            sum_dy[c] += grad_out[i * C + c];
            sum_dy_xhat[c] += grad_out[i * C + c] * cache.normalized[i * C + c];
        }

    ParamGrads res;
    res.input = Tensor(grad_out.shape());
    const double m = static_cast<double>(M);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t c = 0; c < C; ++c) {
            const double dy = grad_out[i * C + c];
            if (cache.mode == BnMode::Train) {
                const double xh = cache.normalized[i * C + c];
                res.input[i * C + c] =
                    gamma[c] * cache.inv_std[c] * (dy - sum_dy[c] / m - xh * sum_dy_xhat[c] / m);
            } else {
                res.input[i * C + c] = gamma[c] * cache.inv_std[c] * dy;
            }
        }
    res.params.emplace_back(Shape{C}, sum_dy_xhat);
    res.params.emplace_back(Shape{C}, sum_dy);
    return res;
}

// ---------------------------------------------------------------------------

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

Tensor leaky_relu(const Tensor& input, double slope) {
    Tensor out = input;
    for (auto& v : out.data()) v = leaky_relu(v, slope);
    return out;
}

Tensor leaky_relu_backward(const Tensor& grad_out, const Tensor& saved, double slope) {
    if (grad_out.shape() != saved.shape()) throw UsageError("leaky_relu_backward: shape mismatch");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (saved[i] < 0.0) g[i] *= slope;
    return g;
}

Tensor frequency_flatten(const Tensor& input) {
    const auto m = detail::map4(input, "frequency_flatten");
    Tensor out(m.shape(1, m.time, m.freq * m.chan));
    for (std::size_t b = 0; b < m.batch; ++b)
        for (std::size_t f = 0; f < m.freq; ++f)
            for (std::size_t t = 0; t < m.time; ++t)
                for (std::size_t c = 0; c < m.chan; ++c)
                    out[(b * m.time + t) * m.freq * m.chan + f * m.chan + c] =
                        input[((b * m.freq + f) * m.time + t) * m.chan + c];
    return out;
}

Tensor frequency_unflatten(const Tensor& input, std::size_t freq_extent) {
    const auto m = detail::map4(input, "frequency_unflatten");
    if (m.freq != 1 || freq_extent == 0 || m.chan % freq_extent != 0)
        throw UsageError("frequency_unflatten: cannot split " + shape_str(input.shape()) + " into " +
                         std::to_string(freq_extent) + " frequencies");
    const std::size_t C = m.chan / freq_extent;
    Tensor out(m.shape(freq_extent, m.time, C));
    for (std::size_t b = 0; b < m.batch; ++b)
        for (std::size_t f = 0; f < freq_extent; ++f)
            for (std::size_t t = 0; t < m.time; ++t)
                for (std::size_t c = 0; c < C; ++c)
                    out[((b * freq_extent + f) * m.time + t) * C + c] =
                        input[(b * m.time + t) * m.chan + f * C + c];
    return out;
}

Tensor time_flip(const Tensor& input) {
    const auto m = detail::map4(input, "time_flip");
    Tensor out(input.shape());
    for (std::size_t b = 0; b < m.batch; ++b)
        for (std::size_t f = 0; f < m.freq; ++f)
            for (std::size_t t = 0; t < m.time; ++t) {
                const double* src = input.data().data() + ((b * m.freq + f) * m.time + t) * m.chan;
                double* dst = out.data().data() + ((b * m.freq + f) * m.time + (m.time - 1 - t)) * m.chan;
                std::copy(src, src + m.chan, dst);
            }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw UsageError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

double mse_loss(const Tensor& prediction, const Tensor& target) {
    if (prediction.shape() != target.shape())
        throw UsageError("mse_loss: shape mismatch " + shape_str(prediction.shape()) + " vs " +
                         shape_str(target.shape()));
    double s = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(prediction.size());
}

Tensor mse_loss_grad(const Tensor& prediction, const Tensor& target) {
    if (prediction.shape() != target.shape()) throw UsageError("mse_loss_grad: shape mismatch");
    Tensor g(prediction.shape());
    const double k = 2.0 / static_cast<double>(prediction.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = k * (prediction[i] - target[i]);
    return g;
}

}  // namespace ntnpred
