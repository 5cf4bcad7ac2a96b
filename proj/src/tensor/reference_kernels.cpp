#include "ntnpred/reference_kernels.hpp"

#include <cmath>

#include "ntnpred/errors.hpp"

namespace ntnpred::reference {

namespace {

// All reference kernels take rank-4 inputs only.
void require_rank4(const Tensor& t, const char* op) {
    if (t.rank() != 4) throw UsageError(std::string(op) + ": reference kernels take (B,Lf,Lt,C)");
}

std::size_t idx4(const Shape& s, std::size_t b, std::size_t f, std::size_t t, std::size_t c) {
    return ((b * s[1] + f) * s[2] + t) * s[3] + c;
}

std::size_t widx(const Tensor& w, std::size_t a, std::size_t b, std::size_t kf, std::size_t kt) {
    const auto& s = w.shape();
    return ((a * s[1] + b) * s[2] + kf) * s[3] + kt;
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const LayerSpec& spec, const Tensor& w, const Tensor& bias) {
    require_rank4(x, "conv2d_forward");
    const auto& p = spec.pad_or_crop;
    const std::size_t B = x.dim(0), F = x.dim(1), T = x.dim(2), N = x.dim(3), C = spec.filters_or_units;
    const std::size_t Fo = (F + p.top + p.bottom - spec.kernel.freq) / spec.stride.freq + 1;
    const std::size_t To = (T + p.left + p.right - spec.kernel.time) / spec.stride.time + 1;
    Tensor y(Shape{B, Fo, To, C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t of = 0; of < Fo; ++of)
            for (std::size_t ot = 0; ot < To; ++ot)
                for (std::size_t c = 0; c < C; ++c) {
                    double s = bias[c];
                    for (std::size_t n = 0; n < N; ++n)
                        for (std::size_t a = 0; a < spec.kernel.freq; ++a)
                            for (std::size_t k = 0; k < spec.kernel.time; ++k) {
                                const long fi = static_cast<long>(of * spec.stride.freq + a) - static_cast<long>(p.top);
                                const long ti = static_cast<long>(ot * spec.stride.time + k) - static_cast<long>(p.left);
                                if (fi < 0 || ti < 0 || fi >= static_cast<long>(F) || ti >= static_cast<long>(T)) continue;
                                s += x[idx4(x.shape(), b, fi, ti, n)] * w[widx(w, c, n, a, k)];
                            }
                    y[idx4(y.shape(), b, of, ot, c)] = s;
                }
    return y;
}

ParamGrads conv2d_backward(const Tensor& gy, const Tensor& x, const LayerSpec& spec, const Tensor& w) {
    require_rank4(x, "conv2d_backward");
    const auto& p = spec.pad_or_crop;
    const std::size_t B = x.dim(0), F = x.dim(1), T = x.dim(2), N = x.dim(3), C = spec.filters_or_units;
    ParamGrads g;
    g.input = Tensor(x.shape());
    Tensor gw(w.shape()), gb(Shape{C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t of = 0; of < gy.dim(1); ++of)
            for (std::size_t ot = 0; ot < gy.dim(2); ++ot)
                for (std::size_t c = 0; c < C; ++c) {
                    const double d = gy[idx4(gy.shape(), b, of, ot, c)];
                    gb[c] += d;
                    for (std::size_t n = 0; n < N; ++n)
                        for (std::size_t a = 0; a < spec.kernel.freq; ++a)
                            for (std::size_t k = 0; k < spec.kernel.time; ++k) {
                                const long fi = static_cast<long>(of * spec.stride.freq + a) - static_cast<long>(p.top);
                                const long ti = static_cast<long>(ot * spec.stride.time + k) - static_cast<long>(p.left);
                                if (fi < 0 || ti < 0 || fi >= static_cast<long>(F) || ti >= static_cast<long>(T)) continue;
                                g.input[idx4(x.shape(), b, fi, ti, n)] += d * w[widx(w, c, n, a, k)];
                                gw[widx(w, c, n, a, k)] += d * x[idx4(x.shape(), b, fi, ti, n)];
                            }
                }
    g.params.push_back(std::move(gw));
    g.params.push_back(std::move(gb));
    return g;
}

Tensor tconv2d_forward(const Tensor& x, const LayerSpec& spec, const Tensor& w, const Tensor& bias) {
    require_rank4(x, "tconv2d_forward");
    const auto& p = spec.pad_or_crop;
    const std::size_t B = x.dim(0), F = x.dim(1), T = x.dim(2), N = x.dim(3), C = spec.filters_or_units;
    const std::size_t Ff = (F - 1) * spec.stride.freq + spec.kernel.freq;
    const std::size_t Tf = (T - 1) * spec.stride.time + spec.kernel.time;
    // Scatter into the uncropped canvas, then crop.
    Tensor full(Shape{B, Ff, Tf, C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < F; ++i)
            for (std::size_t j = 0; j < T; ++j)
                for (std::size_t n = 0; n < N; ++n)
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t a = 0; a < spec.kernel.freq; ++a)
                            for (std::size_t k = 0; k < spec.kernel.time; ++k)
                                full[idx4(full.shape(), b, i * spec.stride.freq + a, j * spec.stride.time + k, c)] +=
                                    x[idx4(x.shape(), b, i, j, n)] * w[widx(w, n, c, a, k)];
    const std::size_t Fo = Ff - p.top - p.bottom, To = Tf - p.left - p.right;
    Tensor y(Shape{B, Fo, To, C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < Fo; ++f)
            for (std::size_t t = 0; t < To; ++t)
                for (std::size_t c = 0; c < C; ++c)
                    y[idx4(y.shape(), b, f, t, c)] = full[idx4(full.shape(), b, f + p.top, t + p.left, c)] + bias[c];
    return y;
}

ParamGrads tconv2d_backward(const Tensor& gy, const Tensor& x, const LayerSpec& spec, const Tensor& w) {
    require_rank4(x, "tconv2d_backward");
    const auto& p = spec.pad_or_crop;
    const std::size_t B = x.dim(0), F = x.dim(1), T = x.dim(2), N = x.dim(3), C = spec.filters_or_units;
    ParamGrads g;
    g.input = Tensor(x.shape());
    Tensor gw(w.shape()), gb(Shape{C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < gy.dim(1); ++f)
            for (std::size_t t = 0; t < gy.dim(2); ++t)
                for (std::size_t c = 0; c < C; ++c) gb[c] += gy[idx4(gy.shape(), b, f, t, c)];
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < F; ++i)
            for (std::size_t j = 0; j < T; ++j)
                for (std::size_t n = 0; n < N; ++n)
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t a = 0; a < spec.kernel.freq; ++a)
                            for (std::size_t k = 0; k < spec.kernel.time; ++k) {
                                const long fo = static_cast<long>(i * spec.stride.freq + a) - static_cast<long>(p.top);
                                const long to = static_cast<long>(j * spec.stride.time + k) - static_cast<long>(p.left);
                                if (fo < 0 || to < 0 || fo >= static_cast<long>(gy.dim(1)) ||
                                    to >= static_cast<long>(gy.dim(2)))
                                    continue;
                                const double d = gy[idx4(gy.shape(), b, fo, to, c)];
                                g.input[idx4(x.shape(), b, i, j, n)] += d * w[widx(w, n, c, a, k)];
                                gw[widx(w, n, c, a, k)] += d * x[idx4(x.shape(), b, i, j, n)];
                            }
    g.params.push_back(std::move(gw));
    g.params.push_back(std::move(gb));
    return g;
}

Tensor lstm_forward(const Tensor& x, std::size_t U, const Tensor& wx, const Tensor& wh, const Tensor& bias) {
    if (x.rank() != 3) throw UsageError("reference lstm_forward takes (B,T,N)");
    const std::size_t B = x.dim(0), T = x.dim(1), N = x.dim(2);
    auto sig = [](double a) { return 1.0 / (1.0 + std::exp(-a)); };
    Tensor h(Shape{B, T, U});
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> hp(U, 0.0), cp(U, 0.0), hn(U), cn(U);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t u = 0; u < U; ++u) {
                double pre[4];
                for (std::size_t gate = 0; gate < 4; ++gate) {
                    const std::size_t r = gate * U + u;
                    double s = bias[r];
                    for (std::size_t n = 0; n < N; ++n) s += wx[r * N + n] * x[(b * T + t) * N + n];
                    for (std::size_t v = 0; v < U; ++v) s += wh[r * U + v] * hp[v];
                    pre[gate] = s;
                }
                cn[u] = sig(pre[1]) * cp[u] + sig(pre[0]) * std::tanh(pre[2]);
                hn[u] = sig(pre[3]) * std::tanh(cn[u]);
            }
            hp = hn;
            cp = cn;
            for (std::size_t u = 0; u < U; ++u) h[(b * T + t) * U + u] = hp[u];
        }
    }
    return h;
}

}  // namespace ntnpred::reference
