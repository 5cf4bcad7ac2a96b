#include <algorithm>
#include <string>

#include "detail.hpp"
#include "ntnpred/layers.hpp"

namespace ntnpred {

using detail::Map4;
using detail::map4;

namespace {

struct ConvGeom {
    Map4 in;
    std::size_t out_f, out_t, out_c;
    std::size_t kf, kt, sf, st, pt, pl;
};

void check_params(const LayerSpec& spec, const Tensor& weight, const Tensor& bias, std::size_t in_c,
                  bool transposed) {
    const std::size_t c_out = spec.filters_or_units;
    const Shape expect = transposed ? Shape{in_c, c_out, spec.kernel.freq, spec.kernel.time}
                                    : Shape{c_out, in_c, spec.kernel.freq, spec.kernel.time};
    if (weight.shape() != expect)
        throw ConfigError(spec.name + ": weight shape " + shape_str(weight.shape()) + " does not match spec " +
                          shape_str(expect));
    if (bias.shape() != Shape{c_out})
        throw ConfigError(spec.name + ": bias shape " + shape_str(bias.shape()) + " does not match spec");
}

ConvGeom conv_geom(const Tensor& input, const LayerSpec& spec) {
    if (spec.kind != LayerKind::Conv2D) throw ConfigError(spec.name + ": not a Conv2D spec");
    spec.validate();
    ConvGeom g{map4(input, "conv2d"), 0, 0, spec.filters_or_units, spec.kernel.freq, spec.kernel.time,
               spec.stride.freq, spec.stride.time, spec.pad_or_crop.top, spec.pad_or_crop.left};
    const std::size_t pf = g.in.freq + spec.pad_or_crop.top + spec.pad_or_crop.bottom;
    const std::size_t pt = g.in.time + spec.pad_or_crop.left + spec.pad_or_crop.right;
    if (pf < g.kf || pt < g.kt)
        throw ConfigError(spec.name + ": padded input " + std::to_string(pf) + "x" + std::to_string(pt) +
                          " smaller than kernel");
    g.out_f = (pf - g.kf) / g.sf + 1;
    g.out_t = (pt - g.kt) / g.st + 1;
    return g;
}

/// Weight (C_out, C_in, Wf, Wt) -> (Wf, Wt, C_in, C_out) for channel-contiguous inner loops.
std::vector<double> conv_weight_khwc(const Tensor& w, std::size_t c_out, std::size_t c_in, std::size_t kf,
                                     std::size_t kt) {
    std::vector<double> r(w.size());
    for (std::size_t c = 0; c < c_out; ++c)
        for (std::size_t n = 0; n < c_in; ++n)
            for (std::size_t a = 0; a < kf; ++a)
                for (std::size_t b = 0; b < kt; ++b)
                    r[((a * kt + b) * c_in + n) * c_out + c] = w[((c * c_in + n) * kf + a) * kt + b];
    return r;
}

/// Weight (C_in, C_out, Wf, Wt) -> (Wf, Wt, C_in, C_out).
std::vector<double> tconv_weight_khwc(const Tensor& w, std::size_t c_in, std::size_t c_out, std::size_t kf,
                                      std::size_t kt) {
    std::vector<double> r(w.size());
    for (std::size_t n = 0; n < c_in; ++n)
        for (std::size_t c = 0; c < c_out; ++c)
            for (std::size_t a = 0; a < kf; ++a)
                for (std::size_t b = 0; b < kt; ++b)
                    r[((a * kt + b) * c_in + n) * c_out + c] = w[((n * c_out + c) * kf + a) * kt + b];
    return r;
}

void apply_activation(Tensor& y, Activation act) {
    if (act == Activation::LeakyReLU)
        for (auto& v : y.data()) v = leaky_relu(v);
}

Tensor activation_grad(const Tensor& grad_out, const LayerSpec& spec, const Tensor* saved_output) {
    if (spec.activation == Activation::None) return grad_out;
    if (saved_output == nullptr || saved_output->shape() != grad_out.shape())
        throw InternalError(spec.name + ": missing saved forward activation for backward");
    return leaky_relu_backward(grad_out, *saved_output);
}

}  // namespace

Shape conv2d_output_shape(const Shape& input, const LayerSpec& spec) {
    const ConvGeom g = conv_geom(Tensor(input), spec);
    return g.in.shape(g.out_f, g.out_t, g.out_c);
}

Tensor conv2d_forward(const Tensor& input, const LayerSpec& spec, const Tensor& weight, const Tensor& bias) {
    const ConvGeom g = conv_geom(input, spec);
    const std::size_t N = g.in.chan, C = g.out_c;
    check_params(spec, weight, bias, N, false);
    const auto wk = conv_weight_khwc(weight, C, N, g.kf, g.kt);

    Tensor out(g.in.shape(g.out_f, g.out_t, C));
    const double* x = input.data().data();
    double* y = out.data().data();
    const std::size_t in_plane = g.in.freq * g.in.time * N;
    const std::size_t out_plane = g.out_f * g.out_t * C;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(g.in.batch); ++bi) {
        const std::size_t b = static_cast<std::size_t>(bi);
        const double* xb = x + b * in_plane;
        double* yb = y + b * out_plane;
        for (std::size_t of = 0; of < g.out_f; ++of) {
            for (std::size_t ot = 0; ot < g.out_t; ++ot) {
                double* o = yb + (of * g.out_t + ot) * C;
                for (std::size_t c = 0; c < C; ++c) o[c] = bias[c];
                for (std::size_t a = 0; a < g.kf; ++a) {
                    const std::ptrdiff_t fi = static_cast<std::ptrdiff_t>(of * g.sf + a) - static_cast<std::ptrdiff_t>(g.pt);
                    if (fi < 0 || fi >= static_cast<std::ptrdiff_t>(g.in.freq)) continue;
                    for (std::size_t k = 0; k < g.kt; ++k) {
                        const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(ot * g.st + k) - static_cast<std::ptrdiff_t>(g.pl);
                        if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(g.in.time)) continue;
                        const double* xi = xb + (static_cast<std::size_t>(fi) * g.in.time + static_cast<std::size_t>(ti)) * N;
                        const double* wr = wk.data() + (a * g.kt + k) * N * C;
                        for (std::size_t n = 0; n < N; ++n) {
                            const double xv = xi[n];
                            const double* wc = wr + n * C;
                            for (std::size_t c = 0; c < C; ++c) o[c] += xv * wc[c];
                        }
                    }
                }
            }
        }
    }
    apply_activation(out, spec.activation);
    return out;
}

ParamGrads conv2d_backward(const Tensor& grad_out_raw, const Tensor& saved_input, const LayerSpec& spec,
                           const Tensor& weight, const Tensor* saved_output) {
    if (saved_input.empty()) throw InternalError(spec.name + ": conv2d_backward without saved input");
    const ConvGeom g = conv_geom(saved_input, spec);
    const std::size_t N = g.in.chan, C = g.out_c;
    if (grad_out_raw.shape() != g.in.shape(g.out_f, g.out_t, C))
        throw UsageError(spec.name + ": grad_out shape " + shape_str(grad_out_raw.shape()) +
                         " differs from forward output");
    const Tensor grad_out = activation_grad(grad_out_raw, spec, saved_output);
    const auto wk = conv_weight_khwc(weight, C, N, g.kf, g.kt);

    const double* x = saved_input.data().data();
    const double* gy = grad_out.data().data();
    const std::size_t in_plane = g.in.freq * g.in.time * N;
    const std::size_t out_plane = g.out_f * g.out_t * C;

    ParamGrads res;
    res.input = Tensor(saved_input.shape());
    double* gx = res.input.data().data();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(g.in.batch); ++bi) {
        const std::size_t b = static_cast<std::size_t>(bi);
        double* gxb = gx + b * in_plane;
        const double* gyb = gy + b * out_plane;
        for (std::size_t of = 0; of < g.out_f; ++of)
            for (std::size_t ot = 0; ot < g.out_t; ++ot) {
                const double* go = gyb + (of * g.out_t + ot) * C;
                for (std::size_t a = 0; a < g.kf; ++a) {
                    const std::ptrdiff_t fi = static_cast<std::ptrdiff_t>(of * g.sf + a) - static_cast<std::ptrdiff_t>(g.pt);
                    if (fi < 0 || fi >= static_cast<std::ptrdiff_t>(g.in.freq)) continue;
                    for (std::size_t k = 0; k < g.kt; ++k) {
                        const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(ot * g.st + k) - static_cast<std::ptrdiff_t>(g.pl);
                        if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(g.in.time)) continue;
                        double* gxi = gxb + (static_cast<std::size_t>(fi) * g.in.time + static_cast<std::size_t>(ti)) * N;
                        const double* wr = wk.data() + (a * g.kt + k) * N * C;
                        for (std::size_t n = 0; n < N; ++n) {
                            const double* wc = wr + n * C;
                            double s = 0.0;
                            for (std::size_t c = 0; c < C; ++c) s += go[c] * wc[c];
                            gxi[n] += s;
                        }
                    }
                }
            }
    }

    // Weight gradient accumulated in (Wf, Wt, C_in, C_out) then permuted back.
    std::vector<double> gwk;
    const std::size_t wlen = wk.size() + C;  // bias appended
    detail::chunked_accumulate(g.in.batch, wlen, gwk, [&](std::size_t b, double* acc) {
        const double* xb = x + b * in_plane;
        const double* gyb = gy + b * out_plane;
        double* gb = acc + wk.size();
        for (std::size_t of = 0; of < g.out_f; ++of)
            for (std::size_t ot = 0; ot < g.out_t; ++ot) {
                const double* go = gyb + (of * g.out_t + ot) * C;
                for (std::size_t c = 0; c < C; ++c) gb[c] += go[c];
                for (std::size_t a = 0; a < g.kf; ++a) {
                    const std::ptrdiff_t fi = static_cast<std::ptrdiff_t>(of * g.sf + a) - static_cast<std::ptrdiff_t>(g.pt);
                    if (fi < 0 || fi >= static_cast<std::ptrdiff_t>(g.in.freq)) continue;
                    for (std::size_t k = 0; k < g.kt; ++k) {
                        const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(ot * g.st + k) - static_cast<std::ptrdiff_t>(g.pl);
                        if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(g.in.time)) continue;
                        const double* xi = xb + (static_cast<std::size_t>(fi) * g.in.time + static_cast<std::size_t>(ti)) * N;
                        double* gw = acc + (a * g.kt + k) * N * C;
                        for (std::size_t n = 0; n < N; ++n) {
                            const double xv = xi[n];
                            double* gwc = gw + n * C;
                            for (std::size_t c = 0; c < C; ++c) gwc[c] += xv * go[c];
                        }
                    }
                }
            }
    });

    Tensor gw(weight.shape());
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t a = 0; a < g.kf; ++a)
                for (std::size_t k = 0; k < g.kt; ++k)
                    gw[((c * N + n) * g.kf + a) * g.kt + k] = gwk[((a * g.kt + k) * N + n) * C + c];
    Tensor gb(Shape{C});
    for (std::size_t c = 0; c < C; ++c) gb[c] = gwk[wk.size() + c];
    res.params.push_back(std::move(gw));
    res.params.push_back(std::move(gb));
    return res;
}

// ---------------------------------------------------------------------------

namespace {

struct TconvGeom {
    Map4 in;
    std::size_t full_f, full_t, out_f, out_t, out_c;
    std::size_t kf, kt, sf, st, ct, cl;
};

TconvGeom tconv_geom(const Tensor& input, const LayerSpec& spec) {
    if (spec.kind != LayerKind::TConv2D) throw ConfigError(spec.name + ": not a TConv2D spec");
    spec.validate();
    TconvGeom g{map4(input, "tconv2d"), 0, 0, 0, 0, spec.filters_or_units, spec.kernel.freq, spec.kernel.time,
                spec.stride.freq, spec.stride.time, spec.pad_or_crop.top, spec.pad_or_crop.left};
    g.full_f = (g.in.freq - 1) * g.sf + g.kf;
    g.full_t = (g.in.time - 1) * g.st + g.kt;
    const auto& p = spec.pad_or_crop;
    if (p.top + p.bottom >= g.full_f || p.left + p.right >= g.full_t)
        throw ConfigError(spec.name + ": crop exceeds produced extent " + std::to_string(g.full_f) + "x" +
                          std::to_string(g.full_t));
    g.out_f = g.full_f - p.top - p.bottom;
    g.out_t = g.full_t - p.left - p.right;
    return g;
}

}  // namespace

Shape tconv2d_output_shape(const Shape& input, const LayerSpec& spec) {
    const TconvGeom g = tconv_geom(Tensor(input), spec);
    return g.in.shape(g.out_f, g.out_t, g.out_c);
}

Tensor tconv2d_forward(const Tensor& input, const LayerSpec& spec, const Tensor& weight, const Tensor& bias) {
    const TconvGeom g = tconv_geom(input, spec);
    const std::size_t N = g.in.chan, C = g.out_c;
    check_params(spec, weight, bias, N, true);
    const auto wk = tconv_weight_khwc(weight, N, C, g.kf, g.kt);

    Tensor out(g.in.shape(g.out_f, g.out_t, C));
    const double* x = input.data().data();
    double* y = out.data().data();
    const std::size_t in_plane = g.in.freq * g.in.time * N;
    const std::size_t out_plane = g.out_f * g.out_t * C;

    // Gather form: each output position collects the input positions whose
    // stride-expanded kernel footprint covers it.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(g.in.batch); ++bi) {
        const std::size_t b = static_cast<std::size_t>(bi);
        const double* xb = x + b * in_plane;
        double* yb = y + b * out_plane;
        for (std::size_t of = 0; of < g.out_f; ++of) {
            const std::size_t ff = of + g.ct;
            for (std::size_t ot = 0; ot < g.out_t; ++ot) {
                const std::size_t ft = ot + g.cl;
                double* o = yb + (of * g.out_t + ot) * C;
                for (std::size_t c = 0; c < C; ++c) o[c] = bias[c];
                for (std::size_t a = ff % g.sf; a < g.kf && a <= ff; a += g.sf) {
                    const std::size_t i = (ff - a) / g.sf;
                    if (i >= g.in.freq) continue;
                    for (std::size_t k = ft % g.st; k < g.kt && k <= ft; k += g.st) {
                        const std::size_t j = (ft - k) / g.st;
                        if (j >= g.in.time) continue;
                        const double* xi = xb + (i * g.in.time + j) * N;
                        const double* wr = wk.data() + (a * g.kt + k) * N * C;
                        for (std::size_t n = 0; n < N; ++n) {
                            const double xv = xi[n];
                            const double* wc = wr + n * C;
                            for (std::size_t c = 0; c < C; ++c) o[c] += xv * wc[c];
                        }
                    }
                }
            }
        }
    }
    apply_activation(out, spec.activation);
    return out;
}

ParamGrads tconv2d_backward(const Tensor& grad_out_raw, const Tensor& saved_input, const LayerSpec& spec,
                            const Tensor& weight, const Tensor* saved_output) {
    if (saved_input.empty()) throw InternalError(spec.name + ": tconv2d_backward without saved input");
    const TconvGeom g = tconv_geom(saved_input, spec);
    const std::size_t N = g.in.chan, C = g.out_c;
    if (grad_out_raw.shape() != g.in.shape(g.out_f, g.out_t, C))
        throw UsageError(spec.name + ": grad_out shape " + shape_str(grad_out_raw.shape()) +
                         " differs from forward output");
    const Tensor grad_out = activation_grad(grad_out_raw, spec, saved_output);
    const auto wk = tconv_weight_khwc(weight, N, C, g.kf, g.kt);

    const double* x = saved_input.data().data();
    const double* gy = grad_out.data().data();
    const std::size_t in_plane = g.in.freq * g.in.time * N;
    const std::size_t out_plane = g.out_f * g.out_t * C;

    ParamGrads res;
    res.input = Tensor(saved_input.shape());
    double* gx = res.input.data().data();

    // Input gradient is a strided cross-correlation of grad_out.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(g.in.batch); ++bi) {
        const std::size_t b = static_cast<std::size_t>(bi);
        double* gxb = gx + b * in_plane;
        const double* gyb = gy + b * out_plane;
        for (std::size_t i = 0; i < g.in.freq; ++i)
            for (std::size_t j = 0; j < g.in.time; ++j) {
                double* gxi = gxb + (i * g.in.time + j) * N;
                for (std::size_t a = 0; a < g.kf; ++a) {
                    const std::size_t ff = i * g.sf + a;
                    if (ff < g.ct || ff - g.ct >= g.out_f) continue;
                    for (std::size_t k = 0; k < g.kt; ++k) {
                        const std::size_t ft = j * g.st + k;
                        if (ft < g.cl || ft - g.cl >= g.out_t) continue;
                        const double* go = gyb + ((ff - g.ct) * g.out_t + (ft - g.cl)) * C;
                        const double* wr = wk.data() + (a * g.kt + k) * N * C;
                        for (std::size_t n = 0; n < N; ++n) {
                            const double* wc = wr + n * C;
                            double s = 0.0;
                            for (std::size_t c = 0; c < C; ++c) s += go[c] * wc[c];
                            gxi[n] += s;
                        }
                    }
                }
            }
    }

    std::vector<double> gwk;
    const std::size_t wlen = wk.size() + C;
    detail::chunked_accumulate(g.in.batch, wlen, gwk, [&](std::size_t b, double* acc) {
        const double* xb = x + b * in_plane;
        const double* gyb = gy + b * out_plane;
        double* gb = acc + wk.size();
        for (std::size_t p = 0; p < g.out_f * g.out_t; ++p)
            for (std::size_t c = 0; c < C; ++c) gb[c] += gyb[p * C + c];
        for (std::size_t i = 0; i < g.in.freq; ++i)
            for (std::size_t j = 0; j < g.in.time; ++j) {
                const double* xi = xb + (i * g.in.time + j) * N;
                for (std::size_t a = 0; a < g.kf; ++a) {
                    const std::size_t ff = i * g.sf + a;
                    if (ff < g.ct || ff - g.ct >= g.out_f) continue;
                    for (std::size_t k = 0; k < g.kt; ++k) {
                        const std::size_t ft = j * g.st + k;
                        if (ft < g.cl || ft - g.cl >= g.out_t) continue;
                        const double* go = gyb + ((ff - g.ct) * g.out_t + (ft - g.cl)) * C;
                        double* gw = acc + (a * g.kt + k) * N * C;
                        for (std::size_t n = 0; n < N; ++n) {
                            const double xv = xi[n];
                            double* gwc = gw + n * C;
                            for (std::size_t c = 0; c < C; ++c) gwc[c] += xv * go[c];
                        }
                    }
                }
            }
    });

    Tensor gw(weight.shape());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t a = 0; a < g.kf; ++a)
                for (std::size_t k = 0; k < g.kt; ++k)
                    gw[((n * C + c) * g.kf + a) * g.kt + k] = gwk[((a * g.kt + k) * N + n) * C + c];
    Tensor gb(Shape{C});
    for (std::size_t c = 0; c < C; ++c) gb[c] = gwk[wk.size() + c];
    res.params.push_back(std::move(gw));
    res.params.push_back(std::move(gb));
    return res;
}

}  // namespace ntnpred
