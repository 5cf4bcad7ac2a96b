#include <cmath>
#include <string>

#include "detail.hpp"
#include "ntnpred/layers.hpp"

namespace ntnpred {

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

void check_lstm_params(std::size_t units, std::size_t inputs, const Tensor& wx, const Tensor& wh, const Tensor& b) {
    if (units == 0) throw ConfigError("lstm: units must be positive");
    if (wx.shape() != Shape{4 * units, inputs} || wh.shape() != Shape{4 * units, units} ||
        b.shape() != Shape{4 * units})
        throw ConfigError("lstm: parameter shapes do not match " + std::to_string(inputs) + " inputs and " +
                          std::to_string(units) + " units");
}

}  // namespace

std::size_t lstm_param_count(std::size_t inputs, std::size_t units) {
    return 4 * (inputs * units + units * units + units);
}

Tensor lstm_forward(const Tensor& input, std::size_t units, const Tensor& w_input, const Tensor& w_recurrent,
                    const Tensor& bias, LstmCache* cache) {
    const auto s = detail::seq3(input, "lstm_forward");
    const std::size_t U = units, N = s.width, T = s.steps, G = 4 * U;
    check_lstm_params(U, N, w_input, w_recurrent, bias);

    Tensor out(s.shape(U));
    Tensor gates(Shape{s.batch, T, G});
    Tensor cell(Shape{s.batch, T, U});
    const double* x = input.data().data();
    const double* wx = w_input.data().data();
    const double* wh = w_recurrent.data().data();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(s.batch); ++bi) {
        const std::size_t b = static_cast<std::size_t>(bi);
        std::vector<double> a(G);
        for (std::size_t t = 0; t < T; ++t) {
            const double* xt = x + (b * T + t) * N;
            const double* hp = t ? out.data().data() + (b * T + t - 1) * U : nullptr;
            const double* cp = t ? cell.data().data() + (b * T + t - 1) * U : nullptr;
            for (std::size_t r = 0; r < G; ++r) {
                double acc = bias[r];
                const double* wr = wx + r * N;
                for (std::size_t n = 0; n < N; ++n) acc += wr[n] * xt[n];
                if (hp) {
                    const double* wrh = wh + r * U;
                    for (std::size_t u = 0; u < U; ++u) acc += wrh[u] * hp[u];
                }
                a[r] = acc;
            }
            double* gt = gates.data().data() + (b * T + t) * G;
            double* ct = cell.data().data() + (b * T + t) * U;
            double* ht = out.data().data() + (b * T + t) * U;
            for (std::size_t u = 0; u < U; ++u) {
                const double ig = sigmoid(a[u]);
                const double fg = sigmoid(a[U + u]);
                const double gg = std::tanh(a[2 * U + u]);
                const double og = sigmoid(a[3 * U + u]);
                gt[u] = ig;
                gt[U + u] = fg;
                gt[2 * U + u] = gg;
                gt[3 * U + u] = og;
                ct[u] = fg * (cp ? cp[u] : 0.0) + ig * gg;
                ht[u] = og * std::tanh(ct[u]);
            }
        }
    }
    if (cache) {
        cache->input = input.reshaped({s.batch, T, N});
        cache->gates = std::move(gates);
        cache->cell = std::move(cell);
        cache->hidden = out.reshaped({s.batch, T, U});
    }
    return out;
}

ParamGrads lstm_backward(const Tensor& grad_out, const LstmCache& cache, const Tensor& w_input,
                         const Tensor& w_recurrent) {
    if (cache.input.empty() || cache.gates.empty())
        throw InternalError("lstm_backward: missing saved forward activations");
    const std::size_t B = cache.input.dim(0), T = cache.input.dim(1), N = cache.input.dim(2);
    const std::size_t U = cache.cell.dim(2), G = 4 * U;
    if (grad_out.size() != B * T * U) throw UsageError("lstm_backward: grad_out shape mismatch");

    const double* wx = w_input.data().data();
    const double* wh = w_recurrent.data().data();
    const double* gy = grad_out.data().data();
    const double* gates = cache.gates.data().data();
    const double* cell = cache.cell.data().data();
    std::vector<double> dpre(B * T * G);

    ParamGrads res;
    res.input = Tensor(grad_out.rank() == 2 ? Shape{T, N} : Shape{B, T, N});
    double* gx = res.input.data().data();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(B); ++bi) {
        const std::size_t b = static_cast<std::size_t>(bi);
        std::vector<double> dh_next(U, 0.0), dc_next(U, 0.0);
        for (std::size_t tt = T; tt-- > 0;) {
            const double* gt = gates + (b * T + tt) * G;
            const double* ct = cell + (b * T + tt) * U;
            const double* cp = tt ? cell + (b * T + tt - 1) * U : nullptr;
            const double* dyt = gy + (b * T + tt) * U;
            double* da = dpre.data() + (b * T + tt) * G;
            for (std::size_t u = 0; u < U; ++u) {
                const double ig = gt[u], fg = gt[U + u], gg = gt[2 * U + u], og = gt[3 * U + u];
                const double tc = std::tanh(ct[u]);
                const double dh = dyt[u] + dh_next[u];
                const double dc = dh * og * (1.0 - tc * tc) + dc_next[u];
                da[u] = dc * gg * ig * (1.0 - ig);
                da[U + u] = dc * (cp ? cp[u] : 0.0) * fg * (1.0 - fg);
                da[2 * U + u] = dc * ig * (1.0 - gg * gg);
                da[3 * U + u] = dh * tc * og * (1.0 - og);
                dc_next[u] = dc * fg;
            }
            for (std::size_t u = 0; u < U; ++u) {
                double s = 0.0;
                for (std::size_t r = 0; r < G; ++r) s += wh[r * U + u] * da[r];
                dh_next[u] = s;
            }
            double* gxt = gx + (b * T + tt) * N;
            for (std::size_t n = 0; n < N; ++n) {
                double s = 0.0;
                for (std::size_t r = 0; r < G; ++r) s += wx[r * N + n] * da[r];
                gxt[n] = s;
            }
        }
    }

    const std::size_t lx = G * N, lh = G * U;
    std::vector<double> acc;
    const double* x = cache.input.data().data();
    const double* h = cache.hidden.data().data();
    detail::chunked_accumulate(B, lx + lh + G, acc, [&](std::size_t b, double* a) {
        for (std::size_t t = 0; t < T; ++t) {
            const double* da = dpre.data() + (b * T + t) * G;
            const double* xt = x + (b * T + t) * N;
            const double* hp = t ? h + (b * T + t - 1) * U : nullptr;
            for (std::size_t r = 0; r < G; ++r) {
                const double d = da[r];
                double* gwx = a + r * N;
                for (std::size_t n = 0; n < N; ++n) gwx[n] += d * xt[n];
                if (hp) {
                    double* gwh = a + lx + r * U;
                    for (std::size_t u = 0; u < U; ++u) gwh[u] += d * hp[u];
                }
                a[lx + lh + r] += d;
            }
        }
    });
    res.params.emplace_back(Shape{G, N}, std::vector<double>(acc.begin(), acc.begin() + lx));
    res.params.emplace_back(Shape{G, U}, std::vector<double>(acc.begin() + lx, acc.begin() + lx + lh));
    res.params.emplace_back(Shape{G}, std::vector<double>(acc.begin() + lx + lh, acc.end()));
    return res;
}

}  // namespace ntnpred
