// OpenMP layer kernels against the serial reference kernels on default-architecture
// shapes at training batch sizes. Thread count follows OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <string>

#include "ntnpred/layers.hpp"
#include "ntnpred/predictor.hpp"
#include "ntnpred/reference_kernels.hpp"
#include "ntnpred/rng.hpp"

using namespace ntnpred;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.values()) v = 0.3 * rng.normal();
    return t;
}

LayerSpec layer(const std::string& name) {
    for (const auto& s : default_architecture())
        if (s.name == name) return s;
    throw std::runtime_error("no layer " + name);
}

struct ConvFixture {
    LayerSpec spec;
    Tensor x, w, b;
    ConvFixture(const std::string& name, std::size_t batch, Shape in, std::size_t c_in, bool transposed)
        : spec(layer(name)) {
        Shape xs{batch};
        xs.insert(xs.end(), in.begin(), in.end());
        x = random_tensor(xs, 1);
        const std::size_t n = spec.filters_or_units;
        w = transposed ? random_tensor({c_in, n, spec.kernel.freq, spec.kernel.time}, 2)
                       : random_tensor({n, c_in, spec.kernel.freq, spec.kernel.time}, 2);
        b = random_tensor({n}, 3);
    }
};

template <bool Reference>
void conv2d_1(benchmark::State& st) {
    ConvFixture f("Conv2D_1", static_cast<std::size_t>(st.range(0)), {48, 14, 2}, 2, false);
    for (auto _ : st)
        benchmark::DoNotOptimize(Reference ? reference::conv2d_forward(f.x, f.spec, f.w, f.b)
                                           : conv2d_forward(f.x, f.spec, f.w, f.b));
}

template <bool Reference>
void conv2d_2(benchmark::State& st) {
    ConvFixture f("Conv2D_2", static_cast<std::size_t>(st.range(0)), {48, 14, 2}, 2, false);
    for (auto _ : st)
        benchmark::DoNotOptimize(Reference ? reference::conv2d_forward(f.x, f.spec, f.w, f.b)
                                           : conv2d_forward(f.x, f.spec, f.w, f.b));
}

template <bool Reference>
void conv2d_2_backward(benchmark::State& st) {
    ConvFixture f("Conv2D_2", static_cast<std::size_t>(st.range(0)), {48, 14, 2}, 2, false);
    const Tensor g = random_tensor(conv2d_output_shape(f.x.shape(), f.spec), 4);
    for (auto _ : st)
        benchmark::DoNotOptimize(Reference ? reference::conv2d_backward(g, f.x, f.spec, f.w)
                                           : conv2d_backward(g, f.x, f.spec, f.w));
}

template <bool Reference>
void tconv2d_2(benchmark::State& st) {
    ConvFixture f("TConv2D_2", static_cast<std::size_t>(st.range(0)), {4, 14, 8}, 8, true);
    for (auto _ : st)
        benchmark::DoNotOptimize(Reference ? reference::tconv2d_forward(f.x, f.spec, f.w, f.b)
                                           : tconv2d_forward(f.x, f.spec, f.w, f.b));
}

template <bool Reference>
void lstm(benchmark::State& st) {
    const auto batch = static_cast<std::size_t>(st.range(0));
    const Tensor x = random_tensor({batch, 14, 32}, 5);
    const Tensor wi = random_tensor({64, 32}, 6), wr = random_tensor({64, 16}, 7), b = random_tensor({64}, 8);
    for (auto _ : st)
        benchmark::DoNotOptimize(Reference ? reference::lstm_forward(x, 16, wi, wr, b)
                                           : lstm_forward(x, 16, wi, wr, b));
}

void model_infer(benchmark::State& st) {
    const PredictorModel model(1);
    const Tensor x = random_tensor({static_cast<std::size_t>(st.range(0)), 48, 14, 2}, 9);
    for (auto _ : st) benchmark::DoNotOptimize(model.infer(x));
}

}  // namespace

#define KERNEL_PAIR(fn)                                                      \
    BENCHMARK(fn<false>)->Name(#fn "/openmp")->Arg(64)->Arg(256);            \
    BENCHMARK(fn<true>)->Name(#fn "/reference")->Arg(64)->Arg(256);

KERNEL_PAIR(conv2d_1)
KERNEL_PAIR(conv2d_2)
KERNEL_PAIR(conv2d_2_backward)
KERNEL_PAIR(tconv2d_2)
KERNEL_PAIR(lstm)
BENCHMARK(model_infer)->Arg(1)->Arg(256);

BENCHMARK_MAIN();
