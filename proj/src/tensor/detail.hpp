#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ntnpred/errors.hpp"
#include "ntnpred/tensor.hpp"

namespace ntnpred::detail {

/// (B, Lf, Lt, C) view of a rank-3 or rank-4 feature map.
struct Map4 {
    std::size_t batch, freq, time, chan;
    bool batched;

    Shape shape(std::size_t f, std::size_t t, std::size_t c) const {
        return batched ? Shape{batch, f, t, c} : Shape{f, t, c};
    }
};

inline Map4 map4(const Tensor& x, const char* op) {
    if (x.rank() == 3) return {1, x.dim(0), x.dim(1), x.dim(2), false};
    if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), true};
    throw UsageError(std::string(op) + ": expected (Lf,Lt,C) or (B,Lf,Lt,C), got " + shape_str(x.shape()));
}

/// (B, T, N) view of a rank-2 or rank-3 sequence.
struct Seq3 {
    std::size_t batch, steps, width;
    bool batched;

    Shape shape(std::size_t w) const { return batched ? Shape{batch, steps, w} : Shape{steps, w}; }
};

inline Seq3 seq3(const Tensor& x, const char* op) {
    if (x.rank() == 2) return {1, x.dim(0), x.dim(1), false};
    if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2), true};
    throw UsageError(std::string(op) + ": expected (Lt,N) or (B,Lt,N), got " + shape_str(x.shape()));
}

/// Batch samples are grouped in fixed chunks; each chunk owns a partial sum
/// and partials are added in chunk order, so results do not depend on the
/// OpenMP thread count.
inline constexpr std::size_t kReduceChunk = 16;

template <class PerSample>
void chunked_accumulate(std::size_t batch, std::size_t len, std::vector<double>& out, PerSample&& per_sample) {
    const std::size_t chunks = (batch + kReduceChunk - 1) / kReduceChunk;
    std::vector<double> partial(chunks * len, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ch = 0; ch < static_cast<std::ptrdiff_t>(chunks); ++ch) {
        double* acc = partial.data() + static_cast<std::size_t>(ch) * len;
        const std::size_t lo = static_cast<std::size_t>(ch) * kReduceChunk;
        const std::size_t hi = std::min(batch, lo + kReduceChunk);
        for (std::size_t b = lo; b < hi; ++b) per_sample(b, acc);
    }
    out.assign(len, 0.0);
    for (std::size_t ch = 0; ch < chunks; ++ch)
        for (std::size_t i = 0; i < len; ++i) out[i] += partial[ch * len + i];
}

}  // namespace ntnpred::detail
