#include "ntnpred/qam.hpp"

#include <cmath>
#include <limits>

#include "ntnpred/errors.hpp"

namespace ntnpred {

namespace {

// Axis amplitude for axis bits c[0..q-1] (before energy scaling):
//   q=1: 1-2c0
//   q=2: (1-2c0)(2-(1-2c1))
//   q=3: (1-2c0)(4-(1-2c1)(2-(1-2c2)))
double axis_amplitude(std::uint32_t label, int q) {
    auto bit = [&](int i) { return static_cast<int>((label >> (q - 1 - i)) & 1u); };
    auto s = [&](int i) { return 1.0 - 2.0 * bit(i); };
    switch (q) {
        case 1: return s(0);
        case 2: return s(0) * (2.0 - s(1));
        case 3: return s(0) * (4.0 - s(1) * (2.0 - s(2)));
        default: break;
    }
    throw ConfigError("unsupported axis width");
}

}  // namespace

QamConstellation::QamConstellation(int order) : order_(order) {
    switch (order) {
        case 4: bits_ = 2; break;
        case 16: bits_ = 4; break;
        case 64: bits_ = 6; break;
        default: throw ConfigError("unsupported QAM order " + std::to_string(order) + " (expected 4, 16 or 64)");
    }
    axis_bits_ = bits_ / 2;
    const double norm = order == 4 ? std::sqrt(2.0) : order == 16 ? std::sqrt(10.0) : std::sqrt(42.0);
    for (std::uint32_t l = 0; l < (1u << axis_bits_); ++l) levels_.push_back({axis_amplitude(l, axis_bits_) / norm, l});

    points_.resize(static_cast<std::size_t>(order));
    for (std::uint32_t label = 0; label < static_cast<std::uint32_t>(order); ++label) {
        std::uint32_t li = 0, lq = 0;
        for (int i = 0; i < bits_; ++i) {
            const std::uint32_t b = (label >> (bits_ - 1 - i)) & 1u;
            if (i % 2 == 0) li = (li << 1) | b;
            else lq = (lq << 1) | b;
        }
        points_[label] = cplx(levels_[li].amp, levels_[lq].amp);
    }
}

cplx QamConstellation::map(std::span<const std::uint8_t> bits) const {
    std::uint32_t label = 0;
    for (int i = 0; i < bits_; ++i) label = (label << 1) | (bits[static_cast<std::size_t>(i)] & 1u);
    return points_[label];
}

void QamConstellation::hard_demap(cplx y, std::span<std::uint8_t> bits) const {
    const double axes[2] = {y.real(), y.imag()};
    for (int a = 0; a < 2; ++a) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t label = 0;
        for (const auto& lv : levels_) {
            const double d = (axes[a] - lv.amp) * (axes[a] - lv.amp);
            if (d < best) {
                best = d;
                label = lv.label;
            }
        }
        for (int i = 0; i < axis_bits_; ++i)
            bits[static_cast<std::size_t>(2 * i + a)] = static_cast<std::uint8_t>((label >> (axis_bits_ - 1 - i)) & 1u);
    }
}

void QamConstellation::soft_demap(cplx y, double noise_var, std::span<double> llr) const {
    const double axes[2] = {y.real(), y.imag()};
    for (int a = 0; a < 2; ++a) {
        for (int i = 0; i < axis_bits_; ++i) {
            double d0 = std::numeric_limits<double>::infinity(), d1 = d0;
            for (const auto& lv : levels_) {
                const double d = (axes[a] - lv.amp) * (axes[a] - lv.amp);
                if ((lv.label >> (axis_bits_ - 1 - i)) & 1u) d1 = std::min(d1, d);
                else d0 = std::min(d0, d);
            }
            llr[static_cast<std::size_t>(2 * i + a)] = (d1 - d0) / noise_var;
        }
    }
}

std::vector<cplx> qam_map(std::span<const std::uint8_t> bits, const QamConstellation& c) {
    const auto m = static_cast<std::size_t>(c.bits_per_symbol());
    if (bits.size() % m != 0) throw UsageError("qam_map: bit count not divisible by log2(M)");
    std::vector<cplx> out(bits.size() / m);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.map(bits.subspan(i * m, m));
    return out;
}

std::vector<std::uint8_t> qam_demap_hard(std::span<const cplx> symbols, const QamConstellation& c) {
    const auto m = static_cast<std::size_t>(c.bits_per_symbol());
    std::vector<std::uint8_t> bits(symbols.size() * m);
    for (std::size_t i = 0; i < symbols.size(); ++i) c.hard_demap(symbols[i], std::span(bits).subspan(i * m, m));
    return bits;
}

std::vector<double> qam_demap_soft(std::span<const cplx> symbols, std::span<const cplx> channel_gains,
                                   double noise_var, const QamConstellation& c) {
    if (symbols.size() != channel_gains.size()) throw UsageError("qam_demap_soft: gains/symbols size mismatch");
    const auto m = static_cast<std::size_t>(c.bits_per_symbol());
    std::vector<double> llr(symbols.size() * m, 0.0);
    // Noise-free input would give infinite LLRs; keep them large but finite.
    const double floor_var = std::max(noise_var, 1e-12);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const double g2 = std::norm(channel_gains[i]);
        if (std::sqrt(g2) < kErasureThreshold) continue;
        c.soft_demap(symbols[i], floor_var / g2, std::span(llr).subspan(i * m, m));
    }
    return llr;
}

}  // namespace ntnpred
