#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ntnpred/cmatrix.hpp"

namespace ntnpred {

/// Square Gray-labeled M-QAM with unit average energy, using the 3GPP
/// TS 38.211 bit-to-symbol tables: even-indexed bits drive the in-phase axis,
/// odd-indexed bits the quadrature axis. docs/gray_mapping.md lists them.
class QamConstellation {
public:
    /// order in {4, 16, 64}; throws ConfigError otherwise.
    explicit QamConstellation(int order);

    int order() const { return order_; }
    int bits_per_symbol() const { return bits_; }
    /// points()[label] where label packs bit b0 as the most significant bit.
    const std::vector<cplx>& points() const { return points_; }

    cplx map(std::span<const std::uint8_t> bits) const;
    void hard_demap(cplx y, std::span<std::uint8_t> bits) const;
    /// Max-log LLRs, positive means bit 0 is more likely. noise_var is the
    /// complex noise variance seen by y.
    void soft_demap(cplx y, double noise_var, std::span<double> llr) const;

private:
    struct Level {
        double amp;
        std::uint32_t label;  // axis bits, first axis bit as MSB
    };
    int order_;
    int bits_;
    int axis_bits_;
    std::vector<Level> levels_;
    std::vector<cplx> points_;
};

std::vector<cplx> qam_map(std::span<const std::uint8_t> bits, const QamConstellation& c);
std::vector<std::uint8_t> qam_demap_hard(std::span<const cplx> symbols, const QamConstellation& c);

/// symbols are already equalized; channel_gains are the estimates used for
/// equalization, giving effective noise noise_var/|h|^2. |h| < 1e-12 marks an
/// erased RE and yields zero LLRs.
std::vector<double> qam_demap_soft(std::span<const cplx> symbols, std::span<const cplx> channel_gains,
                                   double noise_var, const QamConstellation& c);

inline constexpr double kErasureThreshold = 1e-12;

}  // namespace ntnpred
