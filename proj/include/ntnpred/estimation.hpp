#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ntnpred/cmatrix.hpp"
#include "ntnpred/qam.hpp"
#include "ntnpred/resource_grid.hpp"
#include "ntnpred/rng.hpp"

namespace ntnpred {

enum class EstimateSource { PilotLS, Interpolated, DataAidedLS, Predicted, Persistence, Perfect };
std::string_view to_string(EstimateSource s);

/// Per-slot channel estimate (n_subcarriers x slot_symbols). For PilotLS only
/// the listed columns hold values; the others are zero.
struct ChannelEstimate {
    CMatrix entries;
    EstimateSource source = EstimateSource::Interpolated;
    std::vector<std::size_t> columns;
};

/// Data symbols are consumed slot by slot, column by column, subcarrier
/// fastest; pilots likewise over the pilot columns of pilot-bearing slots.
/// Throws UsageError when either count does not match the layout.
ResourceGrid build_grid(std::span<const cplx> data_symbols, std::span<const cplx> pilots, const GridLayout& layout);

/// Random unit-energy QPSK pilots for every pilot RE of the layout.
std::vector<cplx> random_pilots(const GridLayout& layout, Rng& rng);

/// Data REs of one slot of a full-burst matrix, in build_grid order.
std::vector<cplx> slot_data(const CMatrix& burst, const GridLayout& layout, std::size_t slot);

/// H_pi = Y / X at the pilot columns of `slot`. Throws UsageError on a zero
/// pilot or when the slot carries no pilots.
ChannelEstimate ls_pilot_estimate(const ResourceGrid& y, const ResourceGrid& x, std::size_t slot = 0);

/// Per-subcarrier linear interpolation between populated columns, holding the
/// first/last value outside them.
ChannelEstimate interpolate_slot(const ChannelEstimate& est);

/// Zero-forcing per RE; REs with |H| < kErasureThreshold become 0.
CMatrix equalize(const CMatrix& y_slot, const CMatrix& h_slot);

/// Second LS pass over the whole slot: pilots where the layout has them,
/// remapped hard decisions elsewhere. hard_bits are in mapping order, i.e.
/// log2(M) bits per data RE in build_grid order.
ChannelEstimate data_aided_ls(const CMatrix& y_slot, const CMatrix& x_slot, std::span<const std::uint8_t> hard_bits,
                              const QamConstellation& qam, const GridLayout& layout, std::size_t slot = 0);

}  // namespace ntnpred
