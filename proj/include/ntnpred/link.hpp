#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ntnpred/cmatrix.hpp"
#include "ntnpred/estimation.hpp"
#include "ntnpred/ldpc.hpp"
#include "ntnpred/qam.hpp"
#include "ntnpred/resource_grid.hpp"
#include "ntnpred/rng.hpp"

namespace ntnpred {

struct TxBurst {
    ResourceGrid x;
    std::vector<std::vector<std::uint8_t>> info;    // per slot
    std::vector<std::vector<std::uint8_t>> mapped;  // per slot, interleaved codeword in mapping order
};

struct SlotRx {
    std::vector<std::uint8_t> hard_bits;  // mapping order, before decoding
    std::size_t bit_errors = 0;           // uncoded, against the transmitted mapped bits
    std::size_t bits = 0;
    bool decoded = false;
    bool decoder_ok = false;
    bool block_error = true;  // decoder failure or any wrong info bit
};

/// LDPC -> interleaver -> M-QAM -> grid for every slot of a layout, one
/// codeword per slot sized to fill the slot's data REs, and the matching
/// receive chain given a slot channel estimate.
class LinkChain {
public:
    LinkChain(int mod_order, GridLayout layout, double code_rate = 0.75, std::uint64_t interleaver_seed = 0x1d5eed,
              int ldpc_iterations = 25);

    const QamConstellation& qam() const { return qam_; }
    const GridLayout& layout() const { return layout_; }
    const LdpcCode& code(std::size_t slot) const { return *codes_.at(slot); }
    double code_rate() const { return code_rate_; }

    /// Fresh random info bits for every slot. Slots below `shared_slots` are
    /// copied verbatim (bits, pilots, grid columns) from `shared`, which must
    /// use the same layout for those slots.
    TxBurst transmit(Rng& rng, const TxBurst* shared = nullptr, std::size_t shared_slots = 0) const;

    /// Equalize, demap and optionally decode one slot. y_slot and h_slot are
    /// n_subcarriers x slot_symbols; n0 is the per-RE noise variance.
    SlotRx receive_slot(const CMatrix& y_slot, const CMatrix& h_slot, double n0, const TxBurst& tx, std::size_t slot,
                        bool decode = true) const;

private:
    QamConstellation qam_;
    GridLayout layout_;
    double code_rate_;
    int ldpc_iterations_;
    std::vector<std::shared_ptr<const LdpcCode>> codes_;
    std::vector<std::vector<std::size_t>> perms_;
    std::uint64_t interleaver_seed_;
};

/// Receive chain of a pilot-bearing slot: pilot LS, interpolation,
/// equalization, demapping (and decoding when asked), then data-aided LS
/// from the pre-decoding hard decisions.
struct PilotSlotRx {
    ChannelEstimate interpolated;
    SlotRx rx;
    ChannelEstimate data_aided;
};
PilotSlotRx receive_pilot_slot(const LinkChain& chain, const ResourceGrid& y, const TxBurst& tx, std::size_t slot,
                               double n0, bool decode);

/// Es/N0 = Eb/N0 + 10 log10(m Rc); pilot overhead is not charged.
double es_n0_from_eb_n0(double eb_n0_db, int mod_order, double code_rate);

}  // namespace ntnpred
