#pragma once

#include <cstddef>
#include <vector>

#include "ntnpred/cmatrix.hpp"

namespace ntnpred {

/// Two-slot burst layout. Pilot indices are 0-based OFDM symbol indices
/// within a slot; slot_has_pilots selects which slots carry them.
struct GridLayout {
    std::size_t n_subcarriers = 48;
    std::size_t slot_symbols = 14;
    std::vector<std::size_t> pilot_symbols{3, 12};
    std::vector<bool> slot_has_pilots{true, false};

    std::size_t n_slots() const { return slot_has_pilots.size(); }
    std::size_t n_symbols() const { return slot_symbols * n_slots(); }
    bool is_pilot_symbol(std::size_t symbol) const;
    std::size_t data_symbols_in_slot(std::size_t slot) const;
    std::size_t data_res_in_slot(std::size_t slot) const { return n_subcarriers * data_symbols_in_slot(slot); }
    std::size_t data_res() const;
    std::size_t pilot_res() const;

    /// Pilot-removal layout: pilots in slot 0 only.
    static GridLayout pilot_removal();
    /// Pilot-full layout: pilots in both slots (estimation baseline).
    static GridLayout pilot_full();
};

struct ResourceGrid {
    CMatrix entries;
    GridLayout layout;
};

}  // namespace ntnpred
