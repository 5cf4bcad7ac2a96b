#include "ntnpred/cmatrix.hpp"

#include <algorithm>
#include <stdexcept>

#include "ntnpred/errors.hpp"
#include "ntnpred/resource_grid.hpp"

namespace ntnpred {

CMatrix CMatrix::columns(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw UsageError("CMatrix::columns out of range");
    CMatrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
    return out;
}

void CMatrix::set_columns(std::size_t first, const CMatrix& block) {
    if (block.rows() != rows_ || first + block.cols() > cols_) throw UsageError("CMatrix::set_columns out of range");
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < block.cols(); ++c) (*this)(r, first + c) = block(r, c);
}

double CMatrix::frobenius_sq() const {
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return s;
}

double squared_error(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw UsageError("squared_error: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a.values()[i] - b.values()[i]);
    return s;
}

double nmse(const CMatrix& estimate, const CMatrix& truth) {
    return squared_error(estimate, truth) / truth.frobenius_sq();
}

// ---------------------------------------------------------------------------

bool GridLayout::is_pilot_symbol(std::size_t symbol) const {
    const std::size_t slot = symbol / slot_symbols;
    if (slot >= n_slots() || !slot_has_pilots[slot]) return false;
    const std::size_t l = symbol % slot_symbols;
    return std::find(pilot_symbols.begin(), pilot_symbols.end(), l) != pilot_symbols.end();
}

std::size_t GridLayout::data_symbols_in_slot(std::size_t slot) const {
    return slot_symbols - (slot_has_pilots.at(slot) ? pilot_symbols.size() : 0);
}

std::size_t GridLayout::data_res() const {
    std::size_t n = 0;
    for (std::size_t s = 0; s < n_slots(); ++s) n += data_res_in_slot(s);
    return n;
}

std::size_t GridLayout::pilot_res() const { return n_subcarriers * n_symbols() - data_res(); }

GridLayout GridLayout::pilot_removal() { return GridLayout{}; }

GridLayout GridLayout::pilot_full() {
    GridLayout g;
    g.slot_has_pilots = {true, true};
    return g;
}

}  // namespace ntnpred
