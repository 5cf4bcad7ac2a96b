#include "ntnpred/estimation.hpp"

#include <cmath>
#include <string>

#include "ntnpred/errors.hpp"

namespace ntnpred {

std::string_view to_string(EstimateSource s) {
    switch (s) {
        case EstimateSource::PilotLS: return "PilotLS";
        case EstimateSource::Interpolated: return "Interpolated";
        case EstimateSource::DataAidedLS: return "DataAidedLS";
        case EstimateSource::Predicted: return "Predicted";
        case EstimateSource::Persistence: return "Persistence";
        case EstimateSource::Perfect: return "Perfect";
    }
    return "?";
}

ResourceGrid build_grid(std::span<const cplx> data_symbols, std::span<const cplx> pilots, const GridLayout& layout) {
    if (data_symbols.size() != layout.data_res())
        throw UsageError("build_grid: expected " + std::to_string(layout.data_res()) + " data symbols, got " +
                         std::to_string(data_symbols.size()));
    if (pilots.size() != layout.pilot_res())
        throw UsageError("build_grid: expected " + std::to_string(layout.pilot_res()) + " pilot symbols, got " +
                         std::to_string(pilots.size()));
    ResourceGrid g{CMatrix(layout.n_subcarriers, layout.n_symbols()), layout};
    std::size_t d = 0, p = 0;
    for (std::size_t l = 0; l < layout.n_symbols(); ++l) {
        const bool pilot = layout.is_pilot_symbol(l);
        for (std::size_t k = 0; k < layout.n_subcarriers; ++k) g.entries(k, l) = pilot ? pilots[p++] : data_symbols[d++];
    }
    return g;
}

std::vector<cplx> random_pilots(const GridLayout& layout, Rng& rng) {
    const double a = 1.0 / std::sqrt(2.0);
    std::vector<cplx> p(layout.pilot_res());
    for (auto& s : p) {
        const double re = rng.bit() ? -a : a;
        const double im = rng.bit() ? -a : a;
        s = cplx(re, im);
    }
    return p;
}

std::vector<cplx> slot_data(const CMatrix& burst, const GridLayout& layout, std::size_t slot) {
    std::vector<cplx> out;
    out.reserve(layout.data_res_in_slot(slot));
    for (std::size_t j = 0; j < layout.slot_symbols; ++j) {
        const std::size_t l = slot * layout.slot_symbols + j;
        if (layout.is_pilot_symbol(l)) continue;
        for (std::size_t k = 0; k < layout.n_subcarriers; ++k) out.push_back(burst(k, l));
    }
    return out;
}

ChannelEstimate ls_pilot_estimate(const ResourceGrid& y, const ResourceGrid& x, std::size_t slot) {
    const auto& lay = x.layout;
    if (slot >= lay.n_slots() || !lay.slot_has_pilots[slot])
        throw UsageError("ls_pilot_estimate: slot " + std::to_string(slot) + " carries no pilots");
    ChannelEstimate est{CMatrix(lay.n_subcarriers, lay.slot_symbols), EstimateSource::PilotLS, lay.pilot_symbols};
    for (auto j : lay.pilot_symbols) {
        const std::size_t l = slot * lay.slot_symbols + j;
        for (std::size_t k = 0; k < lay.n_subcarriers; ++k) {
            const cplx xp = x.entries(k, l);
            if (xp == cplx{}) throw UsageError("ls_pilot_estimate: zero pilot symbol");
            est.entries(k, j) = y.entries(k, l) / xp;
        }
    }
    return est;
}

ChannelEstimate interpolate_slot(const ChannelEstimate& est) {
    const auto& cols = est.columns;
    if (cols.empty()) throw UsageError("interpolate_slot: no populated columns");
    for (std::size_t i = 1; i < cols.size(); ++i)
        if (cols[i] <= cols[i - 1]) throw UsageError("interpolate_slot: columns must be strictly increasing");
    const std::size_t rows = est.entries.rows(), n = est.entries.cols();
    ChannelEstimate out{CMatrix(rows, n), EstimateSource::Interpolated, {}};
    for (std::size_t l = 0; l < n; ++l) {
        std::size_t a = 0, b = 0;  // bracketing pilot-column positions in `cols`
        double w = 0.0;
        if (l <= cols.front()) {
            a = b = 0;
        } else if (l >= cols.back()) {
            a = b = cols.size() - 1;
        } else {
            while (cols[b] < l) ++b;
            a = b - 1;
            w = static_cast<double>(l - cols[a]) / static_cast<double>(cols[b] - cols[a]);
        }
        for (std::size_t k = 0; k < rows; ++k)
            out.entries(k, l) = (1.0 - w) * est.entries(k, cols[a]) + w * est.entries(k, cols[b]);
    }
    return out;
}

CMatrix equalize(const CMatrix& y_slot, const CMatrix& h_slot) {
    if (y_slot.rows() != h_slot.rows() || y_slot.cols() != h_slot.cols())
        throw UsageError("equalize: estimate and received slot differ in shape");
    CMatrix out(y_slot.rows(), y_slot.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const cplx h = h_slot.values()[i];
        out.values()[i] = std::abs(h) < kErasureThreshold ? cplx{} : y_slot.values()[i] / h;
    }
    return out;
}

ChannelEstimate data_aided_ls(const CMatrix& y_slot, const CMatrix& x_slot, std::span<const std::uint8_t> hard_bits,
                              const QamConstellation& qam, const GridLayout& layout, std::size_t slot) {
    const auto m = static_cast<std::size_t>(qam.bits_per_symbol());
    if (hard_bits.size() != layout.data_res_in_slot(slot) * m)
        throw UsageError("data_aided_ls: expected " + std::to_string(layout.data_res_in_slot(slot) * m) +
                         " hard bits, got " + std::to_string(hard_bits.size()));
    ChannelEstimate out{CMatrix(layout.n_subcarriers, layout.slot_symbols), EstimateSource::DataAidedLS, {}};
    std::size_t d = 0;
    for (std::size_t j = 0; j < layout.slot_symbols; ++j) {
        const bool pilot = layout.is_pilot_symbol(slot * layout.slot_symbols + j);
        for (std::size_t k = 0; k < layout.n_subcarriers; ++k) {
            const cplx x = pilot ? x_slot(k, j) : qam.map(hard_bits.subspan((d++) * m, m));
            out.entries(k, j) = y_slot(k, j) / x;
        }
    }
    return out;
}

}  // namespace ntnpred
