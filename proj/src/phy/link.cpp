#include "ntnpred/link.hpp"

#include <cmath>
#include <string>

#include "ntnpred/errors.hpp"
#include "ntnpred/estimation.hpp"
#include "ntnpred/interleaver.hpp"

namespace ntnpred {

LinkChain::LinkChain(int mod_order, GridLayout layout, double code_rate, std::uint64_t interleaver_seed,
                     int ldpc_iterations)
    : qam_(mod_order),
      layout_(std::move(layout)),
      code_rate_(code_rate),
      ldpc_iterations_(ldpc_iterations),
      interleaver_seed_(interleaver_seed) {
    if (!(code_rate > 0.0 && code_rate <= 1.0)) throw ConfigError("code rate must lie in (0, 1]");
    if (ldpc_iterations < 1) throw ConfigError("LDPC iteration count must be >= 1");
    for (std::size_t s = 0; s < layout_.n_slots(); ++s) {
        const std::size_t n = layout_.data_res_in_slot(s) * static_cast<std::size_t>(qam_.bits_per_symbol());
        const auto k = static_cast<std::size_t>(std::llround(code_rate * static_cast<double>(n)));
        codes_.push_back(ldpc_code_for(n, k));
        perms_.push_back(interleaver_permutation(n, interleaver_seed_));
    }
}

TxBurst LinkChain::transmit(Rng& rng, const TxBurst* shared, std::size_t shared_slots) const {
    if (shared_slots > 0) {
        if (!shared) throw UsageError("transmit: shared slots requested without a source burst");
        for (std::size_t s = 0; s < shared_slots; ++s)
            if (s >= shared->x.layout.n_slots() || shared->x.layout.slot_has_pilots[s] != layout_.slot_has_pilots[s])
                throw UsageError("transmit: shared slot " + std::to_string(s) + " has a different layout");
    }
    TxBurst tx;
    tx.info.resize(layout_.n_slots());
    tx.mapped.resize(layout_.n_slots());
    std::vector<cplx> symbols;
    for (std::size_t s = 0; s < layout_.n_slots(); ++s) {
        if (s < shared_slots) {
            tx.info[s] = shared->info[s];
            tx.mapped[s] = shared->mapped[s];
        } else {
            auto& info = tx.info[s];
            info.resize(codes_[s]->k());
            for (auto& b : info) b = rng.bit();
            const auto cw = codes_[s]->encode(info);
            auto& mapped = tx.mapped[s];
            mapped.resize(cw.size());
            for (std::size_t i = 0; i < cw.size(); ++i) mapped[i] = cw[perms_[s][i]];
        }
        const auto sym = qam_map(tx.mapped[s], qam_);
        symbols.insert(symbols.end(), sym.begin(), sym.end());
    }
    const auto pilots = random_pilots(layout_, rng);
    tx.x = build_grid(symbols, pilots, layout_);
    for (std::size_t s = 0; s < shared_slots; ++s)
        tx.x.entries.set_columns(s * layout_.slot_symbols,
                                 shared->x.entries.columns(s * layout_.slot_symbols, layout_.slot_symbols));
    return tx;
}

SlotRx LinkChain::receive_slot(const CMatrix& y_slot, const CMatrix& h_slot, double n0, const TxBurst& tx,
                               std::size_t slot, bool decode) const {
    const auto eq = equalize(y_slot, h_slot);
    GridLayout one = layout_;
    one.slot_has_pilots = {layout_.slot_has_pilots.at(slot)};
    const auto symbols = slot_data(eq, one, 0);
    const auto gains = slot_data(h_slot, one, 0);

    SlotRx rx;
    rx.hard_bits = qam_demap_hard(symbols, qam_);
    const auto& sent = tx.mapped.at(slot);
    rx.bits = sent.size();
    for (std::size_t i = 0; i < sent.size(); ++i) rx.bit_errors += rx.hard_bits[i] != sent[i];
    if (!decode) return rx;

    const auto llr = qam_demap_soft(symbols, gains, n0, qam_);
    const auto cw_llr = deinterleave(llr, perms_[slot]);
    const auto res = codes_[slot]->decode(cw_llr, ldpc_iterations_);
    rx.decoded = true;
    rx.decoder_ok = res.success;
    rx.block_error = !res.success || res.info_bits != tx.info.at(slot);
    return rx;
}

PilotSlotRx receive_pilot_slot(const LinkChain& chain, const ResourceGrid& y, const TxBurst& tx, std::size_t slot,
                               double n0, bool decode) {
    const auto& lay = chain.layout();
    const std::size_t first = slot * lay.slot_symbols;
    PilotSlotRx out;
    out.interpolated = interpolate_slot(ls_pilot_estimate(y, tx.x, slot));
    const CMatrix y_slot = y.entries.columns(first, lay.slot_symbols);
    out.rx = chain.receive_slot(y_slot, out.interpolated.entries, n0, tx, slot, decode);
    out.data_aided = data_aided_ls(y_slot, tx.x.entries.columns(first, lay.slot_symbols), out.rx.hard_bits, chain.qam(),
                                   lay, slot);
    return out;
}

double es_n0_from_eb_n0(double eb_n0_db, int mod_order, double code_rate) {
    const double m = std::log2(static_cast<double>(mod_order));
    return eb_n0_db + 10.0 * std::log10(m * code_rate);
}

}  // namespace ntnpred
