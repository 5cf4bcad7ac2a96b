#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "ntnpred/channel.hpp"
#include "ntnpred/errors.hpp"
#include "ntnpred/estimation.hpp"
#include "ntnpred/interleaver.hpp"
#include "ntnpred/ldpc.hpp"
#include "ntnpred/link.hpp"
#include "ntnpred/qam.hpp"

using namespace ntnpred;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> b(n);
    for (auto& v : b) v = rng.bit();
    return b;
}

std::vector<std::uint8_t> bits_of(std::uint32_t label, int nbits) {
    std::vector<std::uint8_t> b(static_cast<std::size_t>(nbits));
    for (int i = 0; i < nbits; ++i) b[static_cast<std::size_t>(i)] = (label >> (nbits - 1 - i)) & 1u;
    return b;
}

CMatrix random_channel(std::size_t rows, std::size_t cols, Rng& rng) {
    CMatrix h(rows, cols);
    for (auto& v : h.values()) v = cplx(rng.normal(), rng.normal()) * std::sqrt(0.5);
    return h;
}

CMatrix hadamard(const CMatrix& a, const CMatrix& b) {
    CMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
    return out;
}

/// Slot 0 of a pilot-removal grid carrying QPSK data and QPSK pilots.
struct QpskSlot {
    GridLayout layout = GridLayout::pilot_removal();
    QamConstellation qam{4};
    std::vector<std::uint8_t> bits;
    ResourceGrid x;

    explicit QpskSlot(Rng& rng) {
        bits = random_bits(layout.data_res() * 2, rng);
        x = build_grid(qam_map(bits, qam), random_pilots(layout, rng), layout);
    }
    std::span<const std::uint8_t> slot0_bits() const { return {bits.data(), layout.data_res_in_slot(0) * 2}; }
};

}  // namespace

TEST_SUITE("phy") {

TEST_CASE("grid accounting") {
    const auto pr = GridLayout::pilot_removal();
    CHECK(pr.n_symbols() == 28);
    CHECK(pr.data_res_in_slot(0) == 48 * 12);
    CHECK(pr.data_res_in_slot(1) == 48 * 14);
    CHECK(pr.data_res() == 1248);
    CHECK(pr.pilot_res() == 96);
    CHECK(pr.data_res() + pr.pilot_res() == 1344);
    const auto pf = GridLayout::pilot_full();
    CHECK(pf.data_res() == 1152);
    CHECK(pf.data_res() + pf.pilot_res() == 1344);
    CHECK(double(pr.n_symbols()) / double(pr.n_symbols() - pr.pilot_symbols.size()) ==
          doctest::Approx(28.0 / 26.0));

    Rng rng(1);
    const QpskSlot s(rng);
    for (std::size_t l : {std::size_t{3}, std::size_t{12}})
        for (std::size_t k = 0; k < 48; ++k) CHECK(std::abs(std::abs(s.x.entries(k, l)) - 1.0) < 1e-12);
    CHECK_FALSE(pr.is_pilot_symbol(14 + 3));
    const std::vector<cplx> short_data(10);
    CHECK_THROWS_AS(build_grid(short_data, random_pilots(pr, rng), pr), UsageError);
    CHECK(es_n0_from_eb_n0(10.0, 16, 0.75) == doctest::Approx(10.0 + 10.0 * std::log10(3.0)));
}

TEST_CASE("qam constellations") {
    const QamConstellation q4(4);
    const std::uint8_t zeros[2] = {0, 0};
    CHECK(std::abs(q4.map(zeros) - cplx(1, 1) / std::sqrt(2.0)) < 1e-12);
    CHECK_THROWS_AS(QamConstellation(8), ConfigError);

    for (int order : {4, 16, 64}) {
        CAPTURE(order);
        const QamConstellation q(order);
        const int m = q.bits_per_symbol();
        const auto& pts = q.points();
        REQUIRE(pts.size() == std::size_t(order));
        double energy = 0.0;
        for (const auto& p : pts) energy += std::norm(p);
        CHECK(energy / order == doctest::Approx(1.0).epsilon(1e-12));

        double dmin = 1e9;
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) dmin = std::min(dmin, std::abs(pts[a] - pts[b]));
        for (std::size_t a = 0; a < pts.size(); ++a) {
            const auto bits = bits_of(std::uint32_t(a), m);
            CHECK(std::abs(q.map(bits) - pts[a]) < 1e-12);
            for (std::size_t b = 0; b < pts.size(); ++b)
                if (a != b && std::abs(pts[a] - pts[b]) < dmin * 1.001)
                    CHECK(std::popcount(std::uint32_t(a ^ b)) == 1);

            std::vector<std::uint8_t> hard(static_cast<std::size_t>(m), 7);
            q.hard_demap(pts[a], hard);
            CHECK(hard == bits);
            std::vector<double> llr(static_cast<std::size_t>(m));
            q.soft_demap(pts[a], 1e-3, llr);
            for (int i = 0; i < m; ++i) CHECK((llr[std::size_t(i)] > 0) == (bits[std::size_t(i)] == 0));
        }

        Rng rng(2);
        const auto bits = random_bits(std::size_t(m) * 100, rng);
        CHECK(qam_demap_hard(qam_map(bits, q), q) == bits);
    }
}

TEST_CASE("soft demap scales with the equalizer gain and zeroes erased REs") {
    const QamConstellation q(16);
    const std::vector<cplx> sym{q.points()[5], q.points()[5], q.points()[9]};
    const std::vector<cplx> gains{1.0, 2.0, 0.0};
    const auto llr = qam_demap_soft(sym, gains, 0.1, q);
    REQUIRE(llr.size() == 12);
    for (int i = 0; i < 4; ++i) CHECK(llr[4 + i] == doctest::Approx(4.0 * llr[i]));
    for (int i = 8; i < 12; ++i) CHECK(llr[i] == 0.0);
}

TEST_CASE("interleaver") {
    Rng rng(3);
    const auto bits = random_bits(1000, rng);
    const auto il = interleave(bits, 42);
    CHECK(il != bits);
    CHECK(deinterleave(il, 42) == bits);
    CHECK(interleaver_permutation(1000, 42) == interleaver_permutation(1000, 42));
    CHECK(interleaver_permutation(1000, 42) != interleaver_permutation(1000, 43));
    auto perm = interleaver_permutation(1000, 42);
    std::sort(perm.begin(), perm.end());
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(perm[i] == i);
    const std::vector<std::uint8_t> one{1};
    CHECK(interleave(one, 9) == one);

    std::vector<double> llr(1000);
    for (std::size_t i = 0; i < llr.size(); ++i) llr[i] = il[i] ? -1.0 : 1.0;
    const auto back = deinterleave(llr, 42);
    for (std::size_t i = 0; i < bits.size(); ++i) CHECK((back[i] < 0) == (bits[i] == 1));
    const auto p = interleaver_permutation(999, 42);
    CHECK_THROWS_AS(deinterleave(llr, p), UsageError);
}

TEST_CASE("ldpc encode and decode") {
    const auto code = ldpc_code_for(1152, 864);
    CHECK(code->n() == 1152);
    CHECK(code->k() == 864);

    const std::vector<std::uint8_t> zero_info(864);
    const auto zero_cw = code->encode(zero_info);
    CHECK(std::all_of(zero_cw.begin(), zero_cw.end(), [](auto b) { return b == 0; }));

    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const auto info = random_bits(864, rng);
        const auto cw = code->encode(info);
        CHECK(code->is_codeword(cw));
        for (std::size_t i = 0; i < info.size(); ++i) CHECK(cw[code->info_positions()[i]] == info[i]);
        std::vector<double> llr(cw.size());
        for (std::size_t i = 0; i < cw.size(); ++i) llr[i] = cw[i] ? -20.0 : 20.0;
        const auto res = code->decode(llr);
        CHECK(res.success);
        CHECK(res.info_bits == info);
    }
    CHECK_FALSE(code->decode(std::vector<double>(1152, 0.0)).success);

    const auto rt = LdpcCode::from_alist(code->to_alist());
    CHECK(rt.check_rows() == code->check_rows());
    CHECK_THROWS_AS(LdpcCode(4, {{0, 1}, {0, 1}}), ConfigError);
    CHECK_THROWS_AS(ldpc_code_for(1000, 750), ConfigError);
}

TEST_CASE("ldpc decoding lowers the bit error rate") {
    const auto code = ldpc_code_for(1152, 864);
    Rng rng(5);
    const double sigma = 0.5;
    std::size_t raw_errors = 0, decoded_errors = 0;
    for (int block = 0; block < 1000; ++block) {
        const auto info = random_bits(864, rng);
        const auto cw = code->encode(info);
        std::vector<double> llr(cw.size());
        for (std::size_t i = 0; i < cw.size(); ++i) {
            const double y = (cw[i] ? -1.0 : 1.0) + sigma * rng.normal();
            llr[i] = 2.0 * y / (sigma * sigma);
            if ((y < 0) != (cw[i] == 1)) ++raw_errors;
        }
        const auto res = code->decode(llr);
        for (std::size_t i = 0; i < info.size(); ++i) decoded_errors += res.info_bits[i] != info[i];
    }
    CAPTURE(raw_errors);
    CAPTURE(decoded_errors);
    CHECK(raw_errors > 1000);
    CHECK(decoded_errors * 1152 < raw_errors * 864);
}

TEST_CASE("pilot LS estimate") {
    SUBCASE("hand arithmetic") {
        GridLayout one;
        one.n_subcarriers = 1;
        one.slot_has_pilots = {true};
        const std::vector<cplx> data(12, cplx(1, 0));
        const std::vector<cplx> pilots(2, cplx(1, 0));
        const auto x = build_grid(data, pilots, one);
        auto y = x;
        y.entries(0, 3) = cplx(2, 2);
        const auto est = ls_pilot_estimate(y, x);
        CHECK(est.source == EstimateSource::PilotLS);
        CHECK(est.columns == std::vector<std::size_t>{3, 12});
        CHECK(est.entries(0, 3) == cplx(2, 2));
        auto zero = x;
        zero.entries(0, 12) = 0.0;
        CHECK_THROWS_AS(ls_pilot_estimate(y, zero), UsageError);
        CHECK_THROWS_AS(ls_pilot_estimate(y, x, 1), UsageError);
    }
    SUBCASE("noiseless estimate is exact at pilot columns") {
        Rng rng(6);
        const QpskSlot s(rng);
        const CMatrix h = random_channel(48, 28, rng);
        ResourceGrid y{hadamard(h, s.x.entries), s.layout};
        const auto est = ls_pilot_estimate(y, s.x);
        for (std::size_t l : est.columns)
            for (std::size_t k = 0; k < 48; ++k) CHECK(std::abs(est.entries(k, l) - h(k, l)) < 1e-12);
    }
}

TEST_CASE("pilot LS error statistics") {
    Rng rng(7);
    const double n0 = 0.1;
    const QpskSlot s(rng);
    const CMatrix h = random_channel(48, 28, rng);
    const CMatrix yc = hadamard(h, s.x.entries);
    constexpr int kTrials = 1100;  // 96 pilot REs each, > 1e5 samples
    double sq = 0.0;
    cplx sum{};
    std::size_t n = 0;
    for (int t = 0; t < kTrials; ++t) {
        ResourceGrid y{yc, s.layout};
        const auto w = awgn_matrix(48, 28, n0, rng);
        for (std::size_t i = 0; i < yc.size(); ++i) y.entries.values()[i] += w.values()[i];
        const auto est = ls_pilot_estimate(y, s.x);
        for (std::size_t l : est.columns)
            for (std::size_t k = 0; k < 48; ++k) {
                const cplx e = est.entries(k, l) - h(k, l);
                sum += e;
                sq += std::norm(e);
                ++n;
            }
    }
    CHECK(sq / n == doctest::Approx(n0).epsilon(0.03));
    const double se = std::sqrt(n0 / 2.0 / n);
    CHECK(std::abs(sum.real() / n) < 3 * se);
    CHECK(std::abs(sum.imag() / n) < 3 * se);
}

TEST_CASE("interpolation") {
    ChannelEstimate est{CMatrix(48, 14), EstimateSource::PilotLS, {3, 12}};
    for (std::size_t k = 0; k < 48; ++k) {
        est.entries(k, 3) = 0.0;
        est.entries(k, 12) = 9.0;
    }
    est.entries(1, 3) = est.entries(1, 12) = cplx(2, -1);
    const auto full = interpolate_slot(est);
    CHECK(full.source == EstimateSource::Interpolated);
    CHECK(std::abs(full.entries(0, 7) - 4.0) < 1e-12);
    CHECK(std::abs(full.entries(0, 0) - 0.0) < 1e-12);
    CHECK(std::abs(full.entries(0, 13) - 9.0) < 1e-12);
    for (std::size_t l = 0; l < 14; ++l) CHECK(std::abs(full.entries(1, l) - cplx(2, -1)) < 1e-12);
}

TEST_CASE("zero-forcing equalization") {
    Rng rng(8);
    const CMatrix h = random_channel(48, 14, rng);
    const CMatrix x = random_channel(48, 14, rng);
    const CMatrix y = hadamard(h, x);
    const CMatrix eq = equalize(y, h);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(eq.values()[i] - x.values()[i]) < 1e-12);
    CMatrix h2 = h;
    for (auto& v : h2.values()) v *= 2.0;
    const CMatrix half = equalize(y, h2);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(half.values()[i] - 0.5 * x.values()[i]) < 1e-12);
    CMatrix erased = h;
    erased(4, 5) = 0.0;
    CHECK(equalize(y, erased)(4, 5) == cplx(0.0));
}

TEST_CASE("data-aided LS") {
    Rng rng(9);
    const QpskSlot s(rng);
    const CMatrix h = random_channel(48, 14, rng);
    const CMatrix x0 = s.x.entries.columns(0, 14);
    const CMatrix y0 = hadamard(h, x0);

    SUBCASE("correct decisions, noiseless: exact") {
        const auto est = data_aided_ls(y0, x0, s.slot0_bits(), s.qam, s.layout);
        CHECK(est.source == EstimateSource::DataAidedLS);
        CHECK(nmse(est.entries, h) < 1e-24);
    }
    SUBCASE("one wrong QPSK decision rotates that RE by pi/2") {
        std::vector<std::uint8_t> bits(s.slot0_bits().begin(), s.slot0_bits().end());
        bits[2 * 7] ^= 1u;  // data RE 7: subcarrier 7, column 0
        const auto est = data_aided_ls(y0, x0, bits, s.qam, s.layout);
        const cplx ratio = est.entries(7, 0) / h(7, 0);
        CHECK(std::abs(std::abs(ratio) - 1.0) < 1e-12);
        CHECK(std::abs(std::abs(std::arg(ratio)) - std::numbers::pi / 2) < 1e-12);
        for (std::size_t k = 0; k < 48; ++k)
            if (k != 7) CHECK(std::abs(est.entries(k, 0) - h(k, 0)) < 1e-12);
    }
    SUBCASE("correct decisions: error variance equals N0") {
        const double n0 = 0.05;
        double sq = 0.0;
        std::size_t n = 0;
        for (int t = 0; t < 200; ++t) {
            CMatrix y = y0;
            const auto w = awgn_matrix(48, 14, n0, rng);
            for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] += w.values()[i];
            const auto est = data_aided_ls(y, x0, s.slot0_bits(), s.qam, s.layout);
            sq += squared_error(est.entries, h);
            n += h.size();
        }
        CHECK(sq / n == doctest::Approx(n0).epsilon(0.03));
    }
}

TEST_CASE("end-to-end noiseless chain recovers the info bits") {
    for (int order : {4, 16, 64}) {
        CAPTURE(order);
        const LinkChain chain(order, GridLayout::pilot_removal());
        Rng rng(10 + order);
        const auto tx = chain.transmit(rng);
        const CMatrix ones(48, 14, cplx(1.0));
        for (std::size_t slot = 0; slot < 2; ++slot) {
            const auto rx = chain.receive_slot(tx.x.entries.columns(slot * 14, 14), ones, 1e-6, tx, slot);
            CHECK(rx.bit_errors == 0);
            CHECK(rx.bits == tx.mapped[slot].size());
            CHECK(rx.decoder_ok);
            CHECK_FALSE(rx.block_error);
        }
        const auto pr = receive_pilot_slot(chain, tx.x, tx, 0, 1e-6, true);
        CHECK_FALSE(pr.rx.block_error);
        CHECK(nmse(pr.data_aided.entries, ones) < 1e-24);
    }
}

TEST_CASE("shared slot zero keeps both branches on the same symbols") {
    const LinkChain full(16, GridLayout::pilot_full());
    const LinkChain removal(16, GridLayout::pilot_removal());
    Rng rng(11);
    const auto tx_e = full.transmit(rng);
    const auto tx_p = removal.transmit(rng, &tx_e, 1);
    CHECK(tx_p.info[0] == tx_e.info[0]);
    const auto a = tx_e.x.entries.columns(0, 14), b = tx_p.x.entries.columns(0, 14);
    CHECK(a.values() == b.values());
    CHECK(tx_p.info[1].size() == removal.code(1).k());
    CHECK(removal.code(1).n() == 672 * 4);
}

}  // TEST_SUITE
