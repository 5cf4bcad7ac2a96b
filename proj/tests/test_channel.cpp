#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ntnpred/channel.hpp"
#include "ntnpred/errors.hpp"

using namespace ntnpred;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

TdlProfile static_profile(std::vector<double> normalized_delays, double delay_unit_s) {
    TdlProfile p;
    p.name = "test";
    p.delay_spread_s = delay_unit_s;
    for (double d : normalized_delays) p.taps.push_back({d, 0.0, false, 0.0});
    return p;
}

std::vector<cplx> dft(const std::vector<cplx>& x, int sign) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            out[k] += x[i] * std::polar(1.0, sign * kTwoPi * double(k * i % n) / double(n));
    return out;
}

/// Asymptotic Kolmogorov distribution tail with Stephens' small-sample correction.
double ks_p_value(double d, std::size_t n) {
    const double sn = std::sqrt(double(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(q, 0.0, 1.0);
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("profile tables") {
    const auto names = available_profiles();
    CHECK(std::find(names.begin(), names.end(), "NTN-TDL-A") != names.end());
    CHECK(std::find(names.begin(), names.end(), "NTN-TDL-C") != names.end());

    const auto c = load_profile("NTN-TDL-C");
    REQUIRE(!c.taps.empty());
    CHECK(c.taps.front().is_los);
    CHECK(std::count_if(c.taps.begin(), c.taps.end(), [](const TdlTap& t) { return t.is_los; }) == 1);
    CHECK_FALSE(load_profile("NTN-TDL-A").has_los());

    for (const auto& name : names) {
        CAPTURE(name);
        const auto p = load_profile(name);
        double sum = 0.0;
        for (double w : p.linear_powers()) sum += w;
        CHECK(std::abs(sum - 1.0) < 1e-12);
        const auto d = p.delays_s();
        CHECK(d.front() == 0.0);
        for (double x : d) CHECK(x >= 0.0);
    }
    const auto a = load_profile("NTN-TDL-A", default_profile_path(), 100e-9);
    CHECK(a.delays_s()[1] == doctest::Approx(a.taps[1].normalized_delay * 100e-9));
    CHECK_THROWS_AS(load_profile("NTN-TDL-Z"), ConfigError);
}

TEST_CASE("doppler from speed") {
    CHECK(doppler_from_speed(0.0, 2e9) == 0.0);
    CHECK(doppler_from_speed(5.0, 2e9) == doctest::Approx(9.2657).epsilon(1e-4));
    CHECK(doppler_from_speed(50.0, 2e9) == doctest::Approx(92.657).epsilon(1e-4));
    CHECK_THROWS_AS(doppler_from_speed(-1.0, 2e9), UsageError);
}

TEST_CASE("zero Doppler keeps taps constant; time must not go back") {
    Rng rng(3);
    FadingState s(load_profile("NTN-TDL-C"), 0.0, rng);
    const auto h0 = s.evolve_taps(0.0);
    const auto h1 = s.evolve_taps(1.5e-3);
    for (std::size_t n = 0; n < h0.size(); ++n) CHECK(std::abs(h0[n] - h1[n]) < 1e-12);
    CHECK_THROWS_AS(s.evolve_taps(1e-3), UsageError);
    CHECK_THROWS_AS(FadingState(load_profile("NTN-TDL-A"), -1.0, rng), UsageError);
}

TEST_CASE("cfr matrix closed forms") {
    const std::vector<double> times = symbol_center_times(14);
    REQUIRE(times.size() == 14);
    CHECK(times[1] - times[0] == doctest::Approx(1e-3 / 14));

    SUBCASE("single static tap gives a flat matrix, CFO gives a phase ramp") {
        const auto p = static_profile({0.0}, 30e-9);
        Rng rng(5);
        FadingState s(p, 0.0, rng);
        FadingState probe = s;
        const cplx h = probe.evolve_taps(0.0)[0];
        const auto flat = cfr_matrix(s, p, CfoProcess{}, 48, times);
        REQUIRE(flat.entries.rows() == 48);
        REQUIRE(flat.entries.cols() == 14);
        for (const auto& v : flat.entries.values()) CHECK(std::abs(v - h) < 1e-12);

        FadingState s2 = probe;
        const CfoProcess cfo{66.7, 150.0};
        const auto ramp = cfr_matrix(s2, p, cfo, 48, times);
        for (std::size_t k = 0; k < 48; ++k)
            for (std::size_t l = 0; l < 14; ++l) {
                const cplx expect = h * std::polar(1.0, kTwoPi * 150.0 * times[l]);
                CHECK(std::abs(ramp.entries(k, l) - expect) < 1e-12);
            }
    }
    SUBCASE("two-ray channel") {
        const double tau = 1.0 / (2.0 * kSubcarrierSpacingHz);
        const auto p = static_profile({0.0, 1.0}, tau);
        Rng rng(6);
        FadingState s(p, 0.0, rng);
        FadingState probe = s;
        const auto h = probe.evolve_taps(0.0);
        const auto H = cfr_matrix(s, p, CfoProcess{}, 8, {0.0});
        // Phase difference pi per subcarrier: even k sees h0 + h1, odd k h0 - h1.
        for (std::size_t k = 0; k < 8; ++k)
            CHECK(std::abs(H.entries(k, 0) - (k % 2 ? h[0] - h[1] : h[0] + h[1])) < 1e-12);
    }
}

TEST_CASE("frequency-domain grid equals the time-domain CP convolution oracle") {
    constexpr std::size_t N = 8, kCp = 4, kSymbols = 3;
    const double ts = 1.0 / (N * kSubcarrierSpacingHz);
    const auto p = static_profile({0.0, 1.0, 2.0, 3.0}, ts);
    Rng rng(7);
    FadingState s(p, 0.0, rng);
    FadingState probe = s;
    const auto taps = probe.evolve_taps(0.0);
    const auto H = cfr_matrix(s, p, CfoProcess{}, N, symbol_center_times(kSymbols));

    double worst = 0.0;
    for (std::size_t l = 0; l < kSymbols; ++l) {
        std::vector<cplx> X(N);
        for (auto& v : X) v = cplx(rng.normal(), rng.normal());
        // IFFT, CP insertion, linear convolution with the tap filter, CP removal, FFT.
        auto x = dft(X, +1);
        for (auto& v : x) v /= double(N);
        std::vector<cplx> tx(x.end() - kCp, x.end());
        tx.insert(tx.end(), x.begin(), x.end());
        std::vector<cplx> rx(tx.size());
        for (std::size_t i = 0; i < tx.size(); ++i)
            for (std::size_t d = 0; d < taps.size() && d <= i; ++d) rx[i] += taps[d] * tx[i - d];
        const auto Y_time = dft(std::vector<cplx>(rx.begin() + kCp, rx.end()), -1);
        for (std::size_t k = 0; k < N; ++k) worst = std::max(worst, std::abs(Y_time[k] - H.entries(k, l) * X[k]));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("tap power and total power") {
    constexpr int kReal = 100000;
    for (const char* name : {"NTN-TDL-A", "NTN-TDL-C"}) {
        CAPTURE(name);
        const auto p = load_profile(name);
        const auto w = p.linear_powers();
        std::vector<double> acc(w.size());
        Rng rng(11);
        for (int r = 0; r < kReal; ++r) {
            FadingState s(p, 92.7, rng);
            const auto h = s.evolve_taps(rng.uniform(0.0, 0.1));
            for (std::size_t n = 0; n < h.size(); ++n) acc[n] += std::norm(h[n]);
        }
        double total = 0.0;
        for (std::size_t n = 0; n < w.size(); ++n) {
            CHECK(acc[n] / kReal == doctest::Approx(w[n]).epsilon(0.02));
            total += acc[n] / kReal;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("NLoS tap autocorrelation follows J0") {
    const auto p = load_profile("NTN-TDL-A");
    const double fd = 92.7;
    const double p0 = p.linear_powers()[0];
    constexpr int kReal = 10000, kLags = 41;
    std::vector<cplx> acc(kLags);
    Rng rng(13);
    for (int r = 0; r < kReal; ++r) {
        FadingState s(p, fd, rng);
        const cplx h0 = s.evolve_taps(0.0)[0];
        acc[0] += std::norm(h0);
        for (int i = 1; i < kLags; ++i) acc[i] += h0 * std::conj(s.evolve_taps(i * 0.05 / fd)[0]);
    }
    double worst = 0.0;
    for (int i = 0; i < kLags; ++i) {
        const double tau = i * 0.05 / fd;
        const double rho = acc[i].real() / (kReal * p0);
        worst = std::max(worst, std::abs(rho - std::cyl_bessel_j(0.0, kTwoPi * fd * tau)));
    }
    CHECK(worst < 0.03);
}

TEST_CASE("NLoS tap amplitude is Rayleigh (KS at 0.01)") {
    const auto p = load_profile("NTN-TDL-A");
    constexpr std::size_t kN = 2000;
    for (std::size_t tap = 0; tap < p.taps.size(); ++tap) {
        CAPTURE(tap);
        const double power = p.linear_powers()[tap];
        std::vector<double> r;
        Rng rng(17 + tap);
        for (std::size_t i = 0; i < kN; ++i) {
            FadingState s(p, 9.27, rng);
            r.push_back(std::abs(s.evolve_taps(rng.uniform(0.0, 1.0))[tap]));
        }
        std::sort(r.begin(), r.end());
        double d = 0.0;
        for (std::size_t i = 0; i < kN; ++i) {
            const double F = 1.0 - std::exp(-r[i] * r[i] / power);
            d = std::max({d, F - double(i) / kN, double(i + 1) / kN - F});
        }
        CHECK(ks_p_value(d, kN) > 0.01);
    }
}

TEST_CASE("residual CFO 3-sigma coverage") {
    const double fc = 2e9;
    const double sigma = CfoProcess::default_sigma(fc);
    CHECK(sigma == doctest::Approx(66.6667).epsilon(1e-5));
    Rng rng(19);
    constexpr int kDraws = 100000;
    int inside = 0;
    for (int i = 0; i < kDraws; ++i) {
        const auto c = CfoProcess::draw(sigma, rng);
        CHECK_MESSAGE(c.sigma_d_hz == sigma, "sigma stored");
        if (std::abs(c.epsilon_d_hz) <= 0.1e-6 * fc) ++inside;
    }
    const double frac = double(inside) / kDraws;
    CHECK(frac >= 0.995);
    CHECK(frac <= 0.999);
    CHECK(CfoProcess::draw(0.0, rng).epsilon_d_hz == 0.0);
}

TEST_CASE("awgn") {
    SUBCASE("infinite Es/N0 leaves the grid untouched") {
        ResourceGrid g;
        g.entries = CMatrix(48, 28, cplx(0.5, -0.5));
        Rng rng(23);
        const auto out = awgn(g, std::numeric_limits<double>::infinity(), rng);
        CHECK(out.entries.values() == g.entries.values());
    }
    SUBCASE("variance and circular symmetry at 0 dB") {
        Rng rng(29);
        ResourceGrid g;
        g.entries = CMatrix(1000, 1000);
        const auto out = awgn(g, 0.0, rng);
        double re2 = 0.0, im2 = 0.0, cross = 0.0;
        for (const auto& v : out.entries.values()) {
            re2 += v.real() * v.real();
            im2 += v.imag() * v.imag();
            cross += v.real() * v.imag();
        }
        const double n = 1e6;
        CHECK((re2 + im2) / n == doctest::Approx(1.0).epsilon(0.02));
        CHECK(re2 / n == doctest::Approx(0.5).epsilon(0.02));
        CHECK(im2 / n == doctest::Approx(0.5).epsilon(0.02));
        CHECK(std::abs(cross / n) < 0.005);
    }
    CHECK(noise_variance(10.0) == doctest::Approx(0.1));
    Rng rng(31);
    const auto w = awgn_matrix(200, 500, 0.25, rng);
    CHECK(w.mean_power() == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("burst draw has requested dimensions and is seed-reproducible") {
    const auto p = load_profile("NTN-TDL-C");
    Rng a(37), b(37);
    const auto ha = draw_burst_cfr(p, 9.27, 66.7, 48, 28, a);
    const auto hb = draw_burst_cfr(p, 9.27, 66.7, 48, 28, b);
    CHECK(ha.entries.rows() == 48);
    CHECK(ha.entries.cols() == 28);
    CHECK(ha.entries.values() == hb.entries.values());
}

}  // TEST_SUITE
