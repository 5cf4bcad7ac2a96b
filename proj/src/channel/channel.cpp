#include "ntnpred/channel.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include <json.hpp>

#include "ntnpred/errors.hpp"
#include "ntnpred/io.hpp"

#ifndef NTNPRED_DATA_DIR
#define NTNPRED_DATA_DIR "data"
#endif

namespace ntnpred {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

json read_profile_table(const fs::path& file) {
    try {
        return json::parse(read_file(file));
    } catch (const json::exception& e) {
        throw ConfigError("profile table " + file.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError(std::string("profile table: ") + e.what());
    }
}
}  // namespace

std::vector<double> TdlProfile::delays_s() const {
    std::vector<double> d;
    for (const auto& t : taps) d.push_back(t.normalized_delay * delay_spread_s);
    return d;
}

std::vector<double> TdlProfile::linear_powers() const {
    std::vector<double> p;
    double total = 0.0;
    for (const auto& t : taps) {
        p.push_back(std::pow(10.0, t.power_db / 10.0));
        total += p.back();
    }
    for (auto& v : p) v /= total;
    return p;
}

bool TdlProfile::has_los() const {
    for (const auto& t : taps)
        if (t.is_los) return true;
    return false;
}

fs::path default_profile_path() {
    if (const char* env = std::getenv("NTNPRED_DATA_DIR")) return fs::path(env) / "ntn_tdl_profiles.json";
    return fs::path(NTNPRED_DATA_DIR) / "ntn_tdl_profiles.json";
}

std::vector<std::string> available_profiles(const fs::path& file) {
    std::vector<std::string> names;
    const json table = read_profile_table(file);
    for (const auto& [k, v] : table.at("profiles").items()) names.push_back(k);
    return names;
}

TdlProfile load_profile(std::string_view name, const fs::path& file, double delay_spread_s) {
    const json table = read_profile_table(file);
    const auto& profiles = table.at("profiles");
    const auto it = profiles.find(std::string(name));
    if (it == profiles.end()) throw ConfigError("unknown channel profile '" + std::string(name) + "'");

    TdlProfile p;
    p.name = std::string(name);
    p.delay_spread_s = delay_spread_s;
    int los = 0;
    try {
        for (const auto& row : it->at("taps")) {
            TdlTap t;
            t.normalized_delay = row.at("normalized_delay").get<double>();
            t.power_db = row.at("power_db").get<double>();
            t.is_los = row.value("los", false);
            if (t.is_los) {
                t.rician_k_db = row.at("k_db").get<double>();
                ++los;
            }
            if (t.normalized_delay < 0.0) throw ConfigError(p.name + ": negative tap delay");
            p.taps.push_back(t);
        }
    } catch (const json::exception& e) {
        throw ConfigError(p.name + ": malformed tap row: " + e.what());
    }
    if (p.taps.empty()) throw ConfigError(p.name + ": no taps");
    if (p.taps.front().normalized_delay != 0.0) throw ConfigError(p.name + ": first tap delay must be 0");
    if (los > 1) throw ConfigError(p.name + ": more than one LoS tap");
    return p;
}

double doppler_from_speed(double v_ue_kmh, double fc_hz) {
    if (v_ue_kmh < 0.0) throw UsageError("doppler_from_speed: negative speed");
    return (v_ue_kmh / 3.6) * fc_hz / kSpeedOfLight;
}

// ---------------------------------------------------------------------------

FadingState::FadingState(const TdlProfile& profile, double doppler_hz, Rng& rng, int sinusoids)
    : doppler_hz_(doppler_hz), los_doppler_hz_(kLosDopplerRatio * doppler_hz), sinusoids_(sinusoids) {
    if (doppler_hz < 0.0) throw UsageError("FadingState: negative Doppler");
    if (sinusoids < 1) throw UsageError("FadingState: need at least one sinusoid");
    const auto powers = profile.linear_powers();
    const double S = static_cast<double>(sinusoids);
    for (std::size_t n = 0; n < profile.taps.size(); ++n) {
        Tap tap;
        double diffuse = powers[n];
        if (profile.taps[n].is_los) {
            rician_k_db_ = profile.taps[n].rician_k_db;
            const double k = std::pow(10.0, rician_k_db_ / 10.0);
            tap.los_amp = std::sqrt(powers[n] * k / (k + 1.0));
            diffuse = powers[n] / (k + 1.0);
            tap.los_phase = rng.uniform(-std::numbers::pi, std::numbers::pi);
        } else {
            tap.los_amp = 0.0;
            tap.los_phase = 0.0;
        }
        tap.scatter_amp = std::sqrt(diffuse / S);
        const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
        for (int k = 0; k < sinusoids; ++k) {
            const double alpha = (kTwoPi * (k + 1) - std::numbers::pi + theta) / S;
            tap.freq_hz.push_back(doppler_hz * std::cos(alpha));
            tap.phase.push_back(rng.uniform(-std::numbers::pi, std::numbers::pi));
        }
        taps_.push_back(std::move(tap));
    }
}

std::vector<cplx> FadingState::evolve_taps(double t) {
    if (t < time_s_) throw UsageError("evolve_taps: time moved backwards");
    time_s_ = t;
    std::vector<cplx> h(taps_.size());
    for (std::size_t n = 0; n < taps_.size(); ++n) {
        const Tap& tap = taps_[n];
        double re = 0.0, im = 0.0;
        for (int k = 0; k < sinusoids_; ++k) {
            const double ph = kTwoPi * tap.freq_hz[static_cast<std::size_t>(k)] * t + tap.phase[static_cast<std::size_t>(k)];
            re += std::cos(ph);
            im += std::sin(ph);
        }
        h[n] = tap.scatter_amp * cplx(re, im);
        if (tap.los_amp > 0.0) h[n] += std::polar(tap.los_amp, kTwoPi * los_doppler_hz_ * t + tap.los_phase);
    }
    return h;
}

std::vector<cplx> evolve_taps(FadingState& state, double t) { return state.evolve_taps(t); }

CfoProcess CfoProcess::draw(double sigma_d_hz, Rng& rng) {
    return CfoProcess{sigma_d_hz, sigma_d_hz > 0.0 ? rng.normal(0.0, sigma_d_hz) : 0.0};
}

std::vector<double> symbol_center_times(std::size_t n_symbols, double t0, double symbol_duration_s) {
    std::vector<double> t(n_symbols);
    for (std::size_t l = 0; l < n_symbols; ++l) t[l] = t0 + (static_cast<double>(l) + 0.5) * symbol_duration_s;
    return t;
}

CfrMatrix cfr_matrix(FadingState& state, const TdlProfile& profile, const CfoProcess& cfo, std::size_t n_sc,
                     const std::vector<double>& symbol_times, double subcarrier_spacing_hz) {
    for (std::size_t l = 1; l < symbol_times.size(); ++l)
        if (!(symbol_times[l] > symbol_times[l - 1])) throw UsageError("cfr_matrix: symbol times must increase");
    const auto delays = profile.delays_s();
    if (delays.size() != state.n_taps()) throw UsageError("cfr_matrix: profile/state tap count mismatch");

    // Per-tap frequency response exp(-j2pi f_k tau_n), reused for all symbols.
    std::vector<cplx> steer(n_sc * delays.size());
    for (std::size_t k = 0; k < n_sc; ++k)
        for (std::size_t n = 0; n < delays.size(); ++n)
            steer[k * delays.size() + n] = std::polar(1.0, -kTwoPi * static_cast<double>(k) * subcarrier_spacing_hz * delays[n]);

    CfrMatrix out{CMatrix(n_sc, symbol_times.size()), subcarrier_spacing_hz, symbol_times};
    for (std::size_t l = 0; l < symbol_times.size(); ++l) {
        const auto h = state.evolve_taps(symbol_times[l]);
        const cplx rot = std::polar(1.0, kTwoPi * cfo.epsilon_d_hz * symbol_times[l]);
        for (std::size_t k = 0; k < n_sc; ++k) {
            cplx s{};
            for (std::size_t n = 0; n < h.size(); ++n) s += h[n] * steer[k * h.size() + n];
            out.entries(k, l) = rot * s;
        }
    }
    return out;
}

CfrMatrix draw_burst_cfr(const TdlProfile& profile, double doppler_hz, double sigma_d_hz, std::size_t n_sc,
                         std::size_t n_symbols, Rng& rng) {
    FadingState state(profile, doppler_hz, rng);
    const auto cfo = CfoProcess::draw(sigma_d_hz, rng);
    return cfr_matrix(state, profile, cfo, n_sc, symbol_center_times(n_symbols));
}

double noise_variance(double es_n0_db) {
    if (std::isinf(es_n0_db) && es_n0_db > 0) return 0.0;
    return std::pow(10.0, -es_n0_db / 10.0);
}

CMatrix awgn_matrix(std::size_t rows, std::size_t cols, double n0, Rng& rng) {
    CMatrix w(rows, cols);
    const double s = std::sqrt(n0 / 2.0);
    for (auto& v : w.values()) {
        const double re = rng.normal();
        const double im = rng.normal();
        v = cplx(s * re, s * im);
    }
    return w;
}

ResourceGrid awgn(const ResourceGrid& grid, double es_n0_db, Rng& rng) {
    ResourceGrid out = grid;
    const double n0 = noise_variance(es_n0_db);
    if (n0 == 0.0) return out;
    const CMatrix w = awgn_matrix(grid.entries.rows(), grid.entries.cols(), n0, rng);
    for (std::size_t i = 0; i < out.entries.size(); ++i) out.entries.values()[i] += w.values()[i];
    return out;
}

}  // namespace ntnpred
