#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "ntnpred/cmatrix.hpp"
#include "ntnpred/resource_grid.hpp"
#include "ntnpred/rng.hpp"

namespace ntnpred {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kSubcarrierSpacingHz = 15e3;
inline constexpr double kSlotDurationS = 1e-3;

struct TdlTap {
    double normalized_delay = 0.0;
    double power_db = 0.0;
    bool is_los = false;
    double rician_k_db = 0.0;  // only meaningful when is_los
};

struct TdlProfile {
    std::string name;
    std::vector<TdlTap> taps;
    double delay_spread_s = 30e-9;

    std::vector<double> delays_s() const;
    /// Linear tap powers normalized to unit sum.
    std::vector<double> linear_powers() const;
    bool has_los() const;
};

/// Bundled profile table; overridable through $NTNPRED_DATA_DIR.
std::filesystem::path default_profile_path();

/// Throws ConfigError for unknown names or malformed tables.
TdlProfile load_profile(std::string_view name, const std::filesystem::path& file = default_profile_path(),
                        double delay_spread_s = 30e-9);
std::vector<std::string> available_profiles(const std::filesystem::path& file = default_profile_path());

/// Maximum Doppler f_d = (v/3.6) * fc / c.
double doppler_from_speed(double v_ue_kmh, double fc_hz);

/// Sum-of-sinusoids tapped-delay-line fading. NLoS components follow the
/// classical Jakes spectrum (random arrival-angle offset per realization);
/// a LoS tap adds a specular term at los_doppler_ratio * f_d.
class FadingState {
public:
    static constexpr int kDefaultSinusoids = 32;
    static constexpr double kLosDopplerRatio = 0.7;

    FadingState(const TdlProfile& profile, double doppler_hz, Rng& rng, int sinusoids = kDefaultSinusoids);

    /// Complex tap gains at time t; t must not move backwards.
    std::vector<cplx> evolve_taps(double t);

    double doppler_hz() const { return doppler_hz_; }
    double time_s() const { return time_s_; }
    std::size_t n_taps() const { return taps_.size(); }
    double rician_k_db() const { return rician_k_db_; }

private:
    struct Tap {
        double scatter_amp;            // sqrt of diffuse power
        double los_amp;                // sqrt of specular power
        double los_phase;
        std::vector<double> freq_hz;   // per sinusoid
        std::vector<double> phase;     // per sinusoid
    };
    std::vector<Tap> taps_;
    double doppler_hz_;
    double los_doppler_hz_;
    double rician_k_db_ = -std::numeric_limits<double>::infinity();
    double time_s_ = 0.0;
    int sinusoids_;
};

std::vector<cplx> evolve_taps(FadingState& state, double t);

/// Residual carrier frequency offset, epsilon ~ N(0, sigma).
struct CfoProcess {
    double sigma_d_hz = 0.0;
    double epsilon_d_hz = 0.0;

    /// sigma = 0.1 ppm of fc over three (3-sigma rule).
    static double default_sigma(double fc_hz) { return 0.1e-6 * fc_hz / 3.0; }
    static CfoProcess draw(double sigma_d_hz, Rng& rng);
};

struct CfrMatrix {
    CMatrix entries;
    double subcarrier_spacing_hz = kSubcarrierSpacingHz;
    std::vector<double> symbol_times_s;
};

/// Centers of n consecutive OFDM symbols of a 14-symbol, 1 ms slot grid.
std::vector<double> symbol_center_times(std::size_t n_symbols, double t0 = 0.0,
                                        double symbol_duration_s = kSlotDurationS / 14.0);

/// H[k][l] = exp(j2pi eps t_l) * sum_n h_n(t_l) exp(-j2pi k df tau_n).
CfrMatrix cfr_matrix(FadingState& state, const TdlProfile& profile, const CfoProcess& cfo, std::size_t n_sc,
                     const std::vector<double>& symbol_times, double subcarrier_spacing_hz = kSubcarrierSpacingHz);

/// One burst realization: fresh fading state and CFO draw, CFR evaluated at
/// the centers of n_symbols consecutive OFDM symbols starting at t = 0.
CfrMatrix draw_burst_cfr(const TdlProfile& profile, double doppler_hz, double sigma_d_hz, std::size_t n_sc,
                         std::size_t n_symbols, Rng& rng);

/// Per-RE complex noise variance N0 = 10^(-EsN0/10) at unit symbol energy.
double noise_variance(double es_n0_db);

/// Circular Gaussian matrix with per-entry variance n0.
CMatrix awgn_matrix(std::size_t rows, std::size_t cols, double n0, Rng& rng);

/// Adds noise at the given Es/N0; +infinity leaves the grid untouched.
ResourceGrid awgn(const ResourceGrid& grid, double es_n0_db, Rng& rng);

}  // namespace ntnpred
