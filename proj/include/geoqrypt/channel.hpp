#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "geoqrypt/common.hpp"
#include "geoqrypt/rng.hpp"

// Rician fading samples and the ToA timing-error model. The localization
// engine takes its noise level sigma_t directly; toa_crb_seconds is the
// principled way to derive that number from bandwidth and SNR.
namespace geoqrypt::channel {

struct RicianParams {
    double k_factor = 0.0;          // LoS-to-scatter power ratio, >= 0
    int n_antennas = 1;             // >= 1
    double spacing_wavelengths = 0.5; // > 0
    double angle_rad = 0.0;

    void validate() const {
        if (!(k_factor >= 0.0) || !std::isfinite(k_factor))
            throw precondition_error("RicianParams: k_factor must be finite and >= 0");
        if (n_antennas < 1)
            throw precondition_error("RicianParams: need at least one antenna");
        if (!(spacing_wavelengths > 0.0))
            throw precondition_error("RicianParams: spacing must be positive");
        if (!std::isfinite(angle_rad))
            throw precondition_error("RicianParams: angle must be finite");
    }
};

struct ToaModel {
    double beta_hz = 0.0;       // effective bandwidth, > 0
    double snr = 0.0;           // linear power ratio, > 0
    double noise_density = 1.0; // one-sided N0/2; carried for documentation

    void validate() const {
        if (!(beta_hz > 0.0) || !(snr > 0.0) || !(noise_density > 0.0))
            throw precondition_error("ToaModel: beta, snr and noise density must be positive");
    }
};

// Line-of-sight steering vector; element m is exp(j 2 pi m spacing cos angle).
inline Eigen::VectorXcd los_steering_vector(const RicianParams& p) {
    p.validate();
    Eigen::VectorXcd h(p.n_antennas);
    const double phase_step = 2.0 * M_PI * p.spacing_wavelengths * std::cos(p.angle_rad);
    for (int m = 0; m < p.n_antennas; ++m)
        h(m) = std::polar(1.0, phase_step * static_cast<double>(m));
    return h;
}

// LoS component plus i.i.d. unit-variance complex Gaussian scatter, mixed by
// the K-factor weights.
inline Eigen::VectorXcd sample_rician(const RicianParams& p, Rng& rng) {
    p.validate();
    const double w_los = std::sqrt(p.k_factor / (1.0 + p.k_factor));
    const double w_scatter = std::sqrt(1.0 / (1.0 + p.k_factor));
    Eigen::VectorXcd h = w_los * los_steering_vector(p);
    for (int m = 0; m < p.n_antennas; ++m) h(m) += w_scatter * rng.complex_normal();
    return h;
}

// Timing CRB 1 / (2 sqrt2 pi beta sqrt(SNR)), in seconds.
inline double toa_crb_seconds(const ToaModel& m) {
    m.validate();
    return 1.0 / (2.0 * std::sqrt(2.0) * M_PI * m.beta_hz * std::sqrt(m.snr));
}

// beta = sqrt(second moment / zeroth moment) of a sampled |S(f)|^2, by
// trapezoidal quadrature on a uniform frequency grid.
inline double effective_bandwidth(const std::vector<double>& freq_hz,
                                  const std::vector<double>& power) {
    if (freq_hz.size() != power.size() || freq_hz.size() < 3)
        throw precondition_error("effective_bandwidth: need >= 3 matched grid points");
    const double df = freq_hz[1] - freq_hz[0];
    if (!(df > 0.0))
        throw precondition_error("effective_bandwidth: grid must be increasing");
    for (std::size_t i = 1; i + 1 < freq_hz.size(); ++i)
        if (std::abs((freq_hz[i + 1] - freq_hz[i]) - df) > 1e-9 * std::abs(df))
            throw precondition_error("effective_bandwidth: grid must be uniform");
    double zeroth = 0.0, second = 0.0;
    for (std::size_t i = 0; i < power.size(); ++i) {
        if (power[i] < 0.0)
            throw precondition_error("effective_bandwidth: negative spectral sample");
        const double w = (i == 0 || i + 1 == power.size()) ? 0.5 : 1.0;
        zeroth += w * power[i];
        second += w * power[i] * freq_hz[i] * freq_hz[i];
    }
    if (zeroth <= 0.0)
        throw precondition_error("effective_bandwidth: zero total energy");
    return std::sqrt(second / zeroth);
}

// Multipath makes the timing bound optimistic; scale sigma_t by a factor
// >= 1 chosen at scenario level.
inline double apply_multipath_inflation(double sigma_t, double factor) {
    if (!(sigma_t > 0.0))
        throw precondition_error("apply_multipath_inflation: sigma_t must be positive");
    if (!(factor >= 1.0))
        throw precondition_error("apply_multipath_inflation: factor must be >= 1");
    return sigma_t * factor;
}

} // namespace geoqrypt::channel
