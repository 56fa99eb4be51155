#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "geoqrypt/common.hpp"
#include "geoqrypt/localization.hpp"
#include "geoqrypt/parallel.hpp"
#include "geoqrypt/rng.hpp"

// Location verification: accept a decryptor's claimed position only when the
// observed timings place it inside the confidence region around the claim,
// plus Monte-Carlo spoofing analysis versus adversary displacement.
namespace geoqrypt::qlv {

// PositionEllipse: estimate a position, test its Mahalanobis distance from
// the claim against the bivariate Gaussian radius for p_c.
// TimingResidual: test twice the residual objective at the claim against the
// chi-square quantile with one degree of freedom per differenced station.
enum class VerifyMethod : std::uint8_t { PositionEllipse = 0, TimingResidual = 1 };

struct Verdict {
    bool accepted = false;
    double mahalanobis = std::numeric_limits<double>::infinity();
    double threshold = 0.0;
    std::optional<loc::Point2> estimate;
    std::string reason; // empty when accepted

    // accepted must mirror the stored comparison exactly.
    bool consistent() const { return accepted == (mahalanobis <= threshold); }
};

struct SpoofCurve {
    std::vector<double> offsets;   // displacement magnitudes, meters
    std::vector<double> pass_rate; // acceptance fraction per offset
    int trials = 0;                // verdicts behind each pass_rate entry
    std::uint64_t seed = 0;
};

namespace detail {

// The known handling delay is removed from the reported differences before
// any decision.
inline loc::TdoaObservation debias(const loc::TdoaObservation& obs,
                                   const loc::Scenario& scenario) {
    loc::TdoaObservation out = obs;
    if (scenario.processing_delay != 0.0)
        out.phi.array() -= speed_of_light * scenario.processing_delay;
    return out;
}

} // namespace detail

inline Verdict verify(const loc::TdoaObservation& obs, const loc::Scenario& scenario,
                      VerifyMethod method = VerifyMethod::PositionEllipse) {
    scenario.validate();
    const loc::TdoaObservation clean = detail::debias(obs, scenario);
    Verdict v;
    if (method == VerifyMethod::TimingResidual) {
        const auto dof = static_cast<double>(scenario.rs_positions.size() - 1);
        const boost::math::chi_squared dist(dof);
        v.threshold = std::sqrt(boost::math::quantile(dist, scenario.p_c));
        v.mahalanobis = std::sqrt(2.0 * loc::neg_log_likelihood(clean, scenario.claim, scenario));
        v.accepted = v.mahalanobis <= v.threshold;
        if (!v.accepted) v.reason = "timing residual outside the confidence quantile";
        return v;
    }
    v.threshold = loc::coverage_radius(scenario.p_c);
    try {
        const loc::PositionCovariance cov =
            loc::position_covariance(loc::fisher_matrix(scenario.claim, scenario));
        const loc::Point2 est = loc::ml_estimate(clean, scenario, scenario.claim);
        const Eigen::Vector2d delta = est - scenario.claim;
        const double m2 = delta.dot(cov.matrix().llt().solve(delta));
        v.estimate = est;
        v.mahalanobis = std::sqrt(std::max(m2, 0.0));
        v.accepted = v.mahalanobis <= v.threshold;
        if (!v.accepted) v.reason = "estimate outside the confidence region";
    } catch (const degenerate_geometry_error& e) {
        v.reason = e.what();
    } catch (const estimation_error& e) {
        v.reason = e.what();
    }
    return v;
}

namespace detail {

template <typename TruthAt>
SpoofCurve sweep_impl(const loc::Scenario& scenario, const std::vector<double>& offsets,
                      TruthAt&& truth_at, std::size_t streams_per_offset, int trials_each,
                      int trials_reported, const Rng& rng, VerifyMethod method,
                      unsigned threads) {
    scenario.validate();
    if (trials_each < 100)
        throw precondition_error("spoof_sweep: need at least 100 trials");
    for (double d : offsets)
        if (!(d >= 0.0) || !std::isfinite(d))
            throw precondition_error("spoof_sweep: offsets must be finite and non-negative");

    SpoofCurve curve;
    curve.offsets = offsets;
    curve.trials = trials_reported;
    curve.seed = rng.seed();
    curve.pass_rate.resize(offsets.size());
    const auto n_each = static_cast<std::size_t>(trials_each);
    std::vector<std::uint8_t> accepted(streams_per_offset * n_each);
    for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
        // Counter-based substreams: trial (oi, s, t) draws from a stream that
        // depends only on its counter, so any schedule gives the same curve.
        parallel_for(accepted.size(), threads, [&](std::size_t idx) {
            const std::size_t s = idx / n_each;
            const loc::Point2 truth = truth_at(offsets[oi], s);
            Rng trial_rng =
                rng.substream((oi * streams_per_offset + s) * n_each + idx % n_each);
            const loc::TdoaObservation obs = loc::sample_tdoa(truth, scenario, trial_rng);
            accepted[idx] = verify(obs, scenario, method).accepted ? 1 : 0;
        });
        std::size_t count = 0;
        for (std::uint8_t a : accepted) count += a;
        curve.pass_rate[oi] =
            static_cast<double>(count) / static_cast<double>(accepted.size());
    }
    return curve;
}

} // namespace detail

// Acceptance fraction as the true emitter moves away from the claim along a
// fixed unit direction while the claim stays put.
inline SpoofCurve spoof_sweep(const loc::Scenario& scenario,
                              const std::vector<double>& offsets,
                              const loc::Point2& direction, int trials, const Rng& rng,
                              VerifyMethod method = VerifyMethod::PositionEllipse,
                              unsigned threads = 1) {
    if (std::abs(direction.norm() - 1.0) > 1e-9)
        throw precondition_error("spoof_sweep: direction must be a unit vector");
    auto truth_at = [&](double d, std::size_t) -> loc::Point2 {
        return scenario.claim + d * direction;
    };
    return detail::sweep_impl(scenario, offsets, truth_at, 1, trials, trials, rng, method,
                              threads);
}

// Same sweep averaged over eight compass directions, trials_per_direction
// verdicts in each; pass_rate entries pool all eight.
inline SpoofCurve spoof_sweep_compass(const loc::Scenario& scenario,
                                      const std::vector<double>& offsets,
                                      int trials_per_direction, const Rng& rng,
                                      VerifyMethod method = VerifyMethod::PositionEllipse,
                                      unsigned threads = 1) {
    auto truth_at = [&](double d, std::size_t dir) -> loc::Point2 {
        const double angle = static_cast<double>(dir) * M_PI / 4.0;
        return scenario.claim + d * loc::Point2(std::cos(angle), std::sin(angle));
    };
    return detail::sweep_impl(scenario, offsets, truth_at, 8, trials_per_direction,
                              8 * trials_per_direction, rng, method, threads);
}

} // namespace geoqrypt::qlv
