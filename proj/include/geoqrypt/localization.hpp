#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "geoqrypt/common.hpp"
#include "geoqrypt/parallel.hpp"
#include "geoqrypt/rng.hpp"

// Planar TDoA localization: station geometry, range-difference likelihood,
// Fisher information, covariance/error-ellipse analysis, accuracy surfaces,
// and a Gauss-Newton ML position estimator.
//
// Convention: an observation entry is a range difference in meters with mean
// d_n - d_1 and variance 2 c^2 sigma_t^2, where station 1 (index 0 here) is
// the timing reference. This is the convention under which the Fisher matrix
// below is exact.
namespace geoqrypt::loc {

using Point2 = Eigen::Vector2d;

struct Scenario {
    std::vector<Point2> rs_positions; // station 1 first: the TDoA reference
    Point2 claim = Point2::Zero();    // claimed decryptor position
    double sigma_t = 0.0;             // timing noise, seconds
    double p_c = 0.99;                // verification confidence level
    double t_d = 0.0;                 // decryption epoch, seconds
    double processing_delay = 0.0;    // known round-trip handling delay, seconds
    std::uint64_t seed = 0;

    void validate() const {
        if (rs_positions.size() < 2)
            throw precondition_error("Scenario: need at least two stations");
        if (!(sigma_t >= 0.0) || !std::isfinite(sigma_t))
            throw precondition_error("Scenario: sigma_t must be finite and non-negative");
        if (!(p_c > 0.0 && p_c < 1.0))
            throw precondition_error("Scenario: p_c must lie in (0, 1)");
        if (!std::isfinite(t_d))
            throw precondition_error("Scenario: t_d must be finite");
        if (!(processing_delay >= 0.0) || !std::isfinite(processing_delay))
            throw precondition_error("Scenario: processing_delay must be finite and non-negative");
        for (const auto& rs : rs_positions)
            if ((rs - claim).norm() < 1e-6)
                throw precondition_error("Scenario: a station coincides with the claim");
    }
};

struct TdoaObservation {
    // Range differences versus the reference station, meters; entry i refers
    // to station i+2.
    Eigen::VectorXd phi;
};

struct Geometry {
    Eigen::VectorXd d;     // distance from the point to each station, meters
    Eigen::VectorXd theta; // full-quadrant bearing from the point to each station
};

inline Geometry geometry(const Point2& point, const Scenario& scenario) {
    scenario.validate();
    const auto n = static_cast<Eigen::Index>(scenario.rs_positions.size());
    Geometry g{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point2 delta = scenario.rs_positions[static_cast<std::size_t>(i)] - point;
        const double dist = delta.norm();
        if (dist < 1e-6)
            throw precondition_error("geometry: point coincides with a station");
        g.d(i) = dist;
        g.theta(i) = std::atan2(delta.y(), delta.x());
    }
    return g;
}

inline TdoaObservation sample_tdoa(const Point2& true_pos, const Scenario& scenario,
                                   Rng& rng) {
    const Geometry g = geometry(true_pos, scenario);
    const double stddev = std::sqrt(2.0) * speed_of_light * scenario.sigma_t;
    TdoaObservation obs{Eigen::VectorXd(g.d.size() - 1)};
    for (Eigen::Index i = 1; i < g.d.size(); ++i)
        obs.phi(i - 1) = (g.d(i) - g.d(0)) + rng.normal(0.0, stddev);
    return obs;
}

inline double neg_log_likelihood(const TdoaObservation& obs, const Point2& candidate,
                                 const Scenario& scenario) {
    if (!(scenario.sigma_t > 0.0))
        throw precondition_error("neg_log_likelihood: sigma_t must be positive");
    const Geometry g = geometry(candidate, scenario);
    if (obs.phi.size() != g.d.size() - 1)
        throw precondition_error("neg_log_likelihood: observation length mismatch");
    const double denom = 4.0 * speed_of_light * speed_of_light * scenario.sigma_t * scenario.sigma_t;
    double nll = 0.0;
    for (Eigen::Index i = 1; i < g.d.size(); ++i) {
        const double r = obs.phi(i - 1) - (g.d(i) - g.d(0));
        nll += r * r / denom;
    }
    return nll;
}

struct FisherMatrix {
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();

    bool is_singular(double tol = 1e-12) const {
        const double scale = std::max({std::abs(j(0, 0)), std::abs(j(1, 1)), 1e-300});
        return j.determinant() <= tol * scale * scale;
    }
};

inline FisherMatrix fisher_matrix(const Point2& point, const Scenario& scenario) {
    if (!(scenario.sigma_t > 0.0))
        throw precondition_error("fisher_matrix: sigma_t must be positive");
    const Geometry g = geometry(point, scenario);
    const double pref =
        1.0 / (2.0 * speed_of_light * speed_of_light * scenario.sigma_t * scenario.sigma_t);
    const double c1 = std::cos(g.theta(0)), s1 = std::sin(g.theta(0));
    double j11 = 0.0, j22 = 0.0, j12 = 0.0;
    for (Eigen::Index i = 1; i < g.theta.size(); ++i) {
        const double dc = std::cos(g.theta(i)) - c1;
        const double ds = std::sin(g.theta(i)) - s1;
        j11 += dc * dc;
        j22 += ds * ds;
        j12 += ds * dc;
    }
    FisherMatrix f;
    f.j << pref * j11, pref * j12, pref * j12, pref * j22;
    return f;
}

struct PositionCovariance {
    double sigma_x = 0.0;  // meters
    double sigma_y = 0.0;  // meters
    double sigma_xy = 0.0; // square meters
    double rho = 0.0;

    Eigen::Matrix2d matrix() const {
        Eigen::Matrix2d m;
        m << sigma_x * sigma_x, sigma_xy, sigma_xy, sigma_y * sigma_y;
        return m;
    }
};

inline PositionCovariance position_covariance(const FisherMatrix& f) {
    const Eigen::Matrix2d& j = f.j;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(j);
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);
    if (!(lo > 0.0) || hi / lo >= 1e12)
        throw degenerate_geometry_error("position_covariance: information matrix singular");
    const double det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    PositionCovariance v;
    v.sigma_x = std::sqrt(j(1, 1) / det);
    v.sigma_y = std::sqrt(j(0, 0) / det);
    v.sigma_xy = -j(0, 1) / det;
    v.rho = v.sigma_xy / (v.sigma_x * v.sigma_y);
    return v;
}

// Bivariate normal density of an estimate around the claimed position, 1/m^2.
inline double position_pdf(const Point2& est, const Point2& claim,
                           const PositionCovariance& cov) {
    if (!(std::abs(cov.rho) < 1.0))
        throw precondition_error("position_pdf: |rho| must be < 1");
    if (!(cov.sigma_x > 0.0) || !(cov.sigma_y > 0.0))
        throw precondition_error("position_pdf: sigma_x and sigma_y must be positive");
    const double dx = est.x() - claim.x();
    const double dy = est.y() - claim.y();
    const double one_m_r2 = 1.0 - cov.rho * cov.rho;
    const double z = dx * dx / (cov.sigma_x * cov.sigma_x) -
                     2.0 * cov.rho * dx * dy / (cov.sigma_x * cov.sigma_y) +
                     dy * dy / (cov.sigma_y * cov.sigma_y);
    return std::exp(-z / (2.0 * one_m_r2)) /
           (2.0 * M_PI * cov.sigma_x * cov.sigma_y * std::sqrt(one_m_r2));
}

struct ErrorEllipse {
    Point2 center = Point2::Zero();
    double semi_major = 0.0; // meters
    double semi_minor = 0.0; // meters
    double orientation_rad = 0.0; // major-axis angle in [0, pi)
};

inline ErrorEllipse error_ellipse(const PositionCovariance& cov, double scale,
                                  const Point2& center = Point2::Zero()) {
    if (!(scale > 0.0))
        throw precondition_error("error_ellipse: scale must be positive");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov.matrix());
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);
    if (!(lo > 0.0))
        throw covariance_error("error_ellipse: covariance not positive definite");
    const Eigen::Vector2d major = es.eigenvectors().col(1);
    double angle = std::atan2(major.y(), major.x());
    if (angle < 0.0) angle += M_PI;
    if (angle >= M_PI) angle -= M_PI;
    return {center, scale * std::sqrt(hi), scale * std::sqrt(lo), angle};
}

// Mahalanobis radius enclosing probability p of a bivariate Gaussian.
inline double coverage_radius(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw precondition_error("coverage_radius: probability must lie in (0, 1)");
    return std::sqrt(-2.0 * std::log1p(-p));
}

// Probability enclosed by the Mahalanobis radius r.
inline double coverage_probability(double r) {
    if (!(r >= 0.0))
        throw precondition_error("coverage_probability: radius must be non-negative");
    return -std::expm1(-0.5 * r * r);
}

struct GridRegion {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    int nx = 2, ny = 2;

    void validate() const {
        if (!(x_max > x_min) || !(y_max > y_min))
            throw precondition_error("GridRegion: empty extent");
        if (nx < 2 || ny < 2)
            throw precondition_error("GridRegion: need at least 2x2 points");
    }
};

struct CrbGrid {
    std::vector<double> xs, ys;
    // Row-major [iy * nx + ix]; entries are NaN where flagged invalid.
    std::vector<double> drms, sigma_x, sigma_y, rho;
    std::vector<std::uint8_t> valid;
};

// Accuracy surface: root-mean-square position error bound at every grid
// point. Degenerate points are flagged, not fatal. Point-parallel evaluation
// writes disjoint slots, so any thread count gives identical output.
inline CrbGrid crb_grid(const GridRegion& region, const Scenario& scenario,
                        unsigned threads = 1) {
    region.validate();
    scenario.validate();
    CrbGrid grid;
    grid.xs.resize(static_cast<std::size_t>(region.nx));
    grid.ys.resize(static_cast<std::size_t>(region.ny));
    for (int i = 0; i < region.nx; ++i)
        grid.xs[static_cast<std::size_t>(i)] =
            region.x_min + (region.x_max - region.x_min) * i / (region.nx - 1);
    for (int i = 0; i < region.ny; ++i)
        grid.ys[static_cast<std::size_t>(i)] =
            region.y_min + (region.y_max - region.y_min) * i / (region.ny - 1);
    const std::size_t total = grid.xs.size() * grid.ys.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    grid.drms.assign(total, nan);
    grid.sigma_x.assign(total, nan);
    grid.sigma_y.assign(total, nan);
    grid.rho.assign(total, nan);
    grid.valid.assign(total, 0);
    parallel_for(total, threads, [&](std::size_t idx) {
        const std::size_t ix = idx % grid.xs.size();
        const std::size_t iy = idx / grid.xs.size();
        const Point2 p(grid.xs[ix], grid.ys[iy]);
        try {
            const FisherMatrix f = fisher_matrix(p, scenario);
            const PositionCovariance v = position_covariance(f);
            grid.drms[idx] = std::sqrt(v.sigma_x * v.sigma_x + v.sigma_y * v.sigma_y);
            grid.sigma_x[idx] = v.sigma_x;
            grid.sigma_y[idx] = v.sigma_y;
            grid.rho[idx] = v.rho;
            grid.valid[idx] = 1;
        } catch (const error&) {
            // Degenerate or coincident point: flagged NaN slot.
        }
    });
    return grid;
}

// Gauss-Newton ML position estimate, damped by step halving whenever the
// objective fails to decrease. Converged when the applied step drops below
// 1e-6 m or after 100 iterations.
inline Point2 ml_estimate(const TdoaObservation& obs, const Scenario& scenario,
                          const Point2& init) {
    if (scenario.rs_positions.size() < 3)
        throw precondition_error("ml_estimate: need at least three stations");
    Point2 pos = init;
    double nll = neg_log_likelihood(obs, pos, scenario);
    double prev_step = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    for (int iter = 0; iter < 100; ++iter) {
        const Geometry g = geometry(pos, scenario);
        const auto n = g.d.size();
        Eigen::MatrixXd jac(n - 1, 2);
        Eigen::VectorXd res(n - 1);
        const double c1 = std::cos(g.theta(0)), s1 = std::sin(g.theta(0));
        for (Eigen::Index i = 1; i < n; ++i) {
            res(i - 1) = obs.phi(i - 1) - (g.d(i) - g.d(0));
            jac(i - 1, 0) = std::cos(g.theta(i)) - c1;
            jac(i - 1, 1) = std::sin(g.theta(i)) - s1;
        }
        const Eigen::Matrix2d jtj = jac.transpose() * jac;
        if (std::abs(jtj.determinant()) < 1e-300)
            throw degenerate_geometry_error("ml_estimate: normal equations singular");
        Eigen::Vector2d step = -jtj.ldlt().solve(jac.transpose() * res);
        double applied = step.norm();
        // Halve until the objective stops increasing.
        Point2 next = pos + step;
        double next_nll = neg_log_likelihood(obs, next, scenario);
        int halvings = 0;
        while (next_nll > nll && halvings < 40) {
            step *= 0.5;
            next = pos + step;
            next_nll = neg_log_likelihood(obs, next, scenario);
            ++halvings;
        }
        applied = step.norm();
        pos = next;
        nll = next_nll;
        if (applied < 1e-6) return pos;
        growth_streak = applied > prev_step ? growth_streak + 1 : 0;
        if (growth_streak >= 10)
            throw estimation_error("ml_estimate: step norm diverging");
        prev_step = applied;
    }
    return pos;
}

} // namespace geoqrypt::loc
