#pragma once

#include <cmath>
#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "geoqrypt/common.hpp"

namespace geoqrypt::quantum {

// Gaussian state in the hbar = 2 convention: vacuum covariance is the
// identity and [q, p] = 2i. Quadratures are ordered (q1, p1, q2, p2, ...).
class GaussianState {
public:
    GaussianState(Eigen::VectorXd first_moments, Eigen::MatrixXd cov)
        : mu_(std::move(first_moments)), cov_(std::move(cov)) {
        if (mu_.size() < 2 || mu_.size() % 2 != 0)
            throw precondition_error("GaussianState: moment vector must have even size >= 2");
        if (cov_.rows() != mu_.size() || cov_.cols() != mu_.size())
            throw precondition_error("GaussianState: covariance shape mismatch");
        if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw covariance_error("GaussianState: covariance not symmetric");
        // Uncertainty principle: cov + i*Omega must be positive semidefinite.
        Eigen::MatrixXcd m = cov_.cast<std::complex<double>>() +
                             std::complex<double>(0, 1) * symplectic_form(n_modes());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
        const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < -1e-9 * scale)
            throw covariance_error("GaussianState: covariance violates the uncertainty bound");
    }

    static Eigen::MatrixXd symplectic_form(int n_modes) {
        Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
        for (int m = 0; m < n_modes; ++m) {
            omega(2 * m, 2 * m + 1) = 1.0;
            omega(2 * m + 1, 2 * m) = -1.0;
        }
        return omega;
    }

    int n_modes() const { return static_cast<int>(mu_.size() / 2); }
    const Eigen::VectorXd& first_moments() const { return mu_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd cov_;
};

// Coherent state |alpha>: mean (2 Re alpha, 2 Im alpha), vacuum covariance.
inline GaussianState coherent_state(std::complex<double> alpha) {
    Eigen::Vector2d mu(2.0 * alpha.real(), 2.0 * alpha.imag());
    return GaussianState(mu, Eigen::Matrix2d::Identity());
}

struct Tmsv {
    GaussianState state;
    // Common quadrature variance v = cosh(2r) of both modes.
    double quadrature_variance;
    // Schmidt parameter tanh(r) of the photon-number expansion.
    double lambda;
};

// Two-mode squeezed vacuum with squeezing parameter r >= 0.
inline Tmsv make_tmsv(double r) {
    if (!(r >= 0.0) || r > 20.0)
        throw precondition_error("make_tmsv: squeezing parameter out of range [0, 20]");
    const double v = std::cosh(2.0 * r);
    const double c = std::sqrt(v * v - 1.0);
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
    cov(0, 0) = cov(1, 1) = cov(2, 2) = cov(3, 3) = v;
    cov(0, 2) = cov(2, 0) = c;
    cov(1, 3) = cov(3, 1) = -c;
    return {GaussianState(Eigen::Vector4d::Zero(), cov), v, std::tanh(r)};
}

struct SymplecticSpectrumPt {
    double nu_minus;
    double nu_plus;
    // Positivity of the partial transpose fails iff nu_minus < 1.
    bool entangled;
};

// Symplectic eigenvalues of the partially transposed covariance of a
// two-mode state whose covariance has the block form
//   [ a*I2   C  ]        C = diag(c_plus, c_minus).
//   [ C     b*I2 ]
inline SymplecticSpectrumPt symplectic_spectrum_pt(const GaussianState& st, double tol = 1e-9) {
    if (st.n_modes() != 2)
        throw precondition_error("symplectic_spectrum_pt: need a two-mode state");
    const Eigen::MatrixXd& m = st.covariance();
    const double a = m(0, 0), b = m(2, 2), cp = m(0, 2), cm = m(1, 3);
    Eigen::Matrix4d expected = Eigen::Matrix4d::Zero();
    expected(0, 0) = expected(1, 1) = a;
    expected(2, 2) = expected(3, 3) = b;
    expected(0, 2) = expected(2, 0) = cp;
    expected(1, 3) = expected(3, 1) = cm;
    if ((m - expected).cwiseAbs().maxCoeff() > tol)
        throw covariance_error("symplectic_spectrum_pt: covariance not in standard block form");
    const double delta = a * a + b * b - 2.0 * cp * cm;
    // Block form makes the determinant exact; the LU route loses digits the
    // difference below cannot afford.
    const double det = (a * b - cp * cp) * (a * b - cm * cm);
    const double disc = delta * delta - 4.0 * det;
    if (disc < -tol * std::max(1.0, delta * delta))
        throw covariance_error("symplectic_spectrum_pt: negative discriminant");
    const double root = std::sqrt(std::max(0.0, disc));
    const double hi = (delta + root) / 2.0;
    // lo*hi = det, so divide instead of subtracting nearly equal terms.
    const double lo = hi > 0.0 ? det / hi : 0.0;
    if (lo < -tol)
        throw covariance_error("symplectic_spectrum_pt: negative squared eigenvalue");
    SymplecticSpectrumPt out{};
    out.nu_minus = std::sqrt(std::max(0.0, lo));
    out.nu_plus = std::sqrt(hi);
    out.entangled = out.nu_minus < 1.0;
    return out;
}

} // namespace geoqrypt::quantum
