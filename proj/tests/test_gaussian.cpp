#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "geoqrypt/gaussian.hpp"

using namespace geoqrypt;
using namespace geoqrypt::quantum;

namespace {
// cosh(x) summed term by term, independent of <cmath>'s cosh path.
double cosh_series(double x) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
        term *= x * x / ((2.0 * k - 1.0) * (2.0 * k));
        sum += term;
    }
    return sum;
}
} // namespace

TEST_CASE("coherent state moments and covariance", "[gaussian]") {
    auto st = coherent_state({1.0, 0.5});
    REQUIRE(st.n_modes() == 1);
    REQUIRE(st.first_moments()(0) == Catch::Approx(2.0));
    REQUIRE(st.first_moments()(1) == Catch::Approx(1.0));
    REQUIRE((st.covariance() - Eigen::Matrix2d::Identity()).norm() < 1e-12);
}

TEST_CASE("tmsv covariance entries", "[gaussian]") {
    const double r = 0.5;
    auto t = make_tmsv(r);
    // Frozen reference: cosh(1) = 1.5430806348152437, confirmed by series.
    REQUIRE(t.quadrature_variance == Catch::Approx(1.5430806348152437).epsilon(1e-14));
    REQUIRE(cosh_series(2.0 * r) == Catch::Approx(t.quadrature_variance).epsilon(1e-13));
    REQUIRE(t.lambda == Catch::Approx(std::tanh(r)).epsilon(1e-14));

    const auto& m = t.state.covariance();
    const double v = t.quadrature_variance;
    const double c = std::sqrt(v * v - 1.0);
    REQUIRE(m(0, 0) == Catch::Approx(v));
    REQUIRE(m(3, 3) == Catch::Approx(v));
    REQUIRE(m(0, 2) == Catch::Approx(c));
    REQUIRE(m(1, 3) == Catch::Approx(-c));
    REQUIRE(m(0, 1) == 0.0);
    REQUIRE(m(0, 3) == 0.0);
    REQUIRE(t.state.first_moments().norm() == 0.0);
}

TEST_CASE("tmsv at r=0 is two vacua", "[gaussian]") {
    auto t = make_tmsv(0.0);
    REQUIRE((t.state.covariance() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
    REQUIRE(t.lambda == 0.0);
    auto nu = symplectic_spectrum_pt(t.state);
    REQUIRE(nu.nu_minus == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(nu.nu_plus == Catch::Approx(1.0).margin(1e-12));
    REQUIRE_FALSE(nu.entangled);
}

TEST_CASE("partial-transpose spectrum of the tmsv is exp(-2r), exp(+2r)", "[gaussian]") {
    for (double r : {0.1, 0.25, 0.5, 1.0, 2.0}) {
        auto nu = symplectic_spectrum_pt(make_tmsv(r).state);
        REQUIRE(nu.nu_minus == Catch::Approx(std::exp(-2.0 * r)).epsilon(1e-12));
        REQUIRE(nu.nu_plus == Catch::Approx(std::exp(2.0 * r)).epsilon(1e-12));
        REQUIRE(nu.nu_minus * nu.nu_plus == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(nu.entangled);
    }
}

TEST_CASE("uncertainty violation is rejected", "[gaussian]") {
    REQUIRE_THROWS_AS(GaussianState(Eigen::Vector2d::Zero(), 0.5 * Eigen::Matrix2d::Identity()),
                      covariance_error);
}

TEST_CASE("asymmetric covariance is rejected", "[gaussian]") {
    Eigen::Matrix2d m;
    m << 1.0, 0.1, 0.0, 1.0;
    REQUIRE_THROWS_AS(GaussianState(Eigen::Vector2d::Zero(), m), covariance_error);
}

TEST_CASE("shape mismatches are rejected", "[gaussian]") {
    REQUIRE_THROWS_AS(GaussianState(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity()),
                      precondition_error);
    REQUIRE_THROWS_AS(GaussianState(Eigen::Vector2d::Zero(), Eigen::Matrix4d::Identity()),
                      precondition_error);
}

TEST_CASE("spectrum requires the standard block form", "[gaussian]") {
    // Thermal noise pulls the pure state off the uncertainty boundary so the
    // off-block perturbation below stays physical.
    Eigen::Matrix4d cov = make_tmsv(0.3).state.covariance() + 0.3 * Eigen::Matrix4d::Identity();
    cov(0, 1) = cov(1, 0) = 0.05;
    GaussianState tweaked(Eigen::Vector4d::Zero(), cov);
    REQUIRE_THROWS_AS(symplectic_spectrum_pt(tweaked), covariance_error);
}

TEST_CASE("spectrum requires two modes", "[gaussian]") {
    REQUIRE_THROWS_AS(symplectic_spectrum_pt(coherent_state({0.0, 0.0})),
                      precondition_error);
}

TEST_CASE("negative squeezing parameter is rejected", "[gaussian]") {
    REQUIRE_THROWS_AS(make_tmsv(-0.1), precondition_error);
}
