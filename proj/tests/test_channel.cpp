#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "geoqrypt/channel.hpp"
#include "geoqrypt/rng.hpp"

using namespace geoqrypt;
using namespace geoqrypt::channel;

TEST_CASE("steering vector basics", "[channel]") {
    RicianParams single{1.0, 1, 0.5, 0.3};
    auto h1 = los_steering_vector(single);
    REQUIRE(h1.size() == 1);
    REQUIRE(std::abs(h1(0) - std::complex<double>{1.0, 0.0}) < 1e-15);

    RicianParams broadside{1.0, 4, 0.5, M_PI / 2.0};
    auto hb = los_steering_vector(broadside);
    for (int m = 0; m < 4; ++m) REQUIRE(std::abs(hb(m) - std::complex<double>{1.0, 0.0}) < 1e-12);

    RicianParams endfire{1.0, 2, 0.5, 0.0};
    auto he = los_steering_vector(endfire);
    REQUIRE(std::abs(he(0) - std::complex<double>{1.0, 0.0}) < 1e-12);
    REQUIRE(std::abs(he(1) - std::complex<double>{-1.0, 0.0}) < 1e-12);
}

TEST_CASE("steering elements stay on the unit circle", "[channel]") {
    Rng rng(10);
    for (int rep = 0; rep < 50; ++rep) {
        RicianParams p{0.0, 1 + static_cast<int>(rng.uniform_below(8)),
                       rng.uniform(0.05, 2.0), rng.uniform(-3.2, 3.2)};
        auto h = los_steering_vector(p);
        for (int m = 0; m < p.n_antennas; ++m)
            REQUIRE(std::abs(h(m)) == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("huge K collapses onto the LoS vector", "[channel]") {
    RicianParams p{1e12, 4, 0.5, 0.7};
    Rng rng(11);
    auto h = sample_rician(p, rng);
    auto h0 = los_steering_vector(p);
    REQUIRE((h - h0).norm() < 1e-5);
}

TEST_CASE("K = 0 gives zero-mean unit-variance scatter", "[channel]") {
    RicianParams p{0.0, 2, 0.5, 0.0};
    Rng rng(12);
    const int n = 100000;
    std::complex<double> mean0 = 0;
    double pow0 = 0;
    for (int i = 0; i < n; ++i) {
        auto h = sample_rician(p, rng);
        mean0 += h(0);
        pow0 += std::norm(h(0));
    }
    REQUIRE(std::abs(mean0) / n < 0.01);
    REQUIRE(pow0 / n == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("K = 1 splits the mean by sqrt2", "[channel]") {
    RicianParams p{1.0, 3, 0.5, 0.4};
    Rng rng(13);
    const int n = 100000;
    Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(3);
    for (int i = 0; i < n; ++i) mean += sample_rician(p, rng);
    mean /= static_cast<double>(n);
    Eigen::VectorXcd expected = los_steering_vector(p) / std::sqrt(2.0);
    REQUIRE((mean - expected).norm() < 0.02);
}

TEST_CASE("rician per-element power is 1 for any K", "[channel]") {
    Rng rng(14);
    for (double k : {0.0, 0.5, 2.0, 10.0}) {
        RicianParams p{k, 2, 0.5, 1.1};
        double pow_sum = 0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) pow_sum += std::norm(sample_rician(p, rng)(1));
        REQUIRE(pow_sum / n == Catch::Approx(1.0).margin(0.03));
    }
}

TEST_CASE("toa crb arithmetic and monotonicity", "[channel]") {
    REQUIRE(toa_crb_seconds({1e9, 1.0, 1.0}) == Catch::Approx(1.1254e-10).epsilon(1e-4));
    REQUIRE(toa_crb_seconds({2e9, 1.0, 1.0}) ==
            Catch::Approx(0.5 * toa_crb_seconds({1e9, 1.0, 1.0})).epsilon(1e-12));
    double prev = toa_crb_seconds({1e6, 0.5, 1.0});
    for (double snr : {1.0, 4.0, 100.0, 1e6}) {
        double cur = toa_crb_seconds({1e6, snr, 1.0});
        REQUIRE(cur < prev);
        prev = cur;
    }
    REQUIRE(toa_crb_seconds({1e6, 1e12, 1.0}) < 1e-12);
    REQUIRE_THROWS_AS(toa_crb_seconds({0.0, 1.0, 1.0}), precondition_error);
    REQUIRE_THROWS_AS(toa_crb_seconds({1e6, -1.0, 1.0}), precondition_error);
}

TEST_CASE("effective bandwidth of a point mass is |f0|", "[channel]") {
    std::vector<double> f{-2e6, -1e6, 0.0, 1e6, 2e6};
    std::vector<double> s{0.0, 0.0, 0.0, 1.0, 0.0};
    REQUIRE(effective_bandwidth(f, s) == Catch::Approx(1e6).epsilon(1e-12));
}

TEST_CASE("effective bandwidth of a flat band is W/sqrt3", "[channel]") {
    const double w = 5e6;
    const int n = 2001;
    std::vector<double> f(n), s(n, 1.0);
    for (int i = 0; i < n; ++i) f[i] = -w + 2.0 * w * i / (n - 1);
    REQUIRE(effective_bandwidth(f, s) == Catch::Approx(w / std::sqrt(3.0)).epsilon(1e-3));
}

TEST_CASE("effective bandwidth rejects bad spectra", "[channel]") {
    REQUIRE_THROWS_AS(effective_bandwidth({0.0, 1.0}, {1.0, 1.0}), precondition_error);
    REQUIRE_THROWS_AS(effective_bandwidth({0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}),
                      precondition_error);
    REQUIRE_THROWS_AS(effective_bandwidth({0.0, 1.0, 3.0}, {1.0, 1.0, 1.0}),
                      precondition_error);
    REQUIRE_THROWS_AS(effective_bandwidth({0.0, 1.0, 2.0}, {1.0, -1.0, 1.0}),
                      precondition_error);
}

TEST_CASE("multipath inflation", "[channel]") {
    REQUIRE(apply_multipath_inflation(2e-9, 1.5) == Catch::Approx(3e-9));
    REQUIRE(apply_multipath_inflation(2e-9, 1.0) == Catch::Approx(2e-9));
    REQUIRE_THROWS_AS(apply_multipath_inflation(2e-9, 0.5), precondition_error);
    REQUIRE_THROWS_AS(apply_multipath_inflation(-1e-9, 2.0), precondition_error);
}
