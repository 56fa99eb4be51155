// Prints a coarse text map of the position error bound around four ranging
// stations on a square, plus the error ellipse at the center.

#include <cstdio>

#include "geoqrypt/localization.hpp"

int main() {
    using namespace geoqrypt;
    loc::Scenario sc;
    sc.rs_positions = {{1000.0, 1000.0}, {-1000.0, 1000.0}, {-1000.0, -1000.0},
                       {1000.0, -1000.0}};
    sc.claim = {0.0, 0.0};
    sc.sigma_t = 1.8 / speed_of_light;

    loc::GridRegion region{-1500.0, 1500.0, -1500.0, 1500.0, 13, 13};
    const loc::CrbGrid grid = loc::crb_grid(region, sc);

    std::printf("drms bound (m), 13x13 over +-1500 m:\n");
    for (int iy = region.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < region.nx; ++ix) {
            const auto i = static_cast<std::size_t>(iy * region.nx + ix);
            if (grid.valid[i])
                std::printf("%6.2f", grid.drms[i]);
            else
                std::printf("%6s", "-");
        }
        std::printf("\n");
    }

    const auto cov = loc::position_covariance(loc::fisher_matrix(sc.claim, sc));
    const auto ell = loc::error_ellipse(cov, 3.0, sc.claim);
    std::printf("\ncenter ellipse at scale 3: semi-axes %.3f x %.3f m, "
                "orientation %.4f rad, coverage %.6f\n",
                ell.semi_major, ell.semi_minor, ell.orientation_rad,
                loc::coverage_probability(3.0));
    return 0;
}
