// Induced prior on v from a beta prior on a0 (one historical dataset), and the closest
// inverse-gamma prior. Prints a few quantiles of both.
//   sample_induced_prior [alpha beta [n0 sigma0^2]]

#include <cmath>
#include <cstdlib>
#include <iostream>

#include "npp/fitting.hpp"
#include "npp/transform.hpp"

int main(int argc, char** argv) {
    const double a = argc > 2 ? std::atof(argv[1]) : 2.0, b = argc > 2 ? std::atof(argv[2]) : 10.0;
    const int n0 = argc > 4 ? std::atoi(argv[3]) : 1;
    const double s2 = argc > 4 ? std::atof(argv[4]) : 1.0;
    try {
        const auto p = npp::PriorSpec::beta(a, b);
        const npp::NormalSummary h(n0, 0.0, s2);
        const auto ind = npp::induce_prior_v_single(p, h, 1e14);
        npp::IgFit fit;
        try {
            fit = npp::fit_ig_kl(ind.density);
        } catch (const npp::numerical_error&) {
            // E[1/v] is infinite here, fall back to the reverse divergence
            const auto exact = npp::InducedVDensity::single(p, h);
            fit = npp::fit_ig_reverse_kl([&](double v) { return exact.log_density(v); });
        }
        const auto ig = npp::PriorSpec::inverse_gamma(fit.c, fit.d);
        std::cout << p.to_string() << " on a0 -> IG(" << fit.c << ", " << fit.d << ") on v, KL " << fit.kl << "\n";
        std::cout << "  q      induced v      IG v\n";
        const auto cdf = npp::grid_cdf(ind.density);
        for (double q : {0.05, 0.25, 0.5, 0.75, 0.95})
            std::cout << "  " << q << "  " << npp::grid_quantile(ind.density, cdf, q) << "  " << ig.quantile(q) << "\n";
    } catch (const npp::error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
