// Compares the NPP (one dataset) or BNPP (several) posterior of theta with the BHM posterior
// under the matching induced prior on v.
//   sample_equivalence [preset]     preset: fig_a1, fig_a2 or random(seed=N[,K=k])

#include <iostream>

#include "npp/scenario.hpp"

int main(int argc, char** argv) {
    try {
        const auto st = npp::equivalence_preset(argc > 1 ? argv[1] : "fig_a2");
        npp::EquivalenceOptions o;
        o.mcmc = argc > 2 ? std::string(argv[2]) != "--no-mcmc" : true;
        const auto r = npp::run_equivalence(st, o);
        std::cout << st.label << " K=" << st.study.K() << "\n";
        std::cout << "  sup |npp - bhm| = " << r.report["quadrature"]["sup_norm"] << "\n";
        if (r.report.contains("mcmc")) {
            for (const auto& [k, v] : r.report["mcmc"].items())
                if (k.ends_with("_ks")) std::cout << "  " << k << " = " << v << "\n";
        }
        const auto s = npp::summarize(r.npp, 0.95);
        std::cout << "  theta mean " << s.mean << ", sd " << s.sd << ", 95% [" << s.lo << ", " << s.hi << "]\n";
        return r.pass ? 0 : 4;
    } catch (const npp::error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
