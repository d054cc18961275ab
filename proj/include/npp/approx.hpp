#pragma once

#include <cmath>
#include <string>

#include "npp/core.hpp"

namespace npp {

/// Responders out of patients in a treatment and a control arm.
struct TwoArmBinomialSummary {
    int n_t = 1;
    int y_t = 0;
    int n_c = 1;
    int y_c = 0;

    void validate(bool allow_zero_cells = false) const {
        if (n_t < 1 || n_c < 1) throw config_error("two-arm summary: arm sizes must be positive");
        if (y_t < 0 || y_t > n_t || y_c < 0 || y_c > n_c) throw config_error("two-arm summary: responders outside [0, n]");
        if (!allow_zero_cells && (y_t == 0 || y_t == n_t || y_c == 0 || y_c == n_c))
            throw config_error(
                "two-arm summary has a zero cell (no responders or no non-responders in an arm); "
                "the log odds ratio is undefined. Pass the +0.5 continuity correction explicitly to proceed");
    }

    friend bool operator==(const TwoArmBinomialSummary&, const TwoArmBinomialSummary&) = default;
};

/// Log odds ratio and its asymptotic variance.
struct LogOrApprox {
    double theta_hat = 0.0;
    double var_hat = 1.0;
};

inline LogOrApprox log_or(const TwoArmBinomialSummary& t, bool continuity_correction = false) {
    t.validate(continuity_correction);
    const double add = continuity_correction ? 0.5 : 0.0;
    const double yt = t.y_t + add, ft = t.n_t - t.y_t + add;
    const double yc = t.y_c + add, fc = t.n_c - t.y_c + add;
    LogOrApprox r;
    // log(p/(1-p)) = log(y) - log(n-y)
    r.theta_hat = (std::log(yt) - std::log(ft)) - (std::log(yc) - std::log(fc));
    // 1/(n p) + 1/(n (1-p)) per arm
    // summed per arm so swapping the arms gives the same bits
    r.var_hat = (1.0 / yt + 1.0 / ft) + (1.0 / yc + 1.0 / fc);
    return r;
}

/// Normal likelihood with sample size one, mean theta_hat and known variance var_hat.
inline NormalSummary to_normal_summary(const LogOrApprox& a) { return NormalSummary(1, a.theta_hat, a.var_hat); }

}  // namespace npp
