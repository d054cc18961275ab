#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "npp/core.hpp"
#include "npp/grid.hpp"
#include "npp/prior.hpp"

namespace npp {

using HistoricalList = std::vector<NormalSummary>;

namespace detail {

inline void require_v(double v, const char* who) {
    if (!(v >= 0.0) || std::isnan(v)) throw config_error(std::string(who) + ": v must be >= 0");
}

inline void require_nonempty(const HistoricalList& h, const char* who) {
    if (h.empty()) throw config_error(std::string(who) + ": need at least one historical dataset");
}

// 2 n0 / sigma0^2
inline double alpha_single(const NormalSummary& h) { return 2.0 * h.precision(); }

}  // namespace detail

// ---- single historical dataset -------------------------------------------

/// a0 = 1 / (1 + 2 v n0 / sigma0^2)
inline double f_single(double v, const NormalSummary& hist) {
    detail::require_v(v, "f_single");
    if (std::isinf(v)) return 0.0;
    return 1.0 / (1.0 + detail::alpha_single(hist) * v);
}

/// 1 - f_single(v), without cancellation.
inline double f_single_complement(double v, const NormalSummary& hist) {
    detail::require_v(v, "f_single_complement");
    if (std::isinf(v)) return 1.0;
    const double av = detail::alpha_single(hist) * v;
    return av / (1.0 + av);
}

/// Inverse given both a0 and 1 - a0.
inline double f_single_inv(double a0, double one_minus_a0, const NormalSummary& hist) {
    if (!(a0 > 0.0 && a0 <= 1.0)) throw config_error("f_single_inv: a0 must lie in (0, 1]");
    return one_minus_a0 / (detail::alpha_single(hist) * a0);
}

inline double f_single_inv(double a0, const NormalSummary& hist) { return f_single_inv(a0, 1.0 - a0, hist); }

/// |dv/da0| for the single-dataset map.
inline double f_single_inv_jacobian(double a0, const NormalSummary& hist) {
    return 1.0 / (detail::alpha_single(hist) * a0 * a0);
}

// ---- several historical datasets -----------------------------------------

namespace detail {

// g(v) = sum P_k v / (1 + P_k v); f = 1/(1+g)
inline double g_multi(double v, const HistoricalList& h) {
    double g = 0.0;
    for (const auto& s : h) {
        const double pv = s.precision() * v;
        g += pv / (1.0 + pv);
    }
    return g;
}

// sum 1 / (1 + P_k v) = K - g(v)
inline double s_multi(double v, const HistoricalList& h) {
    double s = 0.0;
    for (const auto& d : h) s += 1.0 / (1.0 + d.precision() * v);
    return s;
}

}  // namespace detail

inline double f_multi(double v, const HistoricalList& hist) {
    detail::require_v(v, "f_multi");
    detail::require_nonempty(hist, "f_multi");
    if (std::isinf(v)) return 1.0 / (1.0 + static_cast<double>(hist.size()));
    return 1.0 / (1.0 + detail::g_multi(v, hist));
}

/// 1 - f_multi(v) without cancellation.
inline double f_multi_complement(double v, const HistoricalList& hist) {
    detail::require_v(v, "f_multi_complement");
    if (std::isinf(v)) {
        const double K = static_cast<double>(hist.size());
        return K / (1.0 + K);
    }
    const double g = detail::g_multi(v, hist);
    return g / (1.0 + g);
}

/// f_multi(v) - 1/(1+K) without cancellation.
inline double f_multi_above_min(double v, const HistoricalList& hist) {
    detail::require_v(v, "f_multi_above_min");
    if (std::isinf(v)) return 0.0;
    const double K = static_cast<double>(hist.size());
    const double g = detail::g_multi(v, hist);
    return detail::s_multi(v, hist) / ((1.0 + g) * (1.0 + K));
}

/// c_k = 1 / (1 + n0k v / sigma0k^2)
inline std::vector<double> c_weights(double v, const HistoricalList& hist) {
    std::vector<double> c(hist.size());
    for (std::size_t k = 0; k < hist.size(); ++k) c[k] = 1.0 / (1.0 + hist[k].precision() * v);
    return c;
}

/// Per-dataset exponents a0k = c_k f_multi(v).
inline std::vector<double> h_k(double v, const HistoricalList& hist) {
    detail::require_v(v, "h_k");
    const double f = f_multi(v, hist);
    auto c = c_weights(v, hist);
    for (auto& x : c) x *= f;
    return c;
}

/// |df_multi/dv| = f^2 sum P_k c_k^2
inline double f_multi_jacobian(double v, const HistoricalList& hist) {
    const double f = f_multi(v, hist);
    double s = 0.0;
    for (const auto& d : hist) {
        const double c = 1.0 / (1.0 + d.precision() * v);
        s += d.precision() * c * c;
    }
    return f * f * s;
}

/// |d h_k / dv|
inline double h_k_jacobian(double v, const HistoricalList& hist, std::size_t k) {
    const double f = f_multi(v, hist);
    const double P = hist.at(k).precision();
    const double c = 1.0 / (1.0 + P * v);
    return P * c * c * f + c * f_multi_jacobian(v, hist);
}

namespace detail {

// Root of a strictly increasing function of log v.
template <class F>
double solve_increasing_log(F&& fn, double target) {
    auto h = [&](double lv) { return fn(std::exp(lv)) - target; };
    double lo = std::log(1e-12), hi = 0.0;
    double flo = h(lo), fhi = h(hi);
    int guard = 0;
    while (flo > 0.0) {
        hi = lo;
        fhi = flo;
        lo -= 10.0;
        flo = h(lo);
        if (++guard > 200) throw numerical_error("root bracket could not be extended toward v = 0");
    }
    while (fhi < 0.0) {
        lo = hi;
        flo = fhi;
        hi += 2.302585092994046;
        fhi = h(hi);
        if (++guard > 400) throw numerical_error("root bracket could not be extended toward v = inf");
    }
    if (flo == 0.0) return std::exp(lo);
    if (fhi == 0.0) return std::exp(hi);
    std::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(a - b) <= 4e-16 * std::max(1.0, std::abs(a)); };
    auto r = boost::math::tools::toms748_solve(h, lo, hi, flo, fhi, tol, iters);
    return std::exp(0.5 * (r.first + r.second));
}

}  // namespace detail

/// Inverse of f_multi. `above_min` is a0 - 1/(1+K) and `below_one` is 1 - a0; pass them when known
/// more accurately than by subtraction.
inline double f_multi_inv(double a0, double above_min, double below_one, const HistoricalList& hist) {
    detail::require_nonempty(hist, "f_multi_inv");
    const double K = static_cast<double>(hist.size());
    if (!(above_min > 0.0) || !(below_one > 0.0) || !(a0 < 1.0))
        throw config_error("f_multi_inv: a0 = " + std::to_string(a0) + " outside the attainable range (" +
                           std::to_string(1.0 / (1.0 + K)) + ", 1)");
    const double t = below_one / a0;              // target for g
    const double r = (K + 1.0) * above_min / a0;  // target for K - g
    if (t <= r) return detail::solve_increasing_log([&](double v) { return detail::g_multi(v, hist); }, t);
    return detail::solve_increasing_log([&](double v) { return -detail::s_multi(v, hist); }, -r);
}

inline double f_multi_inv(double a0, const HistoricalList& hist) {
    const double K = static_cast<double>(hist.size());
    return f_multi_inv(a0, a0 - 1.0 / (1.0 + K), 1.0 - a0, hist);
}

/// Every intermediate of the multi-dataset bridge at one value of v.
struct BridgeQuantities {
    double v = 0.0;
    double a0 = 0.0;
    std::vector<double> c_k;
    std::vector<double> N_k;
    double C = 0.0;
    std::vector<double> Y_k;
    double A = 0.0;
    double log_Q = 0.0;
    double log_R = 0.0;
    double Q = 0.0;
    double R = 0.0;
    double jacobian = 0.0;
};

inline BridgeQuantities bridge_quantities(double v, const HistoricalList& hist) {
    if (!(v > 0.0) || !std::isfinite(v)) throw config_error("bridge_quantities: v must be positive and finite");
    detail::require_nonempty(hist, "bridge_quantities");
    const std::size_t K = hist.size();
    BridgeQuantities b;
    b.v = v;
    b.a0 = f_multi(v, hist);
    b.c_k.resize(K);
    b.N_k.resize(K);
    b.Y_k.resize(K);
    double B = 0.0, sumcY = 0.0, sumY2N = 0.0, sumlogN = 0.0, jac = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double P = hist[k].precision();
        const double c = 1.0 / (1.0 + P * v);
        b.c_k[k] = c;
        b.N_k[k] = v * c;  // 1 / (P + 1/v)
        b.Y_k[k] = hist[k].scaled_mean();
        b.C += P * c;
        B += P * c;
        sumcY += c * b.Y_k[k];
        sumY2N += b.Y_k[k] * b.Y_k[k] * b.N_k[k];
        sumlogN += std::log(b.N_k[k]);
        jac += P * c * c;
    }
    // (1+K)/v - sum N_k/v^2, rearranged so that it never cancels
    b.A = 1.0 / v + B;
    b.jacobian = b.a0 * b.a0 * jac;
    b.log_Q = -b.a0 / (2.0 * b.C) * sumcY * sumcY + 0.5 * std::log(b.a0 * b.C);
    b.log_R = -0.5 * static_cast<double>(K + 1) * std::log(v) + 0.5 * sumlogN - 0.5 * std::log(b.A) +
              sumcY * sumcY / (2.0 * b.A) + 0.5 * sumY2N;
    if (std::isnan(b.log_Q) || std::isnan(b.log_R)) throw numerical_error("bridge_quantities: NaN in Q or R");
    b.Q = std::exp(b.log_Q);
    b.R = std::exp(b.log_R);
    return b;
}

// ---- induced priors ------------------------------------------------------

/// Exact log density on v induced by a prior on a0. Single-dataset version is normalized;
/// the multi-dataset version is known only up to a constant and may be improper.
class InducedVDensity {
public:
    InducedVDensity(PriorSpec prior_a0, HistoricalList hist, bool multi)
        : prior_(std::move(prior_a0)), hist_(std::move(hist)), multi_(multi) {
        if (prior_.support() != Support::unit) throw config_error("induced v prior needs a prior on (0,1) for a0");
        detail::require_nonempty(hist_, "InducedVDensity");
        if (!multi_ && hist_.size() != 1) throw config_error("single-dataset induced prior needs exactly one dataset");
        for (const auto& h : hist_) h.validate();
    }

    static InducedVDensity single(PriorSpec p, const NormalSummary& h) { return {std::move(p), {h}, false}; }
    static InducedVDensity multi(PriorSpec p, HistoricalList h) { return {std::move(p), std::move(h), true}; }

    double log_density(double v) const {
        if (!(v > 0.0) || !std::isfinite(v)) return detail::neg_inf;
        if (!multi_) {
            const double a = detail::alpha_single(hist_[0]);
            return prior_.log_density(f_single(v, hist_[0]), f_single_complement(v, hist_[0])) + std::log(a) -
                   2.0 * std::log1p(a * v);
        }
        const auto b = bridge_quantities(v, hist_);
        return prior_.log_density(b.a0, f_multi_complement(v, hist_)) + std::log(b.jacobian) + b.log_Q - b.log_R;
    }

    /// Log density with respect to u = f(v) rather than v. Used by quadrature in u.
    double log_density_du(double u, double one_minus_u, double v) const {
        const double lp = prior_.log_density(u, one_minus_u);
        if (!multi_) return lp;
        const auto b = bridge_quantities(v, hist_);
        return lp + b.log_Q - b.log_R;
    }

    bool is_multi() const { return multi_; }
    bool data_dependent() const { return multi_; }
    const PriorSpec& source() const { return prior_; }
    const HistoricalList& historical() const { return hist_; }

private:
    PriorSpec prior_;
    HistoricalList hist_;
    bool multi_;
};

enum class InducedSide { on_v, on_a0 };

/// An induced prior tabulated and normalized on a finite grid.
struct InducedPrior {
    InducedSide side = InducedSide::on_v;
    DensityGrid density;
    PriorSpec source;
    bool data_dependent = false;

    double log_density(double x) const {
        const double d = grid_density_at(density, x);
        return d > 0.0 ? std::log(d) : detail::neg_inf;
    }
};

inline constexpr double kDefaultVmax = 1e6;
inline constexpr std::size_t kInducedGridPoints = 2049;

namespace detail {

inline std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

inline double safe_lower_v(double v) { return std::max(v, 1e-300); }

}  // namespace detail

/// pi(v) = alpha (1 + alpha v)^-2 pi_a0(f_single(v)) on a log-spaced grid.
inline InducedPrior induce_prior_v_single(const PriorSpec& prior_a0, const NormalSummary& hist,
                                          double vmax = kDefaultVmax, std::size_t points = kInducedGridPoints) {
    hist.validate();
    if (prior_a0.support() != Support::unit) throw config_error("induce_prior_v_single: prior must be on (0,1)");
    if (!(vmax > 0.0)) throw config_error("induce_prior_v_single: vmax must be positive");
    const double alpha = detail::alpha_single(hist);
    // small v <-> a0 near 1
    const double b_lo = prior_a0.upper_quantile(1e-14);
    const double v_lo = detail::safe_lower_v(b_lo / (alpha * (1.0 - b_lo)));
    const double a_hi = prior_a0.quantile(1e-8);
    const double v_need = a_hi > 0.0 ? (1.0 - a_hi) / (alpha * a_hi) : std::numeric_limits<double>::infinity();
    double v_hi = std::min(v_need, vmax);
    if (v_need > vmax) {
        const double escaped = prior_a0.cdf(f_single(vmax, hist));
        if (escaped > 1e-6) {
            const double a_sug = prior_a0.quantile(1e-7);
            const double sug = a_sug > 0.0 ? (1.0 - a_sug) / (alpha * a_sug) : std::numeric_limits<double>::infinity();
            throw config_error("induce_prior_v_single: prior mass " + detail::fmt_double(escaped) +
                               " lies beyond vmax = " + detail::fmt_double(vmax) + "; use vmax >= " + detail::fmt_double(sug));
        }
    }
    if (!(v_hi > v_lo)) v_hi = v_lo * 10.0;
    const auto dens = InducedVDensity::single(prior_a0, hist);
    InducedPrior out;
    out.side = InducedSide::on_v;
    out.source = prior_a0;
    out.data_dependent = false;
    out.density = tabulate_log(logspace(v_lo, v_hi, points), [&](double v) { return dens.log_density(v); });
    return out;
}

/// pi(a0) = pi_v(f_single_inv(a0)) |dv/da0|, tabulated on the image of a log-spaced v grid.
inline InducedPrior induce_prior_a0_single(const PriorSpec& prior_v, const NormalSummary& hist,
                                           std::size_t points = kInducedGridPoints) {
    hist.validate();
    if (prior_v.support() != Support::positive) throw config_error("induce_prior_a0_single: prior must be on (0,inf)");
    const double v_lo = detail::safe_lower_v(prior_v.quantile(1e-10));
    const double v_hi = prior_v.upper_quantile(1e-10);
    if (!std::isfinite(v_hi)) throw config_error("induce_prior_a0_single: prior on v has mass escaping every finite grid");
    const auto vs = logspace(v_lo, v_hi, points);
    DensityGrid g;
    for (auto it = vs.rbegin(); it != vs.rend(); ++it) {
        const double a = f_single(*it, hist);
        if (!g.points.empty() && !(a > g.points.back())) continue;
        g.points.push_back(a);
        const double ld = prior_v.log_density(*it) + std::log(f_single_inv_jacobian(a, hist));
        g.density.push_back(std::exp(ld));
    }
    for (double d : g.density)
        if (!std::isfinite(d)) throw numerical_error("induce_prior_a0_single: density overflow");
    const double mass = trapezoid(g);
    if (std::abs(mass - 1.0) > 1e-3)
        throw numerical_error("induce_prior_a0_single: tabulated mass " + detail::fmt_double(mass) +
                              " differs from 1; increase grid points");
    InducedPrior out;
    out.side = InducedSide::on_a0;
    out.source = prior_v;
    out.density = normalize(std::move(g));
    return out;
}

/// pi(v) proportional to Q(f(v)) |df/dv| pi_a0(f(v)) / R(v), normalized on a truncated log grid.
inline InducedPrior induce_prior_v_multi(const PriorSpec& prior_a0, const HistoricalList& hist,
                                         double vmax = kDefaultVmax, std::size_t points = kInducedGridPoints) {
    detail::require_nonempty(hist, "induce_prior_v_multi");
    if (!(vmax > 0.0)) throw config_error("induce_prior_v_multi: vmax must be positive");
    const auto dens = InducedVDensity::multi(prior_a0, hist);
    // lower end from the a0 prior's upper tail, mapped through the inverse
    const double K = static_cast<double>(hist.size());
    const double b = std::min(prior_a0.upper_quantile(1e-14), 0.5 * K / (1.0 + K));
    const double v_lo = detail::safe_lower_v(f_multi_inv(1.0 - b, (1.0 - b) - 1.0 / (1.0 + K), b, hist));

    auto log_mass = [&](double hi) {
        const auto vs = logspace(v_lo, hi, 513);
        std::vector<double> lf(vs.size());
        for (std::size_t i = 0; i < vs.size(); ++i) lf[i] = dens.log_density(vs[i]) + std::log(vs[i]);
        // trapezoid in log v
        const double m = *std::max_element(lf.begin(), lf.end());
        double s = 0.0;
        const double h = (std::log(hi) - std::log(v_lo)) / 512.0;
        for (std::size_t i = 1; i < lf.size(); ++i) s += 0.5 * h * (std::exp(lf[i] - m) + std::exp(lf[i - 1] - m));
        return m + std::log(s);
    };
    // power-law tail estimate beyond hi
    auto slope_at = [&](double v) { return (dens.log_density(v * 1.01) - dens.log_density(v)) / std::log(1.01); };
    auto log_tail = [&](double hi) {
        const double l1 = dens.log_density(hi);
        // local slopes overstate the decay before the asymptotic regime; take the flattest seen further out
        const double slope = std::max({slope_at(hi), slope_at(hi * 1e3), slope_at(hi * 1e6)});
        if (!(slope < -1.001))
            throw numerical_error("induce_prior_v_multi: induced prior on v is improper (tail decays like v^" +
                                  detail::fmt_double(slope) + "); use the exact InducedVDensity instead of a grid");
        return l1 + std::log(hi) - std::log(-slope - 1.0);
    };
    double hi = std::max(1.0, v_lo * 100.0);
    while (true) {
        const double rel = std::exp(log_tail(hi) - log_mass(hi));
        if (rel < 1e-8) break;
        if (hi >= vmax) {
            if (rel > 1e-6) {
                // suggest where the tail would drop below 1e-6
                double sug = hi;
                for (int i = 0; i < 60 && std::exp(log_tail(sug) - log_mass(sug)) > 1e-6; ++i) sug *= 10.0;
                throw config_error("induce_prior_v_multi: relative mass " + detail::fmt_double(rel) +
                                   " lies beyond vmax = " + detail::fmt_double(vmax) + "; use vmax >= " +
                                   detail::fmt_double(sug));
            }
            break;
        }
        hi = std::min(hi * 10.0, vmax);
    }
    InducedPrior out;
    out.side = InducedSide::on_v;
    out.source = prior_a0;
    out.data_dependent = true;
    out.density = tabulate_log(logspace(v_lo, hi, points), [&](double v) { return dens.log_density(v); });
    return out;
}

}  // namespace npp
