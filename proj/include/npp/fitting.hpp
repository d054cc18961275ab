#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "npp/core.hpp"
#include "npp/grid.hpp"
#include "npp/prior.hpp"

namespace npp {

struct IgFit {
    double c = 1.0;
    double d = 1.0;
    double kl = 0.0;
};

struct BetaFit {
    double alpha = 1.0;
    double beta = 1.0;
    double loglik = 0.0;
};

/// Trapezoid integral of p log(p/q) over p's grid, with q given by its log density.
template <class LogQ>
double kl_divergence_log(const DensityGrid& p, LogQ&& log_q) {
    check_grid_shape(p);
    std::vector<double> f(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p.density[i];
        const double lq = log_q(p.points[i]);
        if (std::isnan(lq)) throw numerical_error("kl_divergence: NaN in q");
        if (pi <= 1e-300) continue;
        if (lq == detail::neg_inf) throw numerical_error("kl_divergence: q vanishes where p is positive");
        f[i] = pi * (std::log(pi) - lq);
    }
    return trapezoid(p.points, f);
}

template <class Q>
double kl_divergence(const DensityGrid& p, Q&& q_density) {
    return kl_divergence_log(p, [&](double x) {
        const double q = q_density(x);
        if (q < 0.0 || std::isnan(q)) throw numerical_error("kl_divergence: q must be a nonnegative density");
        return q > 0.0 ? std::log(q) : detail::neg_inf;
    });
}

inline double inverse_gamma_log_pdf(double v, double c, double d) {
    return c * std::log(d) - std::lgamma(c) - (c + 1.0) * std::log(v) - d / v;
}

/// Moments E[1/v] and E[log v] of a tabulated density on (0, inf), integrated in log v,
/// with power-law checks on both tails.
struct LogMoments {
    double inv_mean = 0.0;
    double log_mean = 0.0;
};

inline LogMoments log_moments(const DensityGrid& g) {
    check_grid_shape(g);
    if (!(g.points.front() > 0.0)) throw config_error("log_moments: grid must lie in (0, inf)");
    const std::size_t n = g.size();
    std::vector<double> x(n), m0(n), m1(n), mlog(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::log(g.points[i]);
        m0[i] = g.density[i] * g.points[i];  // density in log v
        m1[i] = g.density[i];                // times 1/v
        mlog[i] = m0[i] * x[i];
    }
    const double z = trapezoid(x, m0);
    if (!(z > 0.0)) throw numerical_error("log_moments: density has no mass");
    LogMoments r;
    r.inv_mean = trapezoid(x, m1) / z;
    r.log_mean = trapezoid(x, mlog) / z;

    // slope of log density (in v) near each end
    auto slope = [&](std::size_t i, std::size_t j) {
        if (!(g.density[i] > 0.0) || !(g.density[j] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return (std::log(g.density[j]) - std::log(g.density[i])) / (x[j] - x[i]);
    };
    const std::size_t w = std::max<std::size_t>(1, n / 100);
    const double s_lo = slope(0, w);
    if (g.density[0] > 0.0) {
        // E[1/v] integrand in log v behaves like v^s_lo
        if (!(s_lo > 0.0)) throw numerical_error("log_moments: E[1/v] diverges (density does not vanish fast enough at v -> 0)");
        if (m1[0] / s_lo > 1e-6 * trapezoid(x, m1))
            throw numerical_error("log_moments: grid misses mass of E[1/v] below its first point");
    }
    const double s_hi = slope(n - 1 - w, n - 1);
    if (g.density[n - 1] > 0.0) {
        // E[log v] integrand in log v behaves like v^(s_hi+1) log v
        if (!(s_hi + 1.0 < 0.0)) throw numerical_error("log_moments: E[log v] diverges (heavy upper tail)");
        const double tail = m0[n - 1] * (std::abs(x[n - 1]) + 1.0) / (-(s_hi + 1.0));
        if (tail > 1e-6 * z * std::max(1.0, std::abs(r.log_mean)))
            throw numerical_error("log_moments: grid misses upper-tail mass; extend it");
    }
    return r;
}

/// Inverse-gamma (c, d) minimizing KL(target || IG): matches E[1/v] = c/d and E[log v] = log d - digamma(c).
inline IgFit fit_ig_kl(const DensityGrid& target) {
    const auto mom = log_moments(target);
    // log c - digamma(c) = E[log v] + log E[1/v] > 0
    const double r = mom.log_mean + std::log(mom.inv_mean);
    if (!(r > 0.0)) throw numerical_error("fit_ig_kl: moment condition violated (Jensen gap is not positive)");
    double c = 0.5 / r;
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
        const double phi = std::log(c) - boost::math::digamma(c) - r;
        if (std::abs(phi) < 1e-10 * std::max(1.0, r)) {
            ok = true;
            break;
        }
        const double dphi = 1.0 / c - boost::math::trigamma(c);
        double next = c - phi / dphi;
        if (!(next > 0.0)) next = 0.5 * c;
        c = next;
    }
    if (!ok) throw numerical_error("fit_ig_kl: Newton iteration did not converge in 200 steps");
    IgFit f;
    f.c = c;
    f.d = c / mom.inv_mean;
    f.kl = kl_divergence_log(target, [&](double v) { return inverse_gamma_log_pdf(v, f.c, f.d); });
    return f;
}

/// Inverse-gamma minimizing KL(IG || target) for an exact log density on (0, inf). Used when the
/// forward divergence is infinite.
template <class LogTarget>
IgFit fit_ig_reverse_kl(LogTarget&& log_target, double c0 = 1.0, double d0 = 1.0) {
    auto objective = [&](double lc, double ld) {
        const double c = std::exp(lc), d = std::exp(ld);
        const PriorSpec q = PriorSpec::inverse_gamma(c, d);
        const double lo = std::max(q.quantile(1e-12), 1e-300), hi = q.upper_quantile(1e-12);
        const auto xs = linspace(std::log(lo), std::log(hi), 801);
        std::vector<double> f(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double v = std::exp(xs[i]);
            const double lq = inverse_gamma_log_pdf(v, c, d);
            const double lp = log_target(v);
            f[i] = std::isfinite(lp) ? std::exp(lq) * v * (lq - lp) : std::numeric_limits<double>::infinity();
        }
        const double kl = trapezoid(xs, f);
        return std::isfinite(kl) ? kl : 1e300;
    };
    auto best_d = [&](double lc) {
        std::uintmax_t it = 200;
        return boost::math::tools::brent_find_minima([&](double ld) { return objective(lc, ld); }, std::log(d0) - 15.0,
                                                     std::log(d0) + 15.0, 40, it);
    };
    std::uintmax_t it = 200;
    const auto outer = boost::math::tools::brent_find_minima([&](double lc) { return best_d(lc).second; }, std::log(c0) - 6.0,
                                                             std::log(c0) + 4.0, 40, it);
    const auto inner = best_d(outer.first);
    return {std::exp(outer.first), std::exp(inner.first), inner.second};
}

/// Beta maximum likelihood by Newton on the digamma score equations, started from method of moments.
inline BetaFit fit_beta_mle(const std::vector<double>& x) {
    if (x.size() < 100) throw config_error("fit_beta_mle: need at least 100 samples");
    double s1 = 0.0, s2 = 0.0, m = 0.0;
    for (double v : x) {
        if (!(v > 0.0 && v < 1.0)) throw config_error("fit_beta_mle: samples must lie strictly inside (0,1)");
        s1 += std::log(v);
        s2 += std::log1p(-v);
        m += v;
    }
    const double N = static_cast<double>(x.size());
    s1 /= N;
    s2 /= N;
    m /= N;
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    var /= N - 1.0;
    if (!(var > 0.0)) throw config_error("fit_beta_mle: samples have zero variance");

    auto mom = [&](double mean, double vr) {
        const double k = mean * (1.0 - mean) / vr - 1.0;
        return k > 0.0 ? std::pair{mean * k, (1.0 - mean) * k} : std::pair{1.0, 1.0};
    };
    auto [a, b] = mom(m, var);
    using boost::math::digamma;
    using boost::math::trigamma;
    auto grad = [&](double aa, double bb) {
        const double p = digamma(aa + bb);
        return std::pair{s1 - digamma(aa) + p, s2 - digamma(bb) + p};
    };
    auto ll = [&](double aa, double bb) {
        return N * ((aa - 1.0) * s1 + (bb - 1.0) * s2 - (std::lgamma(aa) + std::lgamma(bb) - std::lgamma(aa + bb)));
    };
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
        auto [g1, g2] = grad(a, b);
        if (std::hypot(g1, g2) < 1e-8) {
            ok = true;
            break;
        }
        // Hessian of the mean log likelihood
        const double t = trigamma(a + b);
        const double h11 = -trigamma(a) + t, h22 = -trigamma(b) + t, h12 = t;
        const double det = h11 * h22 - h12 * h12;
        double da = -(h22 * g1 - h12 * g2) / det;
        double db = -(-h12 * g1 + h11 * g2) / det;
        double step = 1.0;
        while (!(a + step * da > 0.0 && b + step * db > 0.0)) step *= 0.5;
        a += step * da;
        b += step * db;
    }
    if (!ok) throw numerical_error("fit_beta_mle: Newton iteration did not converge");
    return {a, b, ll(a, b)};
}

/// Method-of-moments starting point (exposed for inspection).
inline std::pair<double, double> beta_method_of_moments(double mean, double var) {
    const double k = mean * (1.0 - mean) / var - 1.0;
    if (!(k > 0.0)) throw config_error("beta_method_of_moments: variance too large for a beta distribution");
    return {mean * k, (1.0 - mean) * k};
}

}  // namespace npp
