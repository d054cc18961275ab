#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "npp/core.hpp"
#include "npp/grid.hpp"
#include "npp/prior.hpp"
#include "npp/quadrature.hpp"
#include "npp/transform.hpp"

namespace npp {

/// Normal posterior of theta given fixed discounting weights.
struct ConditionalPosterior {
    double mu_p = 0.0;
    double sigma2_p = 1.0;
};

/// Discounting weights, one per historical dataset.
struct WeightAssignment {
    std::vector<double> weights;

    void validate(std::size_t K) const {
        if (weights.size() != K) throw config_error("WeightAssignment: expected " + std::to_string(K) + " weights");
        for (double w : weights)
            if (!(w >= 0.0 && w <= 1.0)) throw config_error("WeightAssignment: weights must lie in [0,1]");
    }
};

inline ConditionalPosterior conditional_theta(const StudySet& study, std::span<const double> w) {
    if (w.size() != study.K()) throw config_error("conditional_theta: weight count does not match K");
    double prec = study.current.precision();
    double num = study.current.scaled_mean();
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (!(w[k] >= 0.0 && w[k] <= 1.0)) throw config_error("conditional_theta: weights must lie in [0,1]");
        prec += w[k] * study.historical[k].precision();
        num += w[k] * study.historical[k].scaled_mean();
    }
    return {num / prec, 1.0 / prec};
}

inline ConditionalPosterior conditional_theta(const StudySet& study, const WeightAssignment& w) {
    w.validate(study.K());
    return conditional_theta(study, std::span<const double>(w.weights));
}

/// Normalizing constant of the discounted historical likelihoods, from summaries only.
/// With S = sum P_k w_k and M the precision-weighted mean, prod L_k^{w_k} / c = N(theta; M, 1/S).
struct NppNormalizer {
    double log_c = 0.0;
    double M = 0.0;
    double S = 0.0;
};

inline NppNormalizer npp_normalizer(const HistoricalList& hist, std::span<const double> w) {
    if (w.size() != hist.size()) throw config_error("npp_normalizer: weight count does not match K");
    double S = 0.0, SY = 0.0, SY2 = 0.0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const double pw = hist[k].precision() * w[k];
        S += pw;
        SY += pw * hist[k].ybar;
        SY2 += pw * hist[k].ybar * hist[k].ybar;
    }
    if (!(S > 0.0)) throw config_error("npp_normalizer: at least one weight must be positive");
    NppNormalizer r;
    r.S = S;
    r.M = SY / S;
    r.log_c = 0.5 * std::log(2.0 * std::numbers::pi / S) - 0.5 * (SY2 - S * r.M * r.M);
    return r;
}

/// Knobs for the deterministic marginalization engine.
struct QuadratureOptions {
    std::size_t theta_points = 1025;
    std::size_t a0_points = 1025;
    std::size_t min_nodes = 256;
    std::size_t max_nodes = 4096;
    std::size_t min_nodes_2d = 64;
    std::size_t max_nodes_2d = 512;
    double tol = 1e-8;
};

/// A prior on the borrowing parameter given on the a0 scale, the v scale, or as an exact induced density.
class BorrowingPrior {
public:
    enum class Scale { a0, v, induced };

    static BorrowingPrior on_a0(PriorSpec p) {
        if (p.support() != Support::unit) throw config_error("prior on a0 must be supported on (0,1)");
        BorrowingPrior b;
        b.scale_ = Scale::a0;
        b.label_ = p.to_string();
        b.a0_ = std::move(p);
        return b;
    }

    static BorrowingPrior on_v(PriorSpec p) {
        if (p.support() != Support::positive) throw config_error("prior on v must be supported on (0,inf)");
        BorrowingPrior b;
        b.scale_ = Scale::v;
        b.label_ = p.to_string();
        b.log_v_ = [p](double v) { return p.log_density(v); };
        b.v_spec_ = std::make_shared<const PriorSpec>(std::move(p));
        return b;
    }

    template <LogDensity D>
    static BorrowingPrior on_v(D d, std::string label) {
        BorrowingPrior b;
        b.scale_ = Scale::v;
        b.label_ = std::move(label);
        b.log_v_ = [d = std::move(d)](double v) { return d.log_density(v); };
        return b;
    }

    static BorrowingPrior induced(InducedVDensity d) {
        BorrowingPrior b;
        b.scale_ = Scale::induced;
        b.label_ = "induced(" + d.source().to_string() + ")";
        b.induced_ = std::make_shared<const InducedVDensity>(std::move(d));
        b.log_v_ = [ptr = b.induced_](double v) { return ptr->log_density(v); };
        return b;
    }

    /// Picks the scale from the prior's support.
    static BorrowingPrior from(PriorSpec p) {
        return p.support() == Support::unit ? on_a0(std::move(p)) : on_v(std::move(p));
    }

    Scale scale() const { return scale_; }
    const std::string& label() const { return label_; }
    const PriorSpec& a0_prior() const { return a0_; }
    const InducedVDensity* induced_density() const { return induced_.get(); }
    /// The parametric v prior, when the prior was given as one.
    const PriorSpec* v_prior() const { return v_spec_.get(); }
    double log_v(double v) const { return log_v_(v); }

private:
    Scale scale_ = Scale::a0;
    PriorSpec a0_;
    std::function<double(double)> log_v_;
    std::shared_ptr<const InducedVDensity> induced_;
    std::shared_ptr<const PriorSpec> v_spec_;
    std::string label_;
};

/// Normal mixture component produced by one quadrature node.
struct Component {
    double logw;
    double mu;
    double var;
};

namespace detail {

// Log density of the borrowing prior with respect to u, where u = f(v) and dudv = |f'(v)|.
// `multi` says which map defines u.
inline double log_prior_du(const BorrowingPrior& p, bool multi, const HistoricalList& hist, double u, double u_hi,
                           double v) {
    switch (p.scale()) {
        case BorrowingPrior::Scale::a0:
            return p.a0_prior().log_density(u, u_hi);
        case BorrowingPrior::Scale::induced: {
            const auto* d = p.induced_density();
            if (d->is_multi() == multi) return d->log_density_du(u, u_hi, v);
            [[fallthrough]];
        }
        case BorrowingPrior::Scale::v: {
            const double jac = multi ? f_multi_jacobian(v, hist)
                                     : 2.0 * hist[0].precision() * u * u;  // |d f_single / dv| = alpha a0^2
            return p.log_v(v) - std::log(jac);
        }
    }
    return neg_inf;
}

inline double log_sum_weights(const std::vector<Component>& c) {
    double m = neg_inf;
    for (const auto& x : c) m = std::max(m, x.logw);
    return m;
}

}  // namespace detail

/// Theta grid spanning every attainable conditional mean, padded by 6 no-borrowing sds.
inline std::vector<double> theta_grid(const StudySet& study, std::size_t points) {
    study.validate();
    double lo = study.current.ybar, hi = study.current.ybar;
    for (const auto& h : study.historical) {
        lo = std::min(lo, h.ybar);
        hi = std::max(hi, h.ybar);
    }
    const double pad = 6.0 * std::sqrt(study.current.sigma2 / study.current.n);
    return linspace(lo - pad, hi + pad, points);
}

/// Unnormalized sum of normal densities on the grid, scaled so the largest weight is one.
inline std::vector<double> mixture_on_grid(const std::vector<double>& theta, const std::vector<Component>& comps) {
    std::vector<double> d(theta.size(), 0.0);
    const double m = detail::log_sum_weights(comps);
    if (!std::isfinite(m)) throw numerical_error("quadrature: every node has zero weight");
    for (const auto& c : comps) {
        const double lw = c.logw - m;
        if (lw < -700.0 || std::isnan(lw)) {
            if (std::isnan(lw)) throw numerical_error("quadrature: NaN node weight");
            continue;
        }
        const double sd = std::sqrt(c.var);
        const double w = std::exp(lw) / sd;
        auto first = std::lower_bound(theta.begin(), theta.end(), c.mu - 40.0 * sd);
        auto last = std::upper_bound(theta.begin(), theta.end(), c.mu + 40.0 * sd);
        for (auto it = first; it != last; ++it) {
            const double z = (*it - c.mu) / sd;
            d[static_cast<std::size_t>(it - theta.begin())] += w * std::exp(-0.5 * z * z);
        }
    }
    return d;
}

/// Doubles the node count until the normalized theta density stops moving.
template <class MakeComponents>
DensityGrid converge_theta(const std::vector<double>& theta, MakeComponents&& make, std::size_t n0, std::size_t nmax,
                           double tol, const char* who) {
    DensityGrid prev;
    for (std::size_t n = n0; n <= nmax; n *= 2) {
        DensityGrid g;
        g.points = theta;
        g.density = mixture_on_grid(theta, make(n));
        g = normalize(std::move(g));
        if (!prev.points.empty()) {
            const double peak = *std::max_element(g.density.begin(), g.density.end());
            if (sup_norm_distance(g, prev) <= tol * peak) return g;
        }
        prev = std::move(g);
    }
    throw numerical_error(std::string(who) + ": quadrature did not converge to relative change " + std::to_string(tol) +
                          " with " + std::to_string(nmax) + " nodes");
}

/// Normal posterior for fixed weights, tabulated on the standard theta grid (the a0 = 0 / a0 = 1 references).
inline DensityGrid fixed_weight_theta(const StudySet& study, std::span<const double> w, const QuadratureOptions& o = {}) {
    const auto cp = conditional_theta(study, w);
    return tabulate_log(theta_grid(study, o.theta_points),
                        [&](double t) { return detail::normal_log_pdf(t, cp.mu_p, cp.sigma2_p); });
}

// ---- log-likelihood pieces (theta integrated out) -------------------------

namespace detail {

// NPP/iNPP/BNPP with weights w: y-bar given the normalized discounted historical prior.
inline double log_marginal_npp(const StudySet& s, std::span<const double> w) {
    const auto nz = npp_normalizer(s.historical, w);
    return detail::normal_log_pdf(s.current.ybar, nz.M, s.current.sigma2 / s.current.n + 1.0 / nz.S);
}

// Multi-dataset BHM with flat mu, after integrating theta, theta_0k and mu.
inline double log_marginal_bhm(const StudySet& s, double v) {
    double B = 0.0, Bm = 0.0, lpart = 0.0;
    for (const auto& h : s.historical) {
        const double P = h.precision();
        const double bk = P / (1.0 + v * P);
        B += bk;
        Bm += bk * h.ybar;
        lpart -= 0.5 * std::log1p(v * P) - 0.5 * std::log(P);
    }
    const double m = Bm / B;
    double ss = 0.0;
    for (const auto& h : s.historical) {
        const double P = h.precision();
        ss += P / (1.0 + v * P) * (h.ybar - m) * (h.ybar - m);
    }
    return lpart - 0.5 * std::log(B) - 0.5 * ss + detail::normal_log_pdf(s.current.ybar, m, s.current.sigma2 / s.current.n + v + 1.0 / B);
}

// Conditional of theta given v in the multi BHM.
inline ConditionalPosterior bhm_conditional(const StudySet& s, double v) {
    double B = 0.0, sumcY = 0.0;
    for (const auto& h : s.historical) {
        const double c = 1.0 / (1.0 + v * h.precision());
        B += h.precision() * c;
        sumcY += c * h.scaled_mean();
    }
    const double prec = s.current.precision() + B / (1.0 + v * B);
    return {(s.current.scaled_mean() + sumcY / (1.0 + v * B)) / prec, 1.0 / prec};
}

struct UNode {
    double u, u_lo, u_hi, v, weight;
};

inline std::vector<UNode> u_nodes_single(const NormalSummary& h, std::size_t n) {
    std::vector<UNode> out;
    out.reserve(n);
    for (const auto& nd : sine_mapped_nodes(0.0, 1.0, n))
        out.push_back({nd.x, nd.from_lo, nd.to_hi, f_single_inv(nd.x, nd.to_hi, h), nd.weight});
    return out;
}

inline std::vector<UNode> u_nodes_multi(const HistoricalList& h, std::size_t n) {
    const double umin = 1.0 / (1.0 + static_cast<double>(h.size()));
    std::vector<UNode> out;
    out.reserve(n);
    for (const auto& nd : sine_mapped_nodes(umin, 1.0, n))
        out.push_back({nd.x, nd.from_lo, nd.to_hi, f_multi_inv(nd.x, nd.from_lo, nd.to_hi, h), nd.weight});
    return out;
}

inline void require_K1(const StudySet& s, const char* who) {
    s.validate();
    if (s.K() != 1) throw config_error(std::string(who) + ": exactly one historical dataset is required");
}

inline BorrowingPrior as_bhm_prior(const BorrowingPrior& p, const StudySet& s, bool multi) {
    if (p.scale() != BorrowingPrior::Scale::a0) return p;
    return BorrowingPrior::induced(multi ? InducedVDensity::multi(p.a0_prior(), s.historical)
                                         : InducedVDensity::single(p.a0_prior(), s.historical[0]));
}

}  // namespace detail

// ---- NPP, one historical dataset ------------------------------------------

/// Node-wise mixture components for the single-dataset NPP.
inline std::vector<Component> npp_single_components(const StudySet& s, const PriorSpec& prior_a0, std::size_t n) {
    std::vector<Component> out;
    out.reserve(n);
    const auto& h = s.historical[0];
    for (const auto& nd : sine_mapped_nodes(0.0, 1.0, n)) {
        const double w[1] = {nd.x};
        const auto cp = conditional_theta(s, w);
        const double lw = std::log(nd.weight) + prior_a0.log_density(nd.x, nd.to_hi) +
                          detail::normal_log_pdf(s.current.ybar, h.ybar, s.current.sigma2 / s.current.n + 1.0 / (h.precision() * nd.x));
        out.push_back({lw, cp.mu_p, cp.sigma2_p});
    }
    return out;
}

inline DensityGrid marginal_theta_npp_single(const StudySet& s, const PriorSpec& prior_a0, const QuadratureOptions& o = {}) {
    detail::require_K1(s, "marginal_theta_npp_single");
    if (prior_a0.support() != Support::unit) throw config_error("marginal_theta_npp_single: prior must be on (0,1)");
    return converge_theta(
        theta_grid(s, o.theta_points), [&](std::size_t n) { return npp_single_components(s, prior_a0, n); }, o.min_nodes,
        o.max_nodes, o.tol, "marginal_theta_npp_single");
}

namespace detail {

inline std::vector<double> a0_eval_grid(std::size_t n) { return linspace(0.0, 1.0, n); }

inline double clamp_unit(double x) { return std::clamp(x, 1e-12, 1.0 - 1e-12); }

}  // namespace detail

inline DensityGrid marginal_a0_npp_single(const StudySet& s, const PriorSpec& prior_a0, const QuadratureOptions& o = {}) {
    detail::require_K1(s, "marginal_a0_npp_single");
    const auto& h = s.historical[0];
    return tabulate_log(detail::a0_eval_grid(o.a0_points), [&](double a) {
        const double x = detail::clamp_unit(a);
        return prior_a0.log_density(x, 1.0 - x) +
               detail::normal_log_pdf(s.current.ybar, h.ybar, s.current.sigma2 / s.current.n + 1.0 / (h.precision() * x));
    });
}

// ---- BHM, one historical dataset ------------------------------------------

inline std::vector<Component> bhm_single_components(const StudySet& s, const BorrowingPrior& prior, std::size_t n) {
    const auto& h = s.historical[0];
    const double Y = h.scaled_mean();
    std::vector<Component> out;
    out.reserve(n);
    for (const auto& nd : detail::u_nodes_single(h, n)) {
        const double a0 = nd.u;
        const double w[1] = {a0};
        const auto cp = conditional_theta(s, w);
        // pi(v) a0^{1/2} exp{v a0 Y^2} sigma_p exp{mu_p^2 / (2 sigma_p^2)}
        const double lw = std::log(nd.weight) + detail::log_prior_du(prior, false, s.historical, a0, nd.u_hi, nd.v) +
                          0.5 * std::log(a0) + nd.v * a0 * Y * Y + 0.5 * std::log(cp.sigma2_p) +
                          cp.mu_p * cp.mu_p / (2.0 * cp.sigma2_p);
        out.push_back({lw, cp.mu_p, cp.sigma2_p});
    }
    return out;
}

inline DensityGrid marginal_theta_bhm_single(const StudySet& s, const BorrowingPrior& prior, const QuadratureOptions& o = {}) {
    detail::require_K1(s, "marginal_theta_bhm_single");
    const auto p = detail::as_bhm_prior(prior, s, false);
    return converge_theta(
        theta_grid(s, o.theta_points), [&](std::size_t n) { return bhm_single_components(s, p, n); }, o.min_nodes,
        o.max_nodes, o.tol, "marginal_theta_bhm_single");
}

// ---- BNPP ------------------------------------------------------------------

inline std::vector<Component> bnpp_components(const StudySet& s, const BorrowingPrior& prior, std::size_t n) {
    std::vector<Component> out;
    out.reserve(n);
    for (const auto& nd : detail::u_nodes_multi(s.historical, n)) {
        auto w = c_weights(nd.v, s.historical);
        for (auto& x : w) x *= nd.u;
        const auto cp = conditional_theta(s, w);
        const double lw = std::log(nd.weight) + detail::log_prior_du(prior, true, s.historical, nd.u, nd.u_hi, nd.v) +
                          detail::log_marginal_npp(s, w);
        out.push_back({lw, cp.mu_p, cp.sigma2_p});
    }
    return out;
}

inline DensityGrid marginal_theta_bnpp(const StudySet& s, const BorrowingPrior& prior, const QuadratureOptions& o = {}) {
    s.validate();
    return converge_theta(
        theta_grid(s, o.theta_points), [&](std::size_t n) { return bnpp_components(s, prior, n); }, o.min_nodes,
        o.max_nodes, o.tol, "marginal_theta_bnpp");
}

/// Unnormalized log posterior of v under the BNPP (theta integrated analytically).
inline double bnpp_log_v_posterior(const StudySet& s, const BorrowingPrior& prior, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) return detail::neg_inf;
    const double u = f_multi(v, s.historical);
    auto w = c_weights(v, s.historical);
    for (auto& x : w) x *= u;
    return detail::log_prior_du(prior, true, s.historical, u, f_multi_complement(v, s.historical), v) +
           std::log(f_multi_jacobian(v, s.historical)) + detail::log_marginal_npp(s, w);
}

// ---- BHM, several historical datasets -------------------------------------

inline std::vector<Component> bhm_multi_components(const StudySet& s, const BorrowingPrior& prior, std::size_t n) {
    std::vector<Component> out;
    out.reserve(n);
    for (const auto& nd : detail::u_nodes_multi(s.historical, n)) {
        const auto cp = detail::bhm_conditional(s, nd.v);
        const double lw = std::log(nd.weight) + detail::log_prior_du(prior, true, s.historical, nd.u, nd.u_hi, nd.v) +
                          detail::log_marginal_bhm(s, nd.v);
        out.push_back({lw, cp.mu_p, cp.sigma2_p});
    }
    return out;
}

inline DensityGrid marginal_theta_bhm_multi(const StudySet& s, const BorrowingPrior& prior, const QuadratureOptions& o = {}) {
    s.validate();
    const auto p = detail::as_bhm_prior(prior, s, true);
    return converge_theta(
        theta_grid(s, o.theta_points), [&](std::size_t n) { return bhm_multi_components(s, p, n); }, o.min_nodes,
        o.max_nodes, o.tol, "marginal_theta_bhm_multi");
}

/// Unnormalized log posterior of v under the multi-dataset BHM.
inline double bhm_log_v_posterior(const StudySet& s, const BorrowingPrior& prior, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) return detail::neg_inf;
    const auto p = detail::as_bhm_prior(prior, s, true);
    const double u = f_multi(v, s.historical);
    return detail::log_prior_du(p, true, s.historical, u, f_multi_complement(v, s.historical), v) +
           std::log(f_multi_jacobian(v, s.historical)) + detail::log_marginal_bhm(s, v);
}

// ---- iNPP -----------------------------------------------------------------

namespace detail {

inline const PriorSpec& prior_k(const std::vector<PriorSpec>& p, std::size_t k) {
    return p.size() == 1 ? p[0] : p.at(k);
}

inline void check_inpp_priors(const StudySet& s, const std::vector<PriorSpec>& p) {
    if (p.empty() || (p.size() != 1 && p.size() != s.K()))
        throw config_error("iNPP: give one prior per historical dataset (or one shared prior)");
    for (const auto& q : p)
        if (q.support() != Support::unit) throw config_error("iNPP: priors must be on (0,1)");
}

}  // namespace detail

inline std::vector<Component> inpp2_components(const StudySet& s, const std::vector<PriorSpec>& p, std::size_t n) {
    const auto nodes = sine_mapped_nodes(0.0, 1.0, n);
    std::vector<Component> out;
    out.reserve(n * n);
    for (const auto& a : nodes) {
        const double la = std::log(a.weight) + detail::prior_k(p, 0).log_density(a.x, a.to_hi);
        for (const auto& b : nodes) {
            const double w[2] = {a.x, b.x};
            const auto cp = conditional_theta(s, w);
            const double lw = la + std::log(b.weight) + detail::prior_k(p, 1).log_density(b.x, b.to_hi) +
                              detail::log_marginal_npp(s, w);
            out.push_back({lw, cp.mu_p, cp.sigma2_p});
        }
    }
    return out;
}

inline DensityGrid marginal_theta_inpp(const StudySet& s, const std::vector<PriorSpec>& priors, const QuadratureOptions& o = {}) {
    s.validate();
    detail::check_inpp_priors(s, priors);
    if (s.K() == 1) return marginal_theta_npp_single(s, priors[0], o);
    if (s.K() > 2)
        throw config_error("marginal_theta_inpp: the deterministic path handles K <= 2; use the mwg_inpp sampler for K = " +
                           std::to_string(s.K()));
    return converge_theta(
        theta_grid(s, o.theta_points), [&](std::size_t n) { return inpp2_components(s, priors, n); }, o.min_nodes_2d,
        o.max_nodes_2d, o.tol, "marginal_theta_inpp");
}

// ---- discounting-parameter marginals --------------------------------------

enum class Model { npp, inpp, bnpp, bhm };

/// BNPP marginals of a0k = h_k(v), one grid per historical dataset.
inline std::vector<DensityGrid> marginal_a0k_bnpp(const StudySet& s, const BorrowingPrior& prior, const QuadratureOptions& o = {}) {
    s.validate();
    const auto& hist = s.historical;
    std::vector<DensityGrid> out;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        out.push_back(tabulate_log(detail::a0_eval_grid(o.a0_points), [&](double a) {
            const double x = detail::clamp_unit(a);
            // h_k is decreasing in v
            const double v = detail::solve_increasing_log([&](double vv) { return -h_k(vv, hist)[k]; }, -x);
            return bnpp_log_v_posterior(s, prior, v) - std::log(h_k_jacobian(v, hist, k));
        }));
    }
    return out;
}

/// iNPP marginals of each a0k (K <= 2 deterministically).
inline std::vector<DensityGrid> marginal_a0k_inpp(const StudySet& s, const std::vector<PriorSpec>& priors,
                                                  const QuadratureOptions& o = {}) {
    s.validate();
    detail::check_inpp_priors(s, priors);
    if (s.K() == 1) return {marginal_a0_npp_single(s, priors[0], o)};
    if (s.K() > 2) throw config_error("marginal_a0k_inpp: the deterministic path handles K <= 2; use mwg_inpp");
    const auto nodes = sine_mapped_nodes(0.0, 1.0, o.max_nodes_2d);
    std::vector<DensityGrid> out;
    for (std::size_t k = 0; k < 2; ++k) {
        const std::size_t j = 1 - k;
        out.push_back(tabulate_log(detail::a0_eval_grid(o.a0_points), [&](double a) {
            const double x = detail::clamp_unit(a);
            std::vector<double> terms;
            terms.reserve(nodes.size());
            for (const auto& nd : nodes) {
                double w[2];
                w[k] = x;
                w[j] = nd.x;
                terms.push_back(std::log(nd.weight) + detail::prior_k(priors, j).log_density(nd.x, nd.to_hi) +
                                detail::log_marginal_npp(s, w));
            }
            return detail::prior_k(priors, k).log_density(x, 1.0 - x) + detail::log_sum_exp(terms);
        }));
    }
    return out;
}

/// Dispatches to the BNPP (one prior) or iNPP (one shared prior or one per dataset) path.
inline std::vector<DensityGrid> marginal_a0k(const StudySet& s, Model m, const std::vector<PriorSpec>& priors,
                                             const QuadratureOptions& o = {}) {
    if (m == Model::bnpp) {
        if (priors.size() != 1) throw config_error("marginal_a0k: bnpp takes exactly one prior");
        return marginal_a0k_bnpp(s, BorrowingPrior::from(priors[0]), o);
    }
    if (m == Model::inpp) return marginal_a0k_inpp(s, priors, o);
    throw config_error("marginal_a0k: model must be bnpp or inpp");
}

}  // namespace npp
