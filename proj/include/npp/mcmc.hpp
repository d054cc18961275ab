#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "npp/approx.hpp"
#include "npp/core.hpp"
#include "npp/posterior.hpp"
#include "npp/random.hpp"
#include "npp/transform.hpp"

namespace npp {

struct SamplerConfig {
    int chains = 4;
    int iterations = 10000;
    int burn_in = 5000;
    std::uint64_t seed = 20240101;
    double proposal_scale = 1.0;
    double target_accept = 0.44;
    bool parallel = true;

    void validate() const {
        if (chains < 2) throw config_error("SamplerConfig: need at least 2 chains");
        if (!(burn_in > 0 && burn_in < iterations)) throw config_error("SamplerConfig: need 0 < burn_in < iterations");
        if (!(proposal_scale > 0.0)) throw config_error("SamplerConfig: proposal_scale must be positive");
        if (!(target_accept >= 0.1 && target_accept <= 0.6)) throw config_error("SamplerConfig: target_accept must lie in [0.1, 0.6]");
    }

    // 4 chains x 10,000 iterations, 5,000 burn-in
    static SamplerConfig fig_a1(std::uint64_t seed = 20240101) { return {4, 10000, 5000, seed}; }
    // 4 chains x 8,000 iterations, 4,000 burn-in
    static SamplerConfig fig_a2(std::uint64_t seed = 20240101) { return {4, 8000, 4000, seed}; }
};

struct ParamDiagnostics {
    double ess = 0.0;
    double split_rhat = 1.0;
    double mcse = 0.0;
    double mean = 0.0;
    double sd = 0.0;
};

/// Post-burn-in draws, indexed [parameter][chain][iteration].
struct ChainSet {
    std::vector<std::string> names;
    std::vector<std::vector<std::vector<double>>> draws;
    int iterations = 0;
    int burn_in = 0;
    std::uint64_t seed = 0;
    std::vector<double> acceptance;  // per chain, averaged over Metropolis coordinates
    std::map<std::string, ParamDiagnostics> diagnostics;
    std::vector<std::string> warnings;

    std::size_t index(const std::string& name) const {
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw config_error("ChainSet: no parameter named '" + name + "'");
        return static_cast<std::size_t>(it - names.begin());
    }

    const std::vector<std::vector<double>>& chains_of(const std::string& name) const { return draws[index(name)]; }

    std::vector<double> pooled(const std::string& name) const {
        std::vector<double> out;
        for (const auto& c : chains_of(name)) out.insert(out.end(), c.begin(), c.end());
        return out;
    }

    friend bool operator==(const ChainSet& a, const ChainSet& b) { return a.names == b.names && a.draws == b.draws; }
};

// ---- diagnostics -----------------------------------------------------------

namespace detail {

inline std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> out;
    for (const auto& c : chains) {
        const std::size_t h = c.size() / 2;
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(h), c.end());
    }
    return out;
}

// Normal scores of pooled ranks, ties averaged.
inline std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t c = 0; c < chains.size(); ++c)
        for (std::size_t i = 0; i < chains[c].size(); ++i) all.push_back({chains[c][i], c * chains[0].size() + i});
    std::sort(all.begin(), all.end());
    const double S = static_cast<double>(all.size());
    std::vector<double> z(all.size());
    boost::math::normal_distribution<> nd;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double r = 0.5 * static_cast<double>(i + j - 1) + 1.0;
        const double val = boost::math::quantile(nd, (r - 0.375) / (S + 0.25));
        for (std::size_t k = i; k < j; ++k) z[all[k].second] = val;
        i = j;
    }
    auto out = chains;
    for (std::size_t c = 0; c < chains.size(); ++c)
        for (std::size_t i = 0; i < chains[c].size(); ++i) out[c][i] = z[c * chains[0].size() + i];
    return out;
}

inline double mean_of(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

inline double rhat_basic(const std::vector<std::vector<double>>& ch) {
    const double n = static_cast<double>(ch[0].size());
    const double m = static_cast<double>(ch.size());
    std::vector<double> means;
    double W = 0.0;
    for (const auto& c : ch) {
        const double mu = mean_of(c);
        means.push_back(mu);
        double s = 0.0;
        for (double x : c) s += (x - mu) * (x - mu);
        W += s / (n - 1.0);
    }
    W /= m;
    const double gm = mean_of(means);
    double B = 0.0;
    for (double mu : means) B += (mu - gm) * (mu - gm);
    B *= n / (m - 1.0);
    if (W <= 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return std::sqrt(((n - 1.0) / n * W + B / n) / W);
}

// Multi-chain ESS with Geyer's initial monotone sequence.
inline double ess_basic(const std::vector<std::vector<double>>& ch) {
    const std::size_t m = ch.size(), n = ch[0].size();
    const double nd = static_cast<double>(n);
    std::vector<double> means(m), vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean_of(ch[c]);
        double s = 0.0;
        for (double x : ch[c]) s += (x - means[c]) * (x - means[c]);
        vars[c] = s / (nd - 1.0);
    }
    const double W = mean_of(vars);
    const double gm = mean_of(means);
    double B = 0.0;
    for (double mu : means) B += (mu - gm) * (mu - gm);
    B = m > 1 ? B / static_cast<double>(m - 1) : 0.0;
    const double var_plus = (nd - 1.0) / nd * W + B;
    if (!(var_plus > 0.0)) return nd * static_cast<double>(m);
    auto rho = [&](std::size_t t) {
        double acov = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i + t < n; ++i) s += (ch[c][i] - means[c]) * (ch[c][i + t] - means[c]);
            acov += s / nd;
        }
        acov /= static_cast<double>(m);
        return 1.0 - (W - acov) / var_plus;
    };
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        double pair = rho(t) + rho(t + 1);
        if (pair < 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m) * nd));
    return static_cast<double>(m) * nd / tau;
}

}  // namespace detail

/// Rank-normalized split-Rhat (max of bulk and folded), bulk ESS and Monte Carlo standard error.
inline ParamDiagnostics diagnose(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw config_error("diagnostics: need at least 2 chains");
    const std::size_t n = chains[0].size();
    if (n < 100) throw config_error("diagnostics: need at least 100 draws per chain");
    for (const auto& c : chains)
        if (c.size() != n) throw config_error("diagnostics: chains differ in length");
    ParamDiagnostics d;
    const auto split = detail::split_chains(chains);
    const auto z = detail::rank_normalize(split);
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    auto sorted = pooled;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double med = sorted[sorted.size() / 2];
    auto folded = split;
    for (auto& c : folded)
        for (auto& x : c) x = std::abs(x - med);
    const double r_bulk = detail::rhat_basic(z);
    const double r_fold = detail::rhat_basic(detail::rank_normalize(folded));
    d.split_rhat = std::max({1.0, r_bulk, r_fold});
    d.ess = detail::ess_basic(z);
    d.mean = detail::mean_of(pooled);
    double s = 0.0;
    for (double x : pooled) s += (x - d.mean) * (x - d.mean);
    d.sd = std::sqrt(s / static_cast<double>(pooled.size() - 1));
    d.mcse = d.sd / std::sqrt(d.ess);
    return d;
}

inline std::map<std::string, ParamDiagnostics> diagnostics(const ChainSet& cs) {
    std::map<std::string, ParamDiagnostics> out;
    for (std::size_t p = 0; p < cs.names.size(); ++p) out[cs.names[p]] = diagnose(cs.draws[p]);
    return out;
}

// ---- sampler plumbing ------------------------------------------------------

namespace detail {

// Random-walk Metropolis on one unconstrained coordinate with Robbins-Monro scale tuning during burn-in.
struct RwCoordinate {
    double log_scale = 0.0;
    long accepted = 0;
    long proposed = 0;

    template <class LogTarget>
    double step(Rng& rng, double x, double& lp, LogTarget&& target, bool adapt, int iter, double goal) {
        const double prop = x + std::exp(log_scale) * std_normal(rng);
        const double lq = target(prop);
        if (std::isnan(lq)) throw numerical_error("sampler: NaN log density");
        const bool acc = std::log(uniform_open(rng)) < lq - lp;
        if (acc) {
            x = prop;
            lp = lq;
        }
        if (adapt) log_scale += ((acc ? 1.0 : 0.0) - goal) / std::pow(static_cast<double>(iter) + 1.0, 0.6);
        else {
            ++proposed;
            accepted += acc ? 1 : 0;
        }
        return x;
    }

    double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

// Stepping-out slice sampler on one coordinate.
template <class LogTarget>
double slice_step(Rng& rng, double x, LogTarget&& target, double w = 1.0, int max_steps = 50) {
    const double lx = target(x);
    if (!std::isfinite(lx)) throw numerical_error("slice sampler: current point has zero density");
    const double y = lx + std::log(uniform_open(rng));
    double L = x - w * uniform_open(rng), R = L + w;
    int j = static_cast<int>(std::floor(max_steps * uniform_open(rng)));
    int k = max_steps - 1 - j;
    while (j-- > 0 && target(L) > y) L -= w;
    while (k-- > 0 && target(R) > y) R += w;
    for (int guard = 0; guard < 200; ++guard) {
        const double x1 = L + (R - L) * uniform_open(rng);
        const double l1 = target(x1);
        if (std::isnan(l1)) throw numerical_error("slice sampler: NaN log density");
        if (l1 > y) return x1;
        (x1 < x ? L : R) = x1;
    }
    throw numerical_error("slice sampler: shrinkage did not terminate");
}

// Runs `body(chain, rng, out)` for every chain, optionally in threads; out is [param][iter].
template <class Body>
ChainSet run_chains(const SamplerConfig& cfg, std::vector<std::string> names, Body&& body) {
    cfg.validate();
    const std::size_t P = names.size();
    std::vector<std::vector<std::vector<double>>> per_chain(static_cast<std::size_t>(cfg.chains),
                                                            std::vector<std::vector<double>>(P));
    std::vector<double> acc(static_cast<std::size_t>(cfg.chains), 0.0);
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(cfg.chains));
    auto one = [&](int c) {
        try {
            Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(c));
            acc[static_cast<std::size_t>(c)] = body(c, rng, per_chain[static_cast<std::size_t>(c)]);
        } catch (...) {
            errs[static_cast<std::size_t>(c)] = std::current_exception();
        }
    };
    if (cfg.parallel && std::thread::hardware_concurrency() > 1) {
        std::vector<std::thread> th;
        for (int c = 0; c < cfg.chains; ++c) th.emplace_back(one, c);
        for (auto& t : th) t.join();
    } else {
        for (int c = 0; c < cfg.chains; ++c) one(c);
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    ChainSet cs;
    cs.names = std::move(names);
    cs.iterations = cfg.iterations;
    cs.burn_in = cfg.burn_in;
    cs.seed = cfg.seed;
    cs.acceptance = acc;
    cs.draws.assign(P, {});
    for (std::size_t p = 0; p < P; ++p)
        for (int c = 0; c < cfg.chains; ++c) cs.draws[p].push_back(std::move(per_chain[static_cast<std::size_t>(c)][p]));
    if (cfg.iterations - cfg.burn_in >= 100) cs.diagnostics = diagnostics(cs);
    for (std::size_t c = 0; c < acc.size(); ++c)
        if (acc[c] >= 0.0 && (acc[c] < 0.05 || acc[c] > 0.95))
            cs.warnings.push_back("chain " + std::to_string(c) + " acceptance rate " + std::to_string(acc[c]) +
                                  " outside [0.05, 0.95]");
    return cs;
}

inline std::vector<std::string> indexed_names(const std::string& stem, std::size_t K) {
    std::vector<std::string> v;
    for (std::size_t k = 1; k <= K; ++k) v.push_back(stem + std::to_string(k));
    return v;
}

inline void draw_normal(Rng& rng, double mean, double var, double& out) { out = mean + std::sqrt(var) * std_normal(rng); }

inline void draw_from(Rng& rng, const ConditionalPosterior& c, double& out) { draw_normal(rng, c.mu_p, c.sigma2_p, out); }

inline double draw_inverse_gamma(Rng& rng, const InverseGammaPrior& ig) {
    std::gamma_distribution<double> g(ig.shape, 1.0 / ig.scale);
    return 1.0 / g(rng);
}

// Full conditionals of the normal hierarchical model with flat mu.
// study mean given mu, v: precision n/sigma^2 + 1/v
inline ConditionalPosterior bhm_theta_conditional(const NormalSummary& d, double mu, double v) {
    const double prec = d.precision() + 1.0 / v;
    return {(d.scaled_mean() + mu / v) / prec, 1.0 / prec};
}

// mu given all study means: N(average, v / (K+1))
inline ConditionalPosterior bhm_mu_conditional(const std::vector<double>& th, double v) {
    return {mean_of(th), v / static_cast<double>(th.size())};
}

// v given study means and mu under an IG(c, d) prior
inline InverseGammaPrior bhm_v_conditional(const InverseGammaPrior& ig, const std::vector<double>& th, double mu) {
    double ss = 0.0;
    for (double t : th) ss += (t - mu) * (t - mu);
    return {ig.shape + 0.5 * static_cast<double>(th.size()), ig.scale + 0.5 * ss};
}

inline bool is_inverse_gamma(const BorrowingPrior& p, InverseGammaPrior& ig) {
    const PriorSpec* s = p.v_prior();
    if (!s) return false;
    if (auto q = std::get_if<InverseGammaPrior>(&s->kind())) {
        ig = *q;
        return true;
    }
    return false;
}

}  // namespace detail

/// Gibbs sampler for the normal hierarchical model with a flat prior on mu.
/// Inverse-gamma priors use the conjugate full conditionals. Any other prior gets a blocked scheme:
/// slice sampling of log v from its collapsed conditional, then mu and the thetas given v.
/// A prior given on a0 is converted to the exactly induced v prior (single map for K = 1, multi map otherwise).
inline ChainSet gibbs_bhm(const StudySet& s, const BorrowingPrior& prior_in, const SamplerConfig& cfg) {
    s.validate();
    const auto prior = detail::as_bhm_prior(prior_in, s, s.K() > 1);
    const std::size_t K = s.K();
    InverseGammaPrior ig;
    const bool conj = detail::is_inverse_gamma(prior, ig);
    std::vector<std::string> names{"theta"};
    for (auto& n : detail::indexed_names("theta0_", K)) names.push_back(n);
    names.push_back("mu");
    names.push_back("v");
    return detail::run_chains(cfg, names, [&](int, Rng& rng, std::vector<std::vector<double>>& out) {
        std::vector<double> th(K + 1);  // th[0] current, th[k] historical
        th[0] = s.current.ybar;
        for (std::size_t k = 0; k < K; ++k) th[k + 1] = s.historical[k].ybar;
        double mu = detail::mean_of(th);
        double v = conj ? ig.scale / (ig.shape + 1.0) : 1.0;
        for (auto& o : out) o.reserve(static_cast<std::size_t>(cfg.iterations - cfg.burn_in));
        auto draw_thetas = [&]() {
            detail::draw_from(rng, detail::bhm_theta_conditional(s.current, mu, v), th[0]);
            for (std::size_t k = 0; k < K; ++k) detail::draw_from(rng, detail::bhm_theta_conditional(s.historical[k], mu, v), th[k + 1]);
        };
        for (int it = 0; it < cfg.iterations; ++it) {
            if (conj) {
                v = detail::draw_inverse_gamma(rng, detail::bhm_v_conditional(ig, th, mu));
            } else {
                // v given the data alone
                auto target = [&](double lv) {
                    const double vv = std::exp(lv);
                    return prior.log_v(vv) + lv + detail::log_marginal_bhm(s, vv);
                };
                v = std::exp(detail::slice_step(rng, std::log(v), target));
            }
            // (mu, thetas) given v as one block, so small v does not freeze mu
            double sw = 1.0 / (s.current.sigma2 / s.current.n + v);
            double swy = sw * s.current.ybar;
            for (const auto& h : s.historical) {
                const double w = 1.0 / (1.0 / h.precision() + v);
                sw += w;
                swy += w * h.ybar;
            }
            detail::draw_normal(rng, swy / sw, 1.0 / sw, mu);
            draw_thetas();
            if (!(v > 0.0) || !std::isfinite(v)) throw numerical_error("gibbs_bhm: non-positive or infinite v draw");
            if (it >= cfg.burn_in) {
                std::size_t p = 0;
                for (double t : th) out[p++].push_back(t);
                out[p++].push_back(mu);
                out[p++].push_back(v);
            }
        }
        return -1.0;  // no Metropolis steps
    });
}

/// Metropolis-within-Gibbs for the BNPP: random walk on log v against the collapsed v posterior,
/// then an exact draw of theta given v. Reports a0 = f(v) and a0k = h_k(v).
inline ChainSet mwg_bnpp(const StudySet& s, const BorrowingPrior& prior, const SamplerConfig& cfg) {
    s.validate();
    const std::size_t K = s.K();
    std::vector<std::string> names{"theta", "v", "a0"};
    for (auto& n : detail::indexed_names("a0_", K)) names.push_back(n);
    return detail::run_chains(cfg, names, [&](int, Rng& rng, std::vector<std::vector<double>>& out) {
        auto target = [&](double lv) { return bnpp_log_v_posterior(s, prior, std::exp(lv)) + lv; };
        double lv = std::log(f_multi_inv(0.5 * (1.0 + 1.0 / (1.0 + static_cast<double>(K))), s.historical));
        double lp = target(lv);
        detail::RwCoordinate rw;
        rw.log_scale = std::log(cfg.proposal_scale);
        for (int it = 0; it < cfg.iterations; ++it) {
            lv = rw.step(rng, lv, lp, target, it < cfg.burn_in, it, cfg.target_accept);
            const double v = std::exp(lv);
            const auto w = h_k(v, s.historical);
            const auto cp = conditional_theta(s, w);
            double th;
            detail::draw_normal(rng, cp.mu_p, cp.sigma2_p, th);
            if (it >= cfg.burn_in) {
                out[0].push_back(th);
                out[1].push_back(v);
                out[2].push_back(f_multi(v, s.historical));
                for (std::size_t k = 0; k < K; ++k) out[3 + k].push_back(w[k]);
            }
        }
        return rw.rate();
    });
}

/// Metropolis-within-Gibbs for the iNPP: logit random walk for each a0k given theta, then theta given a0.
inline ChainSet mwg_inpp(const StudySet& s, const std::vector<PriorSpec>& priors, const SamplerConfig& cfg) {
    s.validate();
    detail::check_inpp_priors(s, priors);
    const std::size_t K = s.K();
    std::vector<std::string> names{"theta"};
    for (auto& n : detail::indexed_names("a0_", K)) names.push_back(n);
    return detail::run_chains(cfg, names, [&](int, Rng& rng, std::vector<std::vector<double>>& out) {
        std::vector<double> a(K, 0.5);
        double th = s.current.ybar;
        std::vector<detail::RwCoordinate> rw(K);
        for (auto& r : rw) r.log_scale = std::log(cfg.proposal_scale);
        for (int it = 0; it < cfg.iterations; ++it) {
            for (std::size_t k = 0; k < K; ++k) {
                auto target = [&](double z) {
                    const double x = detail::inv_logit(z);
                    const double omx = detail::inv_logit(-z);
                    if (!(x > 0.0) || !(omx > 0.0)) return detail::neg_inf;
                    auto w = a;
                    w[k] = x;
                    const auto nz = npp_normalizer(s.historical, w);
                    return detail::prior_k(priors, k).log_density(x, omx) + std::log(x) + std::log(omx) +
                           detail::normal_log_pdf(th, nz.M, 1.0 / nz.S);
                };
                double z = detail::logit(a[k]);
                double lp = target(z);
                z = rw[k].step(rng, z, lp, target, it < cfg.burn_in, it, cfg.target_accept);
                a[k] = detail::inv_logit(z);
            }
            const auto cp = conditional_theta(s, a);
            detail::draw_normal(rng, cp.mu_p, cp.sigma2_p, th);
            if (it >= cfg.burn_in) {
                out[0].push_back(th);
                for (std::size_t k = 0; k < K; ++k) out[1 + k].push_back(a[k]);
            }
        }
        double r = 0.0;
        for (const auto& x : rw) r += x.rate();
        return r / static_cast<double>(K);
    });
}

/// Hierarchical model with exact binomial likelihoods. Study j has control log-odds gamma_j (flat prior)
/// and log odds ratio theta_j ~ N(mu, v); mu is flat. trials[0] is the current study.
/// With prior_only the binomial terms are dropped (and gamma is not sampled).
inline ChainSet mh_bernoulli_bhm(const std::vector<TwoArmBinomialSummary>& trials, const BorrowingPrior& prior,
                                 const SamplerConfig& cfg, bool prior_only = false) {
    if (trials.size() < 2) throw config_error("mh_bernoulli_bhm: need a current and at least one historical trial");
    for (const auto& t : trials) t.validate();
    if (prior.scale() == BorrowingPrior::Scale::a0)
        throw config_error("mh_bernoulli_bhm: give the prior on v (for an a0 prior, pass the induced density)");
    const std::size_t J = trials.size();
    InverseGammaPrior ig;
    const bool conj = detail::is_inverse_gamma(prior, ig);
    std::vector<std::string> names{"theta"};
    for (auto& n : detail::indexed_names("theta0_", J - 1)) names.push_back(n);
    names.push_back("mu");
    names.push_back("v");
    for (auto& n : detail::indexed_names("gamma_", J)) names.push_back(n);

    auto loglik = [&](std::size_t j, double g, double t) {
        if (prior_only) return 0.0;
        const auto& tr = trials[j];
        // log p = -log(1 + e^-x), log(1-p) = -log(1 + e^x)
        auto lp = [](double x) { return -std::log1p(std::exp(-std::abs(x))) - std::max(-x, 0.0); };
        return tr.y_c * lp(g) + (tr.n_c - tr.y_c) * lp(-g) + tr.y_t * lp(g + t) + (tr.n_t - tr.y_t) * lp(-(g + t));
    };

    return detail::run_chains(cfg, names, [&](int, Rng& rng, std::vector<std::vector<double>>& out) {
        std::vector<double> gam(J), th(J);
        std::vector<std::array<double, 3>> chol(J);  // lower-triangular factor of the asymptotic covariance
        std::vector<double> slope(J);                // E[gamma | theta] slope, used by the joint shift
        for (std::size_t j = 0; j < J; ++j) {
            const auto& tr = trials[j];
            gam[j] = std::log(static_cast<double>(tr.y_c)) - std::log(static_cast<double>(tr.n_c - tr.y_c));
            const auto lo = log_or(tr);
            th[j] = lo.theta_hat;
            const double vg = 1.0 / tr.y_c + 1.0 / (tr.n_c - tr.y_c);
            // cov(gamma, theta) = -vg, var(theta) = lo.var_hat
            const double l11 = std::sqrt(vg), l21 = -vg / l11;
            chol[j] = {l11, l21, std::sqrt(std::max(lo.var_hat - l21 * l21, 1e-12))};
            slope[j] = -vg / lo.var_hat;
        }
        double mu = detail::mean_of(th);
        double v = 0.1;
        std::vector<detail::RwCoordinate> rw(J);
        for (auto& r : rw) r.log_scale = std::log(cfg.proposal_scale);
        detail::RwCoordinate shift;
        shift.log_scale = std::log(0.1 * cfg.proposal_scale);
        for (int it = 0; it < cfg.iterations; ++it) {
            const bool adapt = it < cfg.burn_in;
            for (std::size_t j = 0; j < J; ++j) {
                if (prior_only) {
                    detail::draw_normal(rng, mu, v, th[j]);
                    continue;
                }
                auto& r = rw[j];
                const double sc = std::exp(r.log_scale);
                const double z1 = std_normal(rng), z2 = std_normal(rng);
                const double g1 = gam[j] + sc * chol[j][0] * z1;
                const double t1 = th[j] + sc * (chol[j][1] * z1 + chol[j][2] * z2);
                const double cur = loglik(j, gam[j], th[j]) + detail::normal_log_pdf(th[j], mu, v);
                const double prop = loglik(j, g1, t1) + detail::normal_log_pdf(t1, mu, v);
                if (std::isnan(prop)) throw numerical_error("mh_bernoulli_bhm: NaN log density");
                const bool acc = std::log(uniform_open(rng)) < prop - cur;
                if (acc) {
                    gam[j] = g1;
                    th[j] = t1;
                }
                if (adapt) r.log_scale += ((acc ? 1.0 : 0.0) - 0.3) / std::pow(it + 1.0, 0.6);
                else {
                    ++r.proposed;
                    r.accepted += acc ? 1 : 0;
                }
            }
            // (v, mu) | theta as one block: v with mu integrated out, then mu
            const double tbar = detail::mean_of(th);
            double ss = 0.0;
            for (double t : th) ss += (t - tbar) * (t - tbar);
            const double half_df = 0.5 * static_cast<double>(J - 1);
            if (conj) {
                std::gamma_distribution<double> g(ig.shape + half_df, 1.0 / (ig.scale + 0.5 * ss));
                v = 1.0 / g(rng);
            } else {
                auto target = [&](double lv) {
                    const double vv = std::exp(lv);
                    return prior.log_v(vv) + lv - half_df * lv - 0.5 * ss / vv;
                };
                v = std::exp(detail::slice_step(rng, std::log(v), target));
            }
            detail::draw_normal(rng, tbar, v / static_cast<double>(J), mu);
            if (!prior_only) {
                // shift every theta_j and mu together (gamma_j along its slope); the random-effect terms cancel
                const double d = std::exp(shift.log_scale) * std_normal(rng);
                double delta = 0.0;
                for (std::size_t j = 0; j < J; ++j)
                    delta += loglik(j, gam[j] + slope[j] * d, th[j] + d) - loglik(j, gam[j], th[j]);
                const bool acc = std::log(uniform_open(rng)) < delta;
                if (acc) {
                    for (std::size_t j = 0; j < J; ++j) {
                        th[j] += d;
                        gam[j] += slope[j] * d;
                    }
                    mu += d;
                }
                if (adapt) shift.log_scale += ((acc ? 1.0 : 0.0) - 0.44) / std::pow(it + 1.0, 0.6);
            }
            if (it >= cfg.burn_in) {
                std::size_t p = 0;
                for (double t : th) out[p++].push_back(t);
                out[p++].push_back(mu);
                out[p++].push_back(v);
                for (double g : gam) out[p++].push_back(g);
            }
        }
        double r = 0.0;
        int cnt = 0;
        if (!prior_only)
            for (const auto& x : rw) {
                r += x.rate();
                ++cnt;
            }
        return cnt ? r / cnt : -1.0;
    });
}

}  // namespace npp
