#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "npp/approx.hpp"
#include "npp/fitting.hpp"
#include "npp/io.hpp"
#include "npp/mcmc.hpp"
#include "npp/posterior.hpp"
#include "npp/random.hpp"
#include "npp/transform.hpp"

namespace npp {

/// Thrown when a computed comparison misses its tolerance.
class tolerance_error : public error {
public:
    using error::error;
};

inline constexpr std::uint64_t kDefaultSeed = 20240101;

// ---- scenario configuration -----------------------------------------------

struct GridSettings {
    std::size_t theta_points = 1025;
    std::size_t a0_points = 1025;

    friend bool operator==(const GridSettings&, const GridSettings&) = default;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = kDefaultSeed;
    StudySet study;
    std::vector<std::string> models;
    // npp, bnpp and bhm hold one prior; inpp holds one shared prior or one per dataset
    std::map<std::string, std::vector<PriorSpec>> priors;
    std::optional<SamplerConfig> sampler;
    GridSettings grid;
    std::string outputs = "out";

    static const std::vector<std::string>& known_models() {
        static const std::vector<std::string> m{"npp", "inpp", "bnpp", "bhm", "a0=0", "a0=1"};
        return m;
    }

    /// Fills default priors (uniform on a0) and checks everything. Touches no files.
    void resolve() {
        study.validate();
        if (models.empty()) throw config_error("scenario: 'models' must list at least one model");
        std::set<std::string> seen;
        for (const auto& m : models) {
            if (std::find(known_models().begin(), known_models().end(), m) == known_models().end())
                throw config_error("scenario: unknown model '" + m + "' (expected npp, inpp, bnpp, bhm, a0=0 or a0=1)");
            if (!seen.insert(m).second) throw config_error("scenario: model '" + m + "' listed twice");
        }
        for (const auto& [k, _] : priors)
            if (!seen.count(k)) throw config_error("scenario: prior given for model '" + k + "' which is not requested");
        const std::size_t K = study.K();
        for (const auto& m : models) {
            if (m == "a0=0" || m == "a0=1") continue;
            auto& p = priors[m];
            if (p.empty()) p = {PriorSpec::uniform()};
            for (const auto& q : p) q.validate();
            if (m == "inpp") {
                if (p.size() != 1 && p.size() != K)
                    throw config_error("scenario: inpp needs one prior or " + std::to_string(K) + " priors");
                for (const auto& q : p)
                    if (q.support() != Support::unit) throw config_error("scenario: inpp priors must live on a0 in (0,1)");
            } else if (p.size() != 1) throw config_error("scenario: model '" + m + "' takes exactly one prior");
            if (m == "npp") {
                if (K != 1) throw config_error("scenario: npp needs exactly one historical dataset; use inpp or bnpp for K > 1");
                if (p[0].support() != Support::unit) throw config_error("scenario: the npp prior must live on a0 in (0,1)");
            }
        }
        if (seen.count("inpp") && K > 2 && !sampler)
            throw config_error("scenario: inpp with K > 2 runs on the sampler; add a 'sampler' block");
        if (grid.theta_points < 17 || grid.a0_points < 17) throw config_error("scenario: grid sizes must be at least 17");
        if (sampler) sampler->validate();
        check_writable(outputs);
    }

    static void check_writable(const std::string& dir) {
        if (dir.empty()) throw config_error("scenario: 'outputs' must name a directory");
        std::filesystem::path p = std::filesystem::absolute(dir);
        if (std::filesystem::exists(p) && !std::filesystem::is_directory(p))
            throw config_error("scenario: output path '" + dir + "' exists and is not a directory");
        while (!std::filesystem::exists(p) && p.has_parent_path() && p != p.parent_path()) p = p.parent_path();
        if (::access(p.c_str(), W_OK) != 0) throw config_error("scenario: output directory '" + dir + "' is not writable");
    }

    friend bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
        return a.name == b.name && a.seed == b.seed && a.study == b.study && a.models == b.models && a.priors == b.priors &&
               a.grid == b.grid && a.outputs == b.outputs && a.sampler.has_value() == b.sampler.has_value() &&
               (!a.sampler || json(*a.sampler) == json(*b.sampler));
    }
};

inline void to_json(json& j, const ScenarioConfig& c) {
    j = json{{"name", c.name},
             {"seed", c.seed},
             {"study", c.study},
             {"models", c.models},
             {"grid", {{"theta_points", c.grid.theta_points}, {"a0_points", c.grid.a0_points}}},
             {"outputs", c.outputs}};
    json pri = json::object();
    for (const auto& [m, p] : c.priors) pri[m] = m == "inpp" ? json(p) : json(p.at(0));
    j["priors"] = pri;
    if (c.sampler) j["sampler"] = *c.sampler;
}

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw config_error(where + " must be a mapping");
    for (const auto& [k, _] : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
            throw config_error(where + ": unknown key '" + k + "'");
}

}  // namespace detail

inline void from_json(const json& j, ScenarioConfig& c) {
    detail::reject_unknown_keys(j, {"name", "seed", "study", "models", "priors", "sampler", "grid", "outputs"}, "scenario");
    try {
        c = ScenarioConfig{};
        c.name = j.value("name", c.name);
        c.seed = j.value("seed", c.seed);
        if (!j.contains("study")) throw config_error("scenario: 'study' is required");
        c.study = j.at("study").get<StudySet>();
        if (!j.contains("models") || !j.at("models").is_array()) throw config_error("scenario: 'models' must be a list");
        c.models = j.at("models").get<std::vector<std::string>>();
        if (j.contains("priors")) {
            for (const auto& [m, p] : j.at("priors").items()) {
                std::vector<PriorSpec> v;
                if (p.is_array())
                    for (const auto& q : p) v.push_back(q.get<PriorSpec>());
                else v.push_back(p.get<PriorSpec>());
                c.priors[m] = std::move(v);
            }
        }
        if (j.contains("sampler")) {
            const auto& s = j.at("sampler");
            SamplerConfig sc = s.get<SamplerConfig>();
            if (!(s.is_object() && s.contains("seed"))) sc.seed = c.seed;
            c.sampler = sc;
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            detail::reject_unknown_keys(g, {"theta_points", "a0_points"}, "scenario.grid");
            c.grid.theta_points = g.value("theta_points", c.grid.theta_points);
            c.grid.a0_points = g.value("a0_points", c.grid.a0_points);
        }
        c.outputs = j.value("outputs", c.outputs);
    } catch (const json::exception& e) {
        throw config_error(std::string("scenario: ") + e.what());
    }
}

/// Parses and resolves in one step.
inline ScenarioConfig parse_scenario(const json& j) {
    auto c = j.get<ScenarioConfig>();
    c.resolve();
    return c;
}

// ---- shared helpers --------------------------------------------------------

namespace detail {

inline double grid_mode(const DensityGrid& g) {
    return g.points[static_cast<std::size_t>(std::max_element(g.density.begin(), g.density.end()) - g.density.begin())];
}

inline json grid_summary_json(const DensityGrid& g) {
    json j = summarize(g, 0.95);
    j["mode"] = grid_mode(g);
    return j;
}

inline json draws_summary_json(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double m = 0.0, ss = 0.0;
    for (double v : x) m += v;
    m /= n;
    for (double v : x) ss += (v - m) * (v - m);
    auto q = [&](double p) {
        const double h = p * (n - 1.0);
        const auto i = static_cast<std::size_t>(std::floor(h));
        return i + 1 < x.size() ? x[i] + (h - static_cast<double>(i)) * (x[i + 1] - x[i]) : x.back();
    };
    return json{{"mean", m}, {"sd", std::sqrt(ss / (n - 1.0))}, {"credible_interval", {q(0.025), q(0.975)}}, {"level", 0.95}};
}

/// Histogram density over [lo, hi] with equal-width bins.
inline std::vector<double> histogram_density(const std::vector<double>& x, double lo, double hi, std::size_t bins) {
    std::vector<double> h(bins, 0.0);
    const double w = (hi - lo) / static_cast<double>(bins);
    for (double v : x) {
        if (v < lo || v >= hi) continue;
        h[std::min(bins - 1, static_cast<std::size_t>((v - lo) / w))] += 1.0;
    }
    for (double& c : h) c /= static_cast<double>(x.size()) * w;
    return h;
}

inline std::string histogram_csv(const std::vector<std::string>& names, const std::vector<std::vector<double>>& samples,
                                 double lo, double hi, std::size_t bins) {
    std::vector<std::string> header{"bin_lo", "bin_hi"};
    std::vector<std::vector<double>> cols(2);
    for (std::size_t b = 0; b < bins; ++b) {
        cols[0].push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
        cols[1].push_back(lo + (hi - lo) * static_cast<double>(b + 1) / static_cast<double>(bins));
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        header.push_back(names[i]);
        cols.push_back(histogram_density(samples[i], lo, hi, bins));
    }
    return columns_csv(header, cols);
}

/// Normal densities of the current and historical data summaries on a theta grid.
inline std::string data_densities_csv(const StudySet& s, const std::vector<double>& theta) {
    std::vector<std::string> header{"theta", "current"};
    std::vector<std::vector<double>> cols{theta, {}};
    for (double t : theta) cols[1].push_back(std::exp(normal_log_pdf(t, s.current.ybar, s.current.sigma2 / s.current.n)));
    for (std::size_t k = 0; k < s.K(); ++k) {
        header.push_back("historical_" + std::to_string(k + 1));
        const auto& h = s.historical[k];
        std::vector<double> c;
        for (double t : theta) c.push_back(std::exp(normal_log_pdf(t, h.ybar, h.sigma2 / h.n)));
        cols.push_back(std::move(c));
    }
    return columns_csv(header, cols);
}

inline std::string file_stem(const std::string& model) {
    if (model == "a0=0") return "a0_0";
    if (model == "a0=1") return "a0_1";
    return model;
}

}  // namespace detail

// ---- run_scenario ----------------------------------------------------------

struct ScenarioResult {
    json report;
    OutputBundle files;
    std::map<std::string, DensityGrid> theta;          // per model, quadrature engine only
    std::map<std::string, std::vector<DensityGrid>> a0k;  // per model with discounting parameters
    std::map<std::string, ChainSet> chains;
};

inline ScenarioResult run_scenario(ScenarioConfig cfg) {
    cfg.resolve();
    const auto& s = cfg.study;
    const std::size_t K = s.K();
    QuadratureOptions o;
    o.theta_points = cfg.grid.theta_points;
    o.a0_points = cfg.grid.a0_points;

    ScenarioResult r;
    r.report["seed"] = cfg.seed;
    r.report["config"] = cfg;
    const auto theta_pts = theta_grid(s, o.theta_points);
    r.files.add("data_densities.csv", detail::data_densities_csv(s, theta_pts));

    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
        const auto& m = cfg.models[mi];
        json mj;
        std::optional<DensityGrid> th;
        std::vector<DensityGrid> a0;
        std::optional<ChainSet> cs;
        std::optional<SamplerConfig> sc = cfg.sampler;
        if (sc) sc->seed = splitmix64(cfg.sampler->seed + mi);

        if (m == "a0=0" || m == "a0=1") {
            const std::vector<double> w(K, m == "a0=1" ? 1.0 : 0.0);
            th = fixed_weight_theta(s, w, o);
        } else if (m == "npp") {
            const auto& p = cfg.priors.at(m)[0];
            th = marginal_theta_npp_single(s, p, o);
            a0.push_back(marginal_a0_npp_single(s, p, o));
            if (sc) cs = mwg_inpp(s, cfg.priors.at(m), *sc);
        } else if (m == "inpp") {
            const auto& p = cfg.priors.at(m);
            if (K <= 2) {
                th = marginal_theta_inpp(s, p, o);
                a0 = marginal_a0k_inpp(s, p, o);
            }
            if (sc) cs = mwg_inpp(s, p, *sc);
        } else if (m == "bnpp") {
            const auto bp = BorrowingPrior::from(cfg.priors.at(m)[0]);
            th = marginal_theta_bnpp(s, bp, o);
            a0 = marginal_a0k_bnpp(s, bp, o);
            if (sc) cs = mwg_bnpp(s, bp, *sc);
        } else if (m == "bhm") {
            const auto bp = BorrowingPrior::from(cfg.priors.at(m)[0]);
            th = K == 1 ? marginal_theta_bhm_single(s, bp, o) : marginal_theta_bhm_multi(s, bp, o);
            if (sc) cs = gibbs_bhm(s, bp, *sc);
        }

        const auto stem = detail::file_stem(m);
        mj["engine"] = th ? "quadrature" : "mcmc";
        if (cfg.priors.count(m)) mj["prior"] = m == "inpp" ? json(cfg.priors.at(m)) : json(cfg.priors.at(m)[0]);
        if (th) {
            mj["theta"] = detail::grid_summary_json(*th);
            r.files.add(stem + "_theta.csv", grid_csv(*th, "theta", "density"));
            r.theta[m] = *th;
        } else {
            mj["theta"] = detail::draws_summary_json(cs->pooled("theta"));
        }
        if (!a0.empty()) {
            mj["a0k"] = json::array();
            for (std::size_t k = 0; k < a0.size(); ++k) {
                mj["a0k"].push_back(detail::grid_summary_json(a0[k]));
                r.files.add(stem + "_a0_" + std::to_string(k + 1) + ".csv", grid_csv(a0[k], "a0", "density"));
            }
            r.a0k[m] = a0;
        } else if (cs && m == "inpp") {
            mj["a0k"] = json::array();
            for (std::size_t k = 1; k <= K; ++k) mj["a0k"].push_back(detail::draws_summary_json(cs->pooled("a0_" + std::to_string(k))));
        }
        if (cs) {
            json d = diagnostics_json(*cs);
            if (th) d["ks_vs_quadrature"] = ks_statistic(cs->pooled("theta"), *th);
            mj["mcmc"] = d;
            r.files.add(stem + "_draws.csv", draws_csv(*cs));
            r.chains.emplace(m, std::move(*cs));
        }
        r.report["models"][m] = mj;
    }

    json cmp;
    cmp["pairs"] = json::array();
    for (const auto& m : cfg.models) {
        cmp["means"][m] = r.report["models"][m]["theta"]["mean"];
        cmp["sds"][m] = r.report["models"][m]["theta"]["sd"];
    }
    for (auto a = r.theta.begin(); a != r.theta.end(); ++a)
        for (auto b = std::next(a); b != r.theta.end(); ++b)
            cmp["pairs"].push_back({{"a", a->first},
                                    {"b", b->first},
                                    {"ks", ks_distance(a->second, b->second)},
                                    {"mean_difference", summarize(a->second, 0.95).mean - summarize(b->second, 0.95).mean}});
    r.report["comparison"] = cmp;
    r.files.add("report.json", dump(r.report));
    return r;
}

// ---- named scenarios -------------------------------------------------------

/// Two historical datasets at sigma^2 = 1 with current data ybar = 0, n = 30.
inline StudySet two_dataset_study(int n01, double y01, int n02, double y02) {
    StudySet s;
    s.current = NormalSummary(30, 0.0, 1.0);
    s.historical = {NormalSummary(n01, y01, 1.0), NormalSummary(n02, y02, 1.0)};
    return s;
}

/// Named borrowing scenarios: compatible, shifted, larger_incompatible, larger_compatible.
inline StudySet scenario_study(const std::string& name) {
    if (name == "compatible") return two_dataset_study(30, 0.0, 60, 0.0);
    if (name == "shifted") return two_dataset_study(30, 1.0, 60, 1.0);
    if (name == "larger_incompatible") return two_dataset_study(30, 0.0, 60, -1.0);
    if (name == "larger_compatible") return two_dataset_study(60, 0.0, 30, -1.0);
    throw config_error("unknown scenario '" + name + "' (expected compatible, shifted, larger_incompatible, larger_compatible)");
}

inline ScenarioConfig borrowing_scenario(const std::string& name) {
    ScenarioConfig c;
    c.name = name;
    c.study = scenario_study(name);
    c.models = {"bnpp", "inpp", "a0=0", "a0=1"};
    c.outputs = "out/" + name;
    return c;
}

// ---- equivalence -----------------------------------------------------------

struct EquivalenceSetting {
    std::string label;
    StudySet study;
    PriorSpec prior;  // on a0
};

inline EquivalenceSetting fig_a1_setting() {
    StudySet s;
    s.current = NormalSummary(20, 2.0, 0.5);
    s.historical = {NormalSummary(20, 1.5, 0.3)};
    return {"fig_a1", s, PriorSpec::beta(2, 2)};
}

inline EquivalenceSetting fig_a2_setting() {
    StudySet s;
    s.current = NormalSummary(30, 1.5, 0.5);
    s.historical = {NormalSummary(20, 1.0, 0.5), NormalSummary(30, 2.0, 1.0), NormalSummary(50, 3.0, 1.5)};
    return {"fig_a2", s, PriorSpec::beta(2, 2)};
}

/// Random setting: n, n0k in [5,100], means in [-3,3], variances in [0.1,5], Beta(a,b) with a,b in [0.5,5].
/// K = 0 draws K from {1,2,3,5}.
inline EquivalenceSetting random_setting(std::uint64_t seed, std::size_t K = 0) {
    auto rng = make_rng(seed, 0x9e37);
    auto unif = [&](double a, double b) { return a + (b - a) * uniform_open(rng); };
    auto size = [&] { return 5 + static_cast<int>(std::floor(unif(0.0, 96.0))); };
    if (K == 0) {
        static constexpr std::size_t Ks[] = {1, 2, 3, 5};
        K = Ks[std::min<std::size_t>(3, static_cast<std::size_t>(unif(0.0, 4.0)))];
    }
    StudySet s;
    s.current = NormalSummary(size(), unif(-3, 3), unif(0.1, 5));
    for (std::size_t k = 0; k < K; ++k) s.historical.push_back(NormalSummary(size(), unif(-3, 3), unif(0.1, 5)));
    const double a = unif(0.5, 5), b = unif(0.5, 5);
    return {"random(seed=" + std::to_string(seed) + ",K=" + std::to_string(K) + ")", s, PriorSpec::beta(a, b)};
}

/// "fig_a1", "fig_a2", "random(17)", "random(seed=17)", "random(seed=17,K=4)".
inline EquivalenceSetting equivalence_preset(const std::string& text) {
    const auto t = detail::lower_no_space(text);
    if (t == "fig_a1") return fig_a1_setting();
    if (t == "fig_a2") return fig_a2_setting();
    if (t.rfind("random(", 0) == 0 && t.back() == ')') {
        std::uint64_t seed = 0;
        std::size_t K = 0;
        bool have_seed = false;
        std::stringstream ss(t.substr(7, t.size() - 8));
        std::string item;
        int pos = 0;
        while (std::getline(ss, item, ',')) {
            std::string key, val = item;
            if (auto e = item.find('='); e != std::string::npos) {
                key = item.substr(0, e);
                val = item.substr(e + 1);
            } else key = pos == 0 ? "seed" : "k";
            ++pos;
            try {
                if (key == "seed") {
                    seed = std::stoull(val);
                    have_seed = true;
                } else if (key == "k") {
                    const long k = std::stol(val);
                    if (k < 1) throw config_error("random preset: K must be >= 1");
                    K = static_cast<std::size_t>(k);
                } else throw config_error("random preset: unknown argument '" + key + "'");
            } catch (const std::logic_error&) {
                throw config_error("random preset: cannot read '" + item + "'");
            }
        }
        if (!have_seed) throw config_error("random preset needs a seed, e.g. random(seed=17)");
        return random_setting(seed, K);
    }
    throw config_error("unknown equivalence preset '" + text + "' (expected fig_a1, fig_a2 or random(seed=N[,K=k]))");
}

struct EquivalenceOptions {
    bool mcmc = true;
    std::optional<SamplerConfig> sampler;  // default: 4 x 10,000 for K = 1, 4 x 8,000 otherwise
    std::uint64_t seed = kDefaultSeed;
    double quadrature_tol = 1e-6;
    double mcmc_tol = 0.02;
    QuadratureOptions quadrature;
};

struct EquivalenceResult {
    json report;
    bool pass = true;
    DensityGrid npp;  // NPP (K = 1) or BNPP
    DensityGrid bhm;
    std::map<std::string, ChainSet> chains;
};

inline EquivalenceResult run_equivalence(const EquivalenceSetting& st, const EquivalenceOptions& opt = {}) {
    const auto& s = st.study;
    s.validate();
    const bool multi = s.K() > 1;
    const auto a0prior = BorrowingPrior::on_a0(st.prior);
    const auto induced = BorrowingPrior::induced(multi ? InducedVDensity::multi(st.prior, s.historical)
                                                       : InducedVDensity::single(st.prior, s.historical[0]));
    EquivalenceResult r;
    r.npp = multi ? marginal_theta_bnpp(s, a0prior, opt.quadrature) : marginal_theta_npp_single(s, st.prior, opt.quadrature);
    r.bhm = multi ? marginal_theta_bhm_multi(s, induced, opt.quadrature) : marginal_theta_bhm_single(s, induced, opt.quadrature);
    const double sup = sup_norm_distance(r.npp, r.bhm);
    const bool qpass = sup < opt.quadrature_tol;
    r.report = {{"setting", st.label},
                {"study", s},
                {"prior_a0", st.prior},
                {"seed", opt.seed},
                {"quadrature", {{"left", multi ? "bnpp" : "npp"}, {"right", "bhm"}, {"sup_norm", sup}, {"tolerance", opt.quadrature_tol},
                                {"pass", qpass}}}};
    r.pass = qpass;
    if (opt.mcmc) {
        const SamplerConfig cfg =
            opt.sampler ? *opt.sampler : (multi ? SamplerConfig::fig_a2(opt.seed) : SamplerConfig::fig_a1(opt.seed));
        auto bhm_cs = gibbs_bhm(s, induced, cfg);
        SamplerConfig cfg2 = cfg;
        cfg2.seed = splitmix64(cfg.seed);  // second sampler gets its own stream
        auto npp_cs = multi ? mwg_bnpp(s, a0prior, cfg2) : mwg_inpp(s, {st.prior}, cfg2);
        const double ks_b = ks_statistic(bhm_cs.pooled("theta"), r.npp);
        const double ks_n = ks_statistic(npp_cs.pooled("theta"), r.npp);
        const bool mpass = ks_b < opt.mcmc_tol && ks_n < opt.mcmc_tol;
        r.report["mcmc"] = {{"sampler", cfg},
                            {"bhm_gibbs_ks", ks_b},
                            {multi ? "bnpp_mwg_ks" : "npp_mwg_ks", ks_n},
                            {"tolerance", opt.mcmc_tol},
                            {"pass", mpass},
                            {"bhm_diagnostics", diagnostics_json(bhm_cs)},
                            {"npp_diagnostics", diagnostics_json(npp_cs)}};
        r.pass = r.pass && mpass;
        r.chains.emplace("bhm", std::move(bhm_cs));
        r.chains.emplace(multi ? "bnpp" : "npp", std::move(npp_cs));
    }
    r.report["pass"] = r.pass;
    return r;
}

// ---- binary endpoint pipeline ---------------------------------------------

/// Synthetic response counts at the pediatric and adult trial sizes (92, 548, 577). Not observed data.
inline std::vector<TwoArmBinomialSummary> synthetic_lupus_counts() {
    return {{53, 28, 39, 17}, {274, 158, 274, 120}, {289, 142, 288, 112}};
}

inline StudySet study_from_trials(const std::vector<TwoArmBinomialSummary>& trials, bool continuity_correction = false) {
    if (trials.size() < 2) throw config_error("need a current trial and at least one historical trial");
    StudySet s;
    s.current = to_normal_summary(log_or(trials[0], continuity_correction));
    for (std::size_t j = 1; j < trials.size(); ++j) s.historical.push_back(to_normal_summary(log_or(trials[j], continuity_correction)));
    return s;
}

struct LupusResult {
    json report;
    OutputBundle files;
    StudySet study;
    DensityGrid bnpp, bhm_normal;
    ChainSet bernoulli;
    bool pass = true;
};

/// BNPP, iNPP (K <= 2), no- and full-borrowing posteriors on the log odds ratio scale, the normal BHM
/// with the matching induced prior, and the exact-likelihood BHM by MCMC.
inline LupusResult run_lupus(const std::vector<TwoArmBinomialSummary>& trials, const PriorSpec& prior_a0,
                             const SamplerConfig& cfg, bool synthetic, const QuadratureOptions& o = {}) {
    if (prior_a0.support() != Support::unit) throw config_error("lupus pipeline: the prior must live on a0 in (0,1)");
    cfg.validate();
    LupusResult r;
    r.study = study_from_trials(trials);
    const auto& s = r.study;
    const std::size_t K = s.K();
    const auto bp = BorrowingPrior::on_a0(prior_a0);
    const auto induced = BorrowingPrior::induced(K == 1 ? InducedVDensity::single(prior_a0, s.historical[0])
                                                        : InducedVDensity::multi(prior_a0, s.historical));
    r.bnpp = marginal_theta_bnpp(s, bp, o);
    r.bhm_normal = K == 1 ? marginal_theta_bhm_single(s, induced, o) : marginal_theta_bhm_multi(s, induced, o);
    const auto a0k = marginal_a0k_bnpp(s, bp, o);
    const auto none = fixed_weight_theta(s, std::vector<double>(K, 0.0), o);
    const auto full = fixed_weight_theta(s, std::vector<double>(K, 1.0), o);
    std::optional<DensityGrid> inpp;
    std::vector<DensityGrid> inpp_a0;
    if (K <= 2) {
        inpp = marginal_theta_inpp(s, {prior_a0}, o);
        inpp_a0 = marginal_a0k_inpp(s, {prior_a0}, o);
    }
    r.bernoulli = mh_bernoulli_bhm(trials, induced, cfg);
    const auto bern_theta = r.bernoulli.pooled("theta");

    const double sup = sup_norm_distance(r.bnpp, r.bhm_normal);
    const double ks = ks_statistic(bern_theta, r.bnpp);
    r.pass = sup < 1e-6 && ks < 0.05;

    json tr = json::array();
    for (std::size_t j = 0; j < trials.size(); ++j) {
        const auto lo = log_or(trials[j]);
        tr.push_back({{"role", j == 0 ? "current" : "historical_" + std::to_string(j)},
                      {"counts", trials[j]},
                      {"n", trials[j].n_t + trials[j].n_c},
                      {"log_or", lo}});
    }
    r.report = {{"counts_are_synthetic", synthetic}, {"trials", tr}, {"prior_a0", prior_a0}, {"seed", cfg.seed}};
    r.report["posterior"]["bnpp"] = detail::grid_summary_json(r.bnpp);
    r.report["posterior"]["a0=0"] = detail::grid_summary_json(none);
    r.report["posterior"]["a0=1"] = detail::grid_summary_json(full);
    r.report["posterior"]["bhm_normal"] = detail::grid_summary_json(r.bhm_normal);
    r.report["posterior"]["bhm_bernoulli"] = detail::draws_summary_json(bern_theta);
    if (inpp) r.report["posterior"]["inpp"] = detail::grid_summary_json(*inpp);
    for (std::size_t k = 0; k < K; ++k) {
        r.report["a0k"]["bnpp"].push_back(detail::grid_summary_json(a0k[k]));
        if (inpp) r.report["a0k"]["inpp"].push_back(detail::grid_summary_json(inpp_a0[k]));
    }
    r.report["checks"] = {{"bnpp_vs_normal_bhm_sup_norm", sup},
                          {"bnpp_vs_bernoulli_bhm_ks", ks},
                          {"sup_norm_tolerance", 1e-6},
                          {"ks_tolerance", 0.05},
                          {"pass", r.pass}};
    r.report["bernoulli_diagnostics"] = diagnostics_json(r.bernoulli);

    std::vector<std::string> h{"theta", "bnpp", "bhm_normal", "a0_0", "a0_1"};
    std::vector<std::vector<double>> c{r.bnpp.points, r.bnpp.density, r.bhm_normal.density, none.density, full.density};
    if (inpp) {
        h.push_back("inpp");
        c.push_back(inpp->density);
    }
    r.files.add("theta.csv", columns_csv(h, c));
    std::vector<std::string> ha{"a0"};
    std::vector<std::vector<double>> ca{a0k[0].points};
    for (std::size_t k = 0; k < K; ++k) {
        ha.push_back("bnpp_" + std::to_string(k + 1));
        ca.push_back(a0k[k].density);
    }
    for (std::size_t k = 0; k < inpp_a0.size(); ++k) {
        ha.push_back("inpp_" + std::to_string(k + 1));
        ca.push_back(inpp_a0[k].density);
    }
    r.files.add("a0k.csv", columns_csv(ha, ca));
    r.files.add("data_densities.csv", detail::data_densities_csv(s, r.bnpp.points));
    r.files.add("bernoulli_draws.csv", draws_csv(r.bernoulli));
    r.files.add("report.json", dump(r.report));
    return r;
}

// ---- figure data -----------------------------------------------------------

struct FigureOptions {
    std::uint64_t seed = kDefaultSeed;
    std::size_t grid_points = 1025;  // theta grids
    bool mcmc = true;                // a1, a2, a5 include sampler histograms
};

struct FigureResult {
    json manifest;
    OutputBundle files;
};

inline const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig1", "fig2", "fig3", "fig4", "fig5", "a1", "a2", "a5"};
    return ids;
}

namespace detail {

inline std::string prior_tag(const PriorSpec& p) {
    std::string t;
    for (char c : p.to_string()) {
        if (std::isalnum(static_cast<unsigned char>(c))) t += c;
        else if (c == '.') t += 'p';
        else if (!t.empty() && t.back() != '_') t += '_';
    }
    while (!t.empty() && t.back() == '_') t.pop_back();
    return t;
}

// induced v densities for beta priors on a0 with n0/sigma0^2 = 1, plus the best IG
inline void figure_induced_v(FigureResult& out) {
    const NormalSummary h(1, 0.0, 1.0);
    const std::vector<PriorSpec> panels{PriorSpec::beta(1, 1), PriorSpec::beta(0.5, 0.5), PriorSpec::beta(2, 10),
                                        PriorSpec::beta(10, 2)};
    for (const auto& p : panels) {
        const auto ind = induce_prior_v_single(p, h, 1e14);
        json pj{{"prior_a0", p}, {"historical", h}};
        IgFit fit;
        try {
            fit = fit_ig_kl(ind.density);
            pj["fit_method"] = "forward_kl";
        } catch (const numerical_error& e) {
            const auto exact = InducedVDensity::single(p, h);
            fit = fit_ig_reverse_kl([&](double v) { return exact.log_density(v); });
            pj["fit_method"] = "reverse_kl";
            pj["fit_note"] = std::string("forward divergence is infinite: ") + e.what();
        }
        pj["fit"] = fit;
        std::vector<double> ig;
        for (double v : ind.density.points) ig.push_back(std::exp(inverse_gamma_log_pdf(v, fit.c, fit.d)));
        const auto name = "fig1/" + prior_tag(p) + ".csv";
        out.files.add(name, columns_csv({"v", "induced", "fitted_ig"}, {ind.density.points, ind.density.density, ig}));
        pj["file"] = name;
        out.manifest["panels"].push_back(pj);
    }
}

// induced a0 densities for IG priors on v, plus the beta MLE from pushed-forward samples
inline void figure_induced_a0(FigureResult& out, std::uint64_t seed) {
    const NormalSummary h(1, 0.0, 1.0);
    const std::vector<PriorSpec> panels{PriorSpec::inverse_gamma(3, 10), PriorSpec::inverse_gamma(3, 1),
                                        PriorSpec::inverse_gamma(1, 0.1), PriorSpec::inverse_gamma(1, 0.01)};
    for (std::size_t i = 0; i < panels.size(); ++i) {
        const auto& p = panels[i];
        const auto ind = induce_prior_a0_single(p, h);
        auto rng = make_rng(seed, 100 + i);
        std::vector<double> a;
        a.reserve(100000);
        for (int t = 0; t < 100000; ++t) a.push_back(f_single(p.sample(rng), h));
        const auto fit = fit_beta_mle(a);
        std::vector<double> bd;
        const PriorSpec b = PriorSpec::beta(fit.alpha, fit.beta);
        for (double x : ind.density.points) bd.push_back(b.density(x));
        const auto name = "fig2/" + prior_tag(p) + ".csv";
        out.files.add(name, columns_csv({"a0", "induced", "fitted_beta"}, {ind.density.points, ind.density.density, bd}));
        out.manifest["panels"].push_back({{"prior_v", p}, {"historical", h}, {"fit", fit}, {"samples", a.size()}, {"file", name}});
    }
}

inline void figure_borrowing(FigureResult& out, const std::string& fig, const std::vector<std::string>& rows,
                             std::size_t points) {
    for (const auto& row : rows) {
        auto cfg = borrowing_scenario(row);
        cfg.grid.theta_points = points;
        const auto r = run_scenario(cfg);
        const auto& th = r.theta;
        out.files.add(fig + "/" + row + "_data.csv", data_densities_csv(cfg.study, th.at("bnpp").points));
        out.files.add(fig + "/" + row + "_theta.csv",
                      columns_csv({"theta", "bnpp", "inpp", "a0_0", "a0_1"},
                                  {th.at("bnpp").points, th.at("bnpp").density, th.at("inpp").density, th.at("a0=0").density,
                                   th.at("a0=1").density}));
        const auto& b = r.a0k.at("bnpp");
        const auto& n = r.a0k.at("inpp");
        out.files.add(fig + "/" + row + "_a0k.csv",
                      columns_csv({"a0", "bnpp_1", "bnpp_2", "inpp_1", "inpp_2"},
                                  {b[0].points, b[0].density, b[1].density, n[0].density, n[1].density}));
        out.manifest["panels"].push_back({{"row", row}, {"study", cfg.study}, {"summary", r.report["models"]}});
    }
}

inline void figure_equivalence(FigureResult& out, const std::string& fig, const EquivalenceSetting& st, const FigureOptions& fo) {
    EquivalenceOptions eo;
    eo.seed = fo.seed;
    eo.mcmc = fo.mcmc;
    eo.quadrature.theta_points = fo.grid_points;
    const auto r = run_equivalence(st, eo);
    const bool multi = st.study.K() > 1;
    const std::string left = multi ? "bnpp" : "npp";
    out.files.add(fig + "/curves.csv", columns_csv({"theta", left, "bhm"}, {r.npp.points, r.npp.density, r.bhm.density}));
    if (fo.mcmc) {
        const double lo = grid_quantile(r.npp, 1e-4), hi = grid_quantile(r.npp, 1.0 - 1e-4);
        out.files.add(fig + "/histograms.csv", histogram_csv({left + "_mcmc", "bhm_mcmc"},
                                                             {r.chains.at(left).pooled("theta"), r.chains.at("bhm").pooled("theta")},
                                                             lo, hi, 80));
    }
    out.manifest["report"] = r.report;
}

}  // namespace detail

inline FigureResult emit_figure_data(const std::string& fig, const FigureOptions& fo = {}) {
    if (std::find(figure_ids().begin(), figure_ids().end(), fig) == figure_ids().end())
        throw config_error("unknown figure id '" + fig + "' (expected fig1, fig2, fig3, fig4, fig5, a1, a2 or a5)");
    FigureResult out;
    out.manifest = {{"figure", fig}, {"seed", fo.seed}, {"panels", json::array()}};
    if (fig == "fig1") detail::figure_induced_v(out);
    else if (fig == "fig2") detail::figure_induced_a0(out, fo.seed);
    else if (fig == "fig3") detail::figure_borrowing(out, fig, {"compatible", "shifted"}, fo.grid_points);
    else if (fig == "fig4") detail::figure_borrowing(out, fig, {"larger_incompatible", "larger_compatible"}, fo.grid_points);
    else if (fig == "a1") detail::figure_equivalence(out, fig, fig_a1_setting(), fo);
    else if (fig == "a2") detail::figure_equivalence(out, fig, fig_a2_setting(), fo);
    else {
        QuadratureOptions o;
        o.theta_points = fo.grid_points;
        auto r = run_lupus(synthetic_lupus_counts(), PriorSpec::uniform(), SamplerConfig{4, 20000, 10000, fo.seed}, true, o);
        out.manifest["report"] = r.report;
        if (fig == "fig5") {
            for (const char* f : {"theta.csv", "a0k.csv", "data_densities.csv"})
                for (const auto& [name, body] : r.files.files)
                    if (name == f) out.files.add("fig5/" + name, body);
        } else {
            const double lo = grid_quantile(r.bnpp, 1e-4), hi = grid_quantile(r.bnpp, 1.0 - 1e-4);
            auto bcs = mwg_bnpp(r.study, BorrowingPrior::on_a0(PriorSpec::uniform()), SamplerConfig{4, 20000, 10000, splitmix64(fo.seed)});
            out.files.add("a5/curves.csv", columns_csv({"theta", "bnpp", "bhm_normal"}, {r.bnpp.points, r.bnpp.density, r.bhm_normal.density}));
            out.files.add("a5/histograms.csv", detail::histogram_csv({"bnpp_mcmc", "bhm_bernoulli"},
                                                                     {bcs.pooled("theta"), r.bernoulli.pooled("theta")}, lo, hi, 80));
        }
    }
    out.files.add(fig + "/manifest.json", dump(out.manifest));
    return out;
}

}  // namespace npp
