#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "npp/config.hpp"
#include "npp/npp.hpp"

namespace fs = std::filesystem;
using namespace npp;

namespace {

struct Globals {
    std::uint64_t seed = kDefaultSeed;
    bool seed_set = false;
    std::string out_dir = ".";
    bool out_dir_set = false;
    std::size_t grid_points = 0;  // 0: command default
};

std::vector<double> split_numbers(const std::string& text, std::size_t expect, const std::string& what) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw config_error(what + ": cannot read number '" + item + "' in '" + text + "'");
        }
    }
    if (v.size() != expect)
        throw config_error(what + ": expected " + std::to_string(expect) + " comma-separated values, got '" + text + "'");
    return v;
}

int as_count(double x, const std::string& what) {
    if (x != std::floor(x) || x < 0 || x > 1e9) throw config_error(what + ": counts must be non-negative integers");
    return static_cast<int>(x);
}

NormalSummary parse_summary(const std::string& text) {
    const auto v = split_numbers(text, 3, "dataset summary (n,ybar,sigma2)");
    return NormalSummary(as_count(v[0], "n"), v[1], v[2]);
}

TwoArmBinomialSummary parse_trial(const std::string& text) {
    const auto v = split_numbers(text, 4, "trial (n_t,y_t,n_c,y_c)");
    return {as_count(v[0], "n_t"), as_count(v[1], "y_t"), as_count(v[2], "n_c"), as_count(v[3], "y_c")};
}

struct StudyFlags {
    std::string current;
    std::vector<std::string> hist;
    std::string file;

    void add(CLI::App* app, bool need_current = true) {
        if (need_current) app->add_option("--current", current, "current data summary n,ybar,sigma2");
        app->add_option("--hist", hist, "historical data summary n,ybar,sigma2 (repeat per dataset)");
        app->add_option("--study", file, "JSON or YAML file with 'current' and 'historical'");
    }

    StudySet study() const {
        if (!file.empty()) {
            if (!current.empty() || !hist.empty()) throw config_error("give either --study or --current/--hist, not both");
            return load_config_file(file).get<StudySet>();
        }
        if (current.empty()) throw config_error("the current dataset is required (--current n,ybar,sigma2 or --study)");
        if (hist.empty()) throw config_error("at least one --hist n,ybar,sigma2 is required");
        StudySet s;
        s.current = parse_summary(current);
        for (const auto& h : hist) s.historical.push_back(parse_summary(h));
        s.validate();
        return s;
    }

    HistoricalList historical() const {
        if (!file.empty()) {
            const auto j = load_config_file(file);
            HistoricalList h;
            for (const auto& x : j.is_array() ? j : j.at("historical")) h.push_back(x.get<NormalSummary>());
            return h;
        }
        if (hist.empty()) throw config_error("at least one --hist n,ybar,sigma2 is required");
        HistoricalList h;
        for (const auto& x : hist) h.push_back(parse_summary(x));
        return h;
    }
};

struct SamplerFlags {
    int chains = 4, iters = 10000, burnin = 5000;
    double scale = 1.0, target = 0.44;

    void add(CLI::App* app) {
        app->add_option("--chains", chains, "number of chains")->capture_default_str();
        app->add_option("--iters", iters, "iterations per chain, burn-in included")->capture_default_str();
        app->add_option("--burnin", burnin, "burn-in iterations")->capture_default_str();
        app->add_option("--proposal-scale", scale, "initial random-walk scale")->capture_default_str();
        app->add_option("--target-accept", target, "acceptance rate targeted during burn-in")->capture_default_str();
    }

    SamplerConfig config(std::uint64_t seed) const {
        SamplerConfig c{chains, iters, burnin, seed, scale, target};
        c.validate();
        return c;
    }
};

fs::path out_path(const Globals& g, const std::string& name) {
    fs::path p(name);
    return p.is_absolute() ? p : fs::path(g.out_dir) / p;
}

void write_file(const fs::path& p, const std::string& body) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw config_error("cannot write '" + p.string() + "'");
    out << body;
}

std::vector<PriorSpec> parse_priors(const std::vector<std::string>& texts) {
    std::vector<PriorSpec> p;
    for (const auto& t : texts) {
        p.push_back(PriorSpec::parse(t));
        p.back().validate();
    }
    return p;
}

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

// ---- subcommands ---------------------------------------------------------

struct TransformCmd {
    std::string direction = "a0-to-v";
    bool multi = false;
    StudyFlags data;
    std::string prior;
    double vmax = kDefaultVmax;
    std::string output = "induced_prior.csv";

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("transform", "induce a prior on v from one on a0, or the reverse");
        c->add_option("--direction", direction, "a0-to-v or v-to-a0")->check(CLI::IsMember({"a0-to-v", "v-to-a0"}))->capture_default_str();
        c->add_flag("--multi", multi, "use the several-dataset map (data dependent)");
        data.add(c, false);
        c->add_option("--prior", prior, "source prior, e.g. beta(2,2) or ig(3,1)")->required();
        c->add_option("--vmax", vmax, "upper end of the v grid")->capture_default_str();
        c->add_option("--output", output, "grid CSV")->capture_default_str();
    }

    void run(const Globals& g) const {
        const auto p = PriorSpec::parse(prior);
        p.validate();
        const auto hist = data.historical();
        const std::size_t pts = g.grid_points ? g.grid_points : kInducedGridPoints;
        InducedPrior ind;
        if (direction == "a0-to-v") {
            if (multi) ind = induce_prior_v_multi(p, hist, vmax, pts);
            else {
                if (hist.size() != 1) throw config_error("single-dataset transform takes exactly one --hist (or pass --multi)");
                ind = induce_prior_v_single(p, hist[0], vmax, pts);
            }
        } else {
            if (multi) throw config_error("v-to-a0 is defined for one historical dataset only");
            if (hist.size() != 1) throw config_error("v-to-a0 takes exactly one --hist");
            ind = induce_prior_a0_single(p, hist[0], pts);
        }
        const auto path = out_path(g, output);
        const bool on_v = ind.side == InducedSide::on_v;
        write_file(path, grid_csv(ind.density, on_v ? "v" : "a0", "density"));
        const auto sm = summarize(ind.density, 0.95);
        print({{"side", on_v ? "v" : "a0"},
               {"source", ind.source},
               {"data_dependent", ind.data_dependent},
               {"points", ind.density.size()},
               {"range", {ind.density.points.front(), ind.density.points.back()}},
               {"median", grid_quantile(ind.density, 0.5)},
               {"summary", sm},
               {"file", path.string()}});
    }
};

struct PosteriorCmd {
    std::string model;
    StudyFlags data;
    std::vector<std::string> priors;
    std::string theta_csv, a0_prefix, summary_json;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("posterior", "marginal posteriors by quadrature");
        c->add_option("--model", model, "npp, inpp, bnpp or bhm")->required()->check(CLI::IsMember({"npp", "inpp", "bnpp", "bhm"}));
        data.add(c);
        c->add_option("--prior", priors, "prior (repeat per dataset for inpp); default uniform on a0");
        c->add_option("--theta-csv", theta_csv, "theta grid CSV (default <model>_theta.csv)");
        c->add_option("--a0-prefix", a0_prefix, "prefix for a0k grid CSVs (default <model>_a0_)");
        c->add_option("--summary-json", summary_json, "summary JSON (default <model>_summary.json)");
    }

    void run(const Globals& g) const {
        const auto s = data.study();
        auto pr = priors.empty() ? std::vector<PriorSpec>{PriorSpec::uniform()} : parse_priors(priors);
        if (model != "inpp" && pr.size() != 1) throw config_error(model + " takes a single --prior");
        QuadratureOptions o;
        if (g.grid_points) o.theta_points = o.a0_points = g.grid_points;
        DensityGrid th;
        std::vector<DensityGrid> a0;
        if (model == "npp") {
            if (s.K() != 1) throw config_error("npp needs exactly one historical dataset; use inpp or bnpp");
            th = marginal_theta_npp_single(s, pr[0], o);
            a0.push_back(marginal_a0_npp_single(s, pr[0], o));
        } else if (model == "inpp") {
            th = marginal_theta_inpp(s, pr, o);
            a0 = marginal_a0k_inpp(s, pr, o);
        } else if (model == "bnpp") {
            const auto bp = BorrowingPrior::from(pr[0]);
            th = marginal_theta_bnpp(s, bp, o);
            a0 = marginal_a0k_bnpp(s, bp, o);
        } else {
            const auto bp = BorrowingPrior::from(pr[0]);
            th = s.K() == 1 ? marginal_theta_bhm_single(s, bp, o) : marginal_theta_bhm_multi(s, bp, o);
        }
        json out{{"model", model}, {"study", s}, {"prior", model == "inpp" ? json(pr) : json(pr[0])}};
        out["theta"] = summarize(th, 0.95);
        const auto tp = out_path(g, theta_csv.empty() ? model + "_theta.csv" : theta_csv);
        write_file(tp, grid_csv(th, "theta", "density"));
        out["files"].push_back(tp.string());
        for (std::size_t k = 0; k < a0.size(); ++k) {
            out["a0k"].push_back(summarize(a0[k], 0.95));
            const auto ap = out_path(g, (a0_prefix.empty() ? model + "_a0_" : a0_prefix) + std::to_string(k + 1) + ".csv");
            write_file(ap, grid_csv(a0[k], "a0", "density"));
            out["files"].push_back(ap.string());
        }
        const auto sp = out_path(g, summary_json.empty() ? model + "_summary.json" : summary_json);
        out["files"].push_back(sp.string());
        write_file(sp, dump(out));
        print(out);
    }
};

struct SampleCmd {
    std::string model;
    StudyFlags data;
    std::vector<std::string> priors;
    std::vector<std::string> trials;
    bool prior_only = false;
    SamplerFlags sf;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("sample", "MCMC for npp, inpp, bnpp, bhm or the binomial hierarchical model");
        c->add_option("--model", model, "npp, inpp, bnpp, bhm or bernoulli-bhm")
            ->required()
            ->check(CLI::IsMember({"npp", "inpp", "bnpp", "bhm", "bernoulli-bhm"}));
        data.add(c);
        c->add_option("--prior", priors, "prior (repeat per dataset for inpp); default uniform on a0");
        c->add_option("--trial", trials, "n_t,y_t,n_c,y_c for bernoulli-bhm; first is the current trial");
        c->add_flag("--prior-only", prior_only, "bernoulli-bhm without the likelihood");
        sf.add(c);
    }

    void run(const Globals& g) const {
        const auto cfg = sf.config(g.seed);
        auto pr = priors.empty() ? std::vector<PriorSpec>{PriorSpec::uniform()} : parse_priors(priors);
        if (model != "inpp" && pr.size() != 1) throw config_error(model + " takes a single --prior");
        ChainSet cs;
        if (model == "bernoulli-bhm") {
            std::vector<TwoArmBinomialSummary> tr;
            for (const auto& t : trials) tr.push_back(parse_trial(t));
            if (tr.size() < 2) throw config_error("bernoulli-bhm needs at least two --trial entries");
            auto bp = BorrowingPrior::from(pr[0]);
            if (bp.scale() == BorrowingPrior::Scale::a0) {
                const auto s = study_from_trials(tr);
                bp = BorrowingPrior::induced(s.K() == 1 ? InducedVDensity::single(pr[0], s.historical[0])
                                                        : InducedVDensity::multi(pr[0], s.historical));
            }
            cs = mh_bernoulli_bhm(tr, bp, cfg, prior_only);
        } else {
            if (!trials.empty() || prior_only) throw config_error("--trial and --prior-only apply to bernoulli-bhm only");
            const auto s = data.study();
            if (model == "npp") {
                if (s.K() != 1) throw config_error("npp needs exactly one historical dataset");
                cs = mwg_inpp(s, pr, cfg);
            } else if (model == "inpp") cs = mwg_inpp(s, pr, cfg);
            else if (model == "bnpp") cs = mwg_bnpp(s, BorrowingPrior::from(pr[0]), cfg);
            else cs = gibbs_bhm(s, BorrowingPrior::from(pr[0]), cfg);
        }
        const auto dp = out_path(g, model + "_draws.csv");
        const auto jp = out_path(g, model + "_diagnostics.json");
        write_file(dp, draws_csv(cs));
        json d = diagnostics_json(cs);
        d["model"] = model;
        d["sampler"] = cfg;
        write_file(jp, dump(d));
        d["files"] = {dp.string(), jp.string()};
        print(d);
    }
};

struct FitCmd {
    std::string input, family, kind, parameter, output = "fit";
    bool reverse = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("fit", "best inverse-gamma (KL) or beta (maximum likelihood) approximation");
        c->add_option("--input", input, "grid CSV (point,density) or sample CSV")->required();
        c->add_option("--family", family, "inverse-gamma or beta")->required()->check(CLI::IsMember({"inverse-gamma", "ig", "beta"}));
        c->add_option("--kind", kind, "grid or samples (default: grid for inverse-gamma, samples for beta)")
            ->check(CLI::IsMember({"grid", "samples"}));
        c->add_option("--parameter", parameter, "parameter to take from a long-format draws CSV");
        c->add_flag("--reverse-kl", reverse, "minimize KL(IG || target) instead (for targets with infinite E[1/v])");
        c->add_option("--output", output, "output stem: <stem>.json and <stem>_overlay.csv")->capture_default_str();
    }

    std::vector<double> samples() const {
        std::ifstream in(input);
        if (!in) throw config_error("cannot open '" + input + "'");
        std::string header;
        std::getline(in, header);
        if (header.rfind("chain,iter,parameter,value", 0) == 0) {
            if (parameter.empty()) throw config_error("long-format draws need --parameter");
            std::vector<double> x;
            std::string line;
            while (std::getline(in, line)) {
                std::stringstream ss(line);
                std::string c, i, p, v;
                std::getline(ss, c, ',');
                std::getline(ss, i, ',');
                std::getline(ss, p, ',');
                std::getline(ss, v, ',');
                if (p == parameter) x.push_back(std::stod(v));
            }
            if (x.empty()) throw config_error("no draws for parameter '" + parameter + "'");
            return x;
        }
        return read_csv_columns(input).at(0);
    }

    void run(const Globals& g) const {
        const bool ig = family != "beta";
        const std::string k = kind.empty() ? (ig ? "grid" : "samples") : kind;
        json out{{"input", input}, {"kind", k}};
        std::vector<double> pts, target, fitted;
        if (ig) {
            if (k != "grid") throw config_error("the inverse-gamma fit takes a density grid (--kind grid)");
            const auto grid = read_grid_csv(input);
            IgFit f;
            if (reverse) {
                f = fit_ig_reverse_kl([&](double v) {
                    const double d = grid_density_at(grid, v);
                    return d > 0.0 ? std::log(d) : detail::neg_inf;
                });
                out["method"] = "reverse_kl";
            } else {
                f = fit_ig_kl(grid);
                out["method"] = "forward_kl";
            }
            out["fit"] = f;
            pts = grid.points;
            target = grid.density;
            for (double v : pts) fitted.push_back(std::exp(inverse_gamma_log_pdf(v, f.c, f.d)));
        } else {
            std::vector<double> x;
            if (k == "grid") {
                // draw from the tabulated density by inverting its CDF
                const auto grid = read_grid_csv(input);
                const auto cdf = grid_cdf(grid);
                auto rng = make_rng(g.seed, 7);
                for (int i = 0; i < 100000; ++i) x.push_back(grid_quantile(grid, cdf, uniform_open(rng)));
                pts = grid.points;
                target = grid.density;
            } else {
                x = samples();
                const std::size_t bins = 100;
                target = detail::histogram_density(x, 0.0, 1.0, bins);
                for (std::size_t b = 0; b < bins; ++b) pts.push_back((b + 0.5) / bins);
            }
            const auto f = fit_beta_mle(x);
            out["method"] = "maximum_likelihood";
            out["fit"] = f;
            out["samples"] = x.size();
            const auto b = PriorSpec::beta(f.alpha, f.beta);
            for (double a : pts) fitted.push_back(b.density(a));
        }
        const auto jp = out_path(g, output + ".json");
        const auto cp = out_path(g, output + "_overlay.csv");
        write_file(cp, columns_csv({"point", "target", "fitted"}, {pts, target, fitted}));
        out["files"] = {jp.string(), cp.string()};
        write_file(jp, dump(out));
        print(out);
    }
};

struct BinaryCmd {
    std::vector<std::string> trials;
    bool correction = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("binary", "log odds ratio normal approximation of two-arm binomial trials");
        c->add_option("--trial", trials, "n_t,y_t,n_c,y_c (repeat; the first is the current trial)")->required();
        c->add_flag("--continuity-correction", correction, "add 0.5 to every cell (needed when a cell is zero)");
    }

    void run(const Globals& g) const {
        json approx = json::array();
        std::vector<TwoArmBinomialSummary> tr;
        for (const auto& t : trials) {
            tr.push_back(parse_trial(t));
            const auto a = log_or(tr.back(), correction);
            approx.push_back({{"counts", tr.back()}, {"log_or", a}, {"summary", to_normal_summary(a)}});
        }
        json out{{"trials", approx}, {"continuity_correction", correction}};
        const auto ap = out_path(g, "log_or.json");
        write_file(ap, dump(approx));
        out["files"].push_back(ap.string());
        if (tr.size() >= 2) {
            const auto s = study_from_trials(tr, correction);
            const auto sp = out_path(g, "study.json");
            write_file(sp, dump(json(s)));
            out["study"] = s;
            out["files"].push_back(sp.string());
        }
        print(out);
    }
};

struct ScenarioCmd {
    std::string file;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("scenario", "run a YAML/JSON scenario of models on one study");
        c->add_option("config", file, "scenario file")->required();
    }

    void run(const Globals& g) const {
        auto j = load_config_file(file);
        if (g.seed_set) {
            j["seed"] = g.seed;
            if (j.contains("sampler") && j["sampler"].is_object()) j["sampler"]["seed"] = g.seed;
        }
        if (g.out_dir_set) j["outputs"] = g.out_dir;
        if (g.grid_points) j["grid"]["theta_points"] = g.grid_points;
        const auto cfg = parse_scenario(j);
        auto r = run_scenario(cfg);
        const auto written = r.files.write(cfg.outputs);
        json out{{"name", cfg.name}, {"comparison", r.report["comparison"]}, {"files", written}};
        for (const auto& [m, mj] : r.report["models"].items()) out["models"][m] = {{"theta", mj["theta"]}, {"engine", mj["engine"]}};
        print(out);
    }
};

struct EquivalenceCmd {
    std::string preset = "fig_a1";
    bool no_mcmc = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("equivalence", "NPP/BNPP versus BHM posterior comparison");
        c->add_option("--preset", preset, "fig_a1, fig_a2 or random(seed=N[,K=k])")->capture_default_str();
        c->add_flag("--no-mcmc", no_mcmc, "quadrature comparison only");
    }

    void run(const Globals& g) const {
        EquivalenceOptions o;
        o.seed = g.seed;
        o.mcmc = !no_mcmc;
        if (g.grid_points) o.quadrature.theta_points = g.grid_points;
        const auto st = equivalence_preset(preset);
        auto r = run_equivalence(st, o);
        std::string stem;
        for (char c : st.label) stem += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
        while (!stem.empty() && stem.back() == '_') stem.pop_back();
        const auto p = out_path(g, "equivalence_" + stem + ".json");
        write_file(p, dump(r.report));
        const auto cp = out_path(g, "equivalence_" + stem + ".csv");
        write_file(cp, columns_csv({"theta", st.study.K() > 1 ? "bnpp" : "npp", "bhm"}, {r.npp.points, r.npp.density, r.bhm.density}));
        json brief = r.report;
        brief.erase("study");
        if (brief.contains("mcmc")) {
            brief["mcmc"].erase("bhm_diagnostics");
            brief["mcmc"].erase("npp_diagnostics");
        }
        brief["files"] = {p.string(), cp.string()};
        print(brief);
        if (!r.pass) throw tolerance_error("equivalence check failed for " + st.label);
    }
};

struct FigureCmd {
    std::string figure;
    bool no_mcmc = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("figure-data", "CSV plot data for one figure (or all)");
        c->add_option("--figure", figure, "fig1, fig2, fig3, fig4, fig5, a1, a2, a5 or all")->required();
        c->add_flag("--no-mcmc", no_mcmc, "skip sampler histograms in a1 and a2");
    }

    void run(const Globals& g) const {
        std::vector<std::string> figs = figure == "all" ? figure_ids() : std::vector<std::string>{figure};
        FigureOptions o;
        o.seed = g.seed;
        o.mcmc = !no_mcmc;
        if (g.grid_points) o.grid_points = g.grid_points;
        std::vector<FigureResult> done;
        for (const auto& f : figs) done.push_back(emit_figure_data(f, o));
        json out{{"files", json::array()}};
        for (const auto& r : done)
            for (const auto& p : r.files.write(g.out_dir)) out["files"].push_back(p);
        print(out);
    }
};

struct LupusCmd {
    std::vector<std::string> trials;
    std::string prior = "uniform";
    SamplerFlags sf{4, 20000, 10000};
    bool check = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("lupus-demo", "binary-endpoint borrowing pipeline (bundled synthetic counts by default)");
        c->add_option("--trial", trials, "n_t,y_t,n_c,y_c (repeat; the first is the current trial)");
        c->add_option("--prior", prior, "prior on a0")->capture_default_str();
        c->add_flag("--check", check, "exit with status 4 when the equivalence checks miss their tolerances");
        sf.add(c);
    }

    void run(const Globals& g) const {
        std::vector<TwoArmBinomialSummary> tr;
        for (const auto& t : trials) tr.push_back(parse_trial(t));
        const bool synthetic = tr.empty();
        if (synthetic) tr = synthetic_lupus_counts();
        const auto p = PriorSpec::parse(prior);
        p.validate();
        QuadratureOptions o;
        if (g.grid_points) o.theta_points = o.a0_points = g.grid_points;
        auto r = run_lupus(tr, p, sf.config(g.seed), synthetic, o);
        const auto written = r.files.write(fs::path(g.out_dir) / "lupus");
        json out{{"counts_are_synthetic", synthetic}, {"posterior", r.report["posterior"]}, {"a0k", r.report["a0k"]},
                 {"checks", r.report["checks"]}, {"files", written}};
        print(out);
        if (check && !r.pass) throw tolerance_error("lupus pipeline checks failed");
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Normalized power prior and hierarchical model borrowing toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "top-level random seed")->capture_default_str()->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str()->each([&](const std::string&) { g.out_dir_set = true; });
    app.add_option("--grid-points", g.grid_points, "grid resolution override")->check(CLI::Range(17, 1 << 20));

    TransformCmd transform;
    PosteriorCmd posterior;
    SampleCmd sample;
    FitCmd fit;
    BinaryCmd binary;
    ScenarioCmd scenario;
    EquivalenceCmd equivalence;
    FigureCmd figure;
    LupusCmd lupus;
    transform.add(app);
    posterior.add(app);
    sample.add(app);
    fit.add(app);
    binary.add(app);
    scenario.add(app);
    equivalence.add(app);
    figure.add(app);
    lupus.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "transform") transform.run(g);
        else if (name == "posterior") posterior.run(g);
        else if (name == "sample") sample.run(g);
        else if (name == "fit") fit.run(g);
        else if (name == "binary") binary.run(g);
        else if (name == "scenario") scenario.run(g);
        else if (name == "equivalence") equivalence.run(g);
        else if (name == "figure-data") figure.run(g);
        else lupus.run(g);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const tolerance_error& e) {
        std::cerr << "tolerance failure: " << e.what() << "\n";
        return 4;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
