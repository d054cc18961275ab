#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "npp/approx.hpp"
#include "npp/core.hpp"
#include "npp/fitting.hpp"
#include "npp/grid.hpp"
#include "npp/mcmc.hpp"
#include "npp/prior.hpp"

namespace npp {

using json = nlohmann::json;

/// %.17g, so every double survives a text round trip.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---- CSV -------------------------------------------------------------------

/// Columns sharing the first column's points: header names then one vector per column.
inline std::string columns_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& cols) {
    if (header.size() != cols.size() || cols.empty()) throw config_error("columns_csv: header and column count differ");
    std::ostringstream os;
    for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
    os << "\n";
    for (std::size_t i = 0; i < cols[0].size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) os << (j ? "," : "") << fmt17(cols[j].at(i));
        os << "\n";
    }
    return os.str();
}

inline std::string grid_csv(const DensityGrid& g, const std::string& x = "point", const std::string& y = "density") {
    return columns_csv({x, y}, {g.points, g.density});
}

/// Long format: chain, iter, parameter, value. `iter` counts from the end of burn-in.
inline std::string draws_csv(const ChainSet& cs) {
    std::ostringstream os;
    os << "chain,iter,parameter,value\n";
    for (std::size_t p = 0; p < cs.names.size(); ++p)
        for (std::size_t c = 0; c < cs.draws[p].size(); ++c)
            for (std::size_t i = 0; i < cs.draws[p][c].size(); ++i)
                os << c << "," << i << "," << cs.names[p] << "," << fmt17(cs.draws[p][c][i]) << "\n";
    return os.str();
}

/// Reads numeric columns from a CSV (header optional). Returns one vector per column.
inline std::vector<std::vector<double>> read_csv_columns(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open '" + path + "'");
    std::vector<std::vector<double>> cols;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw config_error("non-numeric row in '" + path + "': " + line);
        }
        first = false;
        if (cols.empty()) cols.resize(row.size());
        if (row.size() != cols.size()) throw config_error("ragged row in '" + path + "'");
        for (std::size_t j = 0; j < row.size(); ++j) cols[j].push_back(row[j]);
    }
    if (cols.empty()) throw config_error("'" + path + "' holds no data");
    return cols;
}

inline DensityGrid read_grid_csv(const std::string& path) {
    auto cols = read_csv_columns(path);
    if (cols.size() < 2) throw config_error("'" + path + "' needs two columns (point, density)");
    DensityGrid g;
    g.points = cols[0];
    g.density = cols[1];
    return normalize(std::move(g));
}

// ---- files -----------------------------------------------------------------

/// Files to be written together once every computation has succeeded.
struct OutputBundle {
    std::vector<std::pair<std::string, std::string>> files;  // relative path, contents

    void add(std::string name, std::string contents) { files.emplace_back(std::move(name), std::move(contents)); }

    std::vector<std::string> write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        std::vector<std::string> written;
        for (const auto& [name, body] : files) {
            const auto p = dir / name;
            if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
            std::ofstream out(p, std::ios::binary);
            if (!out) throw config_error("cannot write '" + p.string() + "'");
            out << body;
            written.push_back(p.string());
        }
        return written;
    }
};

// ---- JSON ------------------------------------------------------------------

inline void to_json(json& j, const NormalSummary& s) { j = json{{"n", s.n}, {"ybar", s.ybar}, {"sigma2", s.sigma2}}; }

inline void from_json(const json& j, NormalSummary& s) {
    try {
        s = NormalSummary(j.at("n").get<int>(), j.at("ybar").get<double>(), j.value("sigma2", 1.0));
    } catch (const json::exception& e) {
        throw config_error(std::string("bad dataset summary: ") + e.what());
    }
}

inline void to_json(json& j, const StudySet& s) { j = json{{"current", s.current}, {"historical", s.historical}}; }

inline void from_json(const json& j, StudySet& s) {
    if (!j.contains("current") || !j.contains("historical")) throw config_error("study needs 'current' and 'historical'");
    s.current = j.at("current").get<NormalSummary>();
    s.historical.clear();
    for (const auto& h : j.at("historical")) s.historical.push_back(h.get<NormalSummary>());
    s.validate();
}

inline void to_json(json& j, const PriorSpec& p) {
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, BetaPrior>) j = json{{"family", "beta"}, {"alpha", k.alpha}, {"beta", k.beta}};
            else if constexpr (std::is_same_v<T, InverseGammaPrior>)
                j = json{{"family", "inverse-gamma"}, {"shape", k.shape}, {"scale", k.scale}};
            else if constexpr (std::is_same_v<T, Uniform01Prior>) j = json{{"family", "uniform"}};
            else if constexpr (std::is_same_v<T, HalfNormalPrior>) j = json{{"family", "half-normal"}, {"scale", k.scale}};
            else j = json{{"family", "tabulated"}, {"source", k.source}, {"points", k.grid.points}, {"density", k.grid.density}};
        },
        p.kind());
}

/// Accepts the object form or the short string form ("beta(2,2)").
inline void from_json(const json& j, PriorSpec& p) {
    if (j.is_string()) {
        p = PriorSpec::parse(j.get<std::string>());
        return;
    }
    if (!j.is_object() || !j.contains("family")) throw config_error("prior must be a string or an object with 'family'");
    const auto fam = detail::lower_no_space(j.at("family").get<std::string>());
    try {
        if (fam == "beta") p = PriorSpec::beta(j.at("alpha").get<double>(), j.at("beta").get<double>());
        else if (fam == "inverse-gamma" || fam == "ig")
            p = PriorSpec::inverse_gamma(j.at("shape").get<double>(), j.at("scale").get<double>());
        else if (fam == "uniform") p = PriorSpec::uniform();
        else if (fam == "half-normal") p = PriorSpec::half_normal(j.at("scale").get<double>());
        else if (fam == "tabulated") {
            if (j.contains("points")) {
                DensityGrid g;
                g.points = j.at("points").get<std::vector<double>>();
                g.density = j.at("density").get<std::vector<double>>();
                p = PriorSpec::tabulated(std::move(g), j.value("source", ""));
            } else {
                p = PriorSpec::parse("tabulated(" + j.at("source").get<std::string>() + ")");
            }
        } else throw config_error("unknown prior family '" + fam + "'");
    } catch (const json::exception& e) {
        throw config_error(std::string("bad prior: ") + e.what());
    }
}

inline void to_json(json& j, const DensityGrid& g) {
    j = json{{"points", g.points}, {"density", g.density}, {"normalized", g.normalized}};
}

inline void from_json(const json& j, DensityGrid& g) {
    g.points = j.at("points").get<std::vector<double>>();
    g.density = j.at("density").get<std::vector<double>>();
    g.normalized = j.value("normalized", false);
}

inline void to_json(json& j, const PosteriorSummary& s) {
    j = json{{"mean", s.mean}, {"sd", s.sd}, {"credible_interval", {s.lo, s.hi}}, {"level", s.level}};
}

inline void to_json(json& j, const SamplerConfig& c) {
    j = json{{"chains", c.chains}, {"iterations", c.iterations}, {"burn_in", c.burn_in}, {"seed", c.seed},
             {"proposal_scale", c.proposal_scale}, {"target_accept", c.target_accept}};
}

inline void from_json(const json& j, SamplerConfig& c) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "fig_a1") c = SamplerConfig::fig_a1();
        else if (s == "fig_a2") c = SamplerConfig::fig_a2();
        else throw config_error("unknown sampler preset '" + s + "'");
        return;
    }
    SamplerConfig d;
    c.chains = j.value("chains", d.chains);
    c.iterations = j.value("iterations", d.iterations);
    c.burn_in = j.value("burn_in", d.burn_in);
    c.seed = j.value("seed", d.seed);
    c.proposal_scale = j.value("proposal_scale", d.proposal_scale);
    c.target_accept = j.value("target_accept", d.target_accept);
    c.validate();
}

inline void to_json(json& j, const ParamDiagnostics& d) {
    j = json{{"ess", d.ess}, {"split_rhat", d.split_rhat}, {"mcse", d.mcse}, {"mean", d.mean}, {"sd", d.sd}};
}

inline json diagnostics_json(const ChainSet& cs) {
    json j;
    j["seed"] = cs.seed;
    j["iterations"] = cs.iterations;
    j["burn_in"] = cs.burn_in;
    j["chains"] = cs.draws.empty() ? 0 : cs.draws[0].size();
    j["acceptance"] = cs.acceptance;
    j["warnings"] = cs.warnings;
    for (const auto& [k, v] : cs.diagnostics) j["parameters"][k] = v;
    return j;
}

inline void to_json(json& j, const IgFit& f) { j = json{{"family", "inverse-gamma"}, {"c", f.c}, {"d", f.d}, {"kl", f.kl}}; }
inline void to_json(json& j, const BetaFit& f) {
    j = json{{"family", "beta"}, {"alpha", f.alpha}, {"beta", f.beta}, {"loglik", f.loglik}};
}
inline void to_json(json& j, const LogOrApprox& a) { j = json{{"theta_hat", a.theta_hat}, {"var_hat", a.var_hat}}; }
inline void to_json(json& j, const TwoArmBinomialSummary& t) {
    j = json{{"n_t", t.n_t}, {"y_t", t.y_t}, {"n_c", t.n_c}, {"y_c", t.y_c}};
}
inline void from_json(const json& j, TwoArmBinomialSummary& t) {
    try {
        t = {j.at("n_t").get<int>(), j.at("y_t").get<int>(), j.at("n_c").get<int>(), j.at("y_c").get<int>()};
    } catch (const json::exception& e) {
        throw config_error(std::string("bad two-arm summary: ") + e.what());
    }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace npp
