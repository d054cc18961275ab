#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <concepts>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "npp/core.hpp"
#include "npp/grid.hpp"

namespace npp {

/// Anything that can report an (unnormalized) log density at a point.
template <class D>
concept LogDensity = requires(const D& d, double x) {
    { d.log_density(x) } -> std::convertible_to<double>;
};

enum class Support { unit, positive };

struct BetaPrior {
    double alpha = 1.0;
    double beta = 1.0;
    friend bool operator==(const BetaPrior&, const BetaPrior&) = default;
};

struct InverseGammaPrior {
    double shape = 1.0;  // c
    double scale = 1.0;  // d
    friend bool operator==(const InverseGammaPrior&, const InverseGammaPrior&) = default;
};

struct Uniform01Prior {
    friend bool operator==(const Uniform01Prior&, const Uniform01Prior&) = default;
};

struct HalfNormalPrior {
    double scale = 1.0;
    friend bool operator==(const HalfNormalPrior&, const HalfNormalPrior&) = default;
};

struct TabulatedPrior {
    DensityGrid grid;
    std::string source;  // file it was read from, if any
    friend bool operator==(const TabulatedPrior& a, const TabulatedPrior& b) {
        return a.grid.points == b.grid.points && a.grid.density == b.grid.density;
    }
};

namespace detail {

inline DensityGrid read_two_column_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open tabulated prior file '" + path + "'");
    DensityGrid g;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double x, y;
        if (!(ss >> x >> y)) {
            if (g.points.empty()) continue;  // header
            throw config_error("malformed line in '" + path + "': " + line);
        }
        g.points.push_back(x);
        g.density.push_back(y);
    }
    return g;
}

inline std::string lower_no_space(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::vector<double> parse_args(const std::string& s, const std::string& whole) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw config_error("bad numeric argument '" + item + "' in prior '" + whole + "'");
        }
    }
    return v;
}

}  // namespace detail

/// A univariate prior on (0,1) or (0,inf).
class PriorSpec {
public:
    using Kind = std::variant<BetaPrior, InverseGammaPrior, Uniform01Prior, HalfNormalPrior, TabulatedPrior>;

    PriorSpec() : kind_(Uniform01Prior{}) {}
    explicit PriorSpec(Kind k) : kind_(std::move(k)) { validate(); }

    static PriorSpec beta(double a, double b) { return PriorSpec(BetaPrior{a, b}); }
    static PriorSpec inverse_gamma(double c, double d) { return PriorSpec(InverseGammaPrior{c, d}); }
    static PriorSpec uniform() { return PriorSpec(Uniform01Prior{}); }
    static PriorSpec half_normal(double s) { return PriorSpec(HalfNormalPrior{s}); }
    static PriorSpec tabulated(DensityGrid g, std::string source = {}) {
        return PriorSpec(TabulatedPrior{std::move(g), std::move(source)});
    }

    /// Accepts "beta(2,2)", "ig(3,10)", "inverse-gamma(3,10)", "uniform", "half-normal(1)", "tabulated(file.csv)".
    static PriorSpec parse(std::string_view text) {
        const std::string s = detail::lower_no_space(text);
        const auto open = s.find('(');
        const std::string name = s.substr(0, open);
        std::string args;
        if (open != std::string::npos) {
            if (s.back() != ')') throw config_error("unbalanced parentheses in prior '" + std::string(text) + "'");
            args = s.substr(open + 1, s.size() - open - 2);
        }
        auto nums = [&](std::size_t k) {
            auto v = detail::parse_args(args, std::string(text));
            if (v.size() != k)
                throw config_error("prior '" + std::string(text) + "' expects " + std::to_string(k) + " argument(s)");
            return v;
        };
        if (name == "beta") {
            auto v = nums(2);
            return beta(v[0], v[1]);
        }
        if (name == "ig" || name == "inverse-gamma" || name == "inversegamma" || name == "invgamma") {
            auto v = nums(2);
            return inverse_gamma(v[0], v[1]);
        }
        if (name == "uniform" || name == "uniform01" || name == "unif") {
            if (!args.empty() && args != "0,1") throw config_error("only uniform(0,1) is supported");
            return uniform();
        }
        if (name == "half-normal" || name == "halfnormal" || name == "hn") {
            auto v = nums(1);
            return half_normal(v[0]);
        }
        if (name == "tabulated") {
            // keep the original spelling of the path
            const std::string raw(text);
            const auto a = raw.find('('), b = raw.rfind(')');
            std::string path = raw.substr(a + 1, b - a - 1);
            path.erase(0, path.find_first_not_of(" \t"));
            path.erase(path.find_last_not_of(" \t") + 1);
            return tabulated(detail::read_two_column_csv(path), path);
        }
        throw config_error("unknown prior family '" + std::string(text) + "'");
    }

    const Kind& kind() const { return kind_; }

    Support support() const {
        return std::visit(
            [](const auto& p) -> Support {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, BetaPrior> || std::is_same_v<T, Uniform01Prior>) return Support::unit;
                else if constexpr (std::is_same_v<T, TabulatedPrior>)
                    return p.grid.points.back() <= 1.0 ? Support::unit : Support::positive;
                else return Support::positive;
            },
            kind_);
    }

    double log_density(double x) const { return log_density(x, 1.0 - x); }

    /// Same as log_density(x) but takes 1 - x separately, which keeps Beta densities accurate near x = 1.
    double log_density(double x, double one_minus_x) const {
        return std::visit(
            [&](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, BetaPrior>) {
                    if (x < 0.0 || one_minus_x < 0.0) return detail::neg_inf;
                    return (p.alpha - 1.0) * std::log(x) + (p.beta - 1.0) * std::log(one_minus_x) -
                           (std::lgamma(p.alpha) + std::lgamma(p.beta) - std::lgamma(p.alpha + p.beta));
                } else if constexpr (std::is_same_v<T, Uniform01Prior>) {
                    return (x < 0.0 || x > 1.0) ? detail::neg_inf : 0.0;
                } else if constexpr (std::is_same_v<T, InverseGammaPrior>) {
                    if (!(x > 0.0)) return detail::neg_inf;
                    return p.shape * std::log(p.scale) - std::lgamma(p.shape) - (p.shape + 1.0) * std::log(x) - p.scale / x;
                } else if constexpr (std::is_same_v<T, HalfNormalPrior>) {
                    if (x < 0.0) return detail::neg_inf;
                    return std::log(2.0) + detail::normal_log_pdf(x, 0.0, p.scale * p.scale);
                } else {
                    const double d = grid_density_at(p.grid, x);
                    return d > 0.0 ? std::log(d) : detail::neg_inf;
                }
            },
            kind_);
    }

    double density(double x) const { return std::exp(log_density(x)); }

    double cdf(double x) const {
        return std::visit(
            [&](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, BetaPrior>) {
                    if (x <= 0.0) return 0.0;
                    if (x >= 1.0) return 1.0;
                    return boost::math::cdf(boost::math::beta_distribution<>(p.alpha, p.beta), x);
                } else if constexpr (std::is_same_v<T, Uniform01Prior>) {
                    return std::clamp(x, 0.0, 1.0);
                } else if constexpr (std::is_same_v<T, InverseGammaPrior>) {
                    if (x <= 0.0) return 0.0;
                    return boost::math::cdf(boost::math::inverse_gamma_distribution<>(p.shape, p.scale), x);
                } else if constexpr (std::is_same_v<T, HalfNormalPrior>) {
                    if (x <= 0.0) return 0.0;
                    return std::erf(x / (p.scale * std::sqrt(2.0)));
                } else {
                    return grid_cdf_at(p.grid, grid_cdf(p.grid), x);
                }
            },
            kind_);
    }

    double quantile(double q) const {
        if (!(q >= 0.0 && q <= 1.0)) throw config_error("quantile: probability outside [0,1]");
        return std::visit(
            [&](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, BetaPrior>) {
                    return boost::math::quantile(boost::math::beta_distribution<>(p.alpha, p.beta), q);
                } else if constexpr (std::is_same_v<T, Uniform01Prior>) {
                    return q;
                } else if constexpr (std::is_same_v<T, InverseGammaPrior>) {
                    if (q >= 1.0) return std::numeric_limits<double>::infinity();
                    if (q <= 0.0) return 0.0;
                    return boost::math::quantile(boost::math::inverse_gamma_distribution<>(p.shape, p.scale), q);
                } else if constexpr (std::is_same_v<T, HalfNormalPrior>) {
                    if (q >= 1.0) return std::numeric_limits<double>::infinity();
                    return boost::math::quantile(boost::math::normal_distribution<>(0.0, p.scale), 0.5 + 0.5 * q);
                } else {
                    return grid_quantile(p.grid, q);
                }
            },
            kind_);
    }

    /// Upper quantile: the x with P(X > x) = q. For unit-support priors returns 1 - x instead,
    /// computed without cancellation.
    double upper_quantile(double q) const {
        return std::visit(
            [&](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, BetaPrior>) {
                    return boost::math::quantile(boost::math::beta_distribution<>(p.beta, p.alpha), q);
                } else if constexpr (std::is_same_v<T, Uniform01Prior>) {
                    return q;
                } else if constexpr (std::is_same_v<T, InverseGammaPrior>) {
                    if (q <= 0.0) return std::numeric_limits<double>::infinity();
                    return boost::math::quantile(
                        boost::math::complement(boost::math::inverse_gamma_distribution<>(p.shape, p.scale), q));
                } else if constexpr (std::is_same_v<T, HalfNormalPrior>) {
                    if (q <= 0.0) return std::numeric_limits<double>::infinity();
                    return boost::math::quantile(
                        boost::math::complement(boost::math::normal_distribution<>(0.0, p.scale), 0.5 * q));
                } else {
                    const double x = grid_quantile(p.grid, 1.0 - q);
                    return support() == Support::unit ? 1.0 - x : x;
                }
            },
            kind_);
    }

    template <class URBG>
    double sample(URBG& rng) const {
        return std::visit(
            [&](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, BetaPrior>) {
                    std::gamma_distribution<double> ga(p.alpha, 1.0), gb(p.beta, 1.0);
                    const double x = ga(rng), y = gb(rng);
                    return x / (x + y);
                } else if constexpr (std::is_same_v<T, Uniform01Prior>) {
                    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                } else if constexpr (std::is_same_v<T, InverseGammaPrior>) {
                    std::gamma_distribution<double> g(p.shape, 1.0 / p.scale);
                    return 1.0 / g(rng);
                } else if constexpr (std::is_same_v<T, HalfNormalPrior>) {
                    return std::abs(std::normal_distribution<double>(0.0, p.scale)(rng));
                } else {
                    return grid_quantile(p.grid, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
                }
            },
            kind_);
    }

    std::string to_string() const {
        std::ostringstream os;
        os.precision(17);
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, BetaPrior>) os << "beta(" << p.alpha << "," << p.beta << ")";
                else if constexpr (std::is_same_v<T, Uniform01Prior>) os << "uniform";
                else if constexpr (std::is_same_v<T, InverseGammaPrior>) os << "ig(" << p.shape << "," << p.scale << ")";
                else if constexpr (std::is_same_v<T, HalfNormalPrior>) os << "half-normal(" << p.scale << ")";
                else os << "tabulated(" << (p.source.empty() ? "<inline>" : p.source) << ")";
            },
            kind_);
        return os.str();
    }

    friend bool operator==(const PriorSpec& a, const PriorSpec& b) { return a.kind_ == b.kind_; }

    void validate() const {
        std::visit(
            [](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                auto pos = [](double v, const char* what) {
                    if (!(v > 0.0) || !std::isfinite(v)) throw config_error(std::string(what) + " must be positive and finite");
                };
                if constexpr (std::is_same_v<T, BetaPrior>) {
                    pos(p.alpha, "beta prior alpha");
                    pos(p.beta, "beta prior beta");
                } else if constexpr (std::is_same_v<T, InverseGammaPrior>) {
                    pos(p.shape, "inverse-gamma shape");
                    pos(p.scale, "inverse-gamma scale");
                } else if constexpr (std::is_same_v<T, HalfNormalPrior>) {
                    pos(p.scale, "half-normal scale");
                } else if constexpr (std::is_same_v<T, TabulatedPrior>) {
                    check_grid_shape(p.grid);
                    if (p.grid.points.front() < 0.0) throw config_error("tabulated prior must live on [0,1] or [0,inf)");
                    for (double d : p.grid.density)
                        if (!(d >= 0.0) || !std::isfinite(d)) throw config_error("tabulated prior density must be finite and >= 0");
                    const double z = trapezoid(p.grid);
                    if (std::abs(z - 1.0) > kNormalizationTolerance)
                        throw config_error("tabulated prior integrates to " + std::to_string(z) + ", not 1");
                }
            },
            kind_);
    }

private:
    Kind kind_;
};

}  // namespace npp
