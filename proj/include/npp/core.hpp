#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace npp {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad summaries, prior parameters, configuration.
class config_error : public error {
public:
    using error::error;
};

/// A numerical procedure failed to reach its stated accuracy.
class numerical_error : public error {
public:
    using error::error;
};

/// Sufficient statistics of one i.i.d. normal dataset with known variance.
struct NormalSummary {
    int n = 1;
    double ybar = 0.0;
    double sigma2 = 1.0;

    NormalSummary() = default;
    NormalSummary(int n_, double ybar_, double sigma2_) : n(n_), ybar(ybar_), sigma2(sigma2_) { validate(); }

    void validate() const {
        if (n < 1) throw config_error("NormalSummary: n must be >= 1, got " + std::to_string(n));
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw config_error("NormalSummary: sigma2 must be positive and finite");
        if (!std::isfinite(ybar)) throw config_error("NormalSummary: ybar must be finite");
    }

    // n / sigma^2
    double precision() const { return n / sigma2; }
    // n * ybar / sigma^2
    double scaled_mean() const { return n * ybar / sigma2; }

    friend bool operator==(const NormalSummary&, const NormalSummary&) = default;
};

/// Current dataset plus K >= 1 historical datasets.
struct StudySet {
    NormalSummary current;
    std::vector<NormalSummary> historical;

    std::size_t K() const { return historical.size(); }

    void validate() const {
        current.validate();
        if (historical.empty()) throw config_error("StudySet: at least one historical dataset is required");
        for (const auto& h : historical) h.validate();
    }

    friend bool operator==(const StudySet&, const StudySet&) = default;
};

namespace detail {

inline constexpr double log_2pi = 1.8378770664093454835606594728112;
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double normal_log_pdf(double x, double mean, double var) {
    const double z = x - mean;
    return -0.5 * (log_2pi + std::log(var) + z * z / var);
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = neg_inf;
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double inv_logit(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace detail
}  // namespace npp
