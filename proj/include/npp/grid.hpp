#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "npp/core.hpp"

namespace npp {

/// A density tabulated on an explicit, strictly increasing grid.
struct DensityGrid {
    std::vector<double> points;
    std::vector<double> density;
    bool normalized = false;

    std::size_t size() const { return points.size(); }
};

/// Posterior mean, standard deviation and equal-tailed credible interval.
struct PosteriorSummary {
    double mean = 0.0;
    double sd = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
};

inline constexpr double kNormalizationTolerance = 1e-8;

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n < 2) throw config_error("linspace: need at least two points");
    std::vector<double> x(n);
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) x[i] = a + h * static_cast<double>(i);
    x.back() = b;
    return x;
}

/// n points equally spaced in log between a > 0 and b.
inline std::vector<double> logspace(double a, double b, std::size_t n) {
    if (!(a > 0.0) || !(b > a)) throw config_error("logspace: need 0 < a < b");
    auto x = linspace(std::log(a), std::log(b), n);
    for (auto& v : x) v = std::exp(v);
    x.front() = a;
    x.back() = b;
    return x;
}

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

inline double trapezoid(const DensityGrid& g) { return trapezoid(g.points, g.density); }

inline void check_grid_shape(const DensityGrid& g) {
    if (g.points.size() != g.density.size()) throw config_error("DensityGrid: points and density lengths differ");
    if (g.points.size() < 2) throw config_error("DensityGrid: need at least two points");
    for (std::size_t i = 1; i < g.points.size(); ++i)
        if (!(g.points[i] > g.points[i - 1])) throw config_error("DensityGrid: points must be strictly increasing");
}

inline DensityGrid normalize(DensityGrid g) {
    check_grid_shape(g);
    for (double d : g.density)
        if (!(d >= 0.0) || !std::isfinite(d)) throw numerical_error("normalize: density must be finite and nonnegative");
    const double z = trapezoid(g);
    if (!(z > 0.0)) throw numerical_error("normalize: density integrates to zero");
    for (auto& d : g.density) d /= z;
    g.normalized = true;
    return g;
}

/// Tabulates a density from its log on the given points, rescaling by the maximum before exponentiation.
inline DensityGrid tabulate_log(std::vector<double> points, const std::function<double(double)>& log_density) {
    DensityGrid g;
    g.points = std::move(points);
    g.density.resize(g.points.size());
    double m = detail::neg_inf;
    for (std::size_t i = 0; i < g.points.size(); ++i) {
        g.density[i] = log_density(g.points[i]);
        if (std::isnan(g.density[i])) throw numerical_error("tabulate_log: NaN log density");
        m = std::max(m, g.density[i]);
    }
    if (!std::isfinite(m)) throw numerical_error("tabulate_log: density vanishes on the whole grid");
    for (auto& d : g.density) d = std::exp(d - m);
    return normalize(std::move(g));
}

/// Trapezoid CDF at every grid point (linear density within each cell).
inline std::vector<double> grid_cdf(const DensityGrid& g) {
    std::vector<double> c(g.size(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i)
        c[i] = c[i - 1] + 0.5 * (g.points[i] - g.points[i - 1]) * (g.density[i] + g.density[i - 1]);
    return c;
}

namespace detail {

// Locates the cell containing probability p and inverts the quadratic cell CDF.
inline double invert_cell(const DensityGrid& g, const std::vector<double>& cdf, double p) {
    const double total = cdf.back();
    const double target = p * total;
    auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
    if (it == cdf.begin()) return g.points.front();
    if (it == cdf.end()) return g.points.back();
    const std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    const double x0 = g.points[i - 1], h = g.points[i] - x0;
    const double f0 = g.density[i - 1], f1 = g.density[i];
    const double r = target - cdf[i - 1];
    const double slope = (f1 - f0) / h;
    double t;
    if (std::abs(slope) * h < 1e-12 * std::max(f0, f1) || slope == 0.0) {
        t = f0 > 0.0 ? r / f0 : 0.5 * h;
    } else {
        // f0 t + slope t^2 / 2 = r, taking the root inside [0, h]
        const double disc = std::max(0.0, f0 * f0 + 2.0 * slope * r);
        t = 2.0 * r / (f0 + std::sqrt(disc));
    }
    return x0 + std::clamp(t, 0.0, h);
}

}  // namespace detail

inline double grid_quantile(const DensityGrid& g, const std::vector<double>& cdf, double p) {
    return detail::invert_cell(g, cdf, p);
}

inline double grid_quantile(const DensityGrid& g, double p) { return grid_quantile(g, grid_cdf(g), p); }

/// CDF of the piecewise-linear density at an arbitrary x.
inline double grid_cdf_at(const DensityGrid& g, const std::vector<double>& cdf, double x) {
    if (x <= g.points.front()) return 0.0;
    if (x >= g.points.back()) return cdf.back();
    auto it = std::upper_bound(g.points.begin(), g.points.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - g.points.begin());
    const double x0 = g.points[i - 1], h = g.points[i] - x0, t = x - x0;
    const double f0 = g.density[i - 1], f1 = g.density[i];
    return cdf[i - 1] + f0 * t + 0.5 * (f1 - f0) / h * t * t;
}

/// Linear interpolation of the density; zero outside the grid.
inline double grid_density_at(const DensityGrid& g, double x) {
    if (x < g.points.front() || x > g.points.back()) return 0.0;
    auto it = std::upper_bound(g.points.begin(), g.points.end(), x);
    if (it == g.points.end()) return g.density.back();
    const std::size_t i = static_cast<std::size_t>(it - g.points.begin());
    const double t = (x - g.points[i - 1]) / (g.points[i] - g.points[i - 1]);
    return g.density[i - 1] + t * (g.density[i] - g.density[i - 1]);
}

inline PosteriorSummary summarize(const DensityGrid& g, double level) {
    check_grid_shape(g);
    if (!(level > 0.0 && level < 1.0)) throw config_error("summarize: level must lie in (0,1)");
    if (!g.normalized || std::abs(trapezoid(g) - 1.0) > kNormalizationTolerance)
        throw config_error("summarize: grid is not normalized");
    std::vector<double> xf(g.size()), x2f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        xf[i] = g.points[i] * g.density[i];
        x2f[i] = g.points[i] * xf[i];
    }
    PosteriorSummary s;
    s.level = level;
    s.mean = trapezoid(g.points, xf);
    s.sd = std::sqrt(std::max(0.0, trapezoid(g.points, x2f) - s.mean * s.mean));
    const auto cdf = grid_cdf(g);
    s.lo = grid_quantile(g, cdf, 0.5 * (1.0 - level));
    s.hi = grid_quantile(g, cdf, 0.5 * (1.0 + level));
    return s;
}

inline double sup_norm_distance(const DensityGrid& a, const DensityGrid& b) {
    if (a.points != b.points) throw config_error("sup_norm_distance: grids must share points");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.density[i] - b.density[i]));
    return d;
}

/// Kolmogorov distance between two tabulated distributions, evaluated on the union of their points.
inline double ks_distance(const DensityGrid& a, const DensityGrid& b) {
    const auto ca = grid_cdf(a), cb = grid_cdf(b);
    std::vector<double> xs = a.points;
    xs.insert(xs.end(), b.points.begin(), b.points.end());
    double d = 0.0;
    for (double x : xs)
        d = std::max(d, std::abs(grid_cdf_at(a, ca, x) / ca.back() - grid_cdf_at(b, cb, x) / cb.back()));
    return d;
}

/// One-sample Kolmogorov-Smirnov statistic of draws against a tabulated distribution.
inline double ks_statistic(std::vector<double> draws, const DensityGrid& ref) {
    if (draws.empty()) throw config_error("ks_statistic: no draws");
    std::sort(draws.begin(), draws.end());
    const auto cdf = grid_cdf(ref);
    const double total = cdf.back();
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = grid_cdf_at(ref, cdf, draws[i]) / total;
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
inline double ks_statistic(std::vector<double> draws, const std::function<double(double)>& cdf) {
    if (draws.empty()) throw config_error("ks_statistic: no draws");
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = cdf(draws[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw config_error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace npp
