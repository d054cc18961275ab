#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "npp/core.hpp"

namespace npp {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;
};

namespace detail {

inline GaussLegendre compute_gauss_legendre(std::size_t n) {
    GaussLegendre r;
    r.x.resize(n);
    r.w.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
            }
            pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

}  // namespace detail

/// Cached n-point rule; thread safe.
inline const GaussLegendre& gauss_legendre(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendre>(detail::compute_gauss_legendre(n));
    return *slot;
}

/// A quadrature node on [lo, hi] that also carries its distances to both ends,
/// so integrands can form 1 - a0 and friends without cancellation.
struct Node {
    double x;
    double from_lo;
    double to_hi;
    double weight;
};

/// Gauss-Legendre under the map x = lo + (hi - lo)(1 - cos(pi t))/2, t in (0,1).
/// The map flattens integrable endpoint singularities of the form (x - lo)^s.
inline std::vector<Node> sine_mapped_nodes(double lo, double hi, std::size_t n) {
    const auto& gl = gauss_legendre(n);
    const double L = hi - lo;
    std::vector<Node> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 0.5 * (gl.x[i] + 1.0);
        const double s = std::sin(0.5 * std::numbers::pi * t);
        const double c = std::cos(0.5 * std::numbers::pi * t);
        Node nd;
        nd.from_lo = L * s * s;
        nd.to_hi = L * c * c;
        nd.x = nd.from_lo <= nd.to_hi ? lo + nd.from_lo : hi - nd.to_hi;
        // dx/dt = L (pi/2) sin(pi t), and dt = dz/2
        nd.weight = 0.5 * gl.w[i] * L * 0.5 * std::numbers::pi * (2.0 * s * c);
        out[i] = nd;
    }
    return out;
}

}  // namespace npp
