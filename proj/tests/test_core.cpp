#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "npp/npp.hpp"

using namespace npp;

namespace {

DensityGrid tab(std::vector<double> x, const std::function<double(double)>& f) {
    DensityGrid g;
    g.points = std::move(x);
    for (double v : g.points) g.density.push_back(f(v));
    return g;
}

double beta32(double x) { return 12.0 * x * x * (1.0 - x); }

}  // namespace

TEST(NormalSummary, RejectsBadFields) {
    EXPECT_THROW(NormalSummary(0, 0.0, 1.0), config_error);
    EXPECT_THROW(NormalSummary(5, 0.0, 0.0), config_error);
    EXPECT_THROW(NormalSummary(5, 0.0, -1.0), config_error);
    EXPECT_THROW(NormalSummary(5, std::nan(""), 1.0), config_error);
    EXPECT_NO_THROW(NormalSummary(1, -3.0, 0.1));
}

TEST(StudySet, NeedsHistoricalData) {
    StudySet s;
    s.current = NormalSummary(10, 0.0, 1.0);
    EXPECT_THROW(s.validate(), config_error);
    s.historical.push_back(NormalSummary(5, 1.0, 1.0));
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.K(), 1u);
}

TEST(Summarize, StandardNormal) {
    auto g = normalize(tab(linspace(-8, 8, 2001), [](double x) { return std::exp(-0.5 * x * x); }));
    const auto s = summarize(g, 0.95);
    EXPECT_NEAR(s.mean, 0.0, 1e-6);
    EXPECT_NEAR(s.sd, 1.0, 1e-4);
    EXPECT_NEAR(s.lo, -1.96, 0.01);
    EXPECT_NEAR(s.hi, 1.96, 0.01);
}

TEST(Summarize, UniformHalfInterval) {
    auto g = normalize(tab(linspace(0, 1, 101), [](double) { return 1.0; }));
    const auto s = summarize(g, 0.5);
    EXPECT_NEAR(s.mean, 0.5, 1e-12);
    EXPECT_NEAR(s.lo, 0.25, 1e-9);
    EXPECT_NEAR(s.hi, 0.75, 1e-9);
}

TEST(Summarize, BetaTwoTwoMoments) {
    auto g = normalize(tab(linspace(0, 1, 4001), [](double x) { return 6.0 * x * (1.0 - x); }));
    const auto s = summarize(g, 0.95);
    EXPECT_NEAR(s.mean, 0.5, 1e-9);
    EXPECT_NEAR(s.sd, std::sqrt(1.0 / 20.0), 1e-6);
    EXPECT_LT(s.lo, s.mean);
    EXPECT_GT(s.hi, s.mean);
}

TEST(Summarize, Errors) {
    auto g = tab(linspace(0, 1, 11), [](double) { return 3.0; });
    EXPECT_THROW(summarize(g, 0.95), config_error);  // not normalized
    auto n = normalize(g);
    EXPECT_THROW(summarize(n, 1.5), config_error);
    auto bad = n;
    std::swap(bad.points[2], bad.points[3]);
    EXPECT_THROW(summarize(bad, 0.95), config_error);
}

TEST(Summarize, RescalingInvariance) {
    auto f = [](double x) { return std::exp(-std::abs(x - 0.3)) * (1.0 + x * x); };
    auto a = summarize(normalize(tab(linspace(-5, 5, 801), f)), 0.9);
    auto b = summarize(normalize(tab(linspace(-5, 5, 801), [&](double x) { return 1234.5 * f(x); })), 0.9);
    EXPECT_NEAR(a.mean, b.mean, 1e-13);
    EXPECT_NEAR(a.sd, b.sd, 1e-13);
    EXPECT_NEAR(a.lo, b.lo, 1e-12);
    EXPECT_NEAR(a.hi, b.hi, 1e-12);
}

TEST(Summarize, RefinementIsSecondOrder) {
    // mean of Beta(3,2) is 0.6, sd is 0.2
    std::vector<double> err_mean, err_sd;
    for (std::size_t n : {101u, 201u, 401u}) {
        const auto s = summarize(normalize(tab(linspace(0, 1, n), beta32)), 0.95);
        err_mean.push_back(std::abs(s.mean - 0.6));
        err_sd.push_back(std::abs(s.sd - 0.2));
    }
    for (std::size_t i = 0; i + 1 < err_mean.size(); ++i) {
        EXPECT_NEAR(err_mean[i] / err_mean[i + 1], 4.0, 0.2);
        EXPECT_NEAR(err_sd[i] / err_sd[i + 1], 4.0, 0.2);
    }
}

TEST(Normalize, ConstantAndLinear) {
    auto c = normalize(tab(linspace(0, 1, 101), [](double) { return 7.0; }));
    for (double d : c.density) EXPECT_NEAR(d, 1.0, 1e-14);
    EXPECT_TRUE(c.normalized);
    auto l = normalize(tab(linspace(0, 1, 101), [](double x) { return 2.0 * x; }));
    for (std::size_t i = 0; i < l.size(); ++i) EXPECT_NEAR(l.density[i], 2.0 * l.points[i], 1e-13);
}

TEST(Normalize, GaussianConstant) {
    auto g = normalize(tab(linspace(-8, 8, 2001), [](double x) { return std::exp(-0.5 * x * x); }));
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_NEAR(g.density[i], std::exp(-0.5 * g.points[i] * g.points[i]) / std::sqrt(2.0 * std::numbers::pi), 1e-8);
    EXPECT_NEAR(trapezoid(g), 1.0, 1e-12);
}

TEST(Normalize, Errors) {
    EXPECT_THROW(normalize(tab(linspace(0, 1, 11), [](double) { return 0.0; })), numerical_error);
    EXPECT_THROW(normalize(tab(linspace(0, 1, 11), [](double x) { return x > 0.5 ? std::nan("") : 1.0; })), numerical_error);
    EXPECT_THROW(normalize(tab(linspace(0, 1, 11), [](double x) { return x - 0.5; })), numerical_error);
    DensityGrid g;
    g.points = {0.0, 0.5, 0.4};
    g.density = {1.0, 1.0, 1.0};
    EXPECT_THROW(normalize(g), config_error);
    g.points = {0.0, 1.0};
    g.density = {1.0};
    EXPECT_THROW(normalize(g), config_error);
}

TEST(GridTools, QuantileAndCdfAgree) {
    auto g = normalize(tab(linspace(0, 1, 2001), beta32));
    for (double p : {0.01, 0.2, 0.5, 0.77, 0.99}) {
        const double q = grid_quantile(g, p);
        EXPECT_NEAR(grid_cdf_at(g, grid_cdf(g), q), p, 1e-10);
    }
}

TEST(GridTools, KsStatisticOnExactQuantiles) {
    auto g = normalize(tab(linspace(-8, 8, 4001), [](double x) { return std::exp(-0.5 * x * x); }));
    std::vector<double> draws;
    for (int i = 0; i < 1000; ++i) draws.push_back(grid_quantile(g, (i + 0.5) / 1000.0));
    EXPECT_LT(ks_statistic(draws, g), 0.0006);
    EXPECT_NEAR(ks_two_sample({1, 2, 3}, {4, 5, 6}), 1.0, 1e-15);
    EXPECT_NEAR(ks_two_sample({1, 2, 3, 4}, {1, 2, 3, 4}), 0.0, 1e-15);
}

TEST(PriorSpec, ParsesShortForms) {
    EXPECT_EQ(PriorSpec::parse("beta(2, 3)"), PriorSpec::beta(2, 3));
    EXPECT_EQ(PriorSpec::parse("IG(3,10)"), PriorSpec::inverse_gamma(3, 10));
    EXPECT_EQ(PriorSpec::parse("inverse-gamma(1,0.1)"), PriorSpec::inverse_gamma(1, 0.1));
    EXPECT_EQ(PriorSpec::parse("uniform"), PriorSpec::uniform());
    EXPECT_EQ(PriorSpec::parse("half-normal(2)"), PriorSpec::half_normal(2));
    EXPECT_EQ(PriorSpec::parse("beta(2,3)").support(), Support::unit);
    EXPECT_EQ(PriorSpec::parse("ig(2,3)").support(), Support::positive);
    EXPECT_EQ(PriorSpec::parse("half-normal(1)").support(), Support::positive);
}

TEST(PriorSpec, RejectsBadText) {
    EXPECT_THROW(PriorSpec::parse("gamma(1,2)"), config_error);
    EXPECT_THROW(PriorSpec::parse("beta(1)"), config_error);
    EXPECT_THROW(PriorSpec::parse("beta(1,x)"), config_error);
    EXPECT_THROW(PriorSpec::parse("beta(1,2"), config_error);
    EXPECT_THROW(PriorSpec::parse("beta(-1,2)"), config_error);
    EXPECT_THROW(PriorSpec::parse("ig(0,2)"), config_error);
    EXPECT_THROW(PriorSpec::parse("tabulated(/no/such/file.csv)"), config_error);
}

TEST(PriorSpec, DensitiesMatchClosedForms) {
    const auto b = PriorSpec::beta(2.5, 4.0);
    const double lB = std::lgamma(2.5) + std::lgamma(4.0) - std::lgamma(6.5);
    for (double x : {0.01, 0.3, 0.8, 0.999})
        EXPECT_NEAR(b.log_density(x), 1.5 * std::log(x) + 3.0 * std::log1p(-x) - lB, 1e-12);
    const auto ig = PriorSpec::inverse_gamma(3, 10);
    for (double v : {0.1, 1.0, 7.0})
        EXPECT_NEAR(ig.log_density(v), 3 * std::log(10.0) - std::lgamma(3.0) - 4 * std::log(v) - 10 / v, 1e-12);
    const auto hn = PriorSpec::half_normal(2.0);
    EXPECT_NEAR(hn.density(1.0), 2.0 * std::exp(-1.0 / 8.0) / (2.0 * std::sqrt(2.0 * std::numbers::pi)), 1e-14);
    EXPECT_NEAR(PriorSpec::uniform().density(0.37), 1.0, 1e-15);
    EXPECT_EQ(PriorSpec::uniform().log_density(1.5), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(ig.log_density(-1.0), -std::numeric_limits<double>::infinity());
}

TEST(PriorSpec, QuantileInvertsCdf) {
    for (const auto& p : {PriorSpec::beta(0.5, 0.5), PriorSpec::beta(10, 2), PriorSpec::inverse_gamma(3, 1),
                          PriorSpec::half_normal(1.5), PriorSpec::uniform()}) {
        for (double q : {1e-6, 0.05, 0.5, 0.95}) EXPECT_NEAR(p.cdf(p.quantile(q)), q, 1e-9) << p.to_string();
        const double u = p.upper_quantile(1e-4);
        // unit-support priors report the distance to 1
        const double x = p.support() == Support::unit ? 1.0 - u : u;
        EXPECT_NEAR(1.0 - p.cdf(x), 1e-4, 1e-9) << p.to_string();
    }
}

TEST(PriorSpec, SamplingMatchesCdf) {
    Rng rng = make_rng(5, 0);
    const auto p = PriorSpec::beta(2, 10);
    std::vector<double> x;
    for (int i = 0; i < 20000; ++i) x.push_back(p.sample(rng));
    EXPECT_LT(ks_statistic(x, [&](double v) { return p.cdf(v); }), 0.015);
}

TEST(PriorSpec, TabulatedFileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "npp_core_tab";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "prior.csv").string();
    {
        std::ofstream out(path);
        out << "point,density\n";
        for (double x : linspace(0, 1, 201)) out << x << "," << 2 * x << "\n";
    }
    const auto p = PriorSpec::parse("tabulated(" + path + ")");
    EXPECT_EQ(p.support(), Support::unit);
    EXPECT_NEAR(p.density(0.5), 1.0, 1e-12);
    EXPECT_NEAR(p.cdf(0.5), 0.25, 1e-12);
    // a grid that does not integrate to one is refused
    {
        std::ofstream out(path);
        for (double x : linspace(0, 1, 201)) out << x << "," << 2.0 << "\n";
    }
    EXPECT_THROW(PriorSpec::parse("tabulated(" + path + ")"), config_error);
    std::filesystem::remove_all(dir);
}

TEST(Json, RoundTrips) {
    StudySet s;
    s.current = NormalSummary(20, 2.0, 0.5);
    s.historical = {NormalSummary(20, 1.5, 0.3), NormalSummary(7, -0.1, 2.0)};
    EXPECT_EQ(json(s).get<StudySet>(), s);
    for (const auto& p : {PriorSpec::beta(2, 2), PriorSpec::inverse_gamma(3, 10), PriorSpec::uniform(), PriorSpec::half_normal(1)})
        EXPECT_EQ(json(p).get<PriorSpec>(), p);
    EXPECT_EQ(json("beta(1,3)").get<PriorSpec>(), PriorSpec::beta(1, 3));
    EXPECT_THROW((json{{"family", "cauchy"}}.get<PriorSpec>()), config_error);
    const auto cfg = json("fig_a2").get<SamplerConfig>();
    EXPECT_EQ(cfg.iterations, 8000);
    EXPECT_EQ(cfg.burn_in, 4000);
    EXPECT_THROW((json{{"chains", 1}}.get<SamplerConfig>()), config_error);
}

TEST(Csv, GridRoundTripIsExact) {
    auto g = normalize(tab(linspace(-3, 3, 257), [](double x) { return std::exp(-x * x) * (2 + std::sin(x)); }));
    const auto dir = std::filesystem::temp_directory_path() / "npp_core_csv";
    OutputBundle b;
    b.add("g.csv", grid_csv(g));
    const auto paths = b.write(dir);
    ASSERT_EQ(paths.size(), 1u);
    const auto r = read_grid_csv(paths[0]);
    EXPECT_EQ(r.points, g.points);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(r.density[i], g.density[i], 1e-15);
    std::filesystem::remove_all(dir);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
    Rng a = make_rng(42, 1), b = make_rng(42, 1), c = make_rng(42, 2), d = make_rng(43, 1);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
    Rng u = make_rng(1, 0);
    for (int i = 0; i < 100000; ++i) {
        const double v = uniform_open(u);
        ASSERT_GT(v, 0.0);
        ASSERT_LT(v, 1.0);
    }
}

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
    const auto& gl = gauss_legendre(12);
    // exact through degree 23
    for (int k = 0; k <= 22; k += 2) {
        double s = 0.0;
        for (std::size_t i = 0; i < gl.x.size(); ++i) s += gl.w[i] * std::pow(gl.x[i], k);
        EXPECT_NEAR(s, 2.0 / (k + 1), 1e-13) << k;
    }
}

TEST(Quadrature, SineMapHandlesEndpointSingularity) {
    // integral of x^{-1/2} on (0,1) is 2
    double s = 0.0;
    for (const auto& nd : sine_mapped_nodes(0.0, 1.0, 256)) s += nd.weight / std::sqrt(nd.from_lo);
    EXPECT_NEAR(s, 2.0, 1e-10);
    // distances to the ends are carried without cancellation
    for (const auto& nd : sine_mapped_nodes(0.0, 1.0, 64)) EXPECT_NEAR(nd.from_lo + nd.to_hi, 1.0, 1e-15);
}

TEST(Numerics, LogSumExpAndLogit) {
    std::vector<double> v{-1000.0, -1000.0};
    EXPECT_NEAR(detail::log_sum_exp(v), -1000.0 + std::log(2.0), 1e-12);
    EXPECT_NEAR(detail::inv_logit(detail::logit(0.123)), 0.123, 1e-15);
    EXPECT_NEAR(detail::normal_log_pdf(1.0, 0.0, 4.0), -0.5 * std::log(8.0 * std::numbers::pi) - 0.125, 1e-15);
}
