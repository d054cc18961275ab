#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "npp/posterior.hpp"
#include "npp/scenario.hpp"
#include "oracles.hpp"

using namespace npp;

namespace {

StudySet make_study(NormalSummary cur, std::vector<NormalSummary> hist) {
    StudySet s;
    s.current = cur;
    s.historical = std::move(hist);
    return s;
}

StudySet toy_study() {
    oracle::Toy t;
    return make_study(NormalSummary(3, oracle::mean(t.y), t.sigma2), {NormalSummary(3, oracle::mean(t.y0), t.sigma02)});
}

double peak(const DensityGrid& g) { return *std::max_element(g.density.begin(), g.density.end()); }

DensityGrid normal_grid(const std::vector<double>& x, double m, double var) {
    return tabulate_log(x, [&](double t) { return detail::normal_log_pdf(t, m, var); });
}

double grid_mean(const DensityGrid& g) { return summarize(g, 0.95).mean; }
double grid_sd(const DensityGrid& g) { return summarize(g, 0.95).sd; }

// flat-mu Gaussian marginal of (ybar, ybar_01..ybar_0K) given v, up to a v-free constant
double gaussian_bhm_marginal(const StudySet& s, double v) {
    const std::size_t m = s.K() + 1;
    Eigen::VectorXd y(m), d(m);
    y(0) = s.current.ybar;
    d(0) = s.current.sigma2 / s.current.n + v;
    for (std::size_t k = 0; k < s.K(); ++k) {
        y(k + 1) = s.historical[k].ybar;
        d(k + 1) = s.historical[k].sigma2 / s.historical[k].n + v;
    }
    const Eigen::MatrixXd Sigma = d.asDiagonal();
    const Eigen::MatrixXd Si = Sigma.inverse();
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(m);
    const double b = one.dot(Si * one);
    const double muhat = one.dot(Si * y) / b;
    const Eigen::VectorXd r = y - muhat * one;
    return -0.5 * std::log(Sigma.determinant()) - 0.5 * std::log(b) - 0.5 * r.dot(Si * r);
}

}  // namespace

TEST(ConditionalTheta, NoBorrowing) {
    const auto s = make_study(NormalSummary(20, 2.0, 0.5), {NormalSummary(20, 1.5, 0.3), NormalSummary(7, -1.0, 2.0)});
    const double w[2] = {0.0, 0.0};
    const auto cp = conditional_theta(s, w);
    EXPECT_NEAR(cp.mu_p, 2.0, 1e-14);
    EXPECT_NEAR(cp.sigma2_p, 0.5 / 20, 1e-15);
}

TEST(ConditionalTheta, SymmetricPooling) {
    const auto s = make_study(NormalSummary(25, 0.4, 2.0), {NormalSummary(25, 1.2, 2.0)});
    const auto cp = conditional_theta(s, WeightAssignment{{1.0}});
    EXPECT_NEAR(cp.mu_p, 0.8, 1e-14);
    EXPECT_NEAR(cp.sigma2_p, 2.0 / 50, 1e-15);
}

TEST(ConditionalTheta, HalfWeightExample) {
    const auto s = fig_a1_setting().study;
    const auto cp = conditional_theta(s, WeightAssignment{{0.5}});
    EXPECT_NEAR(cp.mu_p, 130.0 / (40.0 + 0.5 * 20 / 0.3), 1e-12);
    EXPECT_NEAR(cp.mu_p, 1.77273, 1e-5);
    EXPECT_NEAR(cp.sigma2_p, 0.0136364, 1e-7);
}

TEST(ConditionalTheta, VarianceBoundAndMonotone) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const auto s = make_study(NormalSummary(15, 0.3, 1.3),
                              {NormalSummary(40, 1.0, 0.7), NormalSummary(9, -2.0, 3.0), NormalSummary(60, 0.0, 1.1)});
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<double> w{U(rng), U(rng), U(rng)};
        const auto cp = conditional_theta(s, w);
        EXPECT_LE(cp.sigma2_p, s.current.sigma2 / s.current.n);
        for (std::size_t k = 0; k < 3; ++k) {
            auto w2 = w;
            w2[k] = std::min(1.0, w[k] + 0.05);
            if (w2[k] == w[k]) continue;
            EXPECT_LT(conditional_theta(s, w2).sigma2_p, cp.sigma2_p);
        }
    }
}

TEST(ConditionalTheta, Errors) {
    const auto s = make_study(NormalSummary(10, 0.0, 1.0), {NormalSummary(10, 0.0, 1.0)});
    EXPECT_THROW(conditional_theta(s, WeightAssignment{{0.2, 0.3}}), config_error);
    EXPECT_THROW(conditional_theta(s, WeightAssignment{{1.2}}), config_error);
    EXPECT_THROW(conditional_theta(s, WeightAssignment{{-0.1}}), config_error);
}

// The raw sum of squares of y0 drops out: L(theta|y0)^a0 / c(a0) is a normal density in theta.
TEST(NppNormalizer, RawSumOfSquaresCancels) {
    const oracle::Toy t;
    const auto s = toy_study();
    for (double a0 : {0.05, 0.3, 0.5, 1.0}) {
        const double w[1] = {a0};
        const auto nz = npp_normalizer(s.historical, w);
        const double lc = oracle::log_c(t, a0);
        for (double th : {-1.0, 0.5, 1.5, 2.0, 3.7}) {
            const double raw = a0 * oracle::raw_loglik(t.y0, th, t.sigma02) - lc;
            EXPECT_NEAR(raw, detail::normal_log_pdf(th, nz.M, 1.0 / nz.S), 1e-7) << a0 << " " << th;
        }
    }
}

TEST(NppNormalizer, MultiDatasetMatchesProduct) {
    const HistoricalList h{NormalSummary(10, 1.0, 2.0), NormalSummary(20, -1.0, 0.5)};
    const double w[2] = {0.3, 0.8};
    const auto nz = npp_normalizer(h, w);
    // prod N(ybar_k; theta, sigma_k^2 / n_k)^{w_k}, integrated numerically
    auto lf = [&](double th) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) s += w[k] * -0.5 * h[k].precision() * (th - h[k].ybar) * (th - h[k].ybar);
        return s;
    };
    double z = 0.0;
    const double lo = -10, hi = 10;
    const int n = 200000;
    for (int i = 0; i < n; ++i) z += std::exp(lf(lo + (i + 0.5) * (hi - lo) / n));
    z *= (hi - lo) / n;
    EXPECT_NEAR(nz.log_c, std::log(z), 1e-9);
    EXPECT_THROW(npp_normalizer(h, std::vector<double>{0.0, 0.0}), config_error);
}

// the summary-based marginal likelihood of ybar matches the raw-data integral up to an a0-free constant
TEST(NppMarginal, MatchesRawIntegral) {
    const oracle::Toy t;
    const auto s = toy_study();
    std::vector<double> diffs;
    for (double a0 : {0.02, 0.2, 0.5, 0.9, 1.0}) {
        const double lc = oracle::log_c(t, a0);
        const double lo = -30, hi = 30;
        const int n = 60000;
        std::vector<double> lf(n);
        for (int i = 0; i < n; ++i) lf[i] = oracle::log_joint(t, lo + (i + 0.5) * (hi - lo) / n, a0, lc);
        const double raw = detail::log_sum_exp(lf) + std::log((hi - lo) / n);
        const double w[1] = {a0};
        diffs.push_back(raw - detail::log_marginal_npp(s, w));
    }
    for (double d : diffs) EXPECT_NEAR(d, diffs[0], 1e-8);
}

TEST(BhmMarginal, MatchesGaussianOracle) {
    const auto s = make_study(NormalSummary(30, 1.5, 0.5),
                              {NormalSummary(20, 1.0, 0.5), NormalSummary(30, 2.0, 1.0), NormalSummary(50, 3.0, 1.5)});
    std::vector<double> diffs;
    for (double v : logspace(1e-4, 1e3, 40)) diffs.push_back(detail::log_marginal_bhm(s, v) - gaussian_bhm_marginal(s, v));
    for (double d : diffs) EXPECT_NEAR(d, diffs[0], 1e-9);
}

// BNPP with weights h_k(v) and the BHM share the theta conditional and, up to a constant, the v posterior
TEST(Equivalence, IntegrandsAgreePointwise) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> mean(-3, 3), var(0.1, 5);
    std::uniform_int_distribution<int> nn(5, 100);
    for (std::size_t K : {1u, 2u, 3u, 5u}) {
        StudySet s;
        s.current = NormalSummary(nn(rng), mean(rng), var(rng));
        for (std::size_t k = 0; k < K; ++k) s.historical.push_back(NormalSummary(nn(rng), mean(rng), var(rng)));
        const auto prior = BorrowingPrior::on_a0(PriorSpec::beta(2, 3));
        std::vector<double> diffs;
        for (double v : logspace(1e-3, 1e2, 30)) {
            const auto w = h_k(v, s.historical);
            const auto a = conditional_theta(s, w);
            const auto b = detail::bhm_conditional(s, v);
            EXPECT_NEAR(a.mu_p, b.mu_p, 1e-12 * (1 + std::abs(b.mu_p)));
            EXPECT_NEAR(a.sigma2_p, b.sigma2_p, 1e-12 * b.sigma2_p);
            diffs.push_back(bnpp_log_v_posterior(s, prior, v) - bhm_log_v_posterior(s, prior, v));
        }
        for (double d : diffs) EXPECT_NEAR(d, diffs[0], 1e-8) << "K=" << K;
    }
}

// 2-D Riemann oracle on the raw-data toy problem
TEST(Oracle, ConditionalSliceMatches) {
    const oracle::Toy t;
    const auto s = toy_study();
    const auto x = theta_grid(s, 1025);
    const auto cp = conditional_theta(s, WeightAssignment{{0.5}});
    const auto ref = oracle::conditional_slice(t, 0.5, x);
    const auto lib = normal_grid(x, cp.mu_p, cp.sigma2_p);
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(ref[i] - lib.density[i]));
    EXPECT_LT(d, 1e-5);
}

TEST(Oracle, ThetaMarginalMatches) {
    const oracle::Toy t;
    const auto s = toy_study();
    QuadratureOptions o;
    o.theta_points = 513;
    const auto x = theta_grid(s, o.theta_points);
    struct Case {
        PriorSpec p;
        std::function<double(double)> f;
    };
    for (const auto& c : {Case{PriorSpec::beta(2, 2), [](double a) { return 6 * a * (1 - a); }},
                          Case{PriorSpec::uniform(), [](double) { return 1.0; }}}) {
        const auto lib = marginal_theta_npp_single(s, c.p, o);
        const auto ref = oracle::theta_marginal(t, c.f, x);
        double d = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(ref[i] - lib.density[i]));
        EXPECT_LT(d, 1e-5) << c.p.to_string();
    }
}

TEST(NppSingle, PointMassAtZeroIsNoBorrowing) {
    const auto s = fig_a1_setting().study;
    const double w[1] = {0.0};
    const auto g = fixed_weight_theta(s, w);
    const auto ref = normal_grid(g.points, 2.0, 0.5 / 20);
    EXPECT_LT(sup_norm_distance(g, ref), 1e-10);
    // a prior piled up near zero gets close to it
    const auto near0 = marginal_theta_npp_single(s, PriorSpec::beta(1, 2000));
    EXPECT_LT(sup_norm_distance(near0, ref), 0.02 * peak(ref));
}

TEST(NppSingle, FigA1EquivalentToBhm) {
    const auto st = fig_a1_setting();
    const auto a = marginal_theta_npp_single(st.study, st.prior);
    const auto b = marginal_theta_bhm_single(st.study, BorrowingPrior::on_a0(st.prior));
    const auto c = marginal_theta_bhm_single(st.study, BorrowingPrior::induced(InducedVDensity::single(st.prior, st.study.historical[0])));
    EXPECT_LT(sup_norm_distance(a, b), 1e-6);
    EXPECT_LT(sup_norm_distance(a, c), 1e-6);
}

TEST(NppSingle, CompatibleDataShrinksSd) {
    const auto s = make_study(NormalSummary(30, 0.5, 1.0), {NormalSummary(40, 0.5, 1.0)});
    for (const auto& p : {PriorSpec::uniform(), PriorSpec::beta(2, 2), PriorSpec::beta(0.5, 3)}) {
        const auto g = marginal_theta_npp_single(s, p);
        EXPECT_LT(grid_sd(g), std::sqrt(1.0 / 30));
    }
}

TEST(NppSingle, A0MarginalShapes) {
    const auto same = make_study(NormalSummary(200, 1.0, 1.0), {NormalSummary(200, 1.0, 1.0)});
    const auto g = marginal_a0_npp_single(same, PriorSpec::uniform());
    for (std::size_t i = 1; i < g.points.size(); ++i) EXPECT_GE(g.density[i], g.density[i - 1]);
    EXPECT_NEAR(trapezoid(g.points, g.density), 1.0, 1e-8);

    // 5 pooled sds apart
    const double sd = std::sqrt(1.0 / 50 + 1.0 / 50);
    const auto far = make_study(NormalSummary(50, 0.0, 1.0), {NormalSummary(50, 5 * sd, 1.0)});
    const auto h = marginal_a0_npp_single(far, PriorSpec::uniform());
    const auto cdf = grid_cdf(h);
    EXPECT_GT(grid_cdf_at(h, cdf, 0.5), 0.9);

    EXPECT_THROW(marginal_a0_npp_single(scenario_study("compatible"), PriorSpec::uniform()), config_error);
    EXPECT_THROW(marginal_theta_npp_single(same, PriorSpec::inverse_gamma(2, 1)), config_error);
}

TEST(BhmSingle, Limits) {
    const auto s = make_study(NormalSummary(20, 1.0, 1.0), {NormalSummary(30, 0.0, 1.0)});
    // v near zero: full borrowing
    const auto full = marginal_theta_bhm_single(s, BorrowingPrior::on_v(PriorSpec::inverse_gamma(400, 4e-5)));
    const double w1[1] = {1.0};
    const auto ref1 = fixed_weight_theta(s, w1);
    EXPECT_LT(sup_norm_distance(full, ref1), 1e-3 * peak(ref1));
    // huge scale: v large, no borrowing
    const auto none = marginal_theta_bhm_single(s, BorrowingPrior::on_v(PriorSpec::inverse_gamma(3, 1e7)));
    const double w0[1] = {0.0};
    const auto ref0 = fixed_weight_theta(s, w0);
    EXPECT_LT(sup_norm_distance(none, ref0), 1e-3 * peak(ref0));
}

TEST(BhmMulti, K1MatchesSingle) {
    const auto s = make_study(NormalSummary(20, 2.0, 0.5), {NormalSummary(20, 1.5, 0.3)});
    for (const auto& p : {BorrowingPrior::on_v(PriorSpec::inverse_gamma(3, 1)), BorrowingPrior::on_v(PriorSpec::half_normal(0.5))}) {
        const auto a = marginal_theta_bhm_single(s, p);
        const auto b = marginal_theta_bhm_multi(s, p);
        EXPECT_LT(sup_norm_distance(a, b), 1e-8) << p.label();
    }
}

TEST(BhmMulti, HeavyTailApproachesNoBorrowing) {
    const auto s = make_study(NormalSummary(30, 0.0, 1.0), {NormalSummary(30, 2.0, 1.0), NormalSummary(30, -2.0, 1.0)});
    const auto g = marginal_theta_bhm_multi(s, BorrowingPrior::on_v(PriorSpec::inverse_gamma(0.5, 1e6)));
    const double w0[2] = {0.0, 0.0};
    const auto ref = fixed_weight_theta(s, w0);
    EXPECT_LT(sup_norm_distance(g, ref), 5e-3 * peak(ref));
}

TEST(Bnpp, FigA2EquivalentToBhmMulti) {
    const auto st = fig_a2_setting();
    const auto p = BorrowingPrior::on_a0(st.prior);
    const auto a = marginal_theta_bnpp(st.study, p);
    const auto b = marginal_theta_bhm_multi(st.study, p);
    EXPECT_LT(sup_norm_distance(a, b), 1e-6);
}

TEST(Bnpp, VNearZeroPoolsEverything) {
    const auto s = make_study(NormalSummary(30, 0.7, 1.0), {NormalSummary(20, 0.7, 2.0), NormalSummary(50, 0.7, 0.5)});
    const auto g = marginal_theta_bnpp(s, BorrowingPrior::on_v(PriorSpec::inverse_gamma(400, 4e-5)));
    const double w1[2] = {1.0, 1.0};
    const auto ref = fixed_weight_theta(s, w1);
    EXPECT_LT(sup_norm_distance(g, ref), 1e-3 * peak(ref));
}

TEST(Inpp, PointMassAtZeroIsNoBorrowing) {
    const auto s = make_study(NormalSummary(30, 0.0, 1.0), {NormalSummary(30, 1.0, 1.0), NormalSummary(60, -1.0, 1.0)});
    const auto g = marginal_theta_inpp(s, {PriorSpec::beta(1, 2000)});
    const double w0[2] = {0.0, 0.0};
    const auto ref = fixed_weight_theta(s, w0);
    EXPECT_LT(sup_norm_distance(g, ref), 0.02 * peak(ref));
}

TEST(Inpp, K1DelegatesAndK3Refused) {
    const auto st = fig_a1_setting();
    EXPECT_LT(sup_norm_distance(marginal_theta_inpp(st.study, {st.prior}), marginal_theta_npp_single(st.study, st.prior)), 1e-14);
    EXPECT_THROW(marginal_theta_inpp(fig_a2_setting().study, {PriorSpec::uniform()}), config_error);
    EXPECT_THROW(marginal_a0k_inpp(fig_a2_setting().study, {PriorSpec::uniform()}), config_error);
    EXPECT_THROW(marginal_theta_inpp(scenario_study("compatible"), {PriorSpec::uniform(), PriorSpec::uniform(), PriorSpec::uniform()}),
                 config_error);
}

TEST(Scenarios, CompatibleAgreement) {
    const auto s = scenario_study("compatible");
    const auto bn = marginal_theta_bnpp(s, BorrowingPrior::on_a0(PriorSpec::uniform()));
    const auto in = marginal_theta_inpp(s, {PriorSpec::uniform()});
    EXPECT_NEAR(grid_mean(bn), grid_mean(in), 0.02);
    EXPECT_LT(grid_sd(bn), std::sqrt(1.0 / 30));
    EXPECT_LT(grid_sd(in), std::sqrt(1.0 / 30));
    // a0k densities increase toward one
    for (auto m : {Model::bnpp, Model::inpp}) {
        for (const auto& g : marginal_a0k(s, m, {PriorSpec::uniform()})) {
            const auto it = std::max_element(g.density.begin(), g.density.end());
            EXPECT_EQ(it - g.density.begin(), static_cast<long>(g.points.size() - 1));
        }
    }
}

TEST(Scenarios, ShiftedBnppDiscountsMore) {
    const auto s = scenario_study("shifted");
    const auto bn = marginal_theta_bnpp(s, BorrowingPrior::on_a0(PriorSpec::uniform()));
    const auto in = marginal_theta_inpp(s, {PriorSpec::uniform()});
    EXPECT_LT(std::abs(grid_mean(bn)), std::abs(grid_mean(in)));
    const auto abn = marginal_a0k(s, Model::bnpp, {PriorSpec::uniform()});
    const auto ain = marginal_a0k(s, Model::inpp, {PriorSpec::uniform()});
    for (std::size_t k = 0; k < 2; ++k) EXPECT_LT(grid_mean(abn[k]), grid_mean(ain[k])) << k;
}

TEST(Scenarios, MixedCompatibility) {
    for (const char* name : {"larger_incompatible", "larger_compatible"}) {
        const auto s = scenario_study(name);
        const std::size_t good = s.historical[0].ybar == 0.0 ? 0 : 1;
        const auto ain = marginal_a0k(s, Model::inpp, {PriorSpec::uniform()});
        EXPECT_GT(grid_mean(ain[good]), grid_mean(ain[1 - good])) << name;
        // BNPP weights follow the sample sizes: the larger dataset always gets less weight
        const auto abn = marginal_a0k(s, Model::bnpp, {PriorSpec::uniform()});
        const std::size_t big = s.historical[0].n > s.historical[1].n ? 0 : 1;
        EXPECT_LT(grid_mean(abn[big]), grid_mean(abn[1 - big])) << name;
    }
}

TEST(A0k, BnppSymmetricAndOrdered) {
    const auto eq = make_study(NormalSummary(30, 0.0, 1.0), {NormalSummary(40, 0.2, 1.0), NormalSummary(40, -0.3, 1.0)});
    const auto g = marginal_a0k(eq, Model::bnpp, {PriorSpec::beta(2, 2)});
    EXPECT_LT(sup_norm_distance(g[0], g[1]), 1e-12);

    const auto un = make_study(NormalSummary(30, 0.0, 1.0), {NormalSummary(80, 0.1, 1.0), NormalSummary(20, 0.1, 1.0)});
    const auto a = marginal_a0k(un, Model::bnpp, {PriorSpec::uniform()});
    const auto c0 = grid_cdf(a[0]), c1 = grid_cdf(a[1]);
    for (double x : {0.1, 0.25, 0.5, 0.75, 0.9}) EXPECT_GT(grid_cdf_at(a[0], c0, x), grid_cdf_at(a[1], c1, x)) << x;
    EXPECT_THROW(marginal_a0k(un, Model::bhm, {PriorSpec::uniform()}), config_error);
    EXPECT_THROW(marginal_a0k(un, Model::bnpp, {PriorSpec::uniform(), PriorSpec::uniform()}), config_error);
}

TEST(Symmetry, SwappingDatasets) {
    const auto s = make_study(NormalSummary(30, 0.0, 1.0), {NormalSummary(30, 0.5, 1.0), NormalSummary(45, -0.8, 2.0)});
    auto t = s;
    std::swap(t.historical[0], t.historical[1]);
    const auto p = BorrowingPrior::on_a0(PriorSpec::uniform());
    EXPECT_LT(sup_norm_distance(marginal_theta_bnpp(s, p), marginal_theta_bnpp(t, p)), 1e-9);
    EXPECT_LT(sup_norm_distance(marginal_theta_bhm_multi(s, p), marginal_theta_bhm_multi(t, p)), 1e-9);
    EXPECT_LT(sup_norm_distance(marginal_theta_inpp(s, {PriorSpec::uniform()}), marginal_theta_inpp(t, {PriorSpec::uniform()})), 1e-9);
    const auto a = marginal_a0k(s, Model::inpp, {PriorSpec::beta(2, 2)});
    const auto b = marginal_a0k(t, Model::inpp, {PriorSpec::beta(2, 2)});
    EXPECT_LT(sup_norm_distance(a[0], b[1]), 1e-9);
    EXPECT_LT(sup_norm_distance(a[1], b[0]), 1e-9);
}

TEST(Normalization, EveryGridIntegratesToOne) {
    const auto s1 = fig_a1_setting();
    const auto s2 = scenario_study("larger_incompatible");
    const auto pa = BorrowingPrior::on_a0(PriorSpec::uniform());
    std::vector<DensityGrid> gs{marginal_theta_npp_single(s1.study, s1.prior),
                                marginal_a0_npp_single(s1.study, s1.prior),
                                marginal_theta_bhm_single(s1.study, BorrowingPrior::on_v(PriorSpec::inverse_gamma(3, 1))),
                                marginal_theta_bnpp(s2, pa),
                                marginal_theta_bhm_multi(s2, pa),
                                marginal_theta_inpp(s2, {PriorSpec::uniform()})};
    for (auto& g : marginal_a0k(s2, Model::bnpp, {PriorSpec::uniform()})) gs.push_back(g);
    for (auto& g : marginal_a0k(s2, Model::inpp, {PriorSpec::uniform()})) gs.push_back(g);
    for (const auto& g : gs) EXPECT_NEAR(trapezoid(g.points, g.density), 1.0, 1e-8);
}
