#include <gtest/gtest.h>

#include <boost/math/distributions/inverse_gamma.hpp>
#include <cmath>
#include <random>

#include "npp/mcmc.hpp"
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

std::vector<std::vector<double>> iid_chains(int m, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m));
    for (auto& c : out)
        for (int i = 0; i < n; ++i) c.push_back(z(rng));
    return out;
}

// raw-data BHM joint on the toy problem, IG(c, d) prior on v
struct ToyBhm {
    oracle::Toy t;
    double c = 3.0, d = 1.0;
    double log_joint(double th, double th0, double mu, double v) const {
        return oracle::raw_loglik(t.y, th, t.sigma2) + oracle::raw_loglik(t.y0, th0, t.sigma02) + oracle::log_norm(th, mu, v) +
               oracle::log_norm(th0, mu, v) - (c + 1) * std::log(v) - d / v;
    }
};

}  // namespace

// ---- diagnostics -----------------------------------------------------------

TEST(Diagnostics, IidReference) {
    const auto ch = iid_chains(4, 5000, 1);
    const auto d = diagnose(ch);
    EXPECT_GE(d.split_rhat, 1.0);
    EXPECT_LE(d.split_rhat, 1.01);
    EXPECT_GE(d.ess, 0.8 * 20000);
    EXPECT_NEAR(d.mcse, d.sd / std::sqrt(d.ess), 1e-15);
}

TEST(Diagnostics, NonMixingFlagged) {
    std::vector<std::vector<double>> ch{std::vector<double>(500, 0.0), std::vector<double>(500, 3.0)};
    EXPECT_GT(diagnose(ch).split_rhat, 1.1);
    // separated but noisy chains too
    auto noisy = iid_chains(2, 1000, 5);
    for (auto& x : noisy[1]) x += 4.0;
    EXPECT_GT(diagnose(noisy).split_rhat, 1.1);
}

TEST(Diagnostics, Ar1EffectiveSize) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z;
    const double phi = 0.9;
    std::vector<std::vector<double>> ch(4);
    for (auto& c : ch) {
        double x = z(rng) / std::sqrt(1 - phi * phi);
        for (int i = 0; i < 20000; ++i) {
            x = phi * x + z(rng);
            c.push_back(x);
        }
    }
    const double ratio = diagnose(ch).ess / 80000.0;
    const double expect = (1 - phi) / (1 + phi);
    EXPECT_NEAR(ratio, expect, 0.5 * expect);
}

TEST(Diagnostics, Errors) {
    EXPECT_THROW(diagnose(iid_chains(1, 500, 1)), config_error);
    EXPECT_THROW(diagnose(iid_chains(4, 99, 1)), config_error);
    auto ragged = iid_chains(2, 200, 1);
    ragged[1].pop_back();
    EXPECT_THROW(diagnose(ragged), config_error);
}

TEST(SamplerConfig, Validation) {
    EXPECT_NO_THROW(SamplerConfig::fig_a1().validate());
    EXPECT_EQ(SamplerConfig::fig_a1().iterations, 10000);
    EXPECT_EQ(SamplerConfig::fig_a2().burn_in, 4000);
    EXPECT_THROW((SamplerConfig{1, 100, 50}.validate()), config_error);
    EXPECT_THROW((SamplerConfig{2, 100, 100}.validate()), config_error);
    EXPECT_THROW((SamplerConfig{2, 100, 0}.validate()), config_error);
    SamplerConfig c;
    c.target_accept = 0.9;
    EXPECT_THROW(c.validate(), config_error);
    c = {};
    c.proposal_scale = 0;
    EXPECT_THROW(c.validate(), config_error);
}

// ---- Gibbs full conditionals against grid slices of the raw joint ---------

TEST(GibbsConditionals, MatchJointSlices) {
    const ToyBhm m;
    const auto s = make_study(NormalSummary(3, oracle::mean(m.t.y), m.t.sigma2), {NormalSummary(3, oracle::mean(m.t.y0), m.t.sigma02)});
    const double th = 1.9, th0 = 1.4, mu = 1.7, v = 0.4;
    const InverseGammaPrior ig{m.c, m.d};
    Rng rng = make_rng(77, 0);
    const int N = 100000;
    std::vector<double> draws(N);

    auto check = [&](const char* what, auto&& draw, auto&& logf, double lo, double hi) {
        for (auto& x : draws) x = draw();
        EXPECT_LT(oracle::ks(draws, oracle::tabulated_cdf(logf, lo, hi)), 0.01) << what;
    };
    check(
        "theta", [&] { double x; detail::draw_from(rng, detail::bhm_theta_conditional(s.current, mu, v), x); return x; },
        [&](double x) { return m.log_joint(x, th0, mu, v); }, -3, 7);
    check(
        "theta0", [&] { double x; detail::draw_from(rng, detail::bhm_theta_conditional(s.historical[0], mu, v), x); return x; },
        [&](double x) { return m.log_joint(th, x, mu, v); }, -3, 6);
    const std::vector<double> both{th, th0};
    check(
        "mu", [&] { double x; detail::draw_from(rng, detail::bhm_mu_conditional(both, v), x); return x; },
        [&](double x) { return m.log_joint(th, th0, x, v); }, -3, 6);
    check(
        "v", [&] { return detail::draw_inverse_gamma(rng, detail::bhm_v_conditional(ig, both, mu)); },
        [&](double x) { return x > 0 ? m.log_joint(th, th0, mu, x) : -1e300; }, 1e-6, 60);
}

// ---- samplers against quadrature ------------------------------------------

TEST(GibbsBhm, FigA2MatchesQuadrature) {
    const auto st = fig_a2_setting();
    const auto induced = BorrowingPrior::induced(InducedVDensity::multi(st.prior, st.study.historical));
    const auto cs = gibbs_bhm(st.study, induced, SamplerConfig::fig_a2(5));
    const auto g = marginal_theta_bhm_multi(st.study, induced);
    EXPECT_LT(ks_statistic(cs.pooled("theta"), g), 0.02);
    EXPECT_EQ(cs.names.size(), 1u + 3 + 2);
}

TEST(GibbsBhm, ConjugateMatchesQuadrature) {
    const auto s = make_study(NormalSummary(30, 0.0, 1.0), {NormalSummary(30, 0.4, 1.0), NormalSummary(60, -0.2, 1.0)});
    const auto p = BorrowingPrior::on_v(PriorSpec::inverse_gamma(3, 1));
    const auto cs = gibbs_bhm(s, p, SamplerConfig{4, 20000, 5000, 8});
    EXPECT_LT(ks_statistic(cs.pooled("theta"), marginal_theta_bhm_multi(s, p)), 0.02);
    for (const auto& [name, d] : cs.diagnostics) EXPECT_LT(d.split_rhat, 1.05) << name;
}

TEST(GibbsBhm, CompletePooling) {
    const auto s = make_study(NormalSummary(30, 0.7, 1.0), {NormalSummary(20, 0.7, 2.0), NormalSummary(50, 0.7, 0.5)});
    const double pooled_var = 1.0 / (30.0 + 10.0 + 100.0);
    for (const auto& p : {BorrowingPrior::on_v(PriorSpec::half_normal(1e-4)), BorrowingPrior::on_v(PriorSpec::inverse_gamma(400, 4e-5))}) {
        const auto cs = gibbs_bhm(s, p, SamplerConfig{4, 6000, 2000, 3});
        const auto& d = cs.diagnostics.at("theta");
        EXPECT_LT(std::abs(d.mean - 0.7), 2 * d.mcse) << p.label();
        EXPECT_NEAR(d.sd, std::sqrt(pooled_var), 0.05 * std::sqrt(pooled_var)) << p.label();
    }
}

TEST(MwgBnpp, FigA2MatchesQuadrature) {
    const auto st = fig_a2_setting();
    const auto p = BorrowingPrior::on_a0(st.prior);
    const auto cs = mwg_bnpp(st.study, p, SamplerConfig::fig_a2(6));
    EXPECT_LT(ks_statistic(cs.pooled("theta"), marginal_theta_bnpp(st.study, p)), 0.02);
    EXPECT_TRUE(cs.warnings.empty());
    // derived chains are consistent with v
    const auto v = cs.pooled("v"), a0 = cs.pooled("a0"), a1 = cs.pooled("a0_1");
    for (std::size_t i = 0; i < v.size(); i += 997) {
        EXPECT_DOUBLE_EQ(a0[i], f_multi(v[i], st.study.historical));
        EXPECT_DOUBLE_EQ(a1[i], h_k(v[i], st.study.historical)[0]);
    }
}

TEST(MwgBnpp, CompatibleModesAtOne) {
    const auto s = scenario_study("compatible");
    const auto cs = mwg_bnpp(s, BorrowingPrior::on_a0(PriorSpec::uniform()), SamplerConfig::fig_a1(2));
    for (const char* k : {"a0_1", "a0_2"}) {
        const auto d = cs.pooled(k);
        const double above = std::count_if(d.begin(), d.end(), [](double x) { return x > 0.5; }) / double(d.size());
        EXPECT_GT(above, 0.5) << k;
    }
}

TEST(MwgBnpp, Deterministic) {
    const auto s = scenario_study("shifted");
    const auto p = BorrowingPrior::on_a0(PriorSpec::uniform());
    const SamplerConfig cfg{3, 1500, 500, 99};
    const auto a = mwg_bnpp(s, p, cfg);
    auto serial = cfg;
    serial.parallel = false;
    const auto b = mwg_bnpp(s, p, serial);
    EXPECT_TRUE(a == b);
    auto other = cfg;
    other.seed = 100;
    EXPECT_FALSE(a == mwg_bnpp(s, p, other));
    EXPECT_TRUE(gibbs_bhm(s, p, cfg) == gibbs_bhm(s, p, cfg));
    EXPECT_TRUE(mwg_inpp(s, {PriorSpec::uniform()}, cfg) == mwg_inpp(s, {PriorSpec::uniform()}, cfg));
}

TEST(MwgBnpp, Exchangeable) {
    const auto s = make_study(NormalSummary(30, 0.0, 1.0), {NormalSummary(30, 0.5, 1.0), NormalSummary(45, -0.8, 2.0)});
    auto t = s;
    std::swap(t.historical[0], t.historical[1]);
    const auto p = BorrowingPrior::on_a0(PriorSpec::uniform());
    const auto a = mwg_bnpp(s, p, SamplerConfig{4, 10000, 5000, 1});
    const auto b = mwg_bnpp(t, p, SamplerConfig{4, 10000, 5000, 2});
    EXPECT_LT(ks_two_sample(a.pooled("theta"), b.pooled("theta")), 0.02);
    EXPECT_LT(ks_two_sample(a.pooled("a0_1"), b.pooled("a0_2")), 0.03);
    const auto c = mwg_inpp(s, {PriorSpec::uniform()}, SamplerConfig{4, 10000, 5000, 1});
    const auto d = mwg_inpp(t, {PriorSpec::uniform()}, SamplerConfig{4, 10000, 5000, 2});
    EXPECT_LT(ks_two_sample(c.pooled("theta"), d.pooled("theta")), 0.02);
}

TEST(MwgInpp, MatchesQuadratureK2) {
    const auto s = scenario_study("compatible");
    const auto cs = mwg_inpp(s, {PriorSpec::uniform()}, SamplerConfig::fig_a1(4));
    EXPECT_LT(ks_statistic(cs.pooled("theta"), marginal_theta_inpp(s, {PriorSpec::uniform()})), 0.02);
}

TEST(MwgInpp, K1IsTheSingleNpp) {
    const auto st = fig_a1_setting();
    const auto cs = mwg_inpp(st.study, {st.prior}, SamplerConfig::fig_a1(5));
    EXPECT_LT(ks_statistic(cs.pooled("theta"), marginal_theta_npp_single(st.study, st.prior)), 0.02);
}

TEST(MwgInpp, PriorsAtOneGiveFullBorrowing) {
    const auto s = make_study(NormalSummary(30, 0.0, 1.0), {NormalSummary(30, 0.3, 1.0), NormalSummary(40, -0.2, 1.0)});
    const auto cs = mwg_inpp(s, {PriorSpec::beta(2000, 1)}, SamplerConfig{4, 6000, 2000, 7});
    const double w1[2] = {1.0, 1.0};
    const auto ref = fixed_weight_theta(s, w1);
    EXPECT_LT(ks_statistic(cs.pooled("theta"), ref), 0.02);
}

TEST(MwgInpp, HandlesThreeDatasets) {
    const auto st = fig_a2_setting();
    const auto cs = mwg_inpp(st.study, {PriorSpec::uniform()}, SamplerConfig{4, 4000, 2000, 1});
    EXPECT_EQ(cs.names, (std::vector<std::string>{"theta", "a0_1", "a0_2", "a0_3"}));
    for (const auto& [name, d] : cs.diagnostics) EXPECT_LT(d.split_rhat, 1.05) << name;
}

// ---- Bernoulli BHM ---------------------------------------------------------

TEST(BernoulliBhm, PriorOnlyRecoversPrior) {
    const std::vector<TwoArmBinomialSummary> trials{{50, 20, 50, 15}, {60, 30, 60, 25}, {80, 40, 80, 30}};
    const auto cs = mh_bernoulli_bhm(trials, BorrowingPrior::on_v(PriorSpec::inverse_gamma(3, 1)), SamplerConfig{4, 20000, 2000, 4}, true);
    const boost::math::inverse_gamma_distribution<> ig(3.0, 1.0);
    EXPECT_LT(ks_statistic(cs.pooled("v"), [&](double x) { return boost::math::cdf(ig, x); }), 0.02);
}

TEST(BernoulliBhm, LargeCountsMatchNormalApproximation) {
    const std::vector<TwoArmBinomialSummary> trials{{400, 220, 400, 180}, {500, 260, 500, 230}, {450, 250, 450, 210}};
    const auto p = BorrowingPrior::on_v(PriorSpec::inverse_gamma(3, 0.1));
    const auto cs = mh_bernoulli_bhm(trials, p, SamplerConfig{4, 20000, 5000, 12});
    const auto g = marginal_theta_bhm_multi(study_from_trials(trials), p);
    EXPECT_LT(ks_statistic(cs.pooled("theta"), g), 0.05);
}

TEST(BernoulliBhm, CompletePooling) {
    const std::vector<TwoArmBinomialSummary> trials(3, TwoArmBinomialSummary{200, 120, 200, 90});
    const auto cs = mh_bernoulli_bhm(trials, BorrowingPrior::on_v(PriorSpec::inverse_gamma(400, 4e-5)), SamplerConfig{4, 8000, 3000, 2});
    const double pooled = std::log(120.0 / 80.0) - std::log(90.0 / 110.0);
    const double se = std::sqrt((1 / 120.0 + 1 / 80.0 + 1 / 90.0 + 1 / 110.0) / 3.0);
    const auto& d = cs.diagnostics.at("theta");
    EXPECT_NEAR(d.mean, pooled, 0.1 * se);
    EXPECT_NEAR(d.sd, se, 0.1 * se);
}

TEST(BernoulliBhm, Errors) {
    const auto p = BorrowingPrior::on_v(PriorSpec::inverse_gamma(3, 1));
    EXPECT_THROW(mh_bernoulli_bhm({{50, 0, 50, 10}, {50, 10, 50, 10}}, p, SamplerConfig{}), config_error);
    EXPECT_THROW(mh_bernoulli_bhm({{50, 10, 50, 10}}, p, SamplerConfig{}), config_error);
    EXPECT_THROW(mh_bernoulli_bhm({{50, 10, 50, 10}, {50, 10, 50, 10}}, BorrowingPrior::on_a0(PriorSpec::uniform()), SamplerConfig{}),
                 config_error);
}
