#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ivselect/crossfit.hpp"
#include "ivselect/errors.hpp"
#include "ivselect/simulation.hpp"
#include "ivselect/stats.hpp"

using namespace ivselect;
using crossfit::make_folds;

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), 0);
    return r;
}

Dataset coin_flip_instrument(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::bernoulli_distribution coin(0.5);
    Dataset d;
    const auto ni = static_cast<Eigen::Index>(n);
    d.y.resize(ni);
    d.d.resize(ni);
    d.q.resize(ni, 3);
    for (Eigen::Index i = 0; i < ni; ++i) {
        d.q(i, 0) = normal(rng);
        d.q(i, 1) = normal(rng);
        d.q(i, 2) = coin(rng) ? 1.0 : 0.0;
        d.d[i] = d.q(i, 0) + normal(rng) > 0 ? 1.0 : 0.0;
        d.y[i] = d.d[i] + 0.5 * d.q(i, 1) + normal(rng);
    }
    d.names = {"x1", "x2", "z"};
    return d;
}

}  // namespace

TEST(Folds, BalancedSizes) {
    const auto a = make_folds(10, 2, 1);
    EXPECT_EQ(a.fold(0).size(), 5u);
    EXPECT_EQ(a.fold(1).size(), 5u);
    const auto b = make_folds(11, 2, 1);
    std::multiset<std::size_t> sizes{b.fold(0).size(), b.fold(1).size()};
    EXPECT_EQ(sizes, (std::multiset<std::size_t>{5, 6}));
    EXPECT_EQ(b.fold(0).size() + b.complement(0).size(), 11u);
}

TEST(Folds, DeterministicPerSeed) {
    EXPECT_EQ(make_folds(101, 3, 9).assignment, make_folds(101, 3, 9).assignment);
    EXPECT_NE(make_folds(101, 3, 9).assignment, make_folds(101, 3, 10).assignment);
}

TEST(Folds, RejectsTooFewRows) {
    EXPECT_THROW(make_folds(3, 2, 0), InsufficientDataError);
    EXPECT_THROW(make_folds(10, 1, 0), ConfigError);
}

TEST(Aggregate, FoldMeansAndPooledVariance) {
    crossfit::FoldPlan plan;
    plan.K = 2;
    plan.assignment = {0, 0, 1, 1, 1, 1};
    const std::vector<double> s{1, 3, 0, 0, 0, 4};
    const auto a = crossfit::aggregate_scores(s, plan);
    EXPECT_DOUBLE_EQ(a.per_fold_theta[0], 2.0);
    EXPECT_DOUBLE_EQ(a.per_fold_theta[1], 1.0);
    EXPECT_DOUBLE_EQ(a.theta_hat, 1.5);
    // squared deviations from 1.5: .25 2.25 2.25 2.25 2.25 6.25
    EXPECT_NEAR(a.sigma_hat, std::sqrt(15.5 / 6.0), 1e-15);
}

TEST(Aggregate, ZeroVarianceIsDegenerate) {
    crossfit::TestResult r;
    r.theta_hat = 1.0;
    r.sigma_hat = 0.0;
    r.n = 10;
    EXPECT_THROW(crossfit::finalize(r), DegenerateVarianceError);
    r.sigma_hat = 2.0;
    r.theta_hat = 0.0;
    crossfit::finalize(r);
    EXPECT_EQ(r.t_stat, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(Nuisances, ConstantOutcomeGivesZeroContrasts) {
    auto data = coin_flip_instrument(400, 1);
    data.y.setConstant(2.0);
    const auto part = make_partition(data, 2);
    const auto bins = instrument_bins(data, part);
    const auto plan = make_folds(data.n(), 2, 3);
    const auto eta = crossfit::fit_nuisances(data, part, bins, plan.complement(0), plan.fold(0), {}, 5);
    EXPECT_LT((eta.mu_in.array() - 2.0).abs().maxCoeff(), 1e-12);
    EXPECT_LT((eta.mu_in - eta.mu_out).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Nuisances, CoinFlipPropensityCalibrated) {
    const auto data = coin_flip_instrument(4000, 2);
    const auto part = make_partition(data, 2);
    const auto bins = instrument_bins(data, part);
    const auto plan = make_folds(data.n(), 2, 4);
    const auto eta = crossfit::fit_nuisances(data, part, bins, plan.complement(0), plan.fold(0), {}, 6);
    const double mean_p = eta.p.col(0).mean();
    EXPECT_GE(mean_p, 0.45);
    EXPECT_LE(mean_p, 0.55);
}

TEST(Nuisances, EmptyBinInTrainingFoldIsDegenerate) {
    auto data = coin_flip_instrument(200, 3);
    const auto part = make_partition(data, 2);
    const auto bins = instrument_bins(data, part);
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < data.n(); ++i)
        if (bins[i] < 0) train.push_back(i);
    EXPECT_THROW(crossfit::fit_nuisances(data, part, bins, train, all_rows(10), {}, 1), FoldDegeneracyError);
}

TEST(Nuisances, ContrastsShrinkWithSampleSize) {
    auto mean_contrast = [](std::size_t n, std::uint64_t seed) {
        simulation::DgpConfig cfg;
        cfg.n = n;
        cfg.seed = seed;
        const auto data = simulation::generate(cfg);
        const auto part = make_partition(data, cfg.instrument_index());
        const auto bins = instrument_bins(data, part);
        const auto plan = make_folds(n, 2, seed);
        const auto eta = crossfit::fit_nuisances(data, part, bins, plan.complement(0), plan.fold(0), {}, seed);
        return (eta.mu_in - eta.mu_out).cwiseAbs().mean();
    };
    double small = 0.0, large = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        small += mean_contrast(1000, 500 + s);
        large += mean_contrast(16000, 500 + s);
    }
    EXPECT_LT(large, small);
}

TEST(Crossfit, OracleNuisancesHaveCorrectSize) {
    int inside = 0;
    const double c = stats::normal_quantile(0.995);
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        simulation::DgpConfig cfg;
        cfg.n = 4000;
        cfg.seed = 9000 + rep;
        const auto data = simulation::generate(cfg);
        const simulation::OracleModel model(cfg);
        const auto part = make_partition(data, cfg.instrument_index());
        const auto r = crossfit::crossfit_theta(data, part, {}, rep, simulation::oracle_provider(model));
        inside += std::abs(r.t_stat) < c ? 1 : 0;
    }
    EXPECT_GE(inside, 97);
}

TEST(Crossfit, ShiftOfOutcomeLeavesTestUnchanged) {
    simulation::DgpConfig cfg;
    cfg.n = 800;
    cfg.seed = 17;
    auto data = simulation::generate(cfg);
    const auto part = make_partition(data, cfg.instrument_index());
    const auto a = crossfit::crossfit_theta(data, part, {}, 5);
    data.y.array() += 10.0;
    const auto b = crossfit::crossfit_theta(data, part, {}, 5);
    EXPECT_NEAR(a.theta_hat, b.theta_hat, 1e-6);
    EXPECT_NEAR(a.sigma_hat, b.sigma_hat, 1e-6);
}

TEST(Crossfit, ResultFieldsConsistent) {
    simulation::DgpConfig cfg;
    cfg.n = 800;
    cfg.seed = 18;
    const auto data = simulation::generate(cfg);
    const auto part = make_partition(data, cfg.instrument_index());
    const auto r = crossfit::crossfit_theta(data, part, {}, 6);
    EXPECT_EQ(r.n, 800u);
    EXPECT_EQ(r.L, 1u);
    ASSERT_EQ(r.per_fold_theta.size(), 2u);
    EXPECT_NEAR(r.theta_hat, 0.5 * (r.per_fold_theta[0] + r.per_fold_theta[1]), 1e-12);
    EXPECT_NEAR(r.t_stat, std::sqrt(800.0) * r.theta_hat / r.sigma_hat, 1e-12);
    EXPECT_NEAR(r.p_value, stats::two_sided_p(r.t_stat), 1e-15);
    EXPECT_NEAR(r.se(), r.sigma_hat / std::sqrt(800.0), 1e-15);
}

TEST(Crossfit, PValueDecreasesInAbsoluteT) {
    double prev = 1.0;
    for (double t : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double p = stats::two_sided_p(t);
        EXPECT_LE(p, prev);
        EXPECT_EQ(p, stats::two_sided_p(-t));
        prev = p;
    }
}

TEST(Crossfit, ThreadCountDoesNotChangeResult) {
    simulation::DgpConfig cfg;
    cfg.n = 600;
    cfg.seed = 19;
    const auto data = simulation::generate(cfg);
    const auto part = make_partition(data, cfg.instrument_index());
    crossfit::CrossfitConfig cc;
    const auto a = crossfit::crossfit_theta(data, part, cc, 8);
    cc.threads = 2;
    EXPECT_EQ(a, crossfit::crossfit_theta(data, part, cc, 8));
}

TEST(Crossfit, QuadraticScoreRuns) {
    simulation::DgpConfig cfg;
    cfg.n = 600;
    cfg.seed = 20;
    const auto data = simulation::generate(cfg);
    const auto part = make_partition(data, cfg.instrument_index());
    crossfit::CrossfitConfig cc;
    cc.kind = scores::ScoreKind::quadratic;
    const auto r = crossfit::crossfit_theta(data, part, cc, 8);
    EXPECT_TRUE(std::isfinite(r.t_stat));
    EXPECT_GT(r.sigma_hat, 0.0);
}
