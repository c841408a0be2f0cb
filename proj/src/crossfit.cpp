#include "ivselect/crossfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ivselect/errors.hpp"
#include "ivselect/parallel.hpp"
#include "ivselect/rng.hpp"
#include "ivselect/stats.hpp"

namespace ivselect::crossfit {
namespace {

enum SeedKey : std::uint64_t { kFolds = 1, kOutcomeIn = 2, kOutcomeOut = 3, kPropensity = 4, kMean = 5, kZeta = 6 };

numerics::LassoFit fit_or_degenerate(const numerics::DesignMatrix& x, const Eigen::VectorXd& y,
                                     numerics::Family family, const LearnerConfig& learner,
                                     std::uint64_t seed, const std::string& what) {
    try {
        return numerics::lasso_fit(x, numerics::as_span(y), family, learner.cv_folds, seed, learner.lasso);
    } catch (const DegenerateOutcomeError& e) {
        throw FoldDegeneracyError(what + ": " + e.what());
    } catch (const InsufficientDataError& e) {
        throw FoldDegeneracyError(what + ": " + e.what());
    }
}

std::vector<std::size_t> rows_where(const std::vector<std::size_t>& rows, std::span<const int> bins, int l,
                                    bool inside) {
    std::vector<std::size_t> out;
    for (std::size_t i : rows) {
        if ((bins[i] == l) == inside) out.push_back(i);
    }
    return out;
}

double binomial_deviance(double y, double p) {
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return -2.0 * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

Diagnostics diagnose(const Dataset& data, std::span<const int> bins, const std::vector<std::size_t>& rows,
                     const scores::NuisanceEstimates& eta) {
    Diagnostics d;
    const auto n = rows.size();
    if (n == 0) return d;
    double ybar = 0.0;
    for (std::size_t i : rows) ybar += data.y[static_cast<Eigen::Index>(i)];
    ybar /= static_cast<double>(n);
    double ssr = 0.0;
    double sst = 0.0;
    double dev = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto i = rows[r];
        const auto rr = static_cast<Eigen::Index>(r);
        const double y = data.y[static_cast<Eigen::Index>(i)];
        const double mu = bins[i] >= 0 ? eta.mu_in(rr, bins[i]) : eta.mu_out(rr, 0);
        ssr += (y - mu) * (y - mu);
        sst += (y - ybar) * (y - ybar);
        for (Eigen::Index l = 0; l < eta.p.cols(); ++l) {
            dev += binomial_deviance(bins[i] == static_cast<int>(l) ? 1.0 : 0.0, eta.p(rr, l));
        }
    }
    d.outcome_r2 = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    d.propensity_deviance = dev / static_cast<double>(n * static_cast<std::size_t>(std::max<Eigen::Index>(eta.p.cols(), 1)));
    return d;
}

struct FoldOutput {
    scores::NuisanceEstimates eta;
    Eigen::VectorXd psi;
};

TestResult run_once(const Dataset& data, const Partition& partition, std::span<const int> bins,
                    const CrossfitConfig& config, std::uint64_t seed, std::uint64_t fold_seed,
                    const NuisanceProvider& provider) {
    const std::size_t n = data.n();
    const FoldPlan plan = make_folds(n, config.folds, fold_seed);
    const std::span<const double> y_all = numerics::as_span(data.y);

    double zeta_sd = 0.0;
    if (config.kind == scores::ScoreKind::quadratic) {
        zeta_sd = config.score.zeta_sd.value_or(0.1 * stats::sample_sd(y_all));
    }

    std::vector<FoldOutput> outputs(plan.K);
    parallel_for(plan.K, config.threads, [&](std::size_t k) {
        const auto eval = plan.fold(k);
        const auto train = plan.complement(k);
        auto eta = provider(data, partition, bins, train, eval, derive_seed(seed, {k}));
        if (eta.rows() != eval.size()) throw InputError("crossfit: nuisance rows do not match fold size");
        if (!eta.trimmed) scores::clip_propensities(eta, config.score.epsilon_trim);
        std::vector<double> y(eval.size());
        std::vector<int> b(eval.size());
        std::vector<double> zeta;
        if (config.kind == scores::ScoreKind::quadratic) {
            Rng rng(derive_seed(seed, {k, kZeta}));
            std::normal_distribution<double> normal(0.0, zeta_sd);
            zeta.resize(eval.size());
            for (double& z : zeta) z = zeta_sd > 0.0 ? normal(rng) : 0.0;
        }
        for (std::size_t r = 0; r < eval.size(); ++r) {
            y[r] = y_all[eval[r]];
            b[r] = bins[eval[r]];
        }
        outputs[k].psi = scores::evaluate_scores(config.kind, y, b, eta, 0.0, config.score, zeta);
        outputs[k].eta = std::move(eta);
    });

    std::vector<double> psi(n);
    TestResult result;
    result.n = n;
    result.L = partition.binning.size();
    double r2 = 0.0;
    double dev = 0.0;
    for (std::size_t k = 0; k < plan.K; ++k) {
        const auto eval = plan.fold(k);
        for (std::size_t r = 0; r < eval.size(); ++r) psi[eval[r]] = outputs[k].psi[static_cast<Eigen::Index>(r)];
        result.trim_warnings += outputs[k].eta.trim_warnings;
        const Diagnostics d = diagnose(data, bins, eval, outputs[k].eta);
        r2 += d.outcome_r2 * static_cast<double>(eval.size());
        dev += d.propensity_deviance * static_cast<double>(eval.size());
    }
    result.diagnostics.outcome_r2 = r2 / static_cast<double>(n);
    result.diagnostics.propensity_deviance = dev / static_cast<double>(n);

    Aggregate agg = aggregate_scores(psi, plan);
    result.theta_hat = agg.theta_hat;
    result.sigma_hat = agg.sigma_hat;
    result.per_fold_theta = std::move(agg.per_fold_theta);
    finalize(result);
    return result;
}

}  // namespace

std::vector<std::size_t> FoldPlan::fold(std::size_t k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] == k) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::complement(std::size_t k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] != k) out.push_back(i);
    }
    return out;
}

FoldPlan make_folds(std::size_t n, std::size_t K, std::uint64_t seed) {
    if (K < 2) throw ConfigError("make_folds: K must be at least 2");
    if (n < 2 * K) {
        throw InsufficientDataError("make_folds: n = " + std::to_string(n) + " is below 2K = " +
                                    std::to_string(2 * K));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    // Fisher-Yates with an explicit bounded draw so the permutation does not
    // depend on the standard library's shuffle implementation.
    for (std::size_t i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(perm[i], perm[pick(rng)]);
    }
    FoldPlan plan;
    plan.K = K;
    plan.seed = seed;
    plan.assignment.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r) plan.assignment[perm[r]] = r % K;
    return plan;
}

Eigen::MatrixXd treatment_and_covariates(const Dataset& data, const Partition& partition,
                                         const std::vector<std::size_t>& rows) {
    const auto cols = static_cast<Eigen::Index>(partition.covariates.size() + 1);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(rows[r]);
        const auto rr = static_cast<Eigen::Index>(r);
        x(rr, 0) = data.d[i];
        for (std::size_t c = 0; c < partition.covariates.size(); ++c) {
            x(rr, static_cast<Eigen::Index>(c + 1)) = data.q(i, static_cast<Eigen::Index>(partition.covariates[c]));
        }
    }
    return x;
}

scores::NuisanceEstimates fit_nuisances(const Dataset& data, const Partition& partition,
                                        std::span<const int> bins, const std::vector<std::size_t>& train,
                                        const std::vector<std::size_t>& eval, const LearnerConfig& learner,
                                        std::uint64_t seed) {
    if (bins.size() != data.n()) throw InputError("fit_nuisances: bin vector length differs from n");
    const std::size_t L = partition.binning.size();
    const numerics::DesignMatrix x_eval(treatment_and_covariates(data, partition, eval));
    const auto n_eval = static_cast<Eigen::Index>(eval.size());

    scores::NuisanceEstimates eta;
    eta.mu_in.resize(n_eval, static_cast<Eigen::Index>(L));
    eta.mu_out.resize(n_eval, static_cast<Eigen::Index>(L));
    eta.p.resize(n_eval, static_cast<Eigen::Index>(L));

    const Eigen::MatrixXd x_train_all = treatment_and_covariates(data, partition, train);
    const numerics::DesignMatrix x_train(x_train_all);

    for (std::size_t l = 0; l < L; ++l) {
        const int li = static_cast<int>(l);
        for (bool inside : {true, false}) {
            const auto sub = rows_where(train, bins, li, inside);
            const std::string what = "bin " + std::to_string(l + 1) + (inside ? " (inside)" : " (outside)");
            if (sub.empty()) throw FoldDegeneracyError("fit_nuisances: empty training subsample for " + what);
            const numerics::DesignMatrix xs(treatment_and_covariates(data, partition, sub));
            const Eigen::VectorXd ys = take_rows(data.y, sub);
            const auto fit = fit_or_degenerate(xs, ys, numerics::Family::gaussian, learner,
                                               derive_seed(seed, {l, inside ? kOutcomeIn : kOutcomeOut}), what);
            (inside ? eta.mu_in : eta.mu_out).col(static_cast<Eigen::Index>(l)) = numerics::lasso_predict(fit, x_eval);
        }
        Eigen::VectorXd member(static_cast<Eigen::Index>(train.size()));
        for (std::size_t r = 0; r < train.size(); ++r) member[static_cast<Eigen::Index>(r)] = bins[train[r]] == li ? 1.0 : 0.0;
        const auto fit = fit_or_degenerate(x_train, member, numerics::Family::binomial, learner,
                                           derive_seed(seed, {l, kPropensity}),
                                           "propensity of bin " + std::to_string(l + 1));
        eta.p.col(static_cast<Eigen::Index>(l)) = numerics::lasso_predict(fit, x_eval);
    }
    if (learner.fit_m) {
        const Eigen::VectorXd y_train = take_rows(data.y, train);
        const auto fit = fit_or_degenerate(x_train, y_train, numerics::Family::gaussian, learner,
                                           derive_seed(seed, {kMean}), "outcome mean");
        eta.m = numerics::lasso_predict(fit, x_eval);
    }
    return eta;
}

NuisanceProvider lasso_learner(LearnerConfig learner) {
    return [learner](const Dataset& data, const Partition& partition, std::span<const int> bins,
                     const std::vector<std::size_t>& train, const std::vector<std::size_t>& eval,
                     std::uint64_t seed) { return fit_nuisances(data, partition, bins, train, eval, learner, seed); };
}

double TestResult::se() const {
    return n > 0 ? sigma_hat / std::sqrt(static_cast<double>(n)) : 0.0;
}

Aggregate aggregate_scores(std::span<const double> scores, const FoldPlan& plan) {
    if (scores.size() != plan.n()) throw InputError("aggregate_scores: score count differs from fold plan");
    Aggregate agg;
    agg.per_fold_theta.resize(plan.K);
    for (std::size_t k = 0; k < plan.K; ++k) {
        std::vector<double> v;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (plan.assignment[i] == k) v.push_back(scores[i]);
        }
        agg.per_fold_theta[k] = stats::mean(v);
    }
    agg.theta_hat = stats::mean(agg.per_fold_theta);
    std::vector<double> sq(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double r = scores[i] - agg.theta_hat;
        sq[i] = r * r;
    }
    agg.sigma_hat = std::sqrt(stats::mean(sq));
    return agg;
}

void finalize(TestResult& result) {
    if (!(result.sigma_hat > 0.0) || !std::isfinite(result.sigma_hat)) {
        throw DegenerateVarianceError("crossfit: score variance is zero");
    }
    result.t_stat = std::sqrt(static_cast<double>(result.n)) * result.theta_hat / result.sigma_hat;
    result.p_value = stats::two_sided_p(result.t_stat);
}

TestResult crossfit_theta(const Dataset& data, const Partition& partition, const CrossfitConfig& config,
                          std::uint64_t seed, const NuisanceProvider& provider) {
    validate_partition(partition, data.p());
    if (!(config.score.epsilon_trim > 0.0 && config.score.epsilon_trim < 0.5)) {
        throw ConfigError("crossfit: trimming epsilon must lie in (0, 0.5)");
    }
    const std::vector<int> bins = instrument_bins(data, partition);
    try {
        return run_once(data, partition, bins, config, seed, derive_seed(seed, {kFolds, 0}), provider);
    } catch (const FoldDegeneracyError&) {
        if (!config.redraw) throw;
    }
    TestResult r = run_once(data, partition, bins, config, seed, derive_seed(seed, {kFolds, 1}), provider);
    r.fold_redrawn = true;
    return r;
}

TestResult crossfit_theta(const Dataset& data, const Partition& partition, const CrossfitConfig& config,
                          std::uint64_t seed) {
    LearnerConfig learner = config.learner;
    if (config.kind == scores::ScoreKind::quadratic) learner.fit_m = true;
    return crossfit_theta(data, partition, config, seed, lasso_learner(learner));
}

}  // namespace ivselect::crossfit
