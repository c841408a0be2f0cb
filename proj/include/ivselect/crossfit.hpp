#pragma once

// K-fold cross-fitted estimation of the conditional mean independence
// parameter, its variance and the normal test.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ivselect/dataset.hpp"
#include "ivselect/numerics.hpp"
#include "ivselect/partition.hpp"
#include "ivselect/scores.hpp"

namespace ivselect::crossfit {

struct FoldPlan {
    std::size_t K = 2;
    std::vector<std::size_t> assignment;
    std::uint64_t seed = 0;

    std::size_t n() const { return assignment.size(); }
    std::vector<std::size_t> fold(std::size_t k) const;
    std::vector<std::size_t> complement(std::size_t k) const;
};

/// Balanced random assignment: fold sizes differ by at most one.
FoldPlan make_folds(std::size_t n, std::size_t K, std::uint64_t seed);

struct LearnerConfig {
    numerics::LassoOptions lasso;
    int cv_folds = 10;
    /// Also fit m(D, X) (legacy quadratic score only).
    bool fit_m = false;
};

/// Produces nuisance rows for `eval` given training rows `train`.
/// `bins` holds the bin index of every row of `data`.
using NuisanceProvider = std::function<scores::NuisanceEstimates(
    const Dataset& data, const Partition& partition, std::span<const int> bins,
    const std::vector<std::size_t>& train, const std::vector<std::size_t>& eval, std::uint64_t seed)>;

/// Lasso nuisances: per bin, separate gaussian lassos of Y on (D, X) inside
/// {Z in bin} and {Z not in bin}, and a binomial lasso of 1(Z in bin) on
/// (D, X); all predicted on `eval`. Propensities are not clipped here.
scores::NuisanceEstimates fit_nuisances(const Dataset& data, const Partition& partition,
                                        std::span<const int> bins, const std::vector<std::size_t>& train,
                                        const std::vector<std::size_t>& eval, const LearnerConfig& learner,
                                        std::uint64_t seed);

NuisanceProvider lasso_learner(LearnerConfig learner = {});

struct CrossfitConfig {
    std::size_t folds = 2;
    LearnerConfig learner;
    scores::ScoreConfig score;
    scores::ScoreKind kind = scores::ScoreKind::orthogonal;
    /// Re-draw the fold plan once on fold degeneracy.
    bool redraw = true;
    std::size_t threads = 1;
};

struct Diagnostics {
    double outcome_r2 = 0.0;           // out-of-fold R^2 of the own-cell outcome mean
    double propensity_deviance = 0.0;  // mean out-of-fold binomial deviance over bins
    bool operator==(const Diagnostics&) const = default;
};

struct TestResult {
    double theta_hat = 0.0;
    double sigma_hat = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::size_t L = 0;
    std::vector<double> per_fold_theta;
    std::size_t trim_warnings = 0;
    Diagnostics diagnostics;
    bool fold_redrawn = false;

    /// Standard error of theta_hat, sigma_hat / sqrt(n).
    double se() const;
    bool operator==(const TestResult&) const = default;
};

struct Aggregate {
    double theta_hat = 0.0;
    double sigma_hat = 0.0;
    std::vector<double> per_fold_theta;
};

/// Fold-mean average of per-row scores at theta = 0 and the pooled
/// standard deviation of the scores at theta_hat.
Aggregate aggregate_scores(std::span<const double> scores, const FoldPlan& plan);

/// Fills t_stat and p_value from theta_hat, sigma_hat and n. Throws
/// DegenerateVarianceError when sigma_hat is zero.
void finalize(TestResult& result);

TestResult crossfit_theta(const Dataset& data, const Partition& partition, const CrossfitConfig& config,
                          std::uint64_t seed, const NuisanceProvider& provider);

TestResult crossfit_theta(const Dataset& data, const Partition& partition, const CrossfitConfig& config,
                          std::uint64_t seed);

/// Predictor matrix (D, X) for the given rows; column 0 is the treatment.
Eigen::MatrixXd treatment_and_covariates(const Dataset& data, const Partition& partition,
                                         const std::vector<std::size_t>& rows);

}  // namespace ivselect::crossfit
