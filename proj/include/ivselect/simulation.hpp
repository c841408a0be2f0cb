#pragma once

// Simulation design with binary candidates, its exact nuisances, and the
// Monte Carlo harness producing detection-rate tables.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ivselect/crossfit.hpp"
#include "ivselect/dataset.hpp"
#include "ivselect/scores.hpp"
#include "ivselect/selection.hpp"

namespace ivselect::simulation {

struct DgpConfig {
    std::size_t n = 1000;
    std::size_t p = 20;
    double delta = 0.0;
    double gamma = 0.0;
    double rho = 0.5;
    /// 1-based column of the instrument among the candidates.
    std::size_t instrument_position = 20;
    std::size_t confounders = 4;
    double beta_scale = 0.8;
    std::uint64_t seed = 0;

    std::size_t instrument_index() const { return instrument_position - 1; }
    /// Coefficient on covariate k (1-based among non-instrument columns).
    double beta(std::size_t k) const { return k >= 1 && k <= confounders ? beta_scale / static_cast<double>(k) : 0.0; }
    void validate() const;
};

/// Latent AR(1) Gaussian chain with correlation rho^|j-k|, logistic link,
/// Bernoulli candidates; Y = D + X'b + gamma Z + W + U and
/// D = 1{X'b + Z + delta W + V > 0}.
Dataset generate(const DgpConfig& config);

/// Exact conditional moments implied by the design.
class OracleModel {
public:
    explicit OracleModel(DgpConfig config);

    const DgpConfig& config() const { return config_; }

    /// E[Y | D = d, X = x, Z = z] for a full candidate row q (its instrument
    /// entry is ignored).
    double mu(double d, const Eigen::Ref<const Eigen::RowVectorXd>& q, double z) const;
    /// P(D = 1 | X, Z).
    double treatment_probability(const Eigen::Ref<const Eigen::RowVectorXd>& q, double z) const;
    /// P(Z = 1 | X) for each row, by filtering the latent chain on a grid.
    Eigen::VectorXd instrument_probability(const Eigen::MatrixXd& q) const;
    /// P(Z = 1 | D, X) for each row.
    Eigen::VectorXd propensity(const Eigen::VectorXd& d, const Eigen::MatrixXd& q) const;

    /// Nuisance rows for `rows` of `data`, single bin {Z = 1}; m included.
    scores::NuisanceEstimates nuisances(const Dataset& data, const std::vector<std::size_t>& rows) const;

    /// Score-level parameter E[(mu1 - mu0)^2 + (mu1 - mu0)]; exact when
    /// delta = 0, otherwise averaged over `draws` simulated rows.
    double theta0(std::size_t draws = 1000000, std::uint64_t seed = 7) const;

private:
    double index(const Eigen::Ref<const Eigen::RowVectorXd>& q) const;
    DgpConfig config_;
    Eigen::VectorXd grid_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd kernel_;  // (i, k) = transition density from grid_k to grid_i
};

/// Oracle nuisances for the design's instrument; other partitions fall back
/// to `fallback` (lasso by default).
crossfit::NuisanceProvider oracle_provider(const OracleModel& model, crossfit::NuisanceProvider fallback = {});

/// Three-level instrument with softmax assignment on two Gaussian
/// covariates, probit treatment and linear outcome.
struct MultiDgpConfig {
    std::size_t n = 1000;
    double gamma = 0.5;
    std::uint64_t seed = 0;
};

struct MultiSample {
    Dataset data;                   // candidates: x1, x2, z
    scores::InstrumentBinning bins;  // one bin per level
    std::vector<int> bin_of_row;
    scores::NuisanceEstimates oracle;
};

MultiSample generate_multi(const MultiDgpConfig& config);

struct Scenario {
    std::string name;
    std::size_t n = 1000;
    double delta = 0.0;
    double gamma = 0.0;
    std::size_t reps = 100;
    std::uint64_t seed = 1;
    bool operator==(const Scenario&) const = default;
};

/// Parses a JSON array of scenarios or {"scenarios": [...]}. Throws
/// ConfigError on an empty list or invalid field.
std::vector<Scenario> parse_scenarios(const std::string& json_text);
std::vector<Scenario> load_scenarios(const std::string& path);

/// The nine cells of the reference grid.
std::vector<Scenario> default_scenarios(std::size_t reps = 100, std::uint64_t seed = 1);

struct RepOutcome {
    bool ok = false;
    std::string error;
    bool z_tested = false;
    double z_theta = 0.0;
    double z_se = 0.0;
    bool z_in_strong = false;
    bool identified = false;
    long final_instrument = -1;  // -1 when rejected or pooled
    bool det_z = false;
    bool det_x = false;
    bool has_effect = false;
    double effect = 0.0;
    double effect_se = 0.0;
};

struct McMetrics {
    Scenario scenario;
    std::size_t reps = 0;
    std::size_t failures = 0;
    std::size_t est_count = 0;
    double est = 0.0;
    double std = 0.0;
    double mean_se = 0.0;
    double det_z = 0.0;
    double det_x = 0.0;
    double identified = 0.0;
    std::size_t effect_count = 0;
    double effect_mean = 0.0;
    double effect_cover = 0.0;  // share of effect estimates within 3 SE of 1
    bool operator==(const McMetrics&) const = default;
};

struct McOptions {
    std::size_t threads = 1;
    selection::SelectionConfig selection;
    bool estimate_effect = true;
    /// Called after each finished rep with (scenario index, reps done).
    std::function<void(std::size_t, std::size_t)> progress;
};

RepOutcome run_rep(const DgpConfig& dgp, const selection::SelectionConfig& config);

McMetrics summarize(const Scenario& scenario, const std::vector<RepOutcome>& reps);

std::vector<McMetrics> run_monte_carlo(const std::vector<Scenario>& scenarios, const McOptions& options = {});

}  // namespace ivselect::simulation
