#pragma once

// Per-observation score functions for the conditional mean independence
// test of a candidate instrument.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ivselect::scores {

enum class BinKind { binary, discrete, quantile };

std::string to_string(BinKind k);
BinKind bin_kind_from_string(const std::string& s);

/// Partition of the instrument support into L disjoint bins.
///
/// binary:   one bin holding the larger of the two observed values; the
///           other value belongs to no bin (bin index -1).
/// discrete: bins are sets of observed levels.
/// quantile: bin l is (cuts[l-1], cuts[l]], open-ended at both extremes.
struct InstrumentBinning {
    BinKind kind = BinKind::binary;
    std::vector<std::vector<double>> levels;
    std::vector<double> cuts;
    std::vector<double> mass;

    std::size_t size() const { return mass.size(); }
    int bin_of(double z) const;
    bool contains(double z, std::size_t l) const { return bin_of(z) == static_cast<int>(l); }

    bool operator==(const InstrumentBinning&) const = default;
};

inline constexpr double kDefaultRareBin = 0.05;

/// Builds bins from observed instrument values.
///
/// At most two distinct values give the binary convention. Up to
/// `requested_bins` distinct values give one bin per level, with levels of
/// frequency at most `rare_threshold` merged into the bin of the nearest
/// level. Otherwise equal-probability quantile bins are cut at midpoints
/// between order statistics, and undersized bins are merged into a
/// neighbor. Throws DegenerateInstrumentError on constant input.
InstrumentBinning make_bins(std::span<const double> z, std::size_t requested_bins,
                            double rare_threshold = kDefaultRareBin);

/// Forces a bin kind regardless of the value count (binary needs at most
/// two distinct values).
InstrumentBinning make_bins_as(BinKind kind, std::span<const double> z, std::size_t requested_bins,
                               double rare_threshold = kDefaultRareBin);

struct ScoreConfig {
    double epsilon_trim = 0.01;
    // Legacy quadratic score only; unset means 0.1 * sd(Y).
    std::optional<double> zeta_sd;
};

struct BinaryNuisance {
    double mu1 = 0.0;  // E[Y | D, X, Z = 1]
    double mu0 = 0.0;  // E[Y | D, X, Z = 0]
    double p = 0.5;    // P(Z = 1 | D, X)
};

/// Additive pieces of one orthogonal score evaluation (theta excluded):
/// squared contrast, doubled contrast times the IPW residual, contrast,
/// IPW residual.
struct ScoreParts {
    double squared = 0.0;
    double cross = 0.0;
    double level = 0.0;
    double ipw = 0.0;

    double sum() const { return squared + cross + level + ipw; }
};

ScoreParts binary_parts(double y, double z, const BinaryNuisance& eta, double epsilon_trim);

/// Orthogonal score for a binary instrument z in {0, 1}.
double score_binary(double y, double z, double theta, const BinaryNuisance& eta,
                    double epsilon_trim = 0.01);

ScoreParts multi_parts(double y, int bin, std::span<const double> mu_in, std::span<const double> mu_out,
                       std::span<const double> p, double epsilon_trim);

/// Orthogonal score for a multivalued instrument. `bin` is the bin holding
/// the observation's instrument value (-1 when it lies in none, which only
/// happens under the binary convention).
double score_multi(double y, int bin, double theta, std::span<const double> mu_in,
                   std::span<const double> mu_out, std::span<const double> p, double epsilon_trim = 0.01);

/// Legacy quadratic score (mu - m)^2 - theta + zeta.
double score_quadratic(double theta, double mu, double m, double zeta);

/// Fitted nuisances for n observations and L bins.
struct NuisanceEstimates {
    Eigen::MatrixXd mu_in;   // n x L: E[Y | D, X, Z in bin l]
    Eigen::MatrixXd mu_out;  // n x L: E[Y | D, X, Z not in bin l]
    Eigen::MatrixXd p;       // n x L: P(Z in bin l | D, X)
    Eigen::VectorXd m;       // n: E[Y | D, X]; empty unless requested
    bool trimmed = false;
    std::size_t trim_warnings = 0;

    std::size_t rows() const { return static_cast<std::size_t>(mu_in.rows()); }
    std::size_t bins() const { return static_cast<std::size_t>(mu_in.cols()); }
};

/// Clips propensities into [eps, 1 - eps]; returns how many entries moved.
std::size_t clip_propensities(NuisanceEstimates& eta, double epsilon_trim);

enum class ScoreKind { orthogonal, quadratic };

/// Scores at `theta` for every row. For the quadratic score `zeta` must
/// hold one draw per row.
Eigen::VectorXd evaluate_scores(ScoreKind kind, std::span<const double> y, std::span<const int> bins,
                                const NuisanceEstimates& eta, double theta, const ScoreConfig& config,
                                std::span<const double> zeta = {});

}  // namespace ivselect::scores
