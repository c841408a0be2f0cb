#pragma once

// Regularized and classical regression primitives behind every nuisance
// fit and first-stage statistic.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ivselect/dataset.hpp"

namespace ivselect::numerics {

enum class Family { gaussian, binomial };

std::string to_string(Family f);

/// Per-column location and scale. Scales use the 1/n variance; a column
/// with zero variance gets scale 0 and is never penalized into the model.
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
};

class DesignMatrix {
public:
    DesignMatrix() = default;
    explicit DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names = {});

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& column_names() const { return names_; }
    const Standardization& standardization() const { return std_; }

    /// Columns centered and divided by their scale (constant columns become 0).
    Eigen::MatrixXd standardized() const;
    /// Inverse of standardized() for non-constant columns.
    Eigen::MatrixXd destandardize(const Eigen::MatrixXd& z) const;

    DesignMatrix select_rows(const std::vector<std::size_t>& rows) const;

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
    Standardization std_;
};

struct LassoOptions {
    int path_length = 100;
    double min_ratio = 1e-3;
    double tolerance = 1e-7;
    int max_outer = 100;     // IRLS iterations per lambda (binomial)
    int max_sweeps = 10000;  // coordinate sweeps per subproblem
};

struct LassoFit {
    Family family = Family::gaussian;
    double intercept = 0.0;
    Eigen::VectorXd coefficients;  // raw column scale
    double lambda = 0.0;
    std::vector<double> lambda_path;  // descending
    std::vector<double> cv_error;     // mean CV deviance per path entry
    int cv_folds = 0;

    // Solution on the standardized scale, kept for diagnostics.
    double std_intercept = 0.0;
    Eigen::VectorXd std_coefficients;
    Standardization standardization;
};

/// Cross-validated lasso: 100-point log path from lambda_max to
/// min_ratio * lambda_max, lambda chosen by minimum mean held-out deviance.
LassoFit lasso_fit(const DesignMatrix& x, std::span<const double> y, Family family,
                   int cv_folds, std::uint64_t seed, const LassoOptions& options = {});

/// Single fit at a fixed penalty.
LassoFit lasso_fit_at(const DesignMatrix& x, std::span<const double> y, Family family,
                      double lambda, const LassoOptions& options = {});

/// Smallest penalty with an all-zero solution.
double lambda_max(const DesignMatrix& x, std::span<const double> y, Family family);

/// Linear predictor (gaussian) or fitted probability (binomial).
Eigen::VectorXd lasso_predict(const LassoFit& fit, const DesignMatrix& x);

/// Same prediction evaluated on standardized columns.
Eigen::VectorXd lasso_predict_standardized(const LassoFit& fit, const DesignMatrix& x);

struct OlsFit {
    std::vector<std::string> names;  // "(intercept)" first when fitted
    Eigen::VectorXd coefficients;
    Eigen::VectorXd standard_errors;
    Eigen::VectorXd t_stats;
    double residual_variance = 0.0;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
};

/// Least squares with homoskedastic standard errors. Throws SingularityError
/// naming the first column that makes the equilibrated cross-product matrix
/// numerically singular (reciprocal condition number below 1e-12).
OlsFit ols_fit(const DesignMatrix& x, std::span<const double> y, bool intercept);

/// Squared t statistics of every candidate from the joint regression of the
/// treatment on all candidates with an intercept.
std::vector<double> first_stage_f_all(const Dataset& data);

double first_stage_f(const Dataset& data, std::size_t j);

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace ivselect::numerics
