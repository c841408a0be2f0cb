#include <cmath>
#include <string>

#include "ivselect/errors.hpp"
#include "ivselect/numerics.hpp"

namespace ivselect::numerics {

std::string to_string(Family f) { return f == Family::gaussian ? "gaussian" : "binomial"; }

DesignMatrix::DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names)
    : values_(std::move(values)), names_(std::move(column_names)) {
    if (names_.empty()) {
        for (Eigen::Index j = 0; j < values_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
    } else if (names_.size() != static_cast<std::size_t>(values_.cols())) {
        throw InputError("design matrix: " + std::to_string(names_.size()) + " names for " +
                         std::to_string(values_.cols()) + " columns");
    }
    if (!values_.allFinite()) throw InputError("design matrix: non-finite entries");

    const auto n = static_cast<double>(values_.rows());
    std_.mean = Eigen::VectorXd::Zero(values_.cols());
    std_.scale = Eigen::VectorXd::Zero(values_.cols());
    if (values_.rows() == 0) return;
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        const auto col = values_.col(j);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / n;
        std_.mean[j] = mean;
        // Guard against round-off variance on constant columns.
        std_.scale[j] = var > 1e-24 * (1.0 + mean * mean) ? std::sqrt(var) : 0.0;
    }
}

Eigen::MatrixXd DesignMatrix::standardized() const {
    Eigen::MatrixXd z(values_.rows(), values_.cols());
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        if (std_.scale[j] > 0.0) {
            z.col(j) = (values_.col(j).array() - std_.mean[j]) / std_.scale[j];
        } else {
            z.col(j).setZero();
        }
    }
    return z;
}

Eigen::MatrixXd DesignMatrix::destandardize(const Eigen::MatrixXd& z) const {
    Eigen::MatrixXd x(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        x.col(j) = z.col(j).array() * std_.scale[j] + std_.mean[j];
    }
    return x;
}

DesignMatrix DesignMatrix::select_rows(const std::vector<std::size_t>& rows) const {
    return DesignMatrix(take_rows(values_, rows), names_);
}

}  // namespace ivselect::numerics
