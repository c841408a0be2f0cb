#include <cmath>
#include <string>

#include "ivselect/errors.hpp"
#include "ivselect/numerics.hpp"

namespace ivselect::numerics {
namespace {

constexpr double kMinReciprocalCondition = 1e-12;

// Reciprocal condition number of a symmetric PSD matrix after scaling it
// to unit diagonal.
double equilibrated_rcond(const Eigen::MatrixXd& xtx) {
    const Eigen::Index k = xtx.rows();
    if (k == 0) return 1.0;
    Eigen::VectorXd d(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (!(xtx(j, j) > 0.0)) return 0.0;
        d[j] = 1.0 / std::sqrt(xtx(j, j));
    }
    const Eigen::MatrixXd c = d.asDiagonal() * xtx * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    return hi > 0.0 ? lo / hi : 0.0;
}

}  // namespace

OlsFit ols_fit(const DesignMatrix& x, std::span<const double> y, bool intercept) {
    const std::size_t n = x.rows();
    if (y.size() != n) {
        throw InputError("ols: response has " + std::to_string(y.size()) + " rows, design has " + std::to_string(n));
    }
    const std::size_t k = x.cols() + (intercept ? 1 : 0);
    if (n <= k) {
        throw InsufficientDataError("ols: " + std::to_string(n) + " observations for " + std::to_string(k) +
                                    " coefficients");
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw InputError("ols: non-finite response");
    }

    OlsFit fit;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    Eigen::Index col = 0;
    if (intercept) {
        a.col(col++).setOnes();
        fit.names.emplace_back("(intercept)");
    }
    for (std::size_t j = 0; j < x.cols(); ++j) {
        a.col(col++) = x.values().col(static_cast<Eigen::Index>(j));
        fit.names.push_back(x.column_names()[j]);
    }

    const Eigen::MatrixXd xtx = a.transpose() * a;
    // Grow the design one column at a time so the first offending column is named.
    if (equilibrated_rcond(xtx) < kMinReciprocalCondition) {
        for (Eigen::Index m = 1; m <= xtx.rows(); ++m) {
            if (equilibrated_rcond(xtx.topLeftCorner(m, m)) < kMinReciprocalCondition) {
                const auto& name = fit.names[static_cast<std::size_t>(m - 1)];
                throw SingularityError(name, "ols: design is singular at column '" + name + "'");
            }
        }
        throw SingularityError(fit.names.back(), "ols: design is singular");
    }

    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    fit.coefficients = ldlt.solve(a.transpose() * yv);
    fit.fitted = a * fit.coefficients;
    fit.residuals = yv - fit.fitted;
    fit.residual_variance = fit.residuals.squaredNorm() / static_cast<double>(n - k);
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(xtx.rows(), xtx.cols()));
    fit.standard_errors = (fit.residual_variance * inv.diagonal().array()).max(0.0).sqrt();
    fit.t_stats = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < fit.t_stats.size(); ++j) {
        if (fit.standard_errors[j] > 0.0) fit.t_stats[j] = fit.coefficients[j] / fit.standard_errors[j];
    }
    return fit;
}

std::vector<double> first_stage_f_all(const Dataset& data) {
    if (data.n() > 0 && (data.d.array() == data.d[0]).all()) {
        throw DegenerateOutcomeError("first stage: treatment '" + data.treatment_name + "' takes a single value");
    }
    const DesignMatrix q(data.q, data.candidate_names());
    const OlsFit fit = ols_fit(q, as_span(data.d), true);
    std::vector<double> f(data.p());
    for (std::size_t j = 0; j < data.p(); ++j) {
        const double t = fit.t_stats[static_cast<Eigen::Index>(j + 1)];
        f[j] = t * t;
    }
    return f;
}

double first_stage_f(const Dataset& data, std::size_t j) {
    if (j >= data.p()) {
        throw InputError("first_stage_f: candidate index " + std::to_string(j) + " out of range");
    }
    return first_stage_f_all(data)[j];
}

}  // namespace ivselect::numerics
