#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "ivselect/errors.hpp"
#include "ivselect/kernels.hpp"
#include "ivselect/numerics.hpp"

namespace ivselect::numerics {
namespace {

constexpr double kProbClamp = 1e-5;

double soft_threshold(double u, double lambda) {
    if (u > lambda) return u - lambda;
    if (u < -lambda) return u + lambda;
    return 0.0;
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double logistic(double eta) {
    return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

// Standardized training problem. Column j of `z` is (x_j - mean_j) / scale_j.
struct Problem {
    Eigen::MatrixXd z;
    Eigen::VectorXd y;
    Standardization stdz;
    std::size_t n = 0;
    std::size_t p = 0;

    bool usable(std::size_t j) const { return stdz.scale[static_cast<Eigen::Index>(j)] > 0.0; }
    const double* col(std::size_t j) const { return z.col(static_cast<Eigen::Index>(j)).data(); }
};

Problem make_problem(const DesignMatrix& x, std::span<const double> y) {
    Problem pr;
    pr.z = x.standardized();
    pr.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    pr.stdz = x.standardization();
    pr.n = x.rows();
    pr.p = x.cols();
    return pr;
}

void check_inputs(const DesignMatrix& x, std::span<const double> y, Family family) {
    if (y.size() != x.rows()) {
        throw InputError("lasso: response has " + std::to_string(y.size()) + " rows, design has " +
                         std::to_string(x.rows()));
    }
    if (y.empty()) throw InsufficientDataError("lasso: empty sample");
    for (double v : y) {
        if (!std::isfinite(v)) throw InputError("lasso: non-finite response");
    }
    if (family == Family::binomial) {
        bool has0 = false;
        bool has1 = false;
        for (double v : y) {
            if (v == 0.0) {
                has0 = true;
            } else if (v == 1.0) {
                has1 = true;
            } else {
                throw InputError("lasso: binomial response must be 0/1");
            }
        }
        if (!(has0 && has1)) throw DegenerateOutcomeError("lasso: binomial response has a single class");
    }
}

double max_abs_gradient_at_zero(const Problem& pr) {
    const auto& k = kernels::active();
    const double ybar = k.sum(pr.y.data(), pr.n) / static_cast<double>(pr.n);
    Eigen::VectorXd yc = pr.y.array() - ybar;
    double best = 0.0;
    for (std::size_t j = 0; j < pr.p; ++j) {
        if (!pr.usable(j)) continue;
        best = std::max(best, std::abs(k.dot(pr.col(j), yc.data(), pr.n)) / static_cast<double>(pr.n));
    }
    return best;
}

struct PathSolution {
    std::vector<double> intercepts;        // standardized scale
    std::vector<Eigen::VectorXd> betas;    // standardized scale
};

// Covariance-update coordinate descent for
//   (1/2n) ||y - b0 - Z beta||^2 + lambda ||beta||_1.
class GaussianSolver {
public:
    explicit GaussianSolver(const Problem& pr) : pr_(pr) {
        const auto& k = kernels::active();
        const double n = static_cast<double>(pr.n);
        ybar_ = k.sum(pr.y.data(), pr.n) / n;
        Eigen::VectorXd yc = pr.y.array() - ybar_;
        gram_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pr.p), static_cast<Eigen::Index>(pr.p));
        corr_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pr.p));
        for (std::size_t j = 0; j < pr.p; ++j) {
            if (!pr.usable(j)) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            corr_[jj] = k.dot(pr.col(j), yc.data(), pr.n) / n;
            for (std::size_t l = 0; l <= j; ++l) {
                if (!pr.usable(l)) continue;
                const auto ll = static_cast<Eigen::Index>(l);
                gram_(jj, ll) = gram_(ll, jj) = k.dot(pr.col(j), pr.col(l), pr.n) / n;
            }
        }
    }

    double intercept() const { return ybar_; }


    void solve(double lambda, Eigen::VectorXd& beta, const LassoOptions& opt) const {
        Eigen::VectorXd grad = corr_ - gram_ * beta;
        for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
            double max_delta = 0.0;
            for (Eigen::Index j = 0; j < beta.size(); ++j) {
                const double gjj = gram_(j, j);
                if (gjj <= 0.0) continue;
                const double updated = soft_threshold(grad[j] + gjj * beta[j], lambda) / gjj;
                const double delta = updated - beta[j];
                if (delta != 0.0) {
                    beta[j] = updated;
                    grad.noalias() -= delta * gram_.col(j);
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
            if (max_delta < opt.tolerance) return;
        }
    }

private:
    const Problem& pr_;
    double ybar_ = 0.0;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd corr_;
};

// IRLS around naive-update coordinate descent for
//   -(1/n) loglik(b0, beta) + lambda ||beta||_1.
class BinomialSolver {
public:
    explicit BinomialSolver(const Problem& pr)
        : pr_(pr), eta_(pr.n), w_(pr.n), r_(pr.n), v_(pr.p) {}

    void solve(double lambda, double& b0, Eigen::VectorXd& beta, const LassoOptions& opt) {
        const auto& k = kernels::active();
        const std::size_t n = pr_.n;
        const double nd = static_cast<double>(n);
        for (int outer = 0; outer < opt.max_outer; ++outer) {
            eta_.setConstant(b0);
            for (std::size_t j = 0; j < pr_.p; ++j) {
                const double bj = beta[static_cast<Eigen::Index>(j)];
                if (bj != 0.0) k.axpy(bj, pr_.col(j), eta_.data(), n);
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                const double prob = clamp_prob(logistic(eta_[ii]));
                w_[ii] = prob * (1.0 - prob);
                r_[ii] = (pr_.y[ii] - prob) / w_[ii];
            }
            const double sw = k.sum(w_.data(), n) / nd;
            v_.setConstant(-1.0);  // weighted column norms, filled on first use

            const double b0_old = b0;
            const Eigen::VectorXd beta_old = beta;
            inner(lambda, sw, b0, beta, opt);

            double change = std::abs(b0 - b0_old);
            if (beta.size() > 0) change = std::max(change, (beta - beta_old).cwiseAbs().maxCoeff());
            if (change < opt.tolerance) return;
        }
    }

private:
    // One coordinate pass; returns the largest coefficient change.
    double sweep(double lambda, double sw, double& b0, Eigen::VectorXd& beta, bool active_only) {
        const auto& k = kernels::active();
        const std::size_t n = pr_.n;
        const double nd = static_cast<double>(n);
        const double d0 = k.dot(w_.data(), r_.data(), n) / nd / sw;
        double max_delta = std::abs(d0);
        if (d0 != 0.0) {
            b0 += d0;
            r_.array() -= d0;
        }
        for (std::size_t j = 0; j < pr_.p; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            if (!pr_.usable(j)) continue;
            if (active_only && beta[jj] == 0.0) continue;
            const double g = k.wdot(w_.data(), pr_.col(j), r_.data(), n) / nd;
            if (beta[jj] == 0.0 && std::abs(g) <= lambda) continue;
            if (v_[jj] < 0.0) v_[jj] = k.wdot(w_.data(), pr_.col(j), pr_.col(j), n) / nd;
            const double vj = v_[jj];
            if (vj <= 0.0) continue;
            const double updated = soft_threshold(g + vj * beta[jj], lambda) / vj;
            const double delta = updated - beta[jj];
            if (delta != 0.0) {
                beta[jj] = updated;
                k.axpy(-delta, pr_.col(j), r_.data(), n);
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        return max_delta;
    }

    void inner(double lambda, double sw, double& b0, Eigen::VectorXd& beta, const LassoOptions& opt) {
        int sweeps = 0;
        while (sweeps < opt.max_sweeps) {
            double full = sweep(lambda, sw, b0, beta, false);
            ++sweeps;
            if (full < opt.tolerance) return;
            while (sweeps < opt.max_sweeps) {
                const double act = sweep(lambda, sw, b0, beta, true);
                ++sweeps;
                if (act < opt.tolerance) break;
            }
        }
    }

    const Problem& pr_;
    Eigen::VectorXd eta_;
    Eigen::VectorXd w_;
    Eigen::VectorXd r_;
    Eigen::VectorXd v_;
};

PathSolution solve_path(const Problem& pr, Family family, const std::vector<double>& lambdas,
                        const LassoOptions& opt) {
    PathSolution out;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pr.p));
    if (family == Family::gaussian) {
        GaussianSolver solver(pr);
        for (double lambda : lambdas) {
            solver.solve(lambda, beta, opt);
            out.intercepts.push_back(solver.intercept());
            out.betas.push_back(beta);
        }
    } else {
        const double ybar = pr.y.mean();
        double b0 = std::log(ybar / (1.0 - ybar));
        BinomialSolver solver(pr);
        for (double lambda : lambdas) {
            solver.solve(lambda, b0, beta, opt);
            out.intercepts.push_back(b0);
            out.betas.push_back(beta);
        }
    }
    return out;
}


// Map a standardized-scale solution back to raw column units.
void to_raw(const Standardization& s, double b0_std, const Eigen::VectorXd& beta_std,
            double& b0_raw, Eigen::VectorXd& beta_raw) {
    beta_raw = Eigen::VectorXd::Zero(beta_std.size());
    b0_raw = b0_std;
    for (Eigen::Index j = 0; j < beta_std.size(); ++j) {
        if (s.scale[j] > 0.0 && beta_std[j] != 0.0) {
            beta_raw[j] = beta_std[j] / s.scale[j];
            b0_raw -= beta_raw[j] * s.mean[j];
        }
    }
}

LassoFit make_fit(Family family, const Standardization& s, double b0_std, const Eigen::VectorXd& beta_std,
                  double lambda) {
    LassoFit fit;
    fit.family = family;
    fit.lambda = lambda;
    fit.std_intercept = b0_std;
    fit.std_coefficients = beta_std;
    fit.standardization = s;
    to_raw(s, b0_std, beta_std, fit.intercept, fit.coefficients);
    return fit;
}

LassoFit intercept_only(Family family, const DesignMatrix& x, std::span<const double> y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    const double b0 = family == Family::gaussian ? mean : std::log(mean / (1.0 - mean));
    return make_fit(family, x.standardization(), b0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.cols())),
                    0.0);
}

std::vector<double> log_path(double lmax, const LassoOptions& opt) {
    std::vector<double> path(static_cast<std::size_t>(opt.path_length));
    if (opt.path_length == 1) {
        path[0] = lmax;
        return path;
    }
    const double step = std::log(opt.min_ratio) / static_cast<double>(opt.path_length - 1);
    for (int i = 0; i < opt.path_length; ++i) {
        path[static_cast<std::size_t>(i)] = lmax * std::exp(step * i);
    }
    return path;
}

bool has_variance(std::span<const double> y) {
    for (double v : y) {
        if (v != y.front()) return true;
    }
    return false;
}

// Mean held-out deviance contribution (sum, not average) for one path entry.
double heldout_loss(Family family, const Eigen::VectorXd& eta, std::span<const double> y) {
    double loss = 0.0;
    if (family == Family::gaussian) {
        loss = kernels::active().sqdist(eta.data(), y.data(), y.size());
    } else {
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double p = clamp_prob(logistic(eta[static_cast<Eigen::Index>(i)]));
            loss -= 2.0 * (y[i] == 1.0 ? std::log(p) : std::log(1.0 - p));
        }
    }
    return loss;
}

}  // namespace

double lambda_max(const DesignMatrix& x, std::span<const double> y, Family family) {
    check_inputs(x, y, family);
    return max_abs_gradient_at_zero(make_problem(x, y));
}

LassoFit lasso_fit_at(const DesignMatrix& x, std::span<const double> y, Family family, double lambda,
                      const LassoOptions& options) {
    check_inputs(x, y, family);
    if (!(lambda >= 0.0)) throw InputError("lasso: lambda must be non-negative");
    if (family == Family::gaussian && !has_variance(y)) return intercept_only(family, x, y);
    const Problem pr = make_problem(x, y);
    const double lmax = max_abs_gradient_at_zero(pr);
    if (lambda >= lmax) {
        LassoFit fit = intercept_only(family, x, y);
        fit.lambda = lambda;
        return fit;
    }
    const PathSolution sol = solve_path(pr, family, {lambda}, options);
    return make_fit(family, pr.stdz, sol.intercepts[0], sol.betas[0], lambda);
}

LassoFit lasso_fit(const DesignMatrix& x, std::span<const double> y, Family family, int cv_folds,
                   std::uint64_t seed, const LassoOptions& options) {
    check_inputs(x, y, family);
    if (cv_folds < 2) throw InputError("lasso: need at least 2 cross-validation folds");
    const std::size_t n = x.rows();
    if (family == Family::gaussian && !has_variance(y)) {
        LassoFit fit = intercept_only(family, x, y);
        fit.cv_folds = cv_folds;
        return fit;
    }
    const Problem full = make_problem(x, y);
    const double lmax = max_abs_gradient_at_zero(full);
    if (lmax <= 0.0) {
        LassoFit fit = intercept_only(family, x, y);
        fit.cv_folds = cv_folds;
        return fit;
    }
    const std::vector<double> path = log_path(lmax, options);
    const PathSolution sol = solve_path(full, family, path, options);

    const auto folds = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(cv_folds), n / 3));
    if (folds < 2) {
        throw InsufficientDataError("lasso: " + std::to_string(n) + " observations are too few for cross-validation");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

    std::vector<double> loss(path.size(), 0.0);
    std::size_t counted = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(i);
        std::vector<double> y_train(train.size());
        std::vector<double> y_test(test.size());
        for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = y[train[i]];
        for (std::size_t i = 0; i < test.size(); ++i) y_test[i] = y[test[i]];
        const DesignMatrix x_train = x.select_rows(train);
        const DesignMatrix x_test = x.select_rows(test);

        PathSolution fold_sol;
        if (family == Family::binomial) {
            if (!has_variance(y_train)) continue;  // single-class training fold
            fold_sol = solve_path(make_problem(x_train, y_train), family, path, options);
        } else if (!has_variance(y_train)) {
            const double c = y_train.front();
            fold_sol.intercepts.assign(path.size(), c);
            fold_sol.betas.assign(path.size(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.cols())));
        } else {
            fold_sol = solve_path(make_problem(x_train, y_train), family, path, options);
        }

        const auto& k = kernels::active();
        for (std::size_t l = 0; l < path.size(); ++l) {
            double b0 = 0.0;
            Eigen::VectorXd beta;
            to_raw(x_train.standardization(), fold_sol.intercepts[l], fold_sol.betas[l], b0, beta);
            Eigen::VectorXd eta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(test.size()), b0);
            for (Eigen::Index j = 0; j < beta.size(); ++j) {
                if (beta[j] != 0.0) k.axpy(beta[j], x_test.values().col(j).data(), eta.data(), test.size());
            }
            loss[l] += heldout_loss(family, eta, y_test);
        }
        counted += test.size();
    }
    if (counted == 0) throw DegenerateOutcomeError("lasso: every cross-validation training fold is single-class");

    std::size_t best = 0;
    for (std::size_t l = 0; l < path.size(); ++l) {
        loss[l] /= static_cast<double>(counted);
        if (loss[l] < loss[best]) best = l;
    }
    LassoFit fit = make_fit(family, full.stdz, sol.intercepts[best], sol.betas[best], path[best]);
    fit.lambda_path = path;
    fit.cv_error = std::move(loss);
    fit.cv_folds = static_cast<int>(folds);
    return fit;
}

Eigen::VectorXd lasso_predict(const LassoFit& fit, const DesignMatrix& x) {
    if (x.cols() != static_cast<std::size_t>(fit.coefficients.size())) {
        throw InputError("lasso_predict: fit has " + std::to_string(fit.coefficients.size()) +
                         " coefficients, design has " + std::to_string(x.cols()) + " columns");
    }
    const auto& k = kernels::active();
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(x.rows()), fit.intercept);
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        if (fit.coefficients[j] != 0.0) k.axpy(fit.coefficients[j], x.values().col(j).data(), eta.data(), x.rows());
    }
    if (fit.family == Family::binomial) {
        for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = logistic(eta[i]);
    }
    return eta;
}

Eigen::VectorXd lasso_predict_standardized(const LassoFit& fit, const DesignMatrix& x) {
    if (x.cols() != static_cast<std::size_t>(fit.std_coefficients.size())) {
        throw InputError("lasso_predict: dimension mismatch");
    }
    const auto& s = fit.standardization;
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(x.rows()), fit.std_intercept);
    for (Eigen::Index j = 0; j < fit.std_coefficients.size(); ++j) {
        if (fit.std_coefficients[j] == 0.0 || s.scale[j] <= 0.0) continue;
        eta.array() += fit.std_coefficients[j] * ((x.values().col(j).array() - s.mean[j]) / s.scale[j]);
    }
    if (fit.family == Family::binomial) {
        for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = logistic(eta[i]);
    }
    return eta;
}

}  // namespace ivselect::numerics
