#include <cmath>
#include <numbers>
#include <random>

#include "ivselect/errors.hpp"
#include "ivselect/rng.hpp"
#include "ivselect/simulation.hpp"
#include "ivselect/stats.hpp"

namespace ivselect::simulation {
namespace {

constexpr double kGridHalfWidth = 8.0;
constexpr double kGridStep = 0.5;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

OracleModel::OracleModel(DgpConfig config) : config_(config) {
    config_.validate();
    const auto nodes = static_cast<Eigen::Index>(std::lround(2.0 * kGridHalfWidth / kGridStep)) + 1;
    grid_ = Eigen::VectorXd::LinSpaced(nodes, -kGridHalfWidth, kGridHalfWidth);
    weights_ = Eigen::VectorXd::Constant(nodes, kGridStep);
    weights_[0] = weights_[nodes - 1] = 0.5 * kGridStep;
    const double sd = std::sqrt(1.0 - config_.rho * config_.rho);
    kernel_.resize(nodes, nodes);
    for (Eigen::Index i = 0; i < nodes; ++i) {
        for (Eigen::Index k = 0; k < nodes; ++k) {
            kernel_(i, k) = normal_pdf((grid_[i] - config_.rho * grid_[k]) / sd) / sd;
        }
    }
}

double OracleModel::index(const Eigen::Ref<const Eigen::RowVectorXd>& q) const {
    double a = 0.0;
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < q.size(); ++j) {
        if (static_cast<std::size_t>(j) == config_.instrument_index()) continue;
        a += config_.beta(++k) * q[j];
    }
    return a;
}

double OracleModel::treatment_probability(const Eigen::Ref<const Eigen::RowVectorXd>& q, double z) const {
    const double s = std::sqrt(1.0 + config_.delta * config_.delta);
    return stats::normal_cdf((index(q) + z) / s);
}

double OracleModel::mu(double d, const Eigen::Ref<const Eigen::RowVectorXd>& q, double z) const {
    const double a = index(q);
    double w = 0.0;
    if (config_.delta != 0.0) {
        // E[W | D] under the probit threshold with W entering through delta.
        const double s = std::sqrt(1.0 + config_.delta * config_.delta);
        const double t = (a + z) / s;
        const double phi = normal_pdf(t);
        w = d > 0.5 ? config_.delta / s * phi / stats::normal_cdf(t)
                    : -config_.delta / s * phi / stats::normal_cdf(-t);
    }
    return d + a + config_.gamma * z + w;
}

Eigen::VectorXd OracleModel::instrument_probability(const Eigen::MatrixXd& q) const {
    const Eigen::Index n = q.rows();
    const Eigen::Index p = q.cols();
    if (static_cast<std::size_t>(p) != config_.p) throw InputError("oracle: candidate count differs from design");
    const auto pos = static_cast<Eigen::Index>(config_.instrument_index());
    const Eigen::Index G = grid_.size();
    Eigen::VectorXd on(G), off(G);
    for (Eigen::Index g = 0; g < G; ++g) {
        on[g] = logistic(grid_[g]);
        off[g] = 1.0 - on[g];
    }
    auto emit = [&](Eigen::MatrixXd& m, Eigen::Index j) {
        for (Eigen::Index i = 0; i < n; ++i) m.col(i).array() *= (q(i, j) > 0.5 ? on : off).array();
    };
    auto normalize = [](Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.cols(); ++i) m.col(i) /= m.col(i).maxCoeff();
    };

    Eigen::MatrixXd alpha(G, n);
    for (Eigen::Index g = 0; g < G; ++g) alpha.row(g).setConstant(normal_pdf(grid_[g]));
    if (pos != 0) emit(alpha, 0);
    for (Eigen::Index j = 1; j <= pos; ++j) {
        alpha = kernel_ * (weights_.asDiagonal() * alpha);
        if (j != pos) emit(alpha, j);
        normalize(alpha);
    }
    Eigen::MatrixXd beta = Eigen::MatrixXd::Ones(G, n);
    for (Eigen::Index j = p - 1; j > pos; --j) {
        emit(beta, j);
        beta = kernel_.transpose() * (weights_.asDiagonal() * beta);
        normalize(beta);
    }
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::ArrayXd post = weights_.array() * alpha.col(i).array() * beta.col(i).array();
        out[i] = (post * on.array()).sum() / post.sum();
    }
    return out;
}

Eigen::VectorXd OracleModel::propensity(const Eigen::VectorXd& d, const Eigen::MatrixXd& q) const {
    const Eigen::VectorXd pz = instrument_probability(q);
    Eigen::VectorXd out(q.rows());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        const double t1 = treatment_probability(q.row(i), 1.0);
        const double t0 = treatment_probability(q.row(i), 0.0);
        const double l1 = d[i] > 0.5 ? t1 : 1.0 - t1;
        const double l0 = d[i] > 0.5 ? t0 : 1.0 - t0;
        out[i] = pz[i] * l1 / (pz[i] * l1 + (1.0 - pz[i]) * l0);
    }
    return out;
}

scores::NuisanceEstimates OracleModel::nuisances(const Dataset& data, const std::vector<std::size_t>& rows) const {
    const Eigen::MatrixXd q = take_rows(data.q, rows);
    const Eigen::VectorXd d = take_rows(data.d, rows);
    const auto n = static_cast<Eigen::Index>(rows.size());
    scores::NuisanceEstimates eta;
    eta.mu_in.resize(n, 1);
    eta.mu_out.resize(n, 1);
    eta.p = propensity(d, q);
    eta.m.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        eta.mu_in(i, 0) = mu(d[i], q.row(i), 1.0);
        eta.mu_out(i, 0) = mu(d[i], q.row(i), 0.0);
        eta.m[i] = eta.p(i, 0) * eta.mu_in(i, 0) + (1.0 - eta.p(i, 0)) * eta.mu_out(i, 0);
    }
    return eta;
}

double OracleModel::theta0(std::size_t draws, std::uint64_t seed) const {
    if (config_.delta == 0.0) return config_.gamma * config_.gamma + config_.gamma;
    DgpConfig cfg = config_;
    cfg.n = draws;
    cfg.seed = seed;
    const Dataset data = generate(cfg);
    std::vector<double> v(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double c = mu(data.d[ii], data.q.row(ii), 1.0) - mu(data.d[ii], data.q.row(ii), 0.0);
        v[i] = c * c + c;
    }
    return stats::mean(v);
}

crossfit::NuisanceProvider oracle_provider(const OracleModel& model, crossfit::NuisanceProvider fallback) {
    if (!fallback) fallback = crossfit::lasso_learner();
    return [model, fallback](const Dataset& data, const Partition& partition, std::span<const int> bins,
                             const std::vector<std::size_t>& train, const std::vector<std::size_t>& eval,
                             std::uint64_t seed) {
        const bool is_design_instrument = !partition.pooled() &&
                                          partition.instrument() == model.config().instrument_index() &&
                                          partition.binning.kind == scores::BinKind::binary &&
                                          partition.binning.levels.front().front() == 1.0;
        if (!is_design_instrument) return fallback(data, partition, bins, train, eval, seed);
        return model.nuisances(data, eval);
    };
}

}  // namespace ivselect::simulation
