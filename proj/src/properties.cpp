#include "ivselect/properties.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "ivselect/crossfit.hpp"
#include "ivselect/io.hpp"
#include "ivselect/kernels.hpp"
#include "ivselect/numerics.hpp"
#include "ivselect/rng.hpp"
#include "ivselect/scores.hpp"
#include "ivselect/simulation.hpp"
#include "ivselect/stats.hpp"

namespace ivselect::properties {
namespace {

constexpr double kAltGamma = 0.5;

double total(const scores::ScoreParts& parts, bool corrupt) {
    return corrupt ? parts.squared - parts.cross + parts.level + parts.ipw : parts.sum();
}

GateauxResult fit_linear(const std::vector<std::vector<double>>& psi) {
    // psi[k][i]: score of row i at perturbation kPerturbations[k]
    double r2 = 0.0;
    for (double r : kPerturbations) r2 += r * r;
    const std::size_t n = psi.front().size();
    std::vector<double> b(n, 0.0);
    for (std::size_t k = 0; k < kPerturbations.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) b[i] += kPerturbations[k] * psi[k][i] / r2;
    }
    GateauxResult g;
    g.b1 = stats::mean(b);
    g.se = stats::sample_sd(b) / std::sqrt(static_cast<double>(n));
    return g;
}

simulation::DgpConfig alt_design(const PropertyOptions& o, std::uint64_t key) {
    simulation::DgpConfig cfg;
    cfg.n = o.n;
    cfg.gamma = kAltGamma;
    cfg.seed = derive_seed(o.seed, {key});
    return cfg;
}

std::string describe(const GateauxResult& g) {
    std::ostringstream s;
    s << "b1 = " << io::format_double(g.b1) << ", se = " << io::format_double(g.se);
    return s.str();
}

PropertyResult check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

PropertyResult linearity(const PropertyOptions& o) {
    Rng rng(derive_seed(o.seed, {11}));
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> pu(0.05, 0.95);
    std::size_t bad = 0;
    for (int t = 0; t < 10000; ++t) {
        const double y = u(rng), theta = u(rng);
        const scores::BinaryNuisance eta{u(rng), u(rng), pu(rng)};
        const double z = t % 2;
        if (scores::score_binary(y, z, theta, eta) != scores::score_binary(y, z, 0.0, eta) - theta) ++bad;
        const double mi[2] = {u(rng), u(rng)}, mo[2] = {u(rng), u(rng)}, p[2] = {pu(rng), pu(rng)};
        const int bin = t % 2;
        if (scores::score_multi(y, bin, theta, mi, mo, p) != scores::score_multi(y, bin, 0.0, mi, mo, p) - theta) ++bad;
        const double mu = u(rng), m = u(rng), zeta = u(rng);
        if (scores::score_quadratic(theta, mu, m, zeta) != scores::score_quadratic(0.0, mu, m, zeta) - theta) ++bad;
    }
    return check("score linearity in theta", bad == 0, std::to_string(bad) + " mismatches in 30000 evaluations");
}

PropertyResult reduction(const PropertyOptions& o) {
    Rng rng(derive_seed(o.seed, {12}));
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_real_distribution<double> pu(0.02, 0.98);
    std::size_t bad = 0;
    for (int t = 0; t < 10000; ++t) {
        const double y = u(rng), theta = u(rng);
        const scores::BinaryNuisance eta{u(rng), u(rng), pu(rng)};
        const double z = (t % 3 == 0) ? 1.0 : 0.0;
        const double mi[1] = {eta.mu1}, mo[1] = {eta.mu0}, p[1] = {eta.p};
        if (scores::score_binary(y, z, theta, eta) != scores::score_multi(y, z == 1.0 ? 0 : -1, theta, mi, mo, p)) ++bad;
    }
    return check("single-bin multivalued score equals binary score", bad == 0,
                 std::to_string(bad) + " mismatches in 10000 evaluations");
}

PropertyResult kkt(const PropertyOptions& o) {
    Rng rng(derive_seed(o.seed, {13}));
    std::normal_distribution<double> normal;
    const Eigen::Index n = 300, p = 12;
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = normal(rng) + (j > 0 ? 0.5 * x(i, j - 1) : 0.0);
    }
    Eigen::VectorXd y = 1.5 * x.col(0) - x.col(3) + 0.5 * x.col(7);
    for (Eigen::Index i = 0; i < n; ++i) y[i] += normal(rng);
    const numerics::DesignMatrix dm(x);
    const double lmax = numerics::lambda_max(dm, numerics::as_span(y), numerics::Family::gaussian);
    double worst = 0.0;
    for (double frac : {0.5, 0.1, 0.01}) {
        const double lambda = frac * lmax;
        const auto fit = numerics::lasso_fit_at(dm, numerics::as_span(y), numerics::Family::gaussian, lambda);
        const Eigen::VectorXd r = y - numerics::lasso_predict(fit, dm);
        const Eigen::MatrixXd z = dm.standardized();
        for (Eigen::Index j = 0; j < p; ++j) {
            const double g = z.col(j).dot(r) / static_cast<double>(n);
            const double b = fit.std_coefficients[j];
            const double viol = b == 0.0 ? std::max(0.0, std::abs(g) - lambda) : std::abs(g - lambda * (b > 0 ? 1.0 : -1.0));
            worst = std::max(worst, viol);
        }
    }
    return check("lasso KKT conditions", worst <= 1e-6, "largest violation " + io::format_double(worst));
}

PropertyResult round_trip(const PropertyOptions& o) {
    Rng rng(derive_seed(o.seed, {14}));
    std::normal_distribution<double> normal;
    const Eigen::Index n = 400, p = 6;
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = 10.0 * j + (j + 1) * normal(rng);
    }
    Eigen::VectorXd yb(n);
    for (Eigen::Index i = 0; i < n; ++i) yb[i] = normal(rng) + 0.3 * (x(i, 1) - 10.0) > 0 ? 1.0 : 0.0;
    const numerics::DesignMatrix dm(x);
    const auto fit = numerics::lasso_fit(dm, numerics::as_span(yb), numerics::Family::binomial, 5, 3);
    const double diff = (numerics::lasso_predict(fit, dm) - numerics::lasso_predict_standardized(fit, dm)).cwiseAbs().maxCoeff();
    const double back = (dm.destandardize(dm.standardized()) - x).cwiseAbs().maxCoeff();
    return check("standardization round trip", diff <= 1e-10 && back <= 1e-10,
                 "prediction gap " + io::format_double(diff) + ", column gap " + io::format_double(back));
}

PropertyResult determinism(const PropertyOptions& o) {
    simulation::DgpConfig cfg;
    cfg.n = 600;
    cfg.seed = derive_seed(o.seed, {15});
    const Dataset data = simulation::generate(cfg);
    const Partition part = make_partition(data, cfg.instrument_index());
    crossfit::CrossfitConfig cc;
    const auto a = crossfit::crossfit_theta(data, part, cc, 99);
    cc.threads = 2;
    const auto b = crossfit::crossfit_theta(data, part, cc, 99);
    return check("bit-identical reruns", a == b, "theta " + io::format_double(a.theta_hat) + " vs " + io::format_double(b.theta_hat));
}

PropertyResult kernels_agree(const PropertyOptions& o) {
    const auto* simd = kernels::simd();
    if (!simd) return check("SIMD kernels match scalar", true, "no SIMD kernels on this machine");
    const auto& ref = kernels::scalar();
    Rng rng(derive_seed(o.seed, {16}));
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (std::size_t n : {0, 1, 3, 7, 8, 9, 31, 1000, 4099}) {
        std::vector<double> a(n), b(n), w(n), y1(n), y2(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = normal(rng);
            b[i] = normal(rng);
            w[i] = std::abs(normal(rng));
            y1[i] = y2[i] = normal(rng);
        }
        const double scale = 1e-13 * (1.0 + static_cast<double>(n));
        worst = std::max(worst, std::abs(ref.dot(a.data(), b.data(), n) - simd->dot(a.data(), b.data(), n)) / scale);
        worst = std::max(worst, std::abs(ref.wdot(w.data(), a.data(), b.data(), n) - simd->wdot(w.data(), a.data(), b.data(), n)) / scale);
        worst = std::max(worst, std::abs(ref.sum(a.data(), n) - simd->sum(a.data(), n)) / scale);
        worst = std::max(worst, std::abs(ref.sqdist(a.data(), b.data(), n) - simd->sqdist(a.data(), b.data(), n)) / scale);
        ref.axpy(0.7, a.data(), y1.data(), n);
        simd->axpy(0.7, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(y1[i] - y2[i]) / 1e-15);
    }
    return check("SIMD kernels match scalar (" + std::string(simd->name) + ")", worst <= 1.0,
                 "worst scaled gap " + io::format_double(worst));
}

}  // namespace

double moment_z_binary(const PropertyOptions& o) {
    const auto cfg = alt_design(o, 21);
    const Dataset data = simulation::generate(cfg);
    const simulation::OracleModel model(cfg);
    std::vector<std::size_t> rows(data.n());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto eta = model.nuisances(data, rows);
    const double theta0 = model.theta0();
    std::vector<double> psi(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto zi = static_cast<Eigen::Index>(cfg.instrument_index());
        const auto parts = scores::binary_parts(data.y[ii], data.q(ii, zi), {eta.mu_in(ii, 0), eta.mu_out(ii, 0), eta.p(ii, 0)}, 1e-6);
        psi[i] = total(parts, o.corrupt_score) - theta0;
    }
    return stats::mean(psi) / (stats::sample_sd(psi) / std::sqrt(static_cast<double>(psi.size())));
}

double moment_z_multi(const PropertyOptions& o) {
    const auto s = simulation::generate_multi({o.n, kAltGamma, derive_seed(o.seed, {22})});
    const auto big = simulation::generate_multi({10 * o.n, kAltGamma, derive_seed(o.seed, {23})});
    std::vector<double> level(big.data.n());
    for (std::size_t i = 0; i < level.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        double acc = 0.0;
        for (Eigen::Index l = 0; l < 3; ++l) {
            const double c = big.oracle.mu_in(ii, l) - big.oracle.mu_out(ii, l);
            acc += c * c + c;
        }
        level[i] = acc;
    }
    const double theta0 = stats::mean(level);
    std::vector<double> psi(s.data.n());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const Eigen::RowVectorXd mi = s.oracle.mu_in.row(ii), mo = s.oracle.mu_out.row(ii), p = s.oracle.p.row(ii);
        const auto parts = scores::multi_parts(s.data.y[ii], s.bin_of_row[i], {mi.data(), 3}, {mo.data(), 3}, {p.data(), 3}, 1e-9);
        psi[i] = total(parts, o.corrupt_score) - theta0;
    }
    return stats::mean(psi) / (stats::sample_sd(psi) / std::sqrt(static_cast<double>(psi.size())));
}

GateauxResult gateaux_binary(const PropertyOptions& o) {
    const auto cfg = alt_design(o, 31);
    const Dataset data = simulation::generate(cfg);
    const simulation::OracleModel model(cfg);
    std::vector<std::size_t> rows(data.n());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto eta = model.nuisances(data, rows);
    const double theta0 = model.theta0();
    const auto zi = static_cast<Eigen::Index>(cfg.instrument_index());
    std::vector<std::vector<double>> psi(kPerturbations.size(), std::vector<double>(data.n()));
    for (std::size_t k = 0; k < kPerturbations.size(); ++k) {
        const double r = kPerturbations[k];
        for (std::size_t i = 0; i < data.n(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double h1 = 0.5 * (data.d[ii] - 0.5) + 0.3 * data.q(ii, 0);
            const double h0 = 0.2 - 0.4 * data.q(ii, 1);
            const double p0 = eta.p(ii, 0);
            const double hp = p0 * (1.0 - p0) * (data.q(ii, 2) - 0.5);
            const scores::BinaryNuisance e{eta.mu_in(ii, 0) + r * h1, eta.mu_out(ii, 0) + r * h0, p0 + r * hp};
            psi[k][i] = total(scores::binary_parts(data.y[ii], data.q(ii, zi), e, 1e-9), o.corrupt_score) - theta0;
        }
    }
    return fit_linear(psi);
}

GateauxResult gateaux_multi(const PropertyOptions& o) {
    const auto s = simulation::generate_multi({o.n, kAltGamma, derive_seed(o.seed, {32})});
    std::vector<std::vector<double>> psi(kPerturbations.size(), std::vector<double>(s.data.n()));
    for (std::size_t k = 0; k < kPerturbations.size(); ++k) {
        const double r = kPerturbations[k];
        for (std::size_t i = 0; i < s.data.n(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double x1 = s.data.q(ii, 0), x2 = s.data.q(ii, 1), d = s.data.d[ii];
            double mi[3], mo[3], p[3];
            for (int l = 0; l < 3; ++l) {
                mi[l] = s.oracle.mu_in(ii, l) + r * (0.4 * std::sin(x1 + l) + 0.2 * d);
                mo[l] = s.oracle.mu_out(ii, l) + r * (0.3 * std::cos(x2 - l) - 0.1 * d);
                const double pl = s.oracle.p(ii, l);
                p[l] = pl + r * 0.5 * pl * (1.0 - pl) * std::tanh(x1 - x2 + l);
            }
            psi[k][i] = total(scores::multi_parts(s.data.y[ii], s.bin_of_row[i], mi, mo, p, 1e-9), o.corrupt_score);
        }
    }
    return fit_linear(psi);
}

GateauxResult gateaux_plain(const PropertyOptions& o) {
    const auto cfg = alt_design(o, 33);
    const Dataset data = simulation::generate(cfg);
    const simulation::OracleModel model(cfg);
    std::vector<std::size_t> rows(data.n());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto eta = model.nuisances(data, rows);
    const auto zi = static_cast<Eigen::Index>(cfg.instrument_index());
    std::vector<std::vector<double>> psi(kPerturbations.size(), std::vector<double>(data.n()));
    for (std::size_t k = 0; k < kPerturbations.size(); ++k) {
        const double r = kPerturbations[k];
        for (std::size_t i = 0; i < data.n(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double z = data.q(ii, zi);
            const double mu = (z == 1.0 ? eta.mu_in(ii, 0) : eta.mu_out(ii, 0)) + r * (z - 0.5);
            psi[k][i] = scores::score_quadratic(0.0, mu, eta.m[ii], 0.0);
        }
    }
    return fit_linear(psi);
}

std::vector<PropertyResult> run_property_suite(const PropertyOptions& o) {
    std::vector<PropertyResult> out;
    out.push_back(linearity(o));
    out.push_back(reduction(o));
    const double zb = moment_z_binary(o);
    out.push_back(check("moment condition, binary instrument", std::abs(zb) < 4.0, "z = " + io::format_double(zb)));
    const double zm = moment_z_multi(o);
    out.push_back(check("moment condition, multivalued instrument", std::abs(zm) < 4.0, "z = " + io::format_double(zm)));
    const auto gb = gateaux_binary(o);
    out.push_back(check("orthogonality of the binary score", gb.insensitive(), describe(gb)));
    const auto gm = gateaux_multi(o);
    out.push_back(check("orthogonality of the multivalued score", gm.insensitive(), describe(gm)));
    const auto gp = gateaux_plain(o);
    out.push_back(check("plain difference score is not orthogonal", !gp.insensitive(), describe(gp)));
    out.push_back(kkt(o));
    out.push_back(round_trip(o));
    out.push_back(determinism(o));
    out.push_back(kernels_agree(o));
    return out;
}

}  // namespace ivselect::properties
