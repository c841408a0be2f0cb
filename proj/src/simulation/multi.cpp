#include <array>
#include <cmath>
#include <random>

#include "ivselect/rng.hpp"
#include "ivselect/simulation.hpp"
#include "ivselect/stats.hpp"

namespace ivselect::simulation {
namespace {

constexpr int kLevels = 3;

std::array<double, kLevels> level_probabilities(double x1, double x2) {
    const std::array<double, kLevels> s{0.0, 0.5 * x1, -0.5 * x1 + 0.5 * x2};
    std::array<double, kLevels> p{};
    double total = 0.0;
    for (int k = 0; k < kLevels; ++k) total += p[k] = std::exp(s[k]);
    for (double& v : p) v /= total;
    return p;
}

double treatment_index(double x1, double z) { return 0.5 * x1 + 0.4 * z - 0.4; }

double outcome_mean(double d, double x1, double x2, double z, double gamma) {
    return d + 0.5 * x1 - 0.3 * x2 + gamma * z;
}

}  // namespace

MultiSample generate_multi(const MultiDgpConfig& config) {
    const auto n = static_cast<Eigen::Index>(config.n);
    Rng rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    MultiSample s;
    s.data.y.resize(n);
    s.data.d.resize(n);
    s.data.q.resize(n, 3);
    s.data.names = {"x1", "x2", "z"};
    s.oracle.mu_in.resize(n, kLevels);
    s.oracle.mu_out.resize(n, kLevels);
    s.oracle.p.resize(n, kLevels);
    s.bin_of_row.resize(config.n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x1 = normal(rng);
        const double x2 = normal(rng);
        const auto pz = level_probabilities(x1, x2);
        const double u = unif(rng);
        int z = 0;
        for (double acc = pz[0]; z < kLevels - 1 && u >= acc; acc += pz[++z]) {}
        const double d = treatment_index(x1, z) + normal(rng) > 0.0 ? 1.0 : 0.0;
        s.data.q(i, 0) = x1;
        s.data.q(i, 1) = x2;
        s.data.q(i, 2) = z;
        s.data.d[i] = d;
        s.data.y[i] = outcome_mean(d, x1, x2, z, config.gamma) + normal(rng);
        s.bin_of_row[static_cast<std::size_t>(i)] = z;

        std::array<double, kLevels> post{};
        double total = 0.0;
        for (int k = 0; k < kLevels; ++k) {
            const double t = stats::normal_cdf(treatment_index(x1, k));
            total += post[k] = pz[k] * (d > 0.5 ? t : 1.0 - t);
        }
        for (int l = 0; l < kLevels; ++l) {
            const double pl = post[l] / total;
            double out = 0.0;
            for (int k = 0; k < kLevels; ++k) {
                if (k != l) out += outcome_mean(d, x1, x2, k, config.gamma) * post[k] / total;
            }
            s.oracle.p(i, l) = pl;
            s.oracle.mu_in(i, l) = outcome_mean(d, x1, x2, l, config.gamma);
            s.oracle.mu_out(i, l) = out / (1.0 - pl);
        }
    }
    s.bins.kind = scores::BinKind::discrete;
    s.bins.levels = {{0.0}, {1.0}, {2.0}};
    s.bins.mass.assign(kLevels, 0.0);
    for (int b : s.bin_of_row) s.bins.mass[static_cast<std::size_t>(b)] += 1.0 / static_cast<double>(config.n);
    return s;
}

}  // namespace ivselect::simulation
