#include <cmath>
#include <random>
#include <string>

#include "ivselect/errors.hpp"
#include "ivselect/rng.hpp"
#include "ivselect/simulation.hpp"

namespace ivselect::simulation {

void DgpConfig::validate() const {
    if (n < 1) throw ConfigError("dgp: n must be positive");
    if (p < 2) throw ConfigError("dgp: need at least two candidates");
    if (instrument_position < 1 || instrument_position > p) throw ConfigError("dgp: instrument position out of range");
    if (!(std::abs(rho) < 1.0)) throw ConfigError("dgp: rho must lie in (-1, 1)");
    if (!std::isfinite(delta) || !std::isfinite(gamma)) throw ConfigError("dgp: delta and gamma must be finite");
}

Dataset generate(const DgpConfig& config) {
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.n);
    const auto p = static_cast<Eigen::Index>(config.p);
    const auto zi = static_cast<Eigen::Index>(config.instrument_index());
    Rng rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double innovation = std::sqrt(1.0 - config.rho * config.rho);

    Dataset data;
    data.y.resize(n);
    data.d.resize(n);
    data.q.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        double latent = normal(rng);
        for (Eigen::Index j = 0; j < p; ++j) {
            if (j > 0) latent = config.rho * latent + innovation * normal(rng);
            const double pi = 1.0 / (1.0 + std::exp(-latent));
            data.q(i, j) = unif(rng) < pi ? 1.0 : 0.0;
        }
        double index = 0.0;
        std::size_t k = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (j == zi) continue;
            index += config.beta(++k) * data.q(i, j);
        }
        const double z = data.q(i, zi);
        const double w = normal(rng);
        const double u = normal(rng);
        const double v = normal(rng);
        data.d[i] = index + z + config.delta * w + v > 0.0 ? 1.0 : 0.0;
        data.y[i] = data.d[i] + index + config.gamma * z + w + u;
    }
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        data.names.push_back(j == zi ? std::string("z") : "x" + std::to_string(++k));
    }
    return data;
}

}  // namespace ivselect::simulation
