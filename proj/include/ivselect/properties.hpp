#pragma once

// Built-in numerical checks of the score and estimator properties.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ivselect::properties {

struct PropertyOptions {
    /// Flips the sign of the doubled cross term in the orthogonal scores.
    bool corrupt_score = false;
    std::uint64_t seed = 20240611;
    std::size_t n = 100000;
};

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Linear coefficient of a quadratic fit of the mean score on the
/// perturbation size, with its Monte Carlo standard error.
struct GateauxResult {
    double b1 = 0.0;
    double se = 0.0;
    bool insensitive() const { return b1 < 3.0 * se && -b1 < 3.0 * se; }
};

inline const std::vector<double> kPerturbations{-0.1, -0.05, 0.0, 0.05, 0.1};

GateauxResult gateaux_binary(const PropertyOptions& options);
GateauxResult gateaux_multi(const PropertyOptions& options);
GateauxResult gateaux_plain(const PropertyOptions& options);

/// Mean orthogonal score at the true parameter over its SE.
double moment_z_binary(const PropertyOptions& options);
double moment_z_multi(const PropertyOptions& options);

std::vector<PropertyResult> run_property_suite(const PropertyOptions& options = {});

}  // namespace ivselect::properties
