#pragma once

#include <span>

namespace ivselect::stats {

/// Standard normal CDF.
double normal_cdf(double x);

/// Two-sided normal p-value 2 * (1 - Phi(|t|)), computed without cancellation.
double two_sided_p(double t);

/// Standard normal quantile.
double normal_quantile(double p);

/// Two-sided critical value Phi^{-1}(1 - alpha / 2).
double critical_value(double alpha);

/// Upper-tail chi-square(1) critical value at `level`.
double chi2_1_critical(double level);

/// Compensated (Neumaier) sum; the result does not depend on how the
/// caller orders equal-magnitude terms beyond rounding of the final value.
double compensated_sum(std::span<const double> v);

double mean(std::span<const double> v);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> v);

}  // namespace ivselect::stats
