#include "ivselect/stats.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "ivselect/errors.hpp"

namespace ivselect::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double two_sided_p(double t) { return std::erfc(std::abs(t) / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: probability must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("test level alpha must lie in (0, 1)");
    // Upper quantile through the complement keeps precision for small alpha.
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), alpha / 2.0));
}

double chi2_1_critical(double level) {
    if (!(level > 0.0 && level <= 1.0)) throw ConfigError("first-stage level must lie in (0, 1]");
    if (level == 1.0) return 0.0;
    const double z = critical_value(level);
    return z * z;
}

double compensated_sum(std::span<const double> v) {
    double sum = 0.0;
    double comp = 0.0;
    for (double x : v) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return compensated_sum(v) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    double comp = 0.0;
    for (double x : v) {
        const double term = (x - m) * (x - m);
        const double t = ss + term;
        comp += (ss >= term) ? (ss - t) + term : (term - t) + ss;
        ss = t;
    }
    return std::sqrt((ss + comp) / static_cast<double>(v.size() - 1));
}

}  // namespace ivselect::stats
