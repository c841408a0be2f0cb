#include "ivselect/scores.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ivselect/errors.hpp"

namespace ivselect::scores {
namespace {

void check_propensity(double p, double eps) {
    if (!(p >= eps && p <= 1.0 - eps) || !(p > 0.0 && p < 1.0)) {
        throw TrimmingViolation("score: propensity " + std::to_string(p) + " outside [" + std::to_string(eps) +
                                ", " + std::to_string(1.0 - eps) + "]");
    }
}

std::vector<double> sorted_copy(std::span<const double> z) {
    std::vector<double> s(z.begin(), z.end());
    std::sort(s.begin(), s.end());
    return s;
}

// Distinct values with counts, ascending.
std::vector<std::pair<double, std::size_t>> level_counts(const std::vector<double>& sorted) {
    std::vector<std::pair<double, std::size_t>> out;
    for (double v : sorted) {
        if (out.empty() || out.back().first != v) {
            out.emplace_back(v, 1);
        } else {
            ++out.back().second;
        }
    }
    return out;
}

InstrumentBinning binary_bins(const std::vector<std::pair<double, std::size_t>>& levels, std::size_t n) {
    InstrumentBinning b;
    b.kind = BinKind::binary;
    b.levels = {{levels.back().first}};
    b.mass = {static_cast<double>(levels.back().second) / static_cast<double>(n)};
    return b;
}

InstrumentBinning discrete_bins(const std::vector<std::pair<double, std::size_t>>& levels, std::size_t n,
                                double rare) {
    const double nd = static_cast<double>(n);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (static_cast<double>(levels[i].second) / nd > rare) kept.push_back(i);
    }
    if (kept.size() < 2) {
        throw DegenerateInstrumentError("bins: fewer than two instrument levels exceed frequency " +
                                        std::to_string(rare));
    }
    InstrumentBinning b;
    b.kind = BinKind::discrete;
    b.levels.resize(kept.size());
    b.mass.assign(kept.size(), 0.0);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        std::size_t target = 0;
        double best = INFINITY;
        for (std::size_t k = 0; k < kept.size(); ++k) {
            const double dist = std::abs(levels[kept[k]].first - levels[i].first);
            if (dist < best) {
                best = dist;
                target = k;
            }
        }
        b.levels[target].push_back(levels[i].first);
        b.mass[target] += static_cast<double>(levels[i].second) / nd;
    }
    for (auto& lv : b.levels) std::sort(lv.begin(), lv.end());
    return b;
}

InstrumentBinning quantile_bins(const std::vector<double>& sorted, std::size_t requested, double rare) {
    const std::size_t n = sorted.size();
    std::vector<double> cuts;
    for (std::size_t l = 1; l < requested; ++l) {
        const std::size_t k = l * n / requested;  // order statistic count below the cut
        if (k == 0 || k >= n) continue;
        const double cut = 0.5 * (sorted[k - 1] + sorted[k]);
        if (cut >= sorted.back()) continue;
        if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
    }
    auto masses = [&](const std::vector<double>& c) {
        std::vector<double> m(c.size() + 1, 0.0);
        std::size_t bin = 0;
        for (double v : sorted) {
            while (bin < c.size() && v > c[bin]) ++bin;
            m[bin] += 1.0 / static_cast<double>(n);
        }
        return m;
    };
    std::vector<double> mass = masses(cuts);
    // Merge undersized bins into their smaller neighbor until all exceed `rare`.
    while (cuts.size() >= 1) {
        auto it = std::min_element(mass.begin(), mass.end());
        if (*it > rare) break;
        const auto l = static_cast<std::size_t>(it - mass.begin());
        std::size_t drop;
        if (l == 0) {
            drop = 0;
        } else if (l + 1 == mass.size()) {
            drop = l - 1;
        } else {
            drop = mass[l - 1] <= mass[l + 1] ? l - 1 : l;
        }
        cuts.erase(cuts.begin() + static_cast<std::ptrdiff_t>(drop));
        mass = masses(cuts);
    }
    if (cuts.empty()) throw DegenerateInstrumentError("bins: quantile cuts collapse to a single bin");
    InstrumentBinning b;
    b.kind = BinKind::quantile;
    b.cuts = std::move(cuts);
    b.mass = std::move(mass);
    return b;
}

}  // namespace

std::string to_string(BinKind k) {
    switch (k) {
        case BinKind::binary: return "binary";
        case BinKind::discrete: return "discrete";
        case BinKind::quantile: return "quantile";
    }
    return "binary";
}

BinKind bin_kind_from_string(const std::string& s) {
    if (s == "binary") return BinKind::binary;
    if (s == "discrete") return BinKind::discrete;
    if (s == "quantile") return BinKind::quantile;
    throw ConfigError("unknown bin kind '" + s + "' (expected binary, discrete or quantile)");
}

int InstrumentBinning::bin_of(double z) const {
    switch (kind) {
        case BinKind::binary:
            return z == levels.front().front() ? 0 : -1;
        case BinKind::discrete: {
            int best = 0;
            double dist = INFINITY;
            for (std::size_t l = 0; l < levels.size(); ++l) {
                for (double v : levels[l]) {
                    if (v == z) return static_cast<int>(l);
                    if (std::abs(v - z) < dist) {
                        dist = std::abs(v - z);
                        best = static_cast<int>(l);
                    }
                }
            }
            return best;
        }
        case BinKind::quantile: {
            const auto it = std::lower_bound(cuts.begin(), cuts.end(), z);
            return static_cast<int>(it - cuts.begin());
        }
    }
    return -1;
}

InstrumentBinning make_bins(std::span<const double> z, std::size_t requested_bins, double rare_threshold) {
    if (z.empty()) throw DegenerateInstrumentError("bins: empty instrument");
    const auto sorted = sorted_copy(z);
    const auto levels = level_counts(sorted);
    if (levels.size() < 2) throw DegenerateInstrumentError("bins: instrument is constant");
    if (levels.size() == 2) return binary_bins(levels, sorted.size());
    if (levels.size() <= std::max<std::size_t>(requested_bins, 2)) {
        return discrete_bins(levels, sorted.size(), rare_threshold);
    }
    return quantile_bins(sorted, std::max<std::size_t>(requested_bins, 2), rare_threshold);
}

InstrumentBinning make_bins_as(BinKind kind, std::span<const double> z, std::size_t requested_bins,
                               double rare_threshold) {
    if (z.empty()) throw DegenerateInstrumentError("bins: empty instrument");
    const auto sorted = sorted_copy(z);
    const auto levels = level_counts(sorted);
    if (levels.size() < 2) throw DegenerateInstrumentError("bins: instrument is constant");
    switch (kind) {
        case BinKind::binary:
            if (levels.size() != 2) {
                throw DegenerateInstrumentError("bins: binary kind requested for " + std::to_string(levels.size()) +
                                                " distinct values");
            }
            return binary_bins(levels, sorted.size());
        case BinKind::discrete:
            return discrete_bins(levels, sorted.size(), rare_threshold);
        case BinKind::quantile:
            return quantile_bins(sorted, std::max<std::size_t>(requested_bins, 2), rare_threshold);
    }
    return binary_bins(levels, sorted.size());
}

ScoreParts binary_parts(double y, double z, const BinaryNuisance& eta, double epsilon_trim) {
    if (z != 0.0 && z != 1.0) throw InputError("score_binary: instrument must be 0 or 1");
    check_propensity(eta.p, epsilon_trim);
    const double contrast = eta.mu1 - eta.mu0;
    const double ipw = (y - eta.mu1) * z / eta.p - (y - eta.mu0) * (1.0 - z) / (1.0 - eta.p);
    return {contrast * contrast, 2.0 * contrast * ipw, contrast, ipw};
}

double score_binary(double y, double z, double theta, const BinaryNuisance& eta, double epsilon_trim) {
    return binary_parts(y, z, eta, epsilon_trim).sum() - theta;
}

ScoreParts multi_parts(double y, int bin, std::span<const double> mu_in, std::span<const double> mu_out,
                       std::span<const double> p, double epsilon_trim) {
    const std::size_t bins = mu_in.size();
    if (mu_out.size() != bins || p.size() != bins) throw InputError("score_multi: nuisance rows differ in length");
    if (bin >= static_cast<int>(bins)) throw InputError("score_multi: bin index out of range");
    ScoreParts parts;
    for (std::size_t l = 0; l < bins; ++l) {
        check_propensity(p[l], epsilon_trim);
        const double contrast = mu_in[l] - mu_out[l];
        const bool inside = bin == static_cast<int>(l);
        const double ipw = inside ? (y - mu_in[l]) / p[l] : -(y - mu_out[l]) / (1.0 - p[l]);
        parts.squared += contrast * contrast;
        parts.cross += 2.0 * contrast * ipw;
        parts.level += contrast;
        parts.ipw += ipw;
    }
    return parts;
}

double score_multi(double y, int bin, double theta, std::span<const double> mu_in, std::span<const double> mu_out,
                   std::span<const double> p, double epsilon_trim) {
    return multi_parts(y, bin, mu_in, mu_out, p, epsilon_trim).sum() - theta;
}

double score_quadratic(double theta, double mu, double m, double zeta) {
    const double diff = mu - m;
    return (diff * diff + zeta) - theta;
}

std::size_t clip_propensities(NuisanceEstimates& eta, double epsilon_trim) {
    std::size_t moved = 0;
    for (Eigen::Index i = 0; i < eta.p.rows(); ++i) {
        for (Eigen::Index l = 0; l < eta.p.cols(); ++l) {
            double& v = eta.p(i, l);
            const double c = std::clamp(v, epsilon_trim, 1.0 - epsilon_trim);
            if (c != v) {
                v = c;
                ++moved;
            }
        }
    }
    eta.trimmed = true;
    eta.trim_warnings += moved;
    return moved;
}

Eigen::VectorXd evaluate_scores(ScoreKind kind, std::span<const double> y, std::span<const int> bins,
                                const NuisanceEstimates& eta, double theta, const ScoreConfig& config,
                                std::span<const double> zeta) {
    const std::size_t n = y.size();
    if (bins.size() != n || eta.rows() != n) throw InputError("evaluate_scores: row counts differ");
    const auto L = static_cast<Eigen::Index>(eta.bins());
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    if (kind == ScoreKind::quadratic) {
        if (zeta.size() != n || static_cast<std::size_t>(eta.m.size()) != n) {
            throw InputError("evaluate_scores: quadratic score needs m and one zeta per row");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            // mu at the observation's own instrument cell
            const double mu = bins[i] >= 0 ? eta.mu_in(ii, bins[i]) : eta.mu_out(ii, 0);
            out[ii] = score_quadratic(theta, mu, eta.m[ii], zeta[i]);
        }
        return out;
    }
    std::vector<double> mu_in(static_cast<std::size_t>(L));
    std::vector<double> mu_out(static_cast<std::size_t>(L));
    std::vector<double> p(static_cast<std::size_t>(L));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (Eigen::Index l = 0; l < L; ++l) {
            mu_in[static_cast<std::size_t>(l)] = eta.mu_in(ii, l);
            mu_out[static_cast<std::size_t>(l)] = eta.mu_out(ii, l);
            p[static_cast<std::size_t>(l)] = eta.p(ii, l);
        }
        out[ii] = score_multi(y[i], bins[i], theta, mu_in, mu_out, p, config.epsilon_trim);
    }
    return out;
}

}  // namespace ivselect::scores
