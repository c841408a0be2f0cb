#include "ivselect/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ivselect/numerics.hpp"
#include "ivselect/parallel.hpp"
#include "ivselect/rng.hpp"
#include "ivselect/stats.hpp"

namespace ivselect::selection {
namespace {

constexpr std::uint64_t kEffectStream = 0xeffec7ULL;
constexpr double kAipwTrim = 0.01;

// Smallest count over (bin, treatment arm) cells. The binary convention has
// an implicit second cell for the value outside the bin.
std::size_t min_cell_count(const Dataset& data, const Partition& part) {
    const auto bins = instrument_bins(data, part);
    std::map<std::pair<int, int>, std::size_t> counts;
    const int L = static_cast<int>(part.binning.size());
    const int lo = part.binning.kind == scores::BinKind::binary ? -1 : 0;
    for (int l = lo; l < L; ++l) {
        counts[{l, 0}] = 0;
        counts[{l, 1}] = 0;
    }
    for (std::size_t i = 0; i < bins.size(); ++i) {
        ++counts[{bins[i], data.d[static_cast<Eigen::Index>(i)] > 0.5 ? 1 : 0}];
    }
    std::size_t m = data.n();
    for (const auto& [key, c] : counts) m = std::min(m, c);
    return m;
}

Eigen::MatrixXd covariate_matrix(const Dataset& data, const Partition& part) {
    Eigen::MatrixXd x(data.q.rows(), static_cast<Eigen::Index>(part.covariates.size()));
    for (std::size_t c = 0; c < part.covariates.size(); ++c) {
        x.col(static_cast<Eigen::Index>(c)) = data.q.col(static_cast<Eigen::Index>(part.covariates[c]));
    }
    return x;
}

std::pair<double, double> aipw_estimate(const Dataset& data, const Partition& part, std::uint64_t seed,
                                        const crossfit::LearnerConfig& learner) {
    const std::size_t n = data.n();
    const auto plan = crossfit::make_folds(n, 2, derive_seed(seed, {0}));
    const Eigen::MatrixXd x = covariate_matrix(data, part);
    std::vector<double> psi(n);
    for (std::size_t k = 0; k < plan.K; ++k) {
        const auto eval = plan.fold(k);
        const auto train = plan.complement(k);
        const numerics::DesignMatrix x_eval(take_rows(x, eval));
        const numerics::DesignMatrix x_train(take_rows(x, train));
        const Eigen::VectorXd d_train = take_rows(data.d, train);
        const auto e_fit = numerics::lasso_fit(x_train, numerics::as_span(d_train), numerics::Family::binomial,
                                               learner.cv_folds, derive_seed(seed, {k, 1}), learner.lasso);
        const Eigen::VectorXd e = numerics::lasso_predict(e_fit, x_eval);
        Eigen::VectorXd mu[2];
        for (int arm = 0; arm < 2; ++arm) {
            std::vector<std::size_t> sub;
            for (std::size_t i : train) {
                if ((data.d[static_cast<Eigen::Index>(i)] > 0.5) == (arm == 1)) sub.push_back(i);
            }
            const numerics::DesignMatrix xs(take_rows(x, sub));
            const Eigen::VectorXd ys = take_rows(data.y, sub);
            const auto fit = numerics::lasso_fit(xs, numerics::as_span(ys), numerics::Family::gaussian,
                                                 learner.cv_folds, derive_seed(seed, {k, 2, static_cast<std::uint64_t>(arm)}),
                                                 learner.lasso);
            mu[arm] = numerics::lasso_predict(fit, x_eval);
        }
        for (std::size_t r = 0; r < eval.size(); ++r) {
            const auto rr = static_cast<Eigen::Index>(r);
            const auto i = static_cast<Eigen::Index>(eval[r]);
            const double p = std::clamp(e[rr], kAipwTrim, 1.0 - kAipwTrim);
            const double d = data.d[i];
            const double y = data.y[i];
            psi[eval[r]] = mu[1][rr] - mu[0][rr] + d * (y - mu[1][rr]) / p - (1.0 - d) * (y - mu[0][rr]) / (1.0 - p);
        }
    }
    const double est = stats::mean(psi);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (psi[i] - est) * (psi[i] - est);
    return {est, std::sqrt(stats::mean(sq) / static_cast<double>(n))};
}

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

}  // namespace

std::string to_string(FinalMode m) { return m == FinalMode::all ? "all" : "pmax"; }

FinalMode final_mode_from_string(const std::string& s) {
    if (s == "pmax") return FinalMode::pmax;
    if (s == "all") return FinalMode::all;
    throw ConfigError("unknown mode '" + s + "' (expected pmax or all)");
}

std::string to_string(Verdict v) { return v == Verdict::identified ? "identified" : "rejected"; }

const CandidateTest* SelectionReport::test_for(std::size_t index) const {
    for (const auto& t : tests) {
        if (t.index == index) return &t;
    }
    return nullptr;
}

double default_fs_level(std::size_t n) { return 0.1 / std::log(static_cast<double>(n)); }

StrongSet select_strong(const Dataset& data, double fs_level, std::size_t min_cell, const BinningOptions& binning) {
    if (!(fs_level > 0.0 && fs_level <= 1.0)) throw ConfigError("select_strong: fs_level must lie in (0, 1]");
    StrongSet s;
    s.fs_level = fs_level;
    s.threshold = stats::chi2_1_critical(fs_level);
    s.f = numerics::first_stage_f_all(data);
    const auto names = data.candidate_names();
    for (std::size_t j = 0; j < s.f.size(); ++j) {
        if (!(s.f[j] >= s.threshold)) continue;
        try {
            const Partition part = make_partition(data, j, binning);
            const std::size_t m = min_cell_count(data, part);
            if (m < min_cell) {
                s.excluded.push_back({j, "candidate " + names[j] + ": smallest bin-by-treatment cell has " +
                                             std::to_string(m) + " rows (< " + std::to_string(min_cell) + ")"});
                continue;
            }
        } catch (const DegenerateInstrumentError& e) {
            s.excluded.push_back({j, "candidate " + names[j] + ": " + e.what()});
            continue;
        }
        s.members.push_back(j);
    }
    return s;
}

bool passes(const crossfit::TestResult& r, double alpha) {
    return std::abs(r.t_stat) < stats::critical_value(alpha);
}

std::vector<CandidateTest> test_all_candidates(const Dataset& data, const std::vector<std::size_t>& strong,
                                               const SelectionConfig& config) {
    std::vector<CandidateTest> out(strong.size());
    const auto provider = config.provider ? config.provider : crossfit::lasso_learner(config.crossfit.learner);
    parallel_for(strong.size(), config.threads, [&](std::size_t c) {
        const std::size_t j = strong[c];
        CandidateTest& t = out[c];
        t.index = j;
        try {
            const Partition part = make_partition(data, j, config.binning);
            t.result = crossfit::crossfit_theta(data, part, config.crossfit, derive_seed(config.seed, {j}), provider);
            t.passed = passes(*t.result, config.alpha);
        } catch (const Error& e) {
            t.error = e.what();
            t.passed = false;
        }
    });
    return out;
}

FinalChoice choose_final(const Dataset& data, const std::vector<CandidateTest>& tests, const StrongSet& strong,
                         FinalMode mode, double alpha, const BinningOptions& binning) {
    std::vector<const CandidateTest*> pass;
    for (const auto& t : tests) {
        if (t.result && passes(*t.result, alpha)) pass.push_back(&t);
    }
    FinalChoice choice;
    if (pass.empty()) return choice;
    choice.verdict = Verdict::identified;
    if (pass.size() == 1) {
        choice.rule = "single";
        choice.partition = make_partition(data, pass.front()->index, binning);
        return choice;
    }
    if (mode == FinalMode::all) {
        std::vector<std::size_t> js;
        for (const auto* t : pass) js.push_back(t->index);
        choice.rule = "all";
        choice.partition = make_pooled_partition(data, js, binning);
        return choice;
    }
    const auto f_of = [&](std::size_t j) { return j < strong.f.size() ? strong.f[j] : 0.0; };
    const CandidateTest* best = pass.front();
    for (const auto* t : pass) {
        const double pt = t->result->p_value;
        const double pb = best->result->p_value;
        if (pt > pb || (pt == pb && (f_of(t->index) > f_of(best->index) ||
                                     (f_of(t->index) == f_of(best->index) && t->index < best->index)))) {
            best = t;
        }
    }
    choice.rule = "pmax";
    choice.partition = make_partition(data, best->index, binning);
    return choice;
}

EffectEstimate estimate_effect(const Dataset& data, const Partition& partition, bool aipw, std::uint64_t seed,
                               const crossfit::LearnerConfig& learner) {
    const auto names = data.candidate_names();
    Eigen::MatrixXd x(data.q.rows(), static_cast<Eigen::Index>(partition.covariates.size() + 1));
    std::vector<std::string> cols{data.treatment_name};
    x.col(0) = data.d;
    for (std::size_t c = 0; c < partition.covariates.size(); ++c) {
        x.col(static_cast<Eigen::Index>(c + 1)) = data.q.col(static_cast<Eigen::Index>(partition.covariates[c]));
        cols.push_back(names[partition.covariates[c]]);
    }
    const auto fit = numerics::ols_fit(numerics::DesignMatrix(x, cols), numerics::as_span(data.y), true);
    EffectEstimate e;
    e.ols = fit.coefficients[1];
    e.ols_se = fit.standard_errors[1];
    if (aipw) {
        try {
            const auto [est, se] = aipw_estimate(data, partition, seed, learner);
            e.aipw = est;
            e.aipw_se = se;
        } catch (const Error& err) {
            e.aipw_error = err.what();
        }
    }
    return e;
}

SelectionReport run_pipeline(const Dataset& data, const SelectionConfig& config) {
    staged("input", [&] { data.validate(); return 0; });
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw PipelineError("config", "alpha must lie in (0, 1)");
    SelectionReport report;
    report.alpha = config.alpha;
    report.critical_value = stats::critical_value(config.alpha);
    report.mode = config.mode;
    report.n = data.n();
    report.candidate_names = data.candidate_names();
    const double fs = config.fs_level.value_or(default_fs_level(data.n()));
    report.strong = staged("first stage", [&] { return select_strong(data, fs, config.min_cell, config.binning); });
    report.tests = staged("candidate tests", [&] { return test_all_candidates(data, report.strong.members, config); });
    for (const auto& t : report.tests) {
        if (t.passed) report.pass_set.push_back(t.index);
    }
    report.final = staged("final choice", [&] {
        return choose_final(data, report.tests, report.strong, config.mode, config.alpha, config.binning);
    });
    if (config.estimate_effect && report.final.verdict == Verdict::identified) {
        report.effect = staged("effect", [&] {
            return estimate_effect(data, *report.final.partition, config.aipw,
                                   derive_seed(config.seed, {kEffectStream}), config.crossfit.learner);
        });
    }
    return report;
}

}  // namespace ivselect::selection
