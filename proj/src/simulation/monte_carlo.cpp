#include <algorithm>
#include <cmath>
#include <mutex>

#include "ivselect/parallel.hpp"
#include "ivselect/rng.hpp"
#include "ivselect/simulation.hpp"
#include "ivselect/stats.hpp"

namespace ivselect::simulation {

RepOutcome run_rep(const DgpConfig& dgp, const selection::SelectionConfig& config) {
    RepOutcome out;
    try {
        const Dataset data = generate(dgp);
        const std::size_t zi = dgp.instrument_index();
        const auto report = selection::run_pipeline(data, config);
        out.z_in_strong = std::find(report.strong.members.begin(), report.strong.members.end(), zi) !=
                          report.strong.members.end();
        std::optional<crossfit::TestResult> z;
        if (const auto* t = report.test_for(zi); t && t->result) {
            z = t->result;
        } else if (!report.test_for(zi)) {
            try {
                const auto provider = config.provider ? config.provider : crossfit::lasso_learner(config.crossfit.learner);
                z = crossfit::crossfit_theta(data, make_partition(data, zi, config.binning), config.crossfit,
                                             derive_seed(config.seed, {zi}), provider);
            } catch (const Error&) {
            }
        }
        if (z) {
            out.z_tested = true;
            out.z_theta = z->theta_hat;
            out.z_se = z->se();
        }
        out.identified = report.final.verdict == selection::Verdict::identified;
        if (out.identified && !report.final.partition->pooled()) {
            const std::size_t j = report.final.partition->instrument();
            out.final_instrument = static_cast<long>(j);
            out.det_z = j == zi;
            // Confounders are the first non-instrument columns.
            const std::size_t rank = j < zi ? j + 1 : j;
            out.det_x = j != zi && rank >= 1 && rank <= dgp.confounders;
        }
        if (report.effect) {
            out.has_effect = true;
            out.effect = report.effect->ols;
            out.effect_se = report.effect->ols_se;
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

McMetrics summarize(const Scenario& scenario, const std::vector<RepOutcome>& reps) {
    McMetrics m;
    m.scenario = scenario;
    std::vector<double> est, se, effects;
    std::size_t ok = 0, dz = 0, dx = 0, ident = 0, cover = 0;
    for (const auto& r : reps) {
        if (!r.ok) {
            ++m.failures;
            continue;
        }
        ++ok;
        if (r.z_tested) {
            est.push_back(r.z_theta);
            se.push_back(r.z_se);
        }
        dz += r.det_z ? 1 : 0;
        dx += r.det_x ? 1 : 0;
        ident += r.identified ? 1 : 0;
        if (r.has_effect) {
            effects.push_back(r.effect);
            if (std::abs(r.effect - 1.0) <= 3.0 * r.effect_se) ++cover;
        }
    }
    m.reps = ok;
    m.est_count = est.size();
    m.est = stats::mean(est);
    m.std = stats::sample_sd(est);
    m.mean_se = stats::mean(se);
    const double denom = ok > 0 ? static_cast<double>(ok) : 1.0;
    m.det_z = static_cast<double>(dz) / denom;
    m.det_x = static_cast<double>(dx) / denom;
    m.identified = static_cast<double>(ident) / denom;
    m.effect_count = effects.size();
    m.effect_mean = stats::mean(effects);
    m.effect_cover = effects.empty() ? 0.0 : static_cast<double>(cover) / static_cast<double>(effects.size());
    return m;
}

std::vector<McMetrics> run_monte_carlo(const std::vector<Scenario>& scenarios, const McOptions& options) {
    std::vector<McMetrics> out;
    std::mutex progress_mutex;
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        const Scenario& sc = scenarios[s];
        std::vector<RepOutcome> reps(sc.reps);
        std::size_t done = 0;
        parallel_for(sc.reps, options.threads, [&](std::size_t r) {
            DgpConfig dgp;
            dgp.n = sc.n;
            dgp.delta = sc.delta;
            dgp.gamma = sc.gamma;
            dgp.seed = derive_seed(sc.seed, {r, 0});
            selection::SelectionConfig cfg = options.selection;
            cfg.seed = derive_seed(sc.seed, {r, 1});
            cfg.threads = 1;
            cfg.estimate_effect = options.estimate_effect;
            reps[r] = run_rep(dgp, cfg);
            if (options.progress) {
                std::lock_guard lock(progress_mutex);
                options.progress(s, ++done);
            }
        });
        out.push_back(summarize(sc, reps));
    }
    return out;
}

}  // namespace ivselect::simulation
