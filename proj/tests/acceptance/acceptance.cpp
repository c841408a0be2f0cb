// Acceptance harness. Prints one PASS/FAIL line per criterion.
//
//   ivselect_acceptance [--criterion k]... [--cache DIR] [--threads T]
//
// Monte Carlo blocks are cached as metrics JSON under DIR so later
// criteria can reuse reps already simulated by earlier ones.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ivselect/crossfit.hpp"
#include "ivselect/io.hpp"
#include "ivselect/numerics.hpp"
#include "ivselect/parallel.hpp"
#include "ivselect/properties.hpp"
#include "ivselect/report.hpp"
#include "ivselect/rng.hpp"
#include "ivselect/scores.hpp"
#include "ivselect/selection.hpp"
#include "ivselect/simulation.hpp"
#include "ivselect/stats.hpp"

namespace fs = std::filesystem;
using namespace ivselect;
using simulation::McMetrics;
using simulation::Scenario;

namespace {

// Pinned tolerances.
constexpr std::size_t kTableReps = 100;
constexpr double kRateTolerance = 0.15;
constexpr double kMagnitudeTolerance = 0.50;
constexpr double kReferenceDetZ[3] = {0.31, 0.46, 0.61};
constexpr double kReferenceEstDelta2 = -0.026;
constexpr double kReferenceEstGamma4000 = -0.457;
constexpr double kMaxDetX = 0.05;
constexpr double kMaxDetZViolated = 0.05;
constexpr double kMinGammaEst = 0.3;
constexpr double kEstStdMultiple = 2.0;
constexpr double kEstSeMultiple = 3.0;
constexpr double kGateauxBudgetSec = 300.0;
constexpr std::size_t kOracleReps = 500;
constexpr std::size_t kOracleN = 4000;
constexpr double kOracleAlpha = 0.10;
constexpr double kSizeTolerance = 0.04;
constexpr double kMinPower = 0.95;
constexpr double kOracleBudgetSec = 600.0;
constexpr double kMachineTolerance = 1e-12;
constexpr double kKktTolerance = 1e-6;
constexpr double kMinEffectCover = 0.90;

struct Context {
    fs::path cache;
    std::size_t threads = 1;
};

struct Verdict {
    bool passed = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) passed = false;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? " ok" : " FAILED");
    }
    void note(const std::string& what) { detail << (detail.tellp() > 0 ? "; " : "") << what; }
};

std::string num(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

std::string pct(double v) { return num(100.0 * v, 3) + "%"; }

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Scenario table_cell(double delta, double gamma, std::size_t n) {
    for (const auto& s : simulation::default_scenarios(kTableReps, 1)) {
        if (s.delta == delta && s.gamma == gamma && s.n == n) return s;
    }
    throw std::logic_error("no such table cell");
}

fs::path cache_path(const Context& ctx, const Scenario& s) {
    std::ostringstream name;
    name << "mc_n" << s.n << "_d" << s.delta << "_g" << s.gamma << "_r" << s.reps << "_s" << s.seed << ".json";
    return ctx.cache / name.str();
}

McMetrics monte_carlo(const Context& ctx, const Scenario& s) {
    const fs::path path = cache_path(ctx, s);
    if (!ctx.cache.empty() && fs::exists(path)) {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        const auto cached = report::metrics_from_json(ss.str());
        if (cached.size() == 1 && cached[0].scenario == s) {
            std::cerr << "[cache] " << s.name << "\n";
            return cached[0];
        }
    }
    simulation::McOptions opt;
    opt.threads = ctx.threads;
    opt.selection.aipw = false;
    opt.estimate_effect = true;
    const auto t0 = std::chrono::steady_clock::now();
    opt.progress = [&](std::size_t, std::size_t done) {
        if (done % 10 == 0 || done == s.reps) {
            std::cerr << "[mc] " << s.name << " " << done << "/" << s.reps << " (" << num(elapsed(t0), 3) << " s)\n";
        }
    };
    const auto m = simulation::run_monte_carlo({s}, opt).front();
    if (!ctx.cache.empty()) {
        fs::create_directories(ctx.cache);
        io::write_atomic(path, report::metrics_json({m}));
    }
    return m;
}

std::string describe(const McMetrics& m) {
    return "n=" + std::to_string(m.scenario.n) + ": est " + num(m.est) + ", std " + num(m.std) + ", mean se " +
           num(m.mean_se) + ", det.Z " + pct(m.det_z) + ", det.X " + pct(m.det_x) +
           (m.failures ? ", failed reps " + std::to_string(m.failures) : "");
}

Verdict criterion1(const Context& ctx) {
    Verdict v;
    std::vector<McMetrics> block;
    for (std::size_t n : {1000u, 4000u, 16000u}) {
        block.push_back(monte_carlo(ctx, table_cell(0.0, 0.0, n)));
        std::cerr << "  " << describe(block.back()) << "\n";
    }
    bool centered = true;
    for (const auto& m : block) centered = centered && std::abs(m.est) <= kEstStdMultiple * m.std;
    v.require(centered, "(a) |est| <= 2 std at every n");
    bool increasing = block[0].det_z < block[1].det_z && block[1].det_z < block[2].det_z;
    bool near_reference = true;
    std::string rates;
    for (int k = 0; k < 3; ++k) {
        near_reference = near_reference && std::abs(block[k].det_z - kReferenceDetZ[k]) <= kRateTolerance;
        rates += (k ? "/" : "") + pct(block[k].det_z);
    }
    v.require(increasing && near_reference, "(b) det.Z " + rates + " increasing and within 15pp of 31/46/61%");
    v.require(block[2].det_x <= kMaxDetX, "(c) det.X at 16000 = " + pct(block[2].det_x) + " <= 5%");
    for (const auto& m : block) v.note(describe(m));
    return v;
}

Verdict criterion2(const Context& ctx) {
    Verdict v;
    const auto d16 = monte_carlo(ctx, table_cell(2.0, 0.0, 16000));
    const auto g4 = monte_carlo(ctx, table_cell(0.0, 0.5, 4000));
    const auto g16 = monte_carlo(ctx, table_cell(0.0, 0.5, 16000));
    v.require(d16.est < 0.0 && -d16.est >= kEstSeMultiple * d16.mean_se,
              "delta=2 est " + num(d16.est) + " < 0 beyond 3 mean se (" + num(d16.mean_se) + ")");
    v.require(d16.det_z <= kMaxDetZViolated, "delta=2 det.Z at 16000 = " + pct(d16.det_z) + " <= 5%");
    v.require(std::abs(g4.est) >= kMinGammaEst, "gamma=0.5 |est| at 4000 = " + num(std::abs(g4.est)) + " >= 0.3");
    v.require(g4.det_z <= kMaxDetZViolated && g16.det_z <= kMaxDetZViolated,
              "gamma=0.5 det.Z " + pct(g4.det_z) + "/" + pct(g16.det_z) + " <= 5% at n >= 4000");
    const auto within = [](double est, double ref) {
        return std::abs(std::abs(est) - std::abs(ref)) <= kMagnitudeTolerance * std::abs(ref);
    };
    v.note("reference magnitudes (not gated): delta=2 |est| within 50% of 0.026: " +
           std::string(within(d16.est, kReferenceEstDelta2) ? "yes" : "no") + ", gamma=0.5 |est| within 50% of 0.457: " +
           (within(g4.est, kReferenceEstGamma4000) ? "yes" : "no") + ", sign of gamma=0.5 est " +
           (g4.est < 0 ? "negative" : "positive"));
    for (const auto* m : {&d16, &g4, &g16}) v.note("delta=" + num(m->scenario.delta) + ",gamma=" +
                                                   num(m->scenario.gamma) + " " + describe(*m));
    return v;
}

Verdict criterion3(const Context&) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const properties::PropertyOptions opt;
    const auto b = properties::gateaux_binary(opt);
    const auto m = properties::gateaux_multi(opt);
    const auto p = properties::gateaux_plain(opt);
    const double secs = elapsed(t0);
    v.require(b.insensitive(), "binary score b1 " + num(b.b1) + " (se " + num(b.se) + ") insensitive");
    v.require(m.insensitive(), "multivalued score b1 " + num(m.b1) + " (se " + num(m.se) + ") insensitive");
    v.require(!p.insensitive(), "plain difference b1 " + num(p.b1) + " (se " + num(p.se) + ") sensitive");
    v.require(secs < kGateauxBudgetSec, "runtime " + num(secs, 3) + " s < 300 s");
    return v;
}

double oracle_rejection_rate(const Context& ctx, double gamma, std::uint64_t seed) {
    std::vector<int> rejected(kOracleReps, 0);
    const double c = stats::critical_value(kOracleAlpha);
    parallel_for(kOracleReps, ctx.threads, [&](std::size_t r) {
        simulation::DgpConfig cfg;
        cfg.n = kOracleN;
        cfg.gamma = gamma;
        cfg.seed = derive_seed(seed, {r, 0});
        const auto data = simulation::generate(cfg);
        const simulation::OracleModel model(cfg);
        const auto part = make_partition(data, cfg.instrument_index());
        const auto res = crossfit::crossfit_theta(data, part, {}, derive_seed(seed, {r, 1}),
                                                  simulation::oracle_provider(model));
        rejected[r] = std::abs(res.t_stat) >= c ? 1 : 0;
    });
    double total = 0.0;
    for (int x : rejected) total += x;
    return total / static_cast<double>(kOracleReps);
}

Verdict criterion4(const Context& ctx) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const double size = oracle_rejection_rate(ctx, 0.0, 4001);
    const double power = oracle_rejection_rate(ctx, 0.5, 4002);
    const double secs = elapsed(t0);
    v.require(std::abs(size - kOracleAlpha) <= kSizeTolerance, "null rejection " + pct(size) + " within 10 +- 4%");
    v.require(power >= kMinPower, "gamma=0.5 rejection " + pct(power) + " >= 95%");
    v.require(secs < kOracleBudgetSec, "runtime " + num(secs, 3) + " s < 600 s");
    return v;
}

bool close(double a, double b) { return std::abs(a - b) <= kMachineTolerance * std::max(1.0, std::abs(a)); }

Verdict criterion5(const Context&) {
    Verdict v;
    std::mt19937_64 rng(55);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.02, 0.98);
    double worst_lin = 0.0, worst_red = 0.0;
    bool lin = true, red = true;
    for (int i = 0; i < 100000; ++i) {
        const scores::BinaryNuisance eta{normal(rng), normal(rng), unif(rng)};
        const double y = 3.0 * normal(rng), z = i % 2, theta = 5.0 * normal(rng);
        const double a = scores::score_binary(y, z, theta, eta);
        const double b = scores::score_binary(y, z, 0.0, eta) - theta;
        lin = lin && close(a, b);
        worst_lin = std::max(worst_lin, std::abs(a - b));
        const double in[] = {eta.mu1}, out[] = {eta.mu0}, p[] = {eta.p};
        const double m = scores::score_multi(y, z == 1.0 ? 0 : -1, theta, in, out, p);
        red = red && close(m, a);
        worst_red = std::max(worst_red, std::abs(m - a));
        const double in3[] = {normal(rng), normal(rng), normal(rng)};
        const double out3[] = {normal(rng), normal(rng), normal(rng)};
        const double p3[] = {0.2, 0.3, 0.5};
        const double c = scores::score_multi(y, i % 3, theta, in3, out3, p3);
        const double d = scores::score_multi(y, i % 3, 0.0, in3, out3, p3) - theta;
        lin = lin && close(c, d);
        worst_lin = std::max(worst_lin, std::abs(c - d));
    }
    v.require(lin, "score linearity in theta (max gap " + num(worst_lin) + ")");
    v.require(red, "single-bin multivalued score equals binary score (max gap " + num(worst_red) + ")");

    double worst_kkt = 0.0;
    for (auto family : {numerics::Family::gaussian, numerics::Family::binomial}) {
        const Eigen::Index n = 500, p = 15;
        Eigen::MatrixXd x(n, p);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) x(i, j) = normal(rng) + (j ? 0.5 * x(i, j - 1) : 0.0);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double eta = 0.8 * x(i, 0) - 0.6 * x(i, 5) + 0.3 * x(i, 9);
            y[i] = family == numerics::Family::gaussian ? eta + normal(rng)
                                                        : (unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0);
        }
        const numerics::DesignMatrix dm(x);
        const Eigen::MatrixXd zs = dm.standardized();
        const double lmax = numerics::lambda_max(dm, numerics::as_span(y), family);
        for (double frac : {0.7, 0.2, 0.05, 0.01}) {
            const double lambda = frac * lmax;
            const auto fit = numerics::lasso_fit_at(dm, numerics::as_span(y), family, lambda);
            const Eigen::VectorXd r = y - numerics::lasso_predict(fit, dm);
            worst_kkt = std::max(worst_kkt, std::abs(r.mean()));
            for (Eigen::Index j = 0; j < p; ++j) {
                const double g = zs.col(j).dot(r) / static_cast<double>(n);
                const double b = fit.std_coefficients[j];
                worst_kkt = std::max(worst_kkt, b == 0.0 ? std::max(0.0, std::abs(g) - lambda)
                                                         : std::abs(g - lambda * (b > 0 ? 1.0 : -1.0)));
            }
        }
    }
    v.require(worst_kkt <= kKktTolerance, "lasso KKT residual " + num(worst_kkt) + " <= 1e-6");

    simulation::DgpConfig dgp;
    dgp.n = 2000;
    dgp.seed = 5;
    const auto data = simulation::generate(dgp);
    selection::SelectionConfig cfg;
    cfg.seed = 77;
    const std::string first = report::to_json(selection::run_pipeline(data, cfg));
    const std::string second = report::to_json(selection::run_pipeline(data, cfg));
    cfg.threads = 2;
    const std::string threaded = report::to_json(selection::run_pipeline(data, cfg));
    v.require(first == second && first == threaded, "bit-identical pipeline reruns (1, 1 and 2 threads)");
    return v;
}

Verdict criterion6(const Context& ctx) {
    Verdict v;
    const auto m = monte_carlo(ctx, table_cell(0.0, 0.0, 16000));
    const auto identified = static_cast<std::size_t>(std::lround(m.identified * static_cast<double>(m.reps)));
    const auto covered = static_cast<std::size_t>(std::lround(m.effect_cover * static_cast<double>(m.effect_count)));
    v.require(m.effect_count > 0 && m.effect_cover >= kMinEffectCover,
              "effect within 3 se of 1 in " + std::to_string(covered) + "/" + std::to_string(m.effect_count) +
                  " identified reps (" + pct(m.effect_cover) + ") >= 90%");
    v.note("identified " + std::to_string(identified) + "/" + std::to_string(m.reps) + " reps, mean effect " +
           num(m.effect_mean));
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    Context ctx;
    ctx.threads = default_threads();
    std::set<int> which;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) {
            which.insert(std::atoi(argv[++i]));
        } else if (a == "--cache" && i + 1 < argc) {
            ctx.cache = argv[++i];
        } else if (a == "--threads" && i + 1 < argc) {
            ctx.threads = std::max(1, std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: ivselect_acceptance [--criterion k]... [--cache DIR] [--threads T]\n";
            return 2;
        }
    }
    if (which.empty()) which = {1, 2, 3, 4, 5, 6};
    using Check = Verdict (*)(const Context&);
    const Check checks[] = {criterion1, criterion2, criterion3, criterion4, criterion5, criterion6};
    bool all = true;
    for (int k : which) {
        if (k < 1 || k > 6) {
            std::cerr << "unknown criterion " << k << "\n";
            return 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = checks[k - 1](ctx);
        } catch (const std::exception& e) {
            v.passed = false;
            v.note(std::string("error: ") + e.what());
        }
        std::cout << "criterion " << k << ": " << (v.passed ? "PASS" : "FAIL") << "  [" << v.detail.str() << "] ("
                  << num(elapsed(t0), 3) << " s)" << std::endl;
        all = all && v.passed;
    }
    return all ? 0 : 1;
}
