// ivselect: instrument/covariate partition selection from observational data.
//
//   ivselect test data.csv --outcome y --treatment d [--candidates a,b,c] ...
//   ivselect simulate [scenarios.json] --out results/
//   ivselect check [--debug-corrupt-score]
//   ivselect generate --n 16000 --out data.csv
//
// Exit codes: 0 identified / all checks passed, 3 identification rejected,
// 2 property check failed, 1 error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ivselect/errors.hpp"
#include "ivselect/io.hpp"
#include "ivselect/parallel.hpp"
#include "ivselect/properties.hpp"
#include "ivselect/report.hpp"
#include "ivselect/selection.hpp"
#include "ivselect/simulation.hpp"

namespace fs = std::filesystem;
using namespace ivselect;

namespace {

constexpr int kExitIdentified = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitRejected = 3;

struct TestArgs {
    std::string csv;
    std::string outcome = "y";
    std::string treatment = "d";
    std::string candidates = "all-others";
    double alpha = 0.10;
    std::optional<double> fs_level;
    std::size_t folds = 2;
    std::size_t bins = 4;
    double trim = 0.01;
    std::string mode = "pmax";
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    std::string out = ".";
    std::vector<std::string> bin_kinds;
    int cv_folds = 10;
    bool no_aipw = false;
    bool quiet = false;
};

struct SimulateArgs {
    std::string scenarios;
    std::string out = ".";
    std::optional<std::size_t> reps;
    std::size_t threads = 0;
};

struct CheckArgs {
    bool corrupt = false;
    std::uint64_t seed = properties::PropertyOptions{}.seed;
    std::size_t n = properties::PropertyOptions{}.n;
};

struct GenerateArgs {
    simulation::DgpConfig dgp;
    std::string out = "data.csv";
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::size_t threads_or_default(std::size_t t) { return t == 0 ? default_threads() : t; }

int run_test(const TestArgs& a) {
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
    if (a.fs_level && !(*a.fs_level > 0.0 && *a.fs_level <= 1.0)) throw ConfigError("--fs-level must lie in (0, 1]");
    if (a.folds < 2) throw ConfigError("--folds must be at least 2");
    if (a.bins < 1) throw ConfigError("--bins must be at least 1");
    if (!(a.trim > 0.0 && a.trim < 0.5)) throw ConfigError("--trim must lie in (0, 0.5)");

    io::CsvColumns cols{a.outcome, a.treatment, {}};
    if (a.candidates != "all-others") cols.candidates = split_list(a.candidates);
    const Dataset data = io::read_csv(a.csv, cols);

    selection::SelectionConfig cfg;
    cfg.alpha = a.alpha;
    cfg.fs_level = a.fs_level;
    cfg.mode = selection::final_mode_from_string(a.mode);
    cfg.crossfit.folds = a.folds;
    cfg.crossfit.score.epsilon_trim = a.trim;
    cfg.crossfit.learner.cv_folds = a.cv_folds;
    cfg.binning.bins = a.bins;
    cfg.threads = threads_or_default(a.threads);
    cfg.seed = a.seed;
    cfg.aipw = !a.no_aipw;
    const auto names = data.candidate_names();
    for (const auto& spec : a.bin_kinds) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ConfigError("--bin-kind expects column=kind, got '" + spec + "'");
        const std::string col = spec.substr(0, eq);
        const auto it = std::find(names.begin(), names.end(), col);
        if (it == names.end()) throw ConfigError("--bin-kind: '" + col + "' is not a candidate column");
        cfg.binning.overrides[static_cast<std::size_t>(it - names.begin())] =
            scores::bin_kind_from_string(spec.substr(eq + 1));
    }

    const auto rep = selection::run_pipeline(data, cfg);
    const fs::path out(a.out);
    const std::string summary = report::summary_text(rep);
    io::write_atomic(out / "report.json", report::to_json(rep));
    io::write_atomic(out / "summary.txt", summary);
    if (!a.quiet) std::cout << summary;
    return rep.final.verdict == selection::Verdict::identified ? kExitIdentified : kExitRejected;
}

int run_simulate(const SimulateArgs& a) {
    auto scenarios = a.scenarios.empty() ? simulation::default_scenarios() : simulation::load_scenarios(a.scenarios);
    if (a.reps) {
        if (*a.reps < 1) throw ConfigError("--reps must be at least 1");
        for (auto& s : scenarios) s.reps = *a.reps;
    }
    simulation::McOptions opt;
    opt.threads = threads_or_default(a.threads);
    opt.selection.aipw = false;
    opt.progress = [&](std::size_t s, std::size_t done) {
        std::fprintf(stderr, "\r[%zu/%zu] %s: %zu/%zu reps", s + 1, scenarios.size(), scenarios[s].name.c_str(), done,
                     scenarios[s].reps);
        if (done == scenarios[s].reps) std::fprintf(stderr, "\n");
        std::fflush(stderr);
    };
    const auto metrics = simulation::run_monte_carlo(scenarios, opt);
    const fs::path out(a.out);
    const std::string table = report::metrics_table(metrics);
    io::write_atomic(out / "metrics.csv", report::metrics_csv(metrics));
    io::write_atomic(out / "summary.json", report::metrics_json(metrics));
    io::write_atomic(out / "summary.txt", table);
    std::cout << table;
    return 0;
}

int run_check(const CheckArgs& a) {
    properties::PropertyOptions opt;
    opt.corrupt_score = a.corrupt;
    opt.seed = a.seed;
    opt.n = a.n;
    bool all = true;
    for (const auto& r : properties::run_property_suite(opt)) {
        std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  (" << r.detail << ")\n";
        all = all && r.passed;
    }
    return all ? 0 : kExitCheckFailed;
}

int run_generate(const GenerateArgs& a) {
    io::write_csv(simulation::generate(a.dgp), a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn an instrument / covariate partition by cross-fitted conditional mean independence tests"};
    app.require_subcommand(1);

    TestArgs t;
    auto* test = app.add_subcommand("test", "Run the selection pipeline on a CSV file");
    test->add_option("csv", t.csv, "Input CSV with a header row")->required();
    test->add_option("--outcome", t.outcome, "Outcome column")->capture_default_str();
    test->add_option("--treatment", t.treatment, "Binary treatment column")->capture_default_str();
    test->add_option("--candidates", t.candidates, "Comma-separated candidate columns, or all-others")
        ->capture_default_str();
    test->add_option("--alpha", t.alpha, "Test level")->capture_default_str();
    test->add_option("--fs-level", t.fs_level, "First-stage level (default 0.1/log n)");
    test->add_option("--folds", t.folds, "Cross-fitting folds")->capture_default_str();
    test->add_option("--bins", t.bins, "Bins for continuous candidates")->capture_default_str();
    test->add_option("--trim", t.trim, "Propensity trimming bound")->capture_default_str();
    test->add_option("--mode", t.mode, "Final partition rule")->check(CLI::IsMember({"pmax", "all"}))->capture_default_str();
    test->add_option("--seed", t.seed, "Random seed")->capture_default_str();
    test->add_option("--threads", t.threads, "Worker threads (0 = hardware)")->capture_default_str();
    test->add_option("--out", t.out, "Output directory for report.json and summary.txt")->capture_default_str();
    test->add_option("--bin-kind", t.bin_kinds, "Per-column bin kind override, column=binary|discrete|quantile");
    test->add_option("--cv-folds", t.cv_folds, "Lasso cross-validation folds")->capture_default_str();
    test->add_flag("--no-aipw", t.no_aipw, "Skip the auxiliary AIPW estimate");
    test->add_flag("-q,--quiet", t.quiet, "Do not print the summary");

    SimulateArgs s;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo study over a scenario grid");
    sim->add_option("scenarios", s.scenarios, "Scenario JSON (default: the nine reference cells)");
    sim->add_option("--out", s.out, "Output directory")->capture_default_str();
    sim->add_option("--reps", s.reps, "Override replications per scenario");
    sim->add_option("--threads", s.threads, "Worker threads (0 = hardware)")->capture_default_str();

    CheckArgs c;
    auto* chk = app.add_subcommand("check", "Run the built-in property suite");
    chk->add_flag("--debug-corrupt-score", c.corrupt, "Flip the sign of the score cross term");
    chk->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    chk->add_option("--n", c.n, "Sample size of the oracle checks")->capture_default_str();

    GenerateArgs g;
    auto* gen = app.add_subcommand("generate", "Write one simulated data set as CSV");
    gen->add_option("--n", g.dgp.n, "Rows")->capture_default_str();
    gen->add_option("--delta", g.dgp.delta, "Confounding through the unobservable")->capture_default_str();
    gen->add_option("--gamma", g.dgp.gamma, "Direct instrument effect")->capture_default_str();
    gen->add_option("--seed", g.dgp.seed, "Random seed")->capture_default_str();
    gen->add_option("--out", g.out, "Output CSV")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitError;
    }

    try {
        if (*test) return run_test(t);
        if (*sim) return run_simulate(s);
        if (*chk) return run_check(c);
        if (*gen) return run_generate(g);
    } catch (const selection::PipelineError& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
        return kExitError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
