#include "ivselect/report.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ivselect/io.hpp"

namespace ivselect::report {
namespace {

using nlohmann::json;
using selection::CandidateTest;
using selection::SelectionReport;

json binning_json(const scores::InstrumentBinning& b) {
    return {{"kind", scores::to_string(b.kind)}, {"levels", b.levels}, {"cuts", b.cuts}, {"mass", b.mass}};
}

scores::InstrumentBinning binning_from(const json& j) {
    scores::InstrumentBinning b;
    b.kind = scores::bin_kind_from_string(j.at("kind").get<std::string>());
    b.levels = j.at("levels").get<std::vector<std::vector<double>>>();
    b.cuts = j.at("cuts").get<std::vector<double>>();
    b.mass = j.at("mass").get<std::vector<double>>();
    return b;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json test_json(const CandidateTest& t, const std::vector<std::string>& names) {
    json j = {{"index", t.index}, {"name", names.at(t.index)}, {"passed", t.passed}, {"error", t.error}};
    if (t.result) {
        const auto& r = *t.result;
        j["result"] = {{"theta_hat", r.theta_hat},
                       {"sigma_hat", r.sigma_hat},
                       {"se", r.se()},
                       {"t_stat", r.t_stat},
                       {"p_value", r.p_value},
                       {"n", r.n},
                       {"L", r.L},
                       {"per_fold_theta", r.per_fold_theta},
                       {"trim_warnings", r.trim_warnings},
                       {"fold_redrawn", r.fold_redrawn},
                       {"outcome_r2", r.diagnostics.outcome_r2},
                       {"propensity_deviance", r.diagnostics.propensity_deviance}};
    } else {
        j["result"] = nullptr;
    }
    return j;
}

CandidateTest test_from(const json& j) {
    CandidateTest t;
    t.index = j.at("index").get<std::size_t>();
    t.passed = j.at("passed").get<bool>();
    t.error = j.at("error").get<std::string>();
    if (!j.at("result").is_null()) {
        const json& r = j.at("result");
        crossfit::TestResult res;
        res.theta_hat = r.at("theta_hat").get<double>();
        res.sigma_hat = r.at("sigma_hat").get<double>();
        res.t_stat = r.at("t_stat").get<double>();
        res.p_value = r.at("p_value").get<double>();
        res.n = r.at("n").get<std::size_t>();
        res.L = r.at("L").get<std::size_t>();
        res.per_fold_theta = r.at("per_fold_theta").get<std::vector<double>>();
        res.trim_warnings = r.at("trim_warnings").get<std::size_t>();
        res.fold_redrawn = r.at("fold_redrawn").get<bool>();
        res.diagnostics.outcome_r2 = r.at("outcome_r2").get<double>();
        res.diagnostics.propensity_deviance = r.at("propensity_deviance").get<double>();
        t.result = res;
    }
    return t;
}

json partition_json(const Partition& p, const std::vector<std::string>& names) {
    json inst_names = json::array();
    for (std::size_t j : p.instruments) inst_names.push_back(names.at(j));
    json comps = json::array();
    for (const auto& b : p.component_binnings) comps.push_back(binning_json(b));
    return {{"instruments", p.instruments},
            {"instrument_names", inst_names},
            {"covariates", p.covariates},
            {"binning", binning_json(p.binning)},
            {"component_binnings", comps}};
}

Partition partition_from(const json& j) {
    Partition p;
    p.instruments = j.at("instruments").get<std::vector<std::size_t>>();
    p.covariates = j.at("covariates").get<std::vector<std::size_t>>();
    p.binning = binning_from(j.at("binning"));
    for (const auto& b : j.at("component_binnings")) p.component_binnings.push_back(binning_from(b));
    return p;
}

json report_json(const SelectionReport& r) {
    const auto& names = r.candidate_names;
    json strong = json::array();
    for (std::size_t j : r.strong.members) strong.push_back({{"index", j}, {"name", names.at(j)}, {"f", r.strong.f.at(j)}});
    json excluded = json::array();
    for (const auto& e : r.strong.excluded) {
        excluded.push_back({{"index", e.index}, {"name", names.at(e.index)}, {"reason", e.reason}});
    }
    json tests = json::array();
    for (const auto& t : r.tests) tests.push_back(test_json(t, names));
    json final = {{"verdict", selection::to_string(r.final.verdict)}, {"rule", r.final.rule}};
    final["partition"] = r.final.partition ? partition_json(*r.final.partition, names) : json(nullptr);
    json effect = nullptr;
    if (r.effect) {
        effect = {{"ols", r.effect->ols},
                  {"ols_se", r.effect->ols_se},
                  {"aipw", optional_number(r.effect->aipw)},
                  {"aipw_se", optional_number(r.effect->aipw_se)},
                  {"aipw_error", r.effect->aipw_error}};
    }
    return {{"schema_version", kSchemaVersion},
            {"verdict", selection::to_string(r.final.verdict)},
            {"n", r.n},
            {"alpha", r.alpha},
            {"critical_value", r.critical_value},
            {"mode", selection::to_string(r.mode)},
            {"multiple_testing_correction", r.multiple_testing_corrected ? "applied" : "none"},
            {"candidates", names},
            {"first_stage",
             {{"fs_level", r.strong.fs_level},
              {"threshold", r.strong.threshold},
              {"f", r.strong.f},
              {"strong_set", strong},
              {"excluded", excluded}}},
            {"tests", tests},
            {"pass_set", r.pass_set},
            {"final", final},
            {"effect", effect}};
}

std::string num(double v) { return io::format_double(v); }

json metric_json(const simulation::McMetrics& m) {
    return {{"scenario",
             {{"name", m.scenario.name},
              {"n", m.scenario.n},
              {"delta", m.scenario.delta},
              {"gamma", m.scenario.gamma},
              {"reps", m.scenario.reps},
              {"seed", m.scenario.seed}}},
            {"reps", m.reps},
            {"failures", m.failures},
            {"est_count", m.est_count},
            {"est", m.est},
            {"std", m.std},
            {"mean_se", m.mean_se},
            {"det_z", m.det_z},
            {"det_x", m.det_x},
            {"identified", m.identified},
            {"effect_count", m.effect_count},
            {"effect_mean", m.effect_mean},
            {"effect_cover", m.effect_cover}};
}

}  // namespace

std::string to_json(const SelectionReport& report) { return report_json(report).dump(2) + "\n"; }

SelectionReport from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("schema_version").get<int>() != kSchemaVersion) {
            throw InputError("report: unsupported schema version " + j.at("schema_version").dump());
        }
        SelectionReport r;
        r.n = j.at("n").get<std::size_t>();
        r.alpha = j.at("alpha").get<double>();
        r.critical_value = j.at("critical_value").get<double>();
        r.mode = selection::final_mode_from_string(j.at("mode").get<std::string>());
        r.multiple_testing_corrected = j.at("multiple_testing_correction").get<std::string>() != "none";
        r.candidate_names = j.at("candidates").get<std::vector<std::string>>();
        const json& fs = j.at("first_stage");
        r.strong.fs_level = fs.at("fs_level").get<double>();
        r.strong.threshold = fs.at("threshold").get<double>();
        r.strong.f = fs.at("f").get<std::vector<double>>();
        for (const auto& s : fs.at("strong_set")) r.strong.members.push_back(s.at("index").get<std::size_t>());
        for (const auto& e : fs.at("excluded")) {
            r.strong.excluded.push_back({e.at("index").get<std::size_t>(), e.at("reason").get<std::string>()});
        }
        for (const auto& t : j.at("tests")) r.tests.push_back(test_from(t));
        r.pass_set = j.at("pass_set").get<std::vector<std::size_t>>();
        const json& fin = j.at("final");
        r.final.verdict = fin.at("verdict").get<std::string>() == "identified" ? selection::Verdict::identified
                                                                               : selection::Verdict::rejected;
        r.final.rule = fin.at("rule").get<std::string>();
        if (!fin.at("partition").is_null()) r.final.partition = partition_from(fin.at("partition"));
        if (!j.at("effect").is_null()) {
            const json& e = j.at("effect");
            selection::EffectEstimate eff;
            eff.ols = e.at("ols").get<double>();
            eff.ols_se = e.at("ols_se").get<double>();
            eff.aipw = number_or_null(e, "aipw");
            eff.aipw_se = number_or_null(e, "aipw_se");
            eff.aipw_error = e.at("aipw_error").get<std::string>();
            r.effect = eff;
        }
        return r;
    } catch (const json::exception& e) {
        throw InputError(std::string("report: ") + e.what());
    }
}

std::string summary_text(const SelectionReport& r) {
    const auto& names = r.candidate_names;
    std::ostringstream out;
    out << "verdict: " << selection::to_string(r.final.verdict) << "\n";
    out << "n: " << r.n << "\n";
    out << "alpha: " << num(r.alpha) << "  critical value: " << num(r.critical_value) << "\n";
    out << "first-stage level: " << num(r.strong.fs_level) << "  threshold: " << num(r.strong.threshold) << "\n";
    out << "multiple-testing correction: " << (r.multiple_testing_corrected ? "applied" : "none") << "\n";
    out << "\nstrong candidates (" << r.strong.members.size() << "):\n";
    for (std::size_t j : r.strong.members) out << "  " << names[j] << "  F = " << num(r.strong.f[j]) << "\n";
    for (const auto& e : r.strong.excluded) out << "  excluded " << names[e.index] << ": " << e.reason << "\n";
    out << "\ncandidate tests:\n";
    for (const auto& t : r.tests) {
        out << "  " << names[t.index] << ": ";
        if (!t.result) {
            out << "error: " << t.error << "\n";
            continue;
        }
        const auto& x = *t.result;
        out << "theta = " << num(x.theta_hat) << "  sigma = " << num(x.sigma_hat) << "  t = " << num(x.t_stat)
            << "  p = " << num(x.p_value) << "  L = " << x.L << (t.passed ? "  pass" : "  fail") << "\n";
    }
    out << "\nfinal partition: ";
    if (!r.final.partition) {
        out << "none (identification rejected)\n";
    } else {
        const auto& p = *r.final.partition;
        out << "instrument";
        for (std::size_t j : p.instruments) out << " " << names[j];
        out << " (" << r.final.rule << "), " << p.covariates.size() << " covariates\n";
    }
    if (r.effect) {
        out << "effect (OLS): " << num(r.effect->ols) << "  se = " << num(r.effect->ols_se) << "\n";
        if (r.effect->aipw) {
            out << "effect (AIPW): " << num(*r.effect->aipw) << "  se = " << num(*r.effect->aipw_se) << "\n";
        } else if (!r.effect->aipw_error.empty()) {
            out << "effect (AIPW): unavailable: " << r.effect->aipw_error << "\n";
        }
    }
    return out.str();
}

std::string metrics_csv(const std::vector<simulation::McMetrics>& metrics) {
    std::ostringstream out;
    out << "scenario,n,delta,gamma,seed,reps,failures,est_count,est,std,mean_se,det_z,det_x,identified,"
           "effect_count,effect_mean,effect_cover\n";
    for (const auto& m : metrics) {
        out << '"' << m.scenario.name << '"' << ',' << m.scenario.n << ',' << num(m.scenario.delta) << ','
            << num(m.scenario.gamma) << ',' << m.scenario.seed << ',' << m.reps << ',' << m.failures << ','
            << m.est_count << ',' << num(m.est) << ',' << num(m.std) << ',' << num(m.mean_se) << ','
            << num(m.det_z) << ',' << num(m.det_x) << ',' << num(m.identified) << ',' << m.effect_count << ','
            << num(m.effect_mean) << ',' << num(m.effect_cover) << "\n";
    }
    return out.str();
}

std::string metrics_json(const std::vector<simulation::McMetrics>& metrics) {
    json arr = json::array();
    for (const auto& m : metrics) arr.push_back(metric_json(m));
    return json{{"schema_version", kSchemaVersion}, {"scenarios", arr}}.dump(2) + "\n";
}

std::vector<simulation::McMetrics> metrics_from_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        std::vector<simulation::McMetrics> out;
        for (const auto& j : doc.at("scenarios")) {
            simulation::McMetrics m;
            const json& s = j.at("scenario");
            m.scenario = {s.at("name").get<std::string>(), s.at("n").get<std::size_t>(), s.at("delta").get<double>(),
                          s.at("gamma").get<double>(), s.at("reps").get<std::size_t>(),
                          s.at("seed").get<std::uint64_t>()};
            m.reps = j.at("reps").get<std::size_t>();
            m.failures = j.at("failures").get<std::size_t>();
            m.est_count = j.at("est_count").get<std::size_t>();
            m.est = j.at("est").get<double>();
            m.std = j.at("std").get<double>();
            m.mean_se = j.at("mean_se").get<double>();
            m.det_z = j.at("det_z").get<double>();
            m.det_x = j.at("det_x").get<double>();
            m.identified = j.at("identified").get<double>();
            m.effect_count = j.at("effect_count").get<std::size_t>();
            m.effect_mean = j.at("effect_mean").get<double>();
            m.effect_cover = j.at("effect_cover").get<double>();
            out.push_back(m);
        }
        return out;
    } catch (const json::exception& e) {
        throw InputError(std::string("metrics: ") + e.what());
    }
}

std::string metrics_table(const std::vector<simulation::McMetrics>& metrics) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%8s %8s %8s %8s %7s %7s\n", "N", "est", "std", "mean se", "det.Z", "det.X");
    out << line;
    std::string block;
    for (const auto& m : metrics) {
        char head[96];
        std::snprintf(head, sizeof head, "delta=%g, gamma=%g", m.scenario.delta, m.scenario.gamma);
        if (block != head) {
            block = head;
            out << "-- " << block << "\n";
        }
        std::snprintf(line, sizeof line, "%8zu %8.3f %8.3f %8.3f %6.0f%% %6.0f%%\n", m.scenario.n, m.est, m.std,
                      m.mean_se, 100.0 * m.det_z, 100.0 * m.det_x);
        out << line;
    }
    return out.str();
}

}  // namespace ivselect::report
