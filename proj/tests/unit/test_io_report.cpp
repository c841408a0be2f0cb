#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ivselect/errors.hpp"
#include "ivselect/io.hpp"
#include "ivselect/report.hpp"
#include "ivselect/simulation.hpp"

using namespace ivselect;
using nlohmann::json;

namespace {

std::string error_of(const std::string& text, const io::CsvColumns& cols) {
    try {
        io::parse_csv(text, cols, "toy.csv");
    } catch (const InputError& e) {
        return e.what();
    }
    return {};
}

selection::SelectionReport small_report() {
    simulation::DgpConfig dgp;
    dgp.n = 800;
    dgp.seed = 21;
    const auto data = simulation::generate(dgp);
    selection::SelectionConfig cfg;
    cfg.fs_level = 0.2;
    cfg.seed = 4;
    return selection::run_pipeline(data, cfg);
}

}  // namespace

TEST(Csv, ParsesSelectedColumns) {
    const auto d = io::parse_csv("y,d,a,b\n1.5,1,0,2\n-2,0,1,3e-1\n", {"y", "d", {"b"}});
    EXPECT_EQ(d.n(), 2u);
    EXPECT_EQ(d.p(), 1u);
    EXPECT_EQ(d.names, (std::vector<std::string>{"b"}));
    EXPECT_DOUBLE_EQ(d.q(1, 0), 0.3);
    EXPECT_DOUBLE_EQ(d.y[1], -2.0);
    const auto all = io::parse_csv("y,d,a,b\r\n1,1,0,2\r\n", {"y", "d", {}});
    EXPECT_EQ(all.names, (std::vector<std::string>{"a", "b"}));
}

TEST(Csv, MissingCellNamesLineAndColumn) {
    const auto msg = error_of("y,d,z\n1,0,1\n2,1,NA\n", {"y", "d", {}});
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'z'"), std::string::npos) << msg;
    EXPECT_FALSE(error_of("y,d,z\n1,0,\n", {"y", "d", {}}).empty());
}

TEST(Csv, OtherInputErrors) {
    EXPECT_NE(error_of("y,d,z\n1,2,1\n", {"y", "d", {}}).find("'d'"), std::string::npos);
    EXPECT_NE(error_of("y,d,z\n1,0,abc\n", {"y", "d", {}}).find("line 2"), std::string::npos);
    EXPECT_NE(error_of("y,d,z\n1,0,1\n", {"y", "t", {}}).find("missing column 't'"), std::string::npos);
    EXPECT_NE(error_of("y,d,z,z\n1,0,1,1\n", {"y", "d", {}}).find("duplicate"), std::string::npos);
    EXPECT_NE(error_of("y,d,z\n1,0\n", {"y", "d", {}}).find("line 2"), std::string::npos);
}

TEST(Csv, WriteReadRoundTrip) {
    simulation::DgpConfig dgp;
    dgp.n = 50;
    dgp.seed = 2;
    const auto data = simulation::generate(dgp);
    const auto path = std::filesystem::temp_directory_path() / "ivselect_roundtrip.csv";
    io::write_csv(data, path);
    const auto back = io::read_csv(path, {"y", "d", {}});
    std::filesystem::remove(path);
    EXPECT_EQ(back.y, data.y);
    EXPECT_EQ(back.q, data.q);
    EXPECT_EQ(back.names, data.names);
}

TEST(Format, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, std::numeric_limits<double>::max(), 0.0}) {
        EXPECT_EQ(std::stod(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(0.25), "0.25");
}

TEST(AtomicWrite, ReplacesContent) {
    const auto path = std::filesystem::temp_directory_path() / "ivselect_atomic.txt";
    io::write_atomic(path, "first");
    io::write_atomic(path, "second");
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), "second");
    std::filesystem::remove(path);
}

TEST(Report, JsonRoundTrip) {
    const auto r = small_report();
    const std::string text = report::to_json(r);
    const auto back = report::from_json(text);
    EXPECT_EQ(back, r);
    EXPECT_EQ(report::to_json(back), text);
    const auto j = json::parse(text);
    EXPECT_EQ(j.at("schema_version").get<int>(), 1);
    EXPECT_EQ(j.at("multiple_testing_correction").get<std::string>(), "none");
}

TEST(Report, RejectsOtherSchemaVersions) {
    auto j = json::parse(report::to_json(small_report()));
    j["schema_version"] = 2;
    EXPECT_THROW(report::from_json(j.dump()), InputError);
    EXPECT_THROW(report::from_json("{"), InputError);
}

TEST(Report, SummaryNumbersEqualJsonValues) {
    const auto r = small_report();
    const auto j = json::parse(report::to_json(r));
    const std::string text = report::summary_text(r);
    ASSERT_FALSE(j.at("tests").empty());
    for (const auto& t : j.at("tests")) {
        if (t.at("result").is_null()) continue;
        for (const char* key : {"theta_hat", "sigma_hat", "t_stat", "p_value"}) {
            const std::string v = io::format_double(t.at("result").at(key).get<double>());
            EXPECT_NE(text.find(v), std::string::npos) << key << " " << v;
        }
    }
    EXPECT_NE(text.find(io::format_double(j.at("critical_value").get<double>())), std::string::npos);
    if (!j.at("effect").is_null()) {
        EXPECT_NE(text.find(io::format_double(j.at("effect").at("ols").get<double>())), std::string::npos);
    }
}

TEST(Metrics, JsonRoundTripAndCsvShape) {
    simulation::McMetrics m;
    m.scenario = {"null", 1000, 0.0, 0.0, 10, 3};
    m.reps = 10;
    m.est = 0.125;
    m.std = 0.5;
    m.mean_se = 0.1;
    m.det_z = 0.3;
    m.det_x = 0.1;
    const std::vector<simulation::McMetrics> v{m, m};
    EXPECT_EQ(report::metrics_from_json(report::metrics_json(v)), v);
    const std::string csv = report::metrics_csv(v);
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_NE(header.find("det_z"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_NE(report::metrics_table(v).find("0.125"), std::string::npos);
}
