#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Invocation {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("ivselect_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Invocation run(const std::string& args) const {
        const auto out = dir_ / "stdout.txt";
        const auto err = dir_ / "stderr.txt";
        const std::string cmd = std::string(IVSELECT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        Invocation r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path write(const std::string& name, const std::string& content) const {
        std::ofstream(dir_ / name) << content;
        return dir_ / name;
    }

    fs::path toy_csv() const {
        std::mt19937_64 rng(5);
        std::bernoulli_distribution coin(0.5), flip(0.2);
        std::normal_distribution<double> normal;
        std::ostringstream s;
        s << "y,d,z\n";
        for (int i = 0; i < 600; ++i) {
            const int z = coin(rng) ? 1 : 0;
            const int d = z ^ (flip(rng) ? 1 : 0);
            s << d + normal(rng) << "," << d << "," << z << "\n";
        }
        return write("toy.csv", s.str());
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, ToyCsvProducesReport) {
    const auto csv = toy_csv();
    const auto r = run("test " + csv.string() + " --outcome y --treatment d --out " + dir_.string() + " --seed 3");
    ASSERT_TRUE(r.code == 0 || r.code == 3) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir_ / "report.json"));
    EXPECT_EQ(j.at("schema_version").get<int>(), 1);
    EXPECT_EQ(j.at("candidates").size(), 1u);
    EXPECT_EQ(j.at("tests").size(), 1u);
    EXPECT_EQ(j.at("verdict").get<std::string>() == "identified", r.code == 0);
    EXPECT_FALSE(slurp(dir_ / "summary.txt").empty());
}

TEST_F(Cli, MissingCellIsAnError) {
    const auto csv = write("na.csv", "y,d,z\n1,0,1\n2,1,NA\n");
    const auto r = run("test " + csv.string() + " --outcome y --treatment d --out " + dir_.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("'z'"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir_ / "report.json"));
}

TEST_F(Cli, InvalidFlagValuesRejected) {
    const auto csv = toy_csv();
    EXPECT_EQ(run("test " + csv.string() + " --alpha 1.5 --out " + dir_.string()).code, 1);
    EXPECT_EQ(run("test " + csv.string() + " --folds 1 --out " + dir_.string()).code, 1);
    EXPECT_EQ(run("test " + csv.string() + " --mode best --out " + dir_.string()).code, 1);
    EXPECT_EQ(run("test " + csv.string() + " --candidates w --out " + dir_.string()).code, 1);
}

TEST_F(Cli, EmptyScenarioListIsConfigError) {
    const auto sc = write("empty.json", "[]");
    const auto r = run("simulate " + sc.string() + " --out " + (dir_ / "sim").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(fs::exists(dir_ / "sim" / "metrics.csv"));
}

TEST_F(Cli, SingleRepSmokeRunWithinBudget) {
    const auto sc = write("one.json", R"([{"n": 1000, "delta": 0, "gamma": 0, "reps": 1, "seed": 2}])");
    const auto start = std::chrono::steady_clock::now();
    const auto r = run("simulate " + sc.string() + " --out " + (dir_ / "sim").string() + " --threads 1");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(secs, 60.0);
    const std::string csv = slurp(dir_ / "sim" / "metrics.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    EXPECT_TRUE(fs::exists(dir_ / "sim" / "summary.json"));
    EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, GeneratedNullDataRoundTrips) {
    const auto csv = dir_ / "null.csv";
    ASSERT_EQ(run("generate --n 4000 --seed 8 --out " + csv.string()).code, 0);
    const auto r = run("test " + csv.string() + " --outcome y --treatment d --out " + dir_.string() + " -q");
    ASSERT_TRUE(r.code == 0 || r.code == 3) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir_ / "report.json"));
    EXPECT_EQ(j.at("candidates").size(), 20u);
    EXPECT_EQ(j.at("n").get<std::size_t>(), 4000u);
}

TEST_F(Cli, CheckPassesAndIsReproducible) {
    const auto a = run("check --n 20000");
    EXPECT_EQ(a.code, 0) << a.out;
    const auto b = run("check --n 20000");
    EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, CorruptedScoreFailsCheck) {
    const auto r = run("check --debug-corrupt-score");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("FAIL"), std::string::npos) << r.out;
}
