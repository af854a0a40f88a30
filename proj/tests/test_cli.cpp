#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "arsieve/panel.hpp"
#include "arsieve/sim.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::path(::testing::TempDir()) / (std::string("arsieve_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Result run(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = std::string(ARSIEVE_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        Result r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void write_panel(const std::string& name, const arsieve::Matrix& m) const {
        arsieve::write_matrix_csv(path(name).string(), m);
    }

    fs::path dir_;
};

arsieve::Matrix read_csv(const fs::path& p) {
    std::ifstream in(p);
    return arsieve::read_matrix_csv(in);
}

std::vector<std::string> tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == '\n' || c == ' ' || c == ':' || c == '[' || c == ']' || c == '{' || c == '}') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
            if (c != ' ') out.emplace_back(1, c);
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

/// Same layout and labels, numbers equal to 1e-9 relative.
void expect_same_schema(const std::string& actual, const std::string& golden, const std::string& what) {
    const auto a = tokens(actual), g = tokens(golden);
    ASSERT_EQ(a.size(), g.size()) << what;
    for (std::size_t i = 0; i < a.size(); ++i) {
        char* ea = nullptr;
        char* eg = nullptr;
        const double x = std::strtod(a[i].c_str(), &ea), y = std::strtod(g[i].c_str(), &eg);
        const bool num = !a[i].empty() && !g[i].empty() && *ea == '\0' && *eg == '\0';
        if (num)
            EXPECT_NEAR(x, y, 1e-9 * (1.0 + std::abs(y))) << what << " token " << i;
        else
            EXPECT_EQ(a[i], g[i]) << what << " token " << i;
    }
}

}  // namespace

TEST_F(Cli, SimulateShapeAndDeterminism) {
    const auto r = run("simulate --dgp two-factor --N 50 --T 200 --nu 1.0 --seed 7 -o " + path("a.csv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = read_csv(path("a.csv"));
    EXPECT_EQ(m.rows(), 50);
    EXPECT_EQ(m.cols(), 200);
    ASSERT_TRUE(fs::exists(path("a.truth.json")));
    const auto truth = nlohmann::json::parse(slurp(path("a.truth.json")));
    EXPECT_FALSE(truth.empty());
    ASSERT_EQ(run("simulate --dgp two-factor --N 50 --T 200 --nu 1.0 --seed 7 -o " + path("b.csv").string()).code, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(slurp(path("a.truth.json")), slurp(path("b.truth.json")));
    const auto stdout_run = run("simulate --N 50 --T 200 --seed 7");
    EXPECT_EQ(stdout_run.out, slurp(path("a.csv")));
}

TEST_F(Cli, SimulateRejectsBadNu) {
    const auto r = run("simulate --nu 1.5 -o " + path("x.csv").string());
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(r.err.rfind("error:", 0), 0u) << r.err;
    EXPECT_NE(r.err.find("(0, 1]"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("x.csv")));
}

TEST_F(Cli, ArgumentErrorsHavePrefix) {
    const auto r = run("simulate --N");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("error:args:", 0), 0u) << r.err;
    const auto missing = run("estimate -i " + path("none.csv").string());
    EXPECT_NE(missing.code, 0);
    EXPECT_EQ(missing.err.rfind("error:input:", 0), 0u) << missing.err;
}

TEST_F(Cli, MalformedCsvReportsLocation) {
    std::ofstream(path("bad.csv")) << "1,2,3\n4,x,6\n";
    const auto r = run("estimate -i " + path("bad.csv").string());
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(r.err.rfind("error:input:", 0), 0u) << r.err;
    EXPECT_NE(r.err.find("line 2, column 2"), std::string::npos) << r.err;
}

TEST_F(Cli, EstimateReportsTwoFactors) {
    ASSERT_EQ(run("simulate --N 100 --T 400 --seed 11 -o " + path("p.csv").string()).code, 0);
    const auto r = run("estimate -i " + path("p.csv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("r").get<int>(), 2);
    EXPECT_TRUE(j.at("r_estimated").get<bool>());
    EXPECT_FALSE(j.at("ratio_path").empty());
    EXPECT_TRUE(j.contains("spectral_radius"));
    EXPECT_TRUE(j.contains("coefficient_norms"));
    EXPECT_GE(j.at("order").at("p").get<int>(), 1);
}

TEST_F(Cli, EstimateRankOverride) {
    ASSERT_EQ(run("simulate --N 30 --T 200 --seed 12 -o " + path("p.csv").string()).code, 0);
    const auto r = run("estimate -i " + path("p.csv").string() + " --r 3");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("r").get<int>(), 3);
    EXPECT_FALSE(j.at("r_estimated").get<bool>());
    EXPECT_TRUE(j.at("ratio_path").empty());
}

TEST_F(Cli, EstimateSingleSeriesWarns) {
    arsieve::Matrix y(1, 100);
    for (int t = 0; t < 100; ++t) y(0, t) = std::sin(0.3 * t) + 0.1 * ((t * 37) % 11);
    write_panel("one.csv", y);
    const auto r = run("estimate -i " + path("one.csv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out).at("r").get<int>(), 1);
    EXPECT_NE(r.err.find("warning:"), std::string::npos);
}

TEST_F(Cli, ApplyProducesPlotFiles) {
    arsieve::DgpSpec spec;
    spec.N = 48;
    spec.T = 182;
    spec.seed = 13;
    write_panel("pm.csv", arsieve::simulate(spec).first.values());
    const std::string out = path("out").string();
    const auto r = run("apply -i " + path("pm.csv").string() + " -o " + out +
                       " --levels 0.90 --kind unreversed --lag 1 --B 99 --seed 3 --threads 1");
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* name : {"surface_estimate.csv", "surface_lower_0.90.csv", "surface_upper_0.90.csv"}) {
        const auto m = read_csv(fs::path(out) / name);
        EXPECT_EQ(m.rows(), 48) << name;
        EXPECT_EQ(m.cols(), 48) << name;
    }
    const std::string mean_csv = slurp(fs::path(out) / "mean_interval_0.90.csv");
    std::istringstream in(mean_csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "index,estimate,lower,upper");
    const auto m = arsieve::read_matrix_csv(in);
    EXPECT_EQ(m.rows(), 48);
    EXPECT_EQ(m.cols(), 4);
    for (Eigen::Index i = 0; i < 48; ++i) {
        EXPECT_EQ(m(i, 0), i + 1);
        EXPECT_LE(m(i, 2), m(i, 3));
    }
    const auto lo = read_csv(fs::path(out) / "surface_lower_0.90.csv");
    const auto hi = read_csv(fs::path(out) / "surface_upper_0.90.csv");
    EXPECT_TRUE((lo.array() <= hi.array()).all());
    const auto doc = nlohmann::json::parse(slurp(fs::path(out) / "intervals.json"));
    EXPECT_EQ(doc.at("surface_kind").get<std::string>(), "unreversed_percentile");
    EXPECT_EQ(doc.at("mean_vector_kind").get<std::string>(), "unreversed_percentile");
}

TEST_F(Cli, ApplyIsByteIdenticalOnRerun) {
    ASSERT_EQ(run("simulate --N 12 --T 80 --seed 14 -o " + path("p.csv").string()).code, 0);
    const std::string base = "apply -i " + path("p.csv").string() + " --B 40 --seed 9 --levels 0.8,0.95 -o ";
    ASSERT_EQ(run(base + path("a").string() + " --threads 1").code, 0);
    ASSERT_EQ(run(base + path("b").string() + " --threads 3").code, 0);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(path("a"))) {
        const auto other = path("b") / e.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
        ++compared;
    }
    EXPECT_EQ(compared, 1u + 2u + 1u + 2u * 2u);
}

TEST_F(Cli, ApplyConstantPanelGivesZeroWidth) {
    arsieve::Matrix y(5, 60);
    for (Eigen::Index i = 0; i < 5; ++i) y.row(i).setConstant(1.0 + static_cast<double>(i));
    write_panel("c.csv", y);
    const auto r = run("apply -i " + path("c.csv").string() + " -o " + path("out").string() + " --B 20 --threads 1");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("degenerate"), std::string::npos) << r.err;
    std::istringstream in(slurp(path("out") / "mean_interval_0.95.csv"));
    std::string header;
    std::getline(in, header);
    const auto m = arsieve::read_matrix_csv(in);
    for (Eigen::Index i = 0; i < 5; ++i) {
        EXPECT_NEAR(m(i, 3) - m(i, 2), 0.0, 1e-9);
        EXPECT_NEAR(m(i, 2), m(i, 1), 1e-9);
    }
    const auto doc = nlohmann::json::parse(slurp(path("out") / "intervals.json"));
    EXPECT_FALSE(doc.at("warnings").empty());
}

TEST_F(Cli, CoverageMinimalConfig) {
    std::ofstream(path("grid.cfg")) << "cells = 100x20\nM = 2\nB = 20\nseed = 5\n";
    const auto r = run("coverage " + path("grid.cfg").string() + " --threads 1");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "T,N,level,coverage,width,score,kind,statistic,nu,M,failures");
    const auto again = run("coverage " + path("grid.cfg").string() + " --threads 2 -q");
    EXPECT_EQ(again.out, r.out);
    EXPECT_TRUE(again.err.empty()) << again.err;
    EXPECT_FALSE(r.err.empty());  // progress log
}

TEST_F(Cli, CoverageConfigErrorNamesKey) {
    std::ofstream(path("bad.cfg")) << "cells = 100x20\nlevels = 1.5\n";
    const auto r = run("coverage " + path("bad.cfg").string());
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(r.err.rfind("error:config:", 0), 0u) << r.err;
    EXPECT_NE(r.err.find("levels"), std::string::npos) << r.err;
}

TEST_F(Cli, GoldenOutputs) {
    const fs::path golden = fs::path(ARSIEVE_TEST_DATA_DIR) / "golden";
    ASSERT_EQ(run("simulate --N 6 --T 60 --seed 1 -o " + path("sim.csv").string()).code, 0);
    expect_same_schema(slurp(path("sim.csv")), slurp(golden / "sim.csv"), "sim.csv");
    expect_same_schema(slurp(path("sim.truth.json")), slurp(golden / "sim.truth.json"), "sim.truth.json");
    const auto est = run("estimate -i " + (golden / "sim.csv").string() + " --r 2");
    ASSERT_EQ(est.code, 0) << est.err;
    expect_same_schema(est.out, slurp(golden / "estimate.json"), "estimate.json");
    ASSERT_EQ(run("apply -i " + (golden / "sim.csv").string() + " --r 2 --B 20 --seed 2 --threads 1 -o " +
                  path("apply").string())
                  .code,
              0);
    for (const char* name : {"intervals.json", "mean_interval_0.95.csv", "surface_estimate.csv",
                             "surface_lower_0.95.csv", "surface_upper_0.95.csv"})
        expect_same_schema(slurp(path("apply") / name), slurp(golden / "apply" / name), name);
}
