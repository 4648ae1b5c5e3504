#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"
#include "qvlab/config.hpp"
#include "qvlab/error.hpp"

using namespace qvlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("qvlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    /// Runs the CLI; returns its exit status. stdout and stderr land in out.txt / err.txt.
    int run(const std::string& args) {
        const std::string cmd = std::string(QVLAB_CLI) + " " + args + " >" + (dir_ / "out.txt").string() + " 2>" +
                                (dir_ / "err.txt").string();
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    }
    std::string err() const { return slurp(dir_ / "err.txt"); }
    fs::path dir_;
};

const char* kConstant = R"([market]
s0 = 100
r = 0.02

[surface]
family = constant
alpha = 0.04

[engine]
dt = 0.01
n_steps = 100
n_paths = 20000
seed = 77
measure = risk_neutral
)";

}  // namespace

TEST(Config, ParsesSectionsCommentsAndLists) {
    const auto c = Config::parse_string("# top\n[a]\nx = 1.5  # trailing\n; other\ny = 1, 2 ,3\nname = smile\n");
    EXPECT_EQ(c.get_double("a", "x"), 1.5);
    EXPECT_EQ(c.get_list("a", "y"), (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(c.get_string("a", "name"), "smile");
    EXPECT_EQ(c.get_double("a", "missing", 2.0), 2.0);
}

TEST(Config, MissingKeyNamesIt) {
    const auto c = Config::parse_string("[engine]\ndt = 0.1\n");
    try {
        c.get_u64("engine", "seed");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("engine.seed"), std::string::npos);
    }
}

TEST(Config, MalformedInputs) {
    EXPECT_THROW(Config::parse_string("[a\nx=1\n"), ParseError);
    EXPECT_THROW(Config::parse_string("x = 1\n"), ParseError);
    EXPECT_THROW(Config::parse_string("[a]\nnot a pair\n"), ParseError);
    const auto c = Config::parse_string("[a]\nx = abc\nn = -3\n");
    EXPECT_THROW(c.get_double("a", "x"), ConfigError);
    EXPECT_THROW(c.get_u64("a", "n"), ConfigError);
}

TEST(Config, ResolvedPreambleRoundTrips) {
    const auto c = Config::parse_string("[b]\nk = 3\n[a]\nx = 0.1\nunused = 9\n");
    c.get_u64("b", "k");
    c.get_double("a", "x");
    c.get_double("a", "defaulted", 0.25);
    const std::string preamble = c.resolved_preamble();
    EXPECT_EQ(preamble.find("unused"), std::string::npos);
    const auto back = Config::parse_string(preamble + "path_id,t,value\n0,0,1\n");
    EXPECT_EQ(back.get_double("a", "defaulted"), 0.25);
    EXPECT_EQ(back.get_u64("b", "k"), 3u);
    back.get_double("a", "x");
    EXPECT_EQ(back.resolved_text(), c.resolved_text());
}

TEST_F(Cli, SimulateWritesEveryNodeAndIsReproducible) {
    spit(dir_ / "run.ini", R"([market]
s0 = 100
[surface]
family = constant
alpha = 0.04
[engine]
dt = 0.1
n_steps = 5
n_paths = 3
seed = 1
)");
    ASSERT_EQ(run("simulate --config " + (dir_ / "run.ini").string() + " --out " + (dir_ / "a").string()), 0) << err();
    const auto csv = slurp(dir_ / "a" / "paths.csv");
    std::istringstream in(csv);
    std::string line;
    int rows = 0;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        ++rows;
    }
    EXPECT_EQ(rows, 3 * 6);
    ASSERT_EQ(run("simulate --config " + (dir_ / "run.ini").string() + " --out " + (dir_ / "b").string()), 0);
    EXPECT_EQ(slurp(dir_ / "b" / "paths.csv"), csv);
    // The artifact carries its config, so it reproduces itself.
    ASSERT_EQ(run("simulate --config " + (dir_ / "a" / "paths.csv").string() + " --out " + (dir_ / "c").string()), 0)
        << err();
    EXPECT_EQ(slurp(dir_ / "c" / "paths.csv"), csv);
}

TEST_F(Cli, MissingSeedIsNamed) {
    spit(dir_ / "run.ini", "[market]\ns0 = 100\n[surface]\nfamily = constant\nalpha = 0.04\n[engine]\ndt = 0.1\n"
                           "n_steps = 5\nn_paths = 3\n");
    EXPECT_EQ(run("simulate --config " + (dir_ / "run.ini").string() + " --out " + dir_.string()), 1);
    EXPECT_NE(err().find("engine.seed"), std::string::npos) << err();
}

TEST_F(Cli, QvEnsembleAndFitErrors) {
    spit(dir_ / "run.ini", std::string(kConstant) + "[qv]\nwindows = 0.25, 0.5, 1\n");
    ASSERT_EQ(run("qv --config " + (dir_ / "run.ini").string() + " --out " + dir_.string()), 0) << err();
    const auto text = slurp(dir_ / "out.txt");
    const auto pos = text.find("T=1 mean QV/T=");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_NEAR(std::stod(text.substr(pos + 14)), 0.04, 5e-4);
    EXPECT_EQ(run("qv --fit --config " + (dir_ / "run.ini").string() + " --out " + dir_.string()), 1);
    EXPECT_NE(err().find("window"), std::string::npos);
}

TEST_F(Cli, QvIngestsTwoRowCsv) {
    spit(dir_ / "prices.csv", "t,price\n0,100\n1,110\n");
    spit(dir_ / "run.ini", "[qv]\nwindows = 1\ninput = " + (dir_ / "prices.csv").string() + "\n");
    ASSERT_EQ(run("qv --config " + (dir_ / "run.ini").string() + " --out " + dir_.string()), 0) << err();
    const auto text = slurp(dir_ / "out.txt");
    const auto pos = text.find("mean QV/T=");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_NEAR(std::stod(text.substr(pos + 10)), std::pow(std::log(1.1), 2), 1e-5);
}

TEST_F(Cli, IvSurfaceOnConstantIsFlat) {
    spit(dir_ / "run.ini", std::string(kConstant) + "[ivsurface]\nstrikes = 90, 100, 110\nexpiries = 1\n");
    ASSERT_EQ(run("ivsurface --config " + (dir_ / "run.ini").string() + " --out " + dir_.string()), 0) << err();
    std::istringstream in(slurp(dir_ / "iv_surface.csv"));
    std::string line;
    int seen = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("expiry", 0) == 0) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        ASSERT_GE(f.size(), 7u);
        EXPECT_NEAR(std::stod(f[5]), 0.04, 2e-3) << line;
        ++seen;
    }
    EXPECT_EQ(seen, 3);
    const auto audit = nlohmann::json::parse(slurp(dir_ / "iv_audit.json"));
    EXPECT_TRUE(audit["sandwich_pass"].get<bool>());
    EXPECT_TRUE(audit["config"].is_string());
}

TEST_F(Cli, CovFitWithinThreeSE) {
    spit(dir_ / "run.ini", R"([surface]
family = constant
alpha = 0.04
[engine]
dt = 0.1
n_steps = 80
n_paths = 100000
seed = 12
[cov]
alpha = 0.04
beta = 0.01
times = 1, 2, 4, 8
)");
    ASSERT_EQ(run("cov --config " + (dir_ / "run.ini").string() + " --out " + dir_.string()), 0) << err();
    const auto fit = nlohmann::json::parse(slurp(dir_ / "cov_fit.json"));
    EXPECT_LE(std::abs(fit["alpha_hat"].get<double>() - 0.04), 3.0 * fit["alpha_std_err"].get<double>());
    EXPECT_LE(std::abs(fit["beta_hat"].get<double>() - 0.01), 3.0 * fit["beta_std_err"].get<double>());
    // JSON artifacts are accepted as configs.
    ASSERT_EQ(run("cov --config " + (dir_ / "cov_fit.json").string() + " --out " + (dir_ / "again").string()), 0);
    EXPECT_EQ(slurp(dir_ / "again" / "cov_fit.json"), slurp(dir_ / "cov_fit.json"));
}

TEST_F(Cli, PvOfParityTripleIsZero) {
    spit(dir_ / "book.csv", "quantity,kind,strike,expiry\n1,call,100,1\n-1,put,100,1\n-1,forward,100,1\n");
    spit(dir_ / "run.ini", "[market]\ns0 = 100\nr = 0.05\n[cov]\nalpha = 0.04\nbeta = 0.01\n[engine]\nseed = 3\n"
                           "[forecast]\nz = 1\nT = 1\ntimes = 1\ns_z = 104\nvariant = limit\n"
                           "[pv]\nportfolio = book.csv\nn_samples = 5000\n");
    ASSERT_EQ(run("pv --config " + (dir_ / "run.ini").string() + " --out " + dir_.string()), 0) << err();
    const auto pv = nlohmann::json::parse(slurp(dir_ / "pv.json"));
    EXPECT_LE(std::abs(pv["mean_pv"].get<double>()), 1e-9);
    EXPECT_LE(pv["var_pv"].get<double>(), 1e-18);
}

TEST_F(Cli, ForecastLimitValues) {
    spit(dir_ / "run.ini", "[cov]\nalpha = 0.04\n[forecast]\nz = 1\nT = 1\nx = 0.1\ntimes = 1, 2\n");
    ASSERT_EQ(run("forecast --config " + (dir_ / "run.ini").string() + " --out " + dir_.string()), 0) << err();
    const auto f = nlohmann::json::parse(slurp(dir_ / "forecast.json"));
    EXPECT_NEAR(f["mean"][0].get<double>(), 0.2, 1e-15);
    EXPECT_NEAR(f["cov"][0][1].get<double>(), 0.12, 1e-15);
    EXPECT_NEAR(f["cov"][1][1].get<double>(), 0.24, 1e-15);
}

TEST_F(Cli, VerifySuiteSelection) {
    EXPECT_EQ(run("verify --suite parity --out " + dir_.string()), 0) << err();
    const auto report = nlohmann::json::parse(slurp(dir_ / "verify_report.json"));
    ASSERT_TRUE(report.is_array());
    for (const auto& row : report) EXPECT_TRUE(row["pass"].get<bool>());
    EXPECT_EQ(run("verify --suite nosuch --out " + dir_.string()), 1);
    EXPECT_NE(err().find("nosuch"), std::string::npos);
}

TEST_F(Cli, UnknownSubcommandAndMissingConfig) {
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("price --config " + (dir_ / "nope.ini").string()), 1);
    EXPECT_EQ(run("price"), 1);
}
