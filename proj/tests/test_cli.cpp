#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "onelap/cli/config.hpp"
#include "onelap/core.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using onelap::cli::Config;

namespace {

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("onelap-cli-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

struct Result {
    int code;
    std::string out;
};

Result tool(const std::string& args, const TempDir& dir)
{
    const fs::path log = dir / "stdout.log";
    const std::string cmd = std::string("\"") + ONELAP_TOOL + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    fs::remove(log);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Csv {
    std::string comment;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const
    {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name)
                return k;
        throw std::runtime_error("no column " + name);
    }
    double at(std::size_t row, const std::string& name) const
    {
        const auto& s = rows[row][col(name)];
        return s == "inf" ? INFINITY : std::stod(s);
    }
};

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    return out;
}

Csv read_csv(const fs::path& p)
{
    std::ifstream in(p);
    Csv c;
    std::string line;
    std::getline(in, c.comment);
    std::getline(in, line);
    c.header = split(line);
    while (std::getline(in, line))
        if (!line.empty())
            c.rows.push_back(split(line));
    return c;
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

json verdict(const json& report, const std::string& check)
{
    for (const auto& v : report["verdicts"])
        if (v["check"] == check)
            return v;
    throw std::runtime_error("no verdict " + check);
}

std::string out(const TempDir& d, const std::string& sub = "run") { return " --out \"" + (d / sub).string() + "\" "; }

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, DefaultsAndOverrides)
{
    Config c = Config::defaults();
    EXPECT_EQ(c.integer("geometry.N"), 3);
    EXPECT_DOUBLE_EQ(c.number("geometry.R"), 3.0);
    c.merge_override("datum.q=1.5");
    EXPECT_DOUBLE_EQ(c.number("datum.q"), 1.5);
    EXPECT_EQ(c.numbers("verify.levels"), (std::vector<double>{100, 1000, 10000}));
    EXPECT_EQ(c.words("verify.suites").size(), 8u);
}

TEST(Config, MergeTextCommentsAndErrors)
{
    Config c = Config::defaults();
    c.merge_text("# header\ngeometry.n = 64   # trailing\n\n", "inline");
    EXPECT_EQ(c.integer("geometry.n"), 64);
    EXPECT_THROW(c.merge_text("geometry.bogus = 1\n", "inline"), onelap::ConfigError);
    EXPECT_THROW(c.merge_text("geometry.n 64\n", "inline"), onelap::ConfigError);
    EXPECT_THROW(c.merge_override("novalue"), onelap::ConfigError);
    c.set("geometry.R", "abc");
    EXPECT_THROW(c.number("geometry.R"), onelap::ConfigError);
}

TEST(Config, HashTracksContent)
{
    Config a = Config::defaults(), b = Config::defaults();
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
    b.set("seed", "2");
    EXPECT_NE(a.hash(), b.hash());
    // FNV-1a 64 reference values
    EXPECT_EQ(onelap::cli::fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(onelap::cli::fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

// ---------------------------------------------------------------- exact

TEST(CliExact, BenchmarkProfile)
{
    TempDir d;
    const auto r = tool("exact" + out(d) + "geometry.n=16", d);
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("PASS  exact_residual"), std::string::npos);
    const auto csv = read_csv(d / "run/profile.csv");
    ASSERT_EQ(csv.rows.size(), 17u);
    EXPECT_EQ(csv.comment.rfind("# config_hash=", 0), 0u);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"r", "u", "z_radial", "region"}));
    EXPECT_TRUE(std::isinf(csv.at(0, "u")));
    EXPECT_DOUBLE_EQ(csv.at(16, "r"), 3.0);
    EXPECT_EQ(csv.at(16, "u"), 0.0);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double rr = csv.at(i, "r");
        if (std::abs(rr - 2.0) < 0.1)
            EXPECT_NEAR(csv.at(i, "z_radial"), -0.75, 0.05) << rr;
    }
    const auto report = read_json(d / "run/report.json");
    EXPECT_EQ(report["command"], "exact");
    EXPECT_EQ(report["config_hash"].get<std::string>().size(), 16u);
    EXPECT_TRUE(fs::exists(d / "run/timings.json"));
}

TEST(CliExact, TrivialDatum)
{
    TempDir d;
    const auto r = tool("exact" + out(d) + "geometry.N=2 geometry.R=0.5 datum.lambda=2 datum.q=0.5 geometry.n=32", d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto csv = read_csv(d / "run/profile.csv");
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        EXPECT_EQ(csv.at(i, "u"), 0.0);
    EXPECT_EQ(verdict(read_json(d / "run/report.json"), "trivial datum")["verdict"], "PASS");
}

TEST(CliExact, DiskGeometryRejected)
{
    TempDir d;
    const auto r = tool("exact" + out(d) + "geometry.kind=disk geometry.n=16", d);
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(fs::exists(d / "run"));
}

TEST(CliExact, RefusesOverwriteWithoutForce)
{
    TempDir d;
    ASSERT_EQ(tool("exact" + out(d) + "geometry.n=16", d).code, 0);
    const std::string before = slurp(d / "run/profile.csv");
    EXPECT_EQ(tool("exact" + out(d) + "geometry.n=32", d).code, 1);
    EXPECT_EQ(slurp(d / "run/profile.csv"), before);
    EXPECT_EQ(tool("exact --force" + out(d) + "geometry.n=32", d).code, 0);
    EXPECT_EQ(read_csv(d / "run/profile.csv").rows.size(), 33u);
}

// ---------------------------------------------------------------- solve

TEST(CliSolve, HomogeneousDatum)
{
    TempDir d;
    const auto r = tool("solve" + out(d) + "datum.kind=constant datum.c=0 geometry.n=64", d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto report = read_json(d / "run/report.json");
    EXPECT_LE(report["results"]["max_abs_u"].get<double>(), 1e-12);
    EXPECT_EQ(verdict(report, "converged")["verdict"], "PASS");
    EXPECT_TRUE(fs::exists(d / "run/convergence.json"));
}

TEST(CliSolve, BenchmarkError)
{
    TempDir d;
    const auto r = tool("solve" + out(d), d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto csv = read_csv(d / "run/profile.csv");
    ASSERT_EQ(csv.rows.size(), 4097u);
    double worst = 0.0;
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        if (csv.at(i, "r") >= 0.03)
            worst = std::max(worst, csv.at(i, "error"));
    EXPECT_LE(worst, 1e-2);
}

TEST(CliSolve, MalformedConfigFile)
{
    TempDir d;
    std::ofstream(d / "bad.conf") << "geometry.n = 64\nthis line is broken\n";
    const auto r = tool("solve --config \"" + (d / "bad.conf").string() + "\"" + out(d), d);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("invalid configuration"), std::string::npos);
    EXPECT_FALSE(fs::exists(d / "run"));
}

TEST(CliSolve, ConfigFileIsApplied)
{
    TempDir d;
    std::ofstream(d / "ok.conf") << "# small run\ngeometry.n = 128\ndatum.q = 1.5\n";
    const auto r = tool("solve --config \"" + (d / "ok.conf").string() + "\"" + out(d), d);
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(read_csv(d / "run/profile.csv").rows.size(), 129u);
    EXPECT_EQ(read_json(d / "run/report.json")["config"]["datum.q"], "1.5");
}

TEST(CliSolve, DiskGrid)
{
    TempDir d;
    const auto r = tool("solve" + out(d) + "geometry.kind=disk geometry.n=16 geometry.R=1 datum.q=1.5 datum.lambda=0.5"
                                           " solver.eps_min=1e-3",
                        d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto csv = read_csv(d / "run/profile.csv");
    // 16 x 16 cells plus one ghost ring
    EXPECT_EQ(csv.rows.size(), 324u);
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        if (csv.at(i, "inside") == 0.0)
            EXPECT_EQ(csv.at(i, "u"), 0.0);
}

// ---------------------------------------------------------------- verify

TEST(CliVerify, ComparisonIsReproducible)
{
    TempDir d;
    const std::string args =
        " --seed 7 geometry.N=2 geometry.n=512 datum.q=1.5 verify.suites=comparison verify.pairs=4 verify.family=mixed";
    const auto a = tool("verify" + out(d, "a") + args, d);
    const auto b = tool("verify" + out(d, "b") + args, d);
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_EQ(b.code, 0) << b.out;
    EXPECT_EQ(slurp(d / "a/report.json"), slurp(d / "b/report.json"));
    EXPECT_EQ(slurp(d / "a/comparison.csv"), slurp(d / "b/comparison.csv"));
    const auto report = read_json(d / "a/report.json");
    EXPECT_EQ(report["seed"], 7);
    EXPECT_EQ(read_csv(d / "a/comparison.csv").rows.size(), 4u);
    EXPECT_LE(verdict(report, "comparison_oracle")["detail"]["worst_violation"].get<double>(), 0.0);
}

TEST(CliVerify, RegularityCriticalExponent)
{
    TempDir d;
    const auto r = tool("verify" + out(d) + "verify.suites=regularity", d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto& v = verdict(read_json(d / "run/report.json"), "regularity");
    EXPECT_EQ(v["verdict"], "PASS");
    EXPECT_DOUBLE_EQ(v["detail"]["s_star"].get<double>(), 3.0);
    EXPECT_EQ(v["detail"]["below_s_star"], "stabilizes");
    EXPECT_EQ(v["detail"]["above_s_star"], "grows");
}

TEST(CliVerify, LadderLimit)
{
    TempDir d;
    const auto r = tool("verify" + out(d) + "verify.suites=ladder", d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto csv = read_csv(d / "run/ladder.csv");
    ASSERT_EQ(csv.rows.size(), 13u);
    for (std::size_t j = 0; j < csv.rows.size(); ++j) {
        EXPECT_DOUBLE_EQ(csv.at(j, "limit"), 6.0);
        EXPECT_LT(csv.at(j, "s_j"), 6.0);
        if (j > 0)
            EXPECT_GT(csv.at(j, "s_j"), csv.at(j - 1, "s_j"));
    }
}

TEST(CliVerify, ForcedFailureExitsThree)
{
    TempDir d;
    const auto r = tool("verify" + out(d) + "geometry.n=16 verify.suites=accuracy verify.accuracy_tol=1e-9", d);
    EXPECT_EQ(r.code, 3) << r.out;
    EXPECT_NE(r.out.find("FAIL  accuracy"), std::string::npos);
    EXPECT_EQ(verdict(read_json(d / "run/report.json"), "accuracy")["verdict"], "FAIL");
}

TEST(CliVerify, UnknownSuite)
{
    TempDir d;
    EXPECT_EQ(tool("verify" + out(d) + "verify.suites=ladder,nonsense", d).code, 1);
    EXPECT_FALSE(fs::exists(d / "run"));
}

TEST(CliVerify, PowerAndBound)
{
    TempDir d;
    const auto r = tool("verify" + out(d) + "verify.suites=power,bound verify.quadrature_n=20000", d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto report = read_json(d / "run/report.json");
    EXPECT_EQ(verdict(report, "power_identity")["verdict"], "PASS");
    EXPECT_EQ(verdict(report, "gradient_power_bound")["verdict"], "PASS");
}

// ---------------------------------------------------------------- sweep

TEST(CliSweep, GridRows)
{
    TempDir d;
    const auto r = tool("sweep" + out(d) + "sweep.q=1.5,2 sweep.n=256,512", d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto csv = read_csv(d / "run/sweep.csv");
    ASSERT_EQ(csv.rows.size(), 4u);
    EXPECT_EQ(csv.comment.rfind("# config_hash=", 0), 0u);
    EXPECT_DOUBLE_EQ(csv.at(0, "q"), 1.5);
    EXPECT_DOUBLE_EQ(csv.at(0, "n"), 256);
    EXPECT_DOUBLE_EQ(csv.at(1, "n"), 512);
    EXPECT_DOUBLE_EQ(csv.at(3, "q"), 2.0);
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_EQ(csv.rows[i][csv.col("verdict")], "ok");
}

TEST(CliSweep, EmptyGrid)
{
    TempDir d;
    EXPECT_EQ(tool("sweep" + out(d) + "sweep.q=", d).code, 1);
    EXPECT_FALSE(fs::exists(d / "run"));
}

TEST(CliSweep, RefinementErrorDecreases)
{
    TempDir d;
    const auto r = tool("sweep" + out(d) + "sweep.n=512,1024,2048,4096", d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto csv = read_csv(d / "run/sweep.csv");
    ASSERT_EQ(csv.rows.size(), 4u);
    for (std::size_t i = 1; i < 4; ++i)
        EXPECT_LT(csv.at(i, "max_error"), csv.at(i - 1, "max_error"));
}
