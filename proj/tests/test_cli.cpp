#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "steinpoly/cli.hpp"
#include "steinpoly/json_io.hpp"

namespace steinpoly {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fam(const std::string& name) { return std::string(STEINPOLY_DATA_DIR) + "/families/" + name + ".json"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("steinpoly_cli_" + name);
  fs::remove_all(d);
  return d;
}

TEST(Cli, ParseGrid) {
  const auto g = parse_grid("0:2:21");
  ASSERT_EQ(g.size(), 21u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 2.0);
  EXPECT_NEAR(g[10], 1.0, 1e-15);
  EXPECT_EQ(parse_grid("1:1:1"), std::vector<double>{1.0});
  EXPECT_ANY_THROW(parse_grid("0:2"));
  EXPECT_ANY_THROW(parse_grid("2:0:5"));
  EXPECT_ANY_THROW(parse_grid("0:1:2.5"));
  EXPECT_ANY_THROW(parse_grid("0:1:0"));
  EXPECT_ANY_THROW(parse_grid("a:1:3"));
}

TEST(Cli, VerifyNormalPasses) {
  const CliRun r = run({"verify", "--family", fam("normal"), "--J", "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["J"], 10);
  for (const auto& c : j["checks"]) EXPECT_LE(c["max_residual"].get<double>(), c["tol"].get<double>()) << c["name"];
}

TEST(Cli, VerifyEveryPolynomialFamilyPasses) {
  for (const char* f : {"poisson", "gamma", "beta", "binomial", "pascal", "mvnormal"}) {
    const CliRun r = run({"verify", "--family", fam(f), "--J", "6"});
    EXPECT_EQ(r.code, kExitOk) << f << "\n" << r.out << r.err;
  }
}

// The negative binomial projection is not a polynomial in mu, so the
// suite must report a failure.
TEST(Cli, VerifyFailureExitsOne) {
  const CliRun r = run({"verify", "--family", fam("negbin"), "--J", "6"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_FALSE(Json::parse(r.out)["pass"].get<bool>());
}

TEST(Cli, TightToleranceOverrideFails) {
  const CliRun r = run({"verify", "--family", fam("pascal"), "--J", "6", "--tol", "1e-16"});
  EXPECT_EQ(r.code, kExitFailure);
}

TEST(Cli, ProjectPoissonIsScaledPower) {
  const CliRun r = run({"project", "--family", fam("poisson"), "--J", "5", "--z-grid", "0:2:21"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "j,z2,mu,P");
  int rows = 0;
  while (std::getline(in, line)) {
    int j;
    double z, m, p;
    ASSERT_EQ(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &j, &z, &m, &p), 4) << line;
    const double want = std::pow(z, j);
    EXPECT_LE(std::abs(p - want), 1e-9 * (1 + std::abs(want))) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 6 * 21);
}

TEST(Cli, ProjectWritesBothArtifacts) {
  const fs::path d = fresh_dir("project");
  const CliRun r = run({"project", "--family", fam("gamma"), "--J", "3", "--out", d.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(fs::exists(d / "projection.csv"));
  const Json j = Json::parse(slurp(d / "projection.json"));
  ASSERT_EQ(j["fitted"].size(), 4u);
  for (const auto& f : j["fitted"]) EXPECT_TRUE(f["certified"].get<bool>());
}

TEST(Cli, UsageErrorsExitTwo) {
  const CliRun missing = run({"verify", "--J", "3"});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_NE(missing.err.find("--family"), std::string::npos);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"verify", "--family", fam("normal"), "--tol", "0"}).code, kExitUsage);
  EXPECT_EQ(run({"project", "--family", fam("normal"), "--z-grid", "1:0:3"}).code, kExitUsage);
  EXPECT_EQ(run({"verify", "--family", "/nonexistent.json"}).code, kExitUsage);
  EXPECT_EQ(run({"complete", "--family", fam("poisson"), "--fold", "1"}).code, kExitUsage);
  EXPECT_EQ(run({"simulate", "--family", fam("normal"), "--response", "other"}).code, kExitUsage);
}

TEST(Cli, UnknownKindExitsTwo) {
  const fs::path p = fs::temp_directory_path() / "steinpoly_cli_bad.json";
  std::ofstream(p) << R"({"kind":"Weibull","z_domain":[0,1]})";
  const CliRun r = run({"verify", "--family", p.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Weibull"), std::string::npos);
}

TEST(Cli, UnwritableOutputExitsTwo) {
  EXPECT_EQ(run({"families", "--out", "/proc/steinpoly"}).code, kExitUsage);
}

TEST(Cli, FamiliesListAndDescribe) {
  const CliRun list = run({"families"});
  ASSERT_EQ(list.code, kExitOk);
  EXPECT_EQ(Json::parse(list.out).size(), 8u);
  const CliRun one = run({"families", "--family", fam("beta"), "--J", "2"});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  const Json j = Json::parse(one.out);
  EXPECT_EQ(j["basis"].size(), 3u);
  EXPECT_EQ(j["family"]["kind"], "BetaTilt");
}

TEST(Cli, CompleteReportsAndFolds) {
  const CliRun plain = run({"complete", "--family", fam("poisson"), "--x-trunc", "21"});
  ASSERT_EQ(plain.code, kExitOk) << plain.err;
  const Json a = Json::parse(plain.out);
  EXPECT_GT(a["min_sv"].get<double>(), 0.0);
  const CliRun folded = run({"complete", "--family", fam("poisson"), "--x-trunc", "21", "--fold", "1,20"});
  ASSERT_EQ(folded.code, kExitOk) << folded.err;
  const Json b = Json::parse(folded.out);
  EXPECT_LT(b["min_sv"].get<double>(), 1e-12 * b["max_sv"].get<double>());
}

TEST(Cli, SimulateEstimateIsDeterministic) {
  std::string fit_json[2], ghat[2], data[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path d = fresh_dir("sim" + std::to_string(k));
    ASSERT_EQ(run({"simulate", "--family", fam("normal"), "--n", "800", "--seed", "11", "--g", "1,0.5,-0.3", "--out",
                   d.string()})
                  .code,
              kExitOk);
    const CliRun e = run({"estimate", "--family", fam("normal"), "--data", (d / "data.csv").string(), "--J", "2",
                       "--x-grid", "-1:1:5", "--out", d.string()});
    ASSERT_EQ(e.code, kExitOk) << e.err;
    data[k] = slurp(d / "data.csv");
    fit_json[k] = slurp(d / "fit.json");
    ghat[k] = slurp(d / "ghat.csv");
  }
  EXPECT_EQ(data[0], data[1]);
  EXPECT_EQ(fit_json[0], fit_json[1]);
  EXPECT_EQ(ghat[0], ghat[1]);
  EXPECT_EQ(ghat[0].substr(0, 7), "x,ghat\n");
  const Json f = Json::parse(fit_json[0]);
  EXPECT_EQ(f["beta"].size(), 3u);
  EXPECT_EQ(f["n"], 800);
}

TEST(Cli, EstimateRejectsBadData) {
  const fs::path p = fs::temp_directory_path() / "steinpoly_cli_bad.csv";
  std::ofstream(p) << "y,x,z2\n1,abc,0\n";
  const CliRun r = run({"estimate", "--family", fam("normal"), "--data", p.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(run({"estimate", "--family", fam("normal")}).code, kExitUsage);
}

}  // namespace
}  // namespace steinpoly
