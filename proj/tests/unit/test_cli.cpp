#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "pcacouple_cli/cli.hpp"

using namespace pcacouple::cli;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Drops '#' header lines so runs under different seeds sources compare by data.
std::string body(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

class SeedEnv {
 public:
  explicit SeedEnv(const char* value) {
    if (value) setenv(kSeedEnv, value, 1);
    else unsetenv(kSeedEnv);
  }
  ~SeedEnv() { unsetenv(kSeedEnv); }
};

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"no-such-command"}).code, kExitUsage);
  EXPECT_EQ(invoke({"simulate", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(invoke({"simulate", "--builtin", "example1-h", "--config", "x.ini", "--seed", "1"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, CheckAttractiveVerdicts) {
  const auto ok = invoke({"check-attractive", "--rule", "ising", "--beta", "1", "--K", "1"});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  const auto j = nlohmann::json::parse(ok.out);
  EXPECT_TRUE(j.at("verdict").get<bool>());

  const auto bad = invoke({"check-attractive", "--builtin", "example2-negative"});
  EXPECT_EQ(bad.code, kExitVerdictFalse);
  EXPECT_NE(bad.out.find("reverified"), std::string::npos);
}

TEST(Cli, CheckIncreasingOnExampleOne) {
  EXPECT_EQ(invoke({"check-increasing", "--builtin", "example1-h"}).code, kExitOk);
  const auto beta = invoke({"check-increasing", "--builtin", "example1-beta"});
  EXPECT_EQ(beta.code, kExitVerdictFalse);
  EXPECT_NE(beta.out.find("-1|-1|-1|-1"), std::string::npos);
}

TEST(Cli, CounterexamplesAreNotRealizable) {
  for (const char* name : {"counterexample-A", "counterexample-B"}) {
    const auto r = invoke({"check-realizable", "--builtin", name});
    EXPECT_EQ(r.code, kExitVerdictFalse) << name << r.err;
    EXPECT_NE(r.out.find("Infeasible"), std::string::npos);
    EXPECT_NE(r.out.find("\"certificate_verified\": true"), std::string::npos) << r.out;
  }
}

TEST(Cli, CounterexampleBMatchesGolden) {
  const auto r = invoke({"check-realizable", "--builtin", "counterexample-B"});
  EXPECT_EQ(r.out, slurp(std::filesystem::path(PCACOUPLE_GOLDEN_DIR) / "check_realizable_counterexample_B.json"));
}

TEST(Cli, ClassifyPoset) {
  EXPECT_EQ(invoke({"classify-poset", "--builtin", "S_C"}).code, kExitOk);
  EXPECT_EQ(invoke({"classify-poset", "--builtin", "S_D"}).code, kExitVerdictFalse);
}

TEST(Cli, SimulateIsByteIdenticalAcrossRunsAndThreads) {
  const std::vector<std::string> base{"simulate", "--builtin", "example1-h", "--steps", "40", "--stride", "4",
                                      "--seed", "17"};
  const auto a = invoke(base);
  const auto b = invoke(base);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  auto threaded = base;
  threaded.insert(threaded.end(), {"--threads", "4"});
  EXPECT_EQ(body(invoke(threaded).out), body(a.out));
  EXPECT_EQ(a.out.rfind("# pcacouple ", 0), 0u);
  EXPECT_NE(a.out.find("seed=17 rng=philox4x32-10"), std::string::npos);
}

TEST(Cli, SeedPrecedence) {
  const std::vector<std::string> no_seed{"rho", "--rule", "ising", "--beta", "1", "--volume", "torus:4",
                                         "--n-max", "4", "--replicas", "200"};
  {
    SeedEnv env(nullptr);
    EXPECT_EQ(invoke(no_seed).code, kExitValidation);
  }
  auto with_flag = no_seed;
  with_flag.insert(with_flag.end(), {"--seed", "5"});
  auto with_other = no_seed;
  with_other.insert(with_other.end(), {"--seed", "6"});
  std::string env5, flag5, flag6, flag_over_env;
  {
    SeedEnv env("5");
    env5 = invoke(no_seed).out;
    flag6 = invoke(with_other).out;
  }
  {
    SeedEnv env(nullptr);
    flag5 = invoke(with_flag).out;
  }
  EXPECT_EQ(env5, flag5);
  EXPECT_NE(flag6, flag5);
  EXPECT_NE(flag6.find("seed=6"), std::string::npos);
  {
    SeedEnv env("not-a-number");
    EXPECT_EQ(invoke(no_seed).code, kExitValidation);
  }
}

TEST(Cli, ConfigSeedIsUsedLast) {
  const auto dir = std::filesystem::temp_directory_path() / "pcacouple_cli_test";
  std::filesystem::create_directories(dir);
  std::ostringstream cfg;
  {
    SeedEnv env(nullptr);
    const auto dumped = invoke({"simulate", "--builtin", "example1-h", "--dump-config"});
    ASSERT_EQ(dumped.code, kExitOk) << dumped.err;
    cfg << dumped.out << "\n";
  }
  std::string text = cfg.str();
  const auto run_pos = text.find("[run]");
  ASSERT_NE(run_pos, std::string::npos);
  text.insert(text.find('\n', run_pos) + 1, "seed = 5\n");
  const auto path = dir / "exp.ini";
  std::ofstream(path) << text;
  SeedEnv env(nullptr);
  const auto from_cfg = invoke({"simulate", "--config", path.string(), "--steps", "10"});
  ASSERT_EQ(from_cfg.code, kExitOk) << from_cfg.err;
  const auto from_flag = invoke({"simulate", "--builtin", "example1-h", "--steps", "10", "--seed", "5"});
  EXPECT_EQ(body(from_cfg.out), body(from_flag.out));
  std::filesystem::remove_all(dir);
}

TEST(Cli, ExactOutputsAndCaps) {
  const auto r = invoke({"exact-rho", "--rule", "ising", "--beta", "0", "--volume", "torus:3", "--n-max", "2",
                         "--arithmetic", "exact"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("arithmetic=exact"), std::string::npos);
  EXPECT_NE(body(r.out).find("n,rho_exact,rho\n0,1,1\n1,0,0\n2,0,0\n"), std::string::npos) << r.out;
  EXPECT_EQ(invoke({"exact-rho", "--rule", "ising", "--beta", "1", "--volume", "torus:30", "--n-max", "2"}).code,
            kExitValidation);
  EXPECT_EQ(invoke({"stationary", "--rule", "ising", "--beta", "1", "--volume", "torus:2", "--arithmetic", "exact"}).code,
            kExitOk);
}

TEST(Cli, AnalysisCommandsRun) {
  EXPECT_EQ(invoke({"sub-super-gibbs", "--rule", "ising", "--beta", "0.5", "--arithmetic", "exact"}).code, kExitOk);
  EXPECT_EQ(invoke({"limits", "--rule", "ising", "--beta", "0.5", "--volume", "torus:3", "--n-max", "3"}).code,
            kExitOk);
  EXPECT_EQ(invoke({"ergodicity-bound", "--rule", "ising", "--beta", "0.5", "--volume", "torus:3", "--n-list",
                    "1", "2", "4"})
                .code,
            kExitOk);
  EXPECT_EQ(invoke({"sandwich", "--rule", "ising", "--beta", "0.5", "--volume", "torus:12", "--steps", "5",
                    "--replicas", "50", "--seed", "2"})
                .code,
            kExitOk);
}

TEST(Cli, GoldenMismatchExitsOne) {
  const auto path = std::filesystem::temp_directory_path() / "pcacouple_golden_mismatch.csv";
  std::ofstream(path) << "not the output\n";
  EXPECT_EQ(invoke({"exact-rho", "--rule", "ising", "--beta", "0", "--volume", "torus:2", "--n-max", "1",
                    "--golden", path.string()})
                .code,
            kExitVerdictFalse);
  std::filesystem::remove(path);
}
