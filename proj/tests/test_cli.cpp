#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#ifndef MARDIA_CLI_PATH
#error "MARDIA_CLI_PATH must point at the mardia executable"
#endif

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(MARDIA_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("mardia_cli_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateThenTestWhiteNoise) {
  std::size_t rejections = 0;
  for (int seed = 1; seed <= 10; ++seed) {
    const auto csv = path("w" + std::to_string(seed) + ".csv");
    ASSERT_EQ(run("simulate --process iid --n 1000 --seed " + std::to_string(seed) + " -o " + csv).code, 0);
    const auto r = run("test -i " + csv + " --mode scalar-colored");
    ASSERT_TRUE(r.code == 0 || r.code == 2) << r.out;
    rejections += r.code == 2;
  }
  EXPECT_LE(rejections, 3u);
}

TEST_F(Cli, GumbelRecordIsRejected) {
  const auto csv = path("g.csv");
  ASSERT_EQ(run("simulate --process gumbel --theta 5 --n 1000 --seed 2 -o " + csv).code, 0);
  const auto r = run("test -i " + csv + " --mode bivariate --json");
  EXPECT_EQ(r.code, 2);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["reject"].get<bool>());
  EXPECT_LT(j["p_value"].get<double>(), 0.05);
}

TEST_F(Cli, ModeMismatchIsAnError) {
  const auto csv = path("three.csv");
  ASSERT_EQ(run("simulate --process iid --dim 3 --n 100 --seed 1 -o " + csv).code, 0);
  EXPECT_EQ(run("test -i " + csv + " --mode bivariate").code, 1);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("test --bogus").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("table1 --replications 0").code, 1);
  EXPECT_EQ(run("test -i /nonexistent.csv").code, 1);
  EXPECT_EQ(run("simulate --process nope").code, 1);
  for (const char* sub : {"test", "simulate", "table1", "detect", "verify"}) {
    const auto r = run(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
  }
}

TEST_F(Cli, SimulateIsSeeded) {
  const auto a = run("simulate --process clayton --n 50 --seed 11");
  const auto b = run("simulate --process clayton --n 50 --seed 11");
  const auto c = run("simulate --process clayton --n 50 --seed 12");
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(a.out.substr(0, 6), "x1,x2\n");
}

TEST_F(Cli, Table1ByteIdentical) {
  const auto a = path("a.json");
  const auto b = path("b.json");
  const auto c = path("c.csv");
  ASSERT_EQ(run("table1 -M 20 --n 300 --seed 5 -o " + a).code, 0);
  ASSERT_EQ(run("table1 -M 20 --n 300 --seed 5 --threads 2 -o " + b).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  ASSERT_EQ(run("table1 -M 20 --n 300 --seed 5 -o " + c).code, 0);
  EXPECT_EQ(slurp(c).substr(0, 42), "scenario,statistic,alpha,rate,se,M,N,seed\n");
  const auto j = nlohmann::json::parse(slurp(a));
  EXPECT_EQ(j["results"].size(), 18u);
  EXPECT_EQ(j["seed"], 5);
}

TEST_F(Cli, Table1ConfigFileWithOverride) {
  const auto cfg = path("cfg.json");
  {
    std::ofstream out(cfg);
    out << R"({"scenario": "mine", "spec": {"family": "GaussianCopula", "a": 0.5, "r12": 0.3}, "M": 10, "N": 200,
               "alphas": [0.05], "seed": 3})";
  }
  const auto out = path("o.csv");
  ASSERT_EQ(run("table1 --config " + cfg + " -M 15 -o " + out).code, 0);
  const auto text = slurp(out);
  EXPECT_NE(text.find("mine,B2,0.05,"), std::string::npos);
  EXPECT_NE(text.find(",15,200,3"), std::string::npos);
}

TEST_F(Cli, DetectWritesGrid) {
  const auto out = path("d.csv");
  ASSERT_EQ(run("detect --snr-points 5 -M 10 --n 300 --seed 2 -o " + out).code, 0);
  const auto text = slurp(out);
  EXPECT_NE(text.find("snr_db=-40.000,B2,0.05"), std::string::npos);
  EXPECT_NE(text.find("snr_db=15.000,B1_iid,0.05"), std::string::npos);
}

TEST_F(Cli, VerifyCases) {
  const auto r = run("verify --case pairing-counts --case a2-coefficients");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("PASS pairing-counts"), std::string::npos);
  EXPECT_NE(r.out.find("2027025"), std::string::npos);
  EXPECT_NE(r.out.find("PASS a2-coefficients"), std::string::npos);
  EXPECT_EQ(run("verify --case no-such-case").code, 1);
}
