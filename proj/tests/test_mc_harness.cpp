#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "mardia/mc_harness.hpp"

using namespace mardia;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mardia_" + std::to_string(::getpid()) + "_" + name)).string();
}

ExperimentConfig small(ProcessFamily f, std::size_t M, std::uint64_t seed) {
  auto cfgs = table1_configs(M, 500, seed);
  for (auto& c : cfgs) {
    if (c.spec.family == f) return c;
  }
  throw std::logic_error("no scenario");
}

}  // namespace

TEST(Config, JsonRoundTripAndValidation) {
  auto c = small(ProcessFamily::ClaytonCopula, 40, 9);
  c.max_lag = 12;
  const nlohmann::json j = c;
  const auto back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_THROW((void)nlohmann::json({{"M", 10}, {"bogus", 1}}).get<ExperimentConfig>(), Error);
  c.alphas = {0.0};
  EXPECT_THROW(c.validate(), Error);
  c.alphas = {0.05};
  c.M = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Rejection, DeterministicAndThreadIndependent) {
  auto c = small(ProcessFamily::GumbelCopula, 30, 5);
  c.threads = 1;
  const auto a = run_rejection_experiment(c);
  c.threads = 4;
  const auto b = run_rejection_experiment(c);
  EXPECT_EQ(a.cells, b.cells);
  ASSERT_EQ(a.cells.size(), 6u);
  for (const auto& cell : a.cells) {
    EXPECT_GE(cell.rate, 0.0);
    EXPECT_LE(cell.rate, 1.0);
    EXPECT_DOUBLE_EQ(cell.se, binomial_se(cell.rate, cell.M));
    EXPECT_EQ(cell.M, 30u);
  }
}

TEST(Rejection, SharedRealizationAcrossStatistics) {
  // running one statistic alone reproduces its row of the joint run
  auto c = small(ProcessFamily::GaussianCopula, 25, 6);
  const auto joint = run_rejection_experiment(c);
  c.statistics = {Statistic::B2};
  const auto alone = run_rejection_experiment(c);
  for (double a : c.alphas) {
    EXPECT_EQ(alone.at("gaussian", Statistic::B2, a).rate, joint.at("gaussian", Statistic::B2, a).rate);
  }
}

TEST(Rejection, SeedChangeWithinSamplingNoise) {
  const auto a = run_rejection_experiment(small(ProcessFamily::GaussianCopula, 200, 1));
  const auto b = run_rejection_experiment(small(ProcessFamily::GaussianCopula, 200, 2));
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const double se = std::sqrt(a.cells[i].se * a.cells[i].se + b.cells[i].se * b.cells[i].se);
    EXPECT_LE(std::abs(a.cells[i].rate - b.cells[i].rate), 4.0 * se + 1e-12);
  }
}

TEST(Rejection, IidOverRejectsColoredGaussian) {
  auto c = small(ProcessFamily::GaussianCopula, 200, 3);
  c.N = 1000;
  const auto t = run_rejection_experiment(c);
  EXPECT_GE(t.at("gaussian", Statistic::B1Iid, 0.05).rate, 0.10);
  EXPECT_LE(t.at("gaussian", Statistic::B1Colored, 0.05).rate, 0.05 + 3 * binomial_se(0.05, 200) + 0.02);
  EXPECT_LE(t.at("gaussian", Statistic::B2, 0.05).rate, 0.05 + 3 * binomial_se(0.05, 200) + 0.02);
}

TEST(Rejection, TooManyFailuresAborts) {
  ExperimentConfig c;
  c.spec.family = ProcessFamily::IIDGaussian;
  c.spec.dim = 1;
  c.M = 10;
  c.N = 50;
  const auto ok = run_rejection_experiment(c);
  EXPECT_EQ(ok.failures, 0u);
  // one failure in 100 is tolerated and excluded, two abort the run
  std::vector<std::optional<std::vector<double>>> ps(100, std::vector<double>{0.5, 0.5, 0.5});
  ps[3].reset();
  EXPECT_EQ(detail::tally(c, "x", ps).failures, 1u);
  EXPECT_EQ(detail::tally(c, "x", ps).cells[0].M, 99u);
  ps[4].reset();
  try {
    (void)detail::tally(c, "x", ps);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooManyFailures);
  }
}

TEST(Detection, CurveShapeSmall) {
  ExperimentConfig cfg;
  cfg.seed = 4;
  const std::vector<double> grid{-40.0, 0.0, 20.0};
  const auto curve = run_detection_curve(grid, 80, 0.05, cfg);
  const auto b2 = curve.points(Statistic::B2, 0.05);
  ASSERT_EQ(b2.size(), 3u);
  EXPECT_LT(b2[0].rate, 0.15);
  EXPECT_GE(b2[2].rate, 0.95);
  EXPECT_THROW((void)run_detection_curve({}, 10, 0.05, cfg), Error);
}

TEST(Detection, SpearmanAndCrossing) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  // ties share their average rank
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {0, 0, 1, 1}), 0.8944271909999159, 1e-15);
  std::vector<DetectionPoint> c{{-10, Statistic::B2, 0.1, 0}, {0, Statistic::B2, 0.3, 0}, {10, Statistic::B2, 0.7, 0}};
  EXPECT_DOUBLE_EQ(*crossing_snr(c), 5.0);
  c[2].rate = 0.4;
  EXPECT_FALSE(crossing_snr(c).has_value());
  const auto g = default_detection_grid(30);
  EXPECT_EQ(g.size(), 30u);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_LE(g.front(), -30.0);
}

TEST(Persistence, CsvAndJsonRoundTrip) {
  const auto c = small(ProcessFamily::ClaytonCopula, 20, 7);
  const auto t = run_rejection_experiment(c);
  const auto csv = temp_path("t.csv");
  const auto json = temp_path("t.json");
  write_results(t, csv, OutputFormat::Csv, c, c.seed);
  write_results(t, json, OutputFormat::Json, c, c.seed);
  EXPECT_EQ(read_results(csv).cells, t.cells);
  EXPECT_EQ(read_results(json).cells, t.cells);
  EXPECT_EQ(slurp(csv).substr(0, 42), "scenario,statistic,alpha,rate,se,M,N,seed\n");
  const auto j = nlohmann::json::parse(slurp(json));
  for (const char* key : {"config", "results", "seed", "version"}) EXPECT_TRUE(j.contains(key)) << key;

  // a rerun writes identical bytes
  const auto csv2 = temp_path("t2.csv");
  const auto json2 = temp_path("t2.json");
  const auto t2 = run_rejection_experiment(c);
  write_results(t2, csv2, OutputFormat::Csv, c, c.seed);
  write_results(t2, json2, OutputFormat::Json, c, c.seed);
  EXPECT_EQ(slurp(csv), slurp(csv2));
  EXPECT_EQ(slurp(json), slurp(json2));
  for (const auto& p : {csv, json, csv2, json2}) std::filesystem::remove(p);
}

TEST(Persistence, Errors) {
  RejectionTable t;
  try {
    write_results(t, "/nonexistent/dir/out.csv", OutputFormat::Csv, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/out.csv"), std::string::npos);
  }
  const auto bad = temp_path("bad.csv");
  {
    std::ofstream out(bad);
    out << "scenario,statistic,alpha,rate,se,M,N,seed\nx,B9,0.05,0.1,0.1,10,10,1\n";
  }
  EXPECT_THROW((void)read_results(bad), Error);
  std::filesystem::remove(bad);
}
