// mardia: kurtosis normality tests for serially dependent data.
//
// Exit codes: 0 = normality accepted (or checks passed), 2 = rejected,
// 1 = usage or runtime error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mardia/csv.hpp"
#include "mardia/data_gen.hpp"
#include "mardia/mc_harness.hpp"
#include "mardia/test_engine.hpp"
#include "mardia/verify.hpp"
#include "mardia/version.hpp"

namespace {

using namespace mardia;

constexpr int kAccept = 0;
constexpr int kError = 1;
constexpr int kReject = 2;

const std::map<std::string, NullModel> kModes = {{"iid", NullModel::IID},
                                                 {"scalar-colored", NullModel::ScalarColored},
                                                 {"bivariate", NullModel::BivariateColored},
                                                 {"embedded", NullModel::EmbeddedBivariate}};

const std::map<std::string, ProcessFamily> kFamilies = {{"iid", ProcessFamily::IIDGaussian},
                                                        {"ar1", ProcessFamily::AR1Gaussian},
                                                        {"gaussian-copula", ProcessFamily::GaussianCopula},
                                                        {"clayton", ProcessFamily::ClaytonCopula},
                                                        {"gumbel", ProcessFamily::GumbelCopula},
                                                        {"detection", ProcessFamily::DetectionMixture}};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << s << '\n';
  return s;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

void emit(const RejectionTable& t, const std::string& output, const std::string& format, const nlohmann::json& config,
          std::uint64_t seed) {
  if (output.empty()) return;
  const OutputFormat f = format.empty() ? format_for(output) : (format == "json" ? OutputFormat::Json : OutputFormat::Csv);
  write_results(t, output, f, config, seed);
  std::cerr << "wrote " << output << '\n';
}

// ---- test -----------------------------------------------------------------

struct TestArgs {
  std::string input;
  std::string mode = "scalar-colored";
  double alpha = 0.05;
  std::size_t delta = 2;
  std::optional<std::size_t> max_lag;
  bool zero_mean = false;
  bool json = false;
};

int cmd_test(const TestArgs& a) {
  const auto table = csv::read_file(a.input);
  TestOptions opt;
  opt.delta = a.delta;
  opt.max_lag = a.max_lag;
  opt.centering = a.zero_mean ? Centering::AssumeZeroMean : Centering::SubtractMean;
  const auto report = run_test(table.series, kModes.at(a.mode), a.alpha, opt);
  if (a.json) {
    std::cout << nlohmann::json(report).dump(2) << '\n';
  } else {
    std::cout << format_text(report);
  }
  return report.reject ? kReject : kAccept;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string process = "ar1";
  std::string spec_file;
  double a = 0.8;
  double r12 = 0.8;
  double theta = 2.0;
  std::optional<double> k;
  std::optional<double> snr_db;
  std::size_t dim = 1;
  std::size_t embed = 0;
  std::size_t delta = 2;
  std::size_t burn_in = kDefaultBurnIn;
  std::size_t n = 1000;
  std::optional<std::uint64_t> seed;
  std::string output;
};

int cmd_simulate(const SimulateArgs& s) {
  ProcessSpec spec;
  if (!s.spec_file.empty()) {
    spec = read_json(s.spec_file).get<ProcessSpec>();
  } else {
    spec.family = kFamilies.at(s.process);
    spec.a = s.a;
    spec.r12 = s.r12;
    spec.theta = s.theta;
    spec.k = s.k;
    spec.snr_db = s.snr_db;
    spec.dim = s.dim;
    spec.burn_in = s.burn_in;
    if (s.embed > 0) {
      ProcessSpec outer;
      outer.family = ProcessFamily::Embedded;
      outer.delta = s.delta;
      outer.embed_dim = s.embed;
      outer.inner = std::make_shared<ProcessSpec>(spec);
      spec = outer;
    }
  }
  SeededRng rng(resolve_seed(s.seed), 0);
  const TimeSeries x = generate(spec, s.n, rng);
  std::vector<std::string> header;
  for (std::size_t i = 0; i < x.dim(); ++i) header.push_back("x" + std::to_string(i + 1));
  if (s.output.empty() || s.output == "-") {
    csv::write(std::cout, x, header);
  } else {
    csv::write_file(s.output, x, header);
  }
  return kAccept;
}

// ---- table1 ---------------------------------------------------------------

struct Table1Args {
  std::string config;
  std::size_t replications = 500;
  bool full = false;
  std::size_t n = 1000;
  std::vector<double> alphas{0.05, 0.10};
  std::optional<std::size_t> max_lag;
  std::size_t component = 1;
  std::size_t threads = 0;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string format;
};

int cmd_table1(const Table1Args& a, const CLI::App& sub) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const std::size_t m = a.full ? 2000 : a.replications;
  std::vector<ExperimentConfig> configs;
  if (!a.config.empty()) {
    const auto j = read_json(a.config);
    configs = j.is_array() ? j.get<std::vector<ExperimentConfig>>() : std::vector{j.get<ExperimentConfig>()};
    // flags given on the command line win over the file
    for (auto& c : configs) {
      if (sub.count("--replications") || a.full) c.M = m;
      if (sub.count("--n")) c.N = a.n;
      if (sub.count("--alpha")) c.alphas = a.alphas;
      if (sub.count("--max-lag")) c.max_lag = a.max_lag;
      if (sub.count("--component")) c.component = a.component;
      if (sub.count("--seed")) c.seed = seed;
    }
  } else {
    configs = table1_configs(m, a.n, seed);
    for (auto& c : configs) {
      c.alphas = a.alphas;
      c.max_lag = a.max_lag;
      c.component = a.component;
    }
  }
  RejectionTable all;
  for (auto& c : configs) {
    c.threads = a.threads;
    all.append(run_rejection_experiment(c));
  }
  std::cout << format_table(all);
  if (all.failures > 0) std::cerr << "excluded replications: " << all.failures << '\n';
  emit(all, a.output, a.format, configs, seed);
  return kAccept;
}

// ---- detect ---------------------------------------------------------------

struct DetectArgs {
  std::size_t snr_points = 30;
  std::optional<double> snr_min;
  std::optional<double> snr_max;
  std::size_t replications = 500;
  double alpha = 0.05;
  std::size_t n = 1000;
  std::optional<std::size_t> max_lag;
  std::size_t threads = 0;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string format;
};

int cmd_detect(const DetectArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  if (a.snr_min.has_value() != a.snr_max.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "--snr-min and --snr-max go together");
  }
  const auto grid = a.snr_min ? linear_grid(*a.snr_min, *a.snr_max, a.snr_points) : default_detection_grid(a.snr_points);
  ExperimentConfig cfg;
  cfg.scenario = "detection";
  cfg.N = a.n;
  cfg.seed = seed;
  cfg.max_lag = a.max_lag;
  cfg.threads = a.threads;
  const auto curve = run_detection_curve(grid, a.replications, a.alpha, cfg);
  std::printf("%9s %10s %10s %10s\n", "snr_db", "B1_iid", "B1_colored", "B2");
  for (double db : grid) {
    const auto s = snr_scenario(db);
    std::printf("%9.3f %10.4f %10.4f %10.4f\n", db, curve.table.at(s, Statistic::B1Iid, a.alpha).rate,
                curve.table.at(s, Statistic::B1Colored, a.alpha).rate, curve.table.at(s, Statistic::B2, a.alpha).rate);
  }
  if (curve.table.failures > 0) std::cerr << "excluded replications: " << curve.table.failures << '\n';
  nlohmann::json config{{"grid", grid}, {"replications", a.replications}, {"alpha", a.alpha},
                        {"N", a.n},     {"seed", seed}};
  config["max_lag"] = a.max_lag ? nlohmann::json(*a.max_lag) : nlohmann::json();
  emit(curve.table, a.output, a.format, config, seed);
  return kAccept;
}

// ---- verify ---------------------------------------------------------------

int cmd_verify(const std::vector<std::string>& cases, unsigned order) {
  const auto& names = cases.empty() ? verify::case_names() : cases;
  bool ok = true;
  for (const auto& name : names) {
    const auto r = verify::run_case(name, order);
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << '\n';
    for (const auto& d : r.details) std::cout << "  " << d << '\n';
    ok = ok && r.pass;
  }
  return ok ? kAccept : kError;
}

std::string keys_of(const auto& map) {
  std::string out;
  for (const auto& [k, _] : map) out += (out.empty() ? "" : ", ") + k;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mardia kurtosis normality tests for serially dependent data"};
  app.set_version_flag("--version", std::string(mardia::kVersion));
  app.require_subcommand(1);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Test a CSV record for normality");
  test->add_option("--input,-i", ta.input, "CSV file, one column per component")->required()->check(CLI::ExistingFile);
  test->add_option("--mode", ta.mode, "Null model: " + keys_of(kModes))
      ->check(CLI::IsMember(kModes))
      ->capture_default_str();
  test->add_option("--alpha", ta.alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  test->add_option("--delta", ta.delta, "Embedding stride (embedded mode)")->check(CLI::PositiveNumber)->capture_default_str();
  test->add_option("--max-lag", ta.max_lag, "Plug-in covariance window (default: automatic)");
  test->add_flag("--zero-mean", ta.zero_mean, "Do not subtract the sample mean");
  test->add_flag("--json", ta.json, "Print the report as JSON");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Generate a seeded realization as CSV");
  sim->add_option("--process", sa.process, "Process family: " + keys_of(kFamilies))
      ->check(CLI::IsMember(kFamilies))
      ->capture_default_str();
  sim->add_option("--spec", sa.spec_file, "JSON process spec (overrides the process flags)")->check(CLI::ExistingFile);
  sim->add_option("--a", sa.a, "AR(1) coefficient")->capture_default_str();
  sim->add_option("--r12", sa.r12, "Gaussian copula correlation")->capture_default_str();
  sim->add_option("--theta", sa.theta, "Clayton / Gumbel parameter")->capture_default_str();
  auto* k_opt = sim->add_option("--k", sa.k, "Detection corruption amplitude");
  sim->add_option("--snr-db", sa.snr_db, "Detection SNR in dB")->excludes(k_opt);
  sim->add_option("--dim", sa.dim, "Dimension of i.i.d. Gaussian data")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--embed", sa.embed, "Embed the scalar process into this many components");
  sim->add_option("--delta", sa.delta, "Embedding stride")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--burn-in", sa.burn_in, "Discarded warm-up samples")->capture_default_str();
  sim->add_option("--n", sa.n, "Samples (vectors) to emit")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--seed", sa.seed, "Random seed (drawn and printed when absent)");
  sim->add_option("--output,-o", sa.output, "Output CSV (default stdout)");

  Table1Args t1;
  auto* tab = app.add_subcommand("table1", "Rejection rates on the Gaussian / Clayton / Gumbel copula scenarios");
  tab->add_option("--config", t1.config, "JSON experiment config (object or array); flags override it")
      ->check(CLI::ExistingFile);
  tab->add_option("--replications,-M", t1.replications, "Replications per scenario")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tab->add_flag("--full", t1.full, "Use 2000 replications");
  tab->add_option("--n", t1.n, "Record length")->capture_default_str();
  tab->add_option("--alpha", t1.alphas, "Significance levels")->capture_default_str();
  tab->add_option("--max-lag", t1.max_lag, "Plug-in covariance window (default: automatic)");
  tab->add_option("--component", t1.component, "Marginal used by the scalar tests (0 or 1)")
      ->check(CLI::Range(0, 1))
      ->capture_default_str();
  tab->add_option("--threads", t1.threads, "Worker threads (0 = all cores)")->capture_default_str();
  tab->add_option("--seed", t1.seed, "Base seed (drawn and printed when absent)");
  tab->add_option("--output,-o", t1.output, "Results file (.csv or .json)");
  tab->add_option("--format", t1.format, "Force csv or json")->check(CLI::IsMember({"csv", "json"}));

  DetectArgs da;
  auto* det = app.add_subcommand("detect", "Detection rate against SNR for y = x + k b");
  det->add_option("--snr-points", da.snr_points, "Grid size")->check(CLI::Range(5, 1000))->capture_default_str();
  det->add_option("--snr-min", da.snr_min, "Lowest SNR in dB (uniform grid)");
  det->add_option("--snr-max", da.snr_max, "Highest SNR in dB (uniform grid)");
  det->add_option("--replications,-M", da.replications, "Replications per grid point")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  det->add_option("--alpha", da.alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  det->add_option("--n", da.n, "Record length")->capture_default_str();
  det->add_option("--max-lag", da.max_lag, "Plug-in covariance window (default: automatic)");
  det->add_option("--threads", da.threads, "Worker threads (0 = all cores)")->capture_default_str();
  det->add_option("--seed", da.seed, "Base seed (drawn and printed when absent)");
  det->add_option("--output,-o", da.output, "Results file (.csv or .json)");
  det->add_option("--format", da.format, "Force csv or json")->check(CLI::IsMember({"csv", "json"}));

  std::vector<std::string> cases;
  unsigned order = 16;
  auto* ver = app.add_subcommand("verify", "Run the moment-oracle consistency checks");
  ver->add_option("--case", cases, "Check to run (repeatable; default all)")->check(CLI::IsMember(verify::case_names()));
  ver->add_option("--order", order, "Highest moment order for pairing counts")
      ->check(CLI::Range(2u, 16u))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kAccept : kError;
  }

  try {
    if (*test) return cmd_test(ta);
    if (*sim) return cmd_simulate(sa);
    if (*tab) return cmd_table1(t1, *tab);
    if (*det) return cmd_detect(da);
    if (*ver) return cmd_verify(cases, order);
  } catch (const mardia::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
