#pragma once

// Seeded Monte Carlo rejection-rate experiments and their CSV / JSON output.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mardia/csv.hpp"
#include "mardia/data_gen.hpp"
#include "mardia/error.hpp"
#include "mardia/parallel.hpp"
#include "mardia/test_engine.hpp"
#include "mardia/version.hpp"

namespace mardia {

enum class Statistic { B1Iid, B1Colored, B2 };

NLOHMANN_JSON_SERIALIZE_ENUM(Statistic, {{Statistic::B1Iid, "B1_iid"},
                                         {Statistic::B1Colored, "B1_colored"},
                                         {Statistic::B2, "B2"}})

inline std::string to_string(Statistic s) { return nlohmann::json(s).get<std::string>(); }

inline std::vector<Statistic> all_statistics() { return {Statistic::B1Iid, Statistic::B1Colored, Statistic::B2}; }

// the enum macro maps unknown names to the first value, so parse by hand
inline Statistic statistic_from(const std::string& name) {
  for (Statistic s : all_statistics()) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::Parse, "unknown statistic '" + name + "'");
}

inline std::vector<Statistic> statistics_from(const nlohmann::json& j) {
  std::vector<Statistic> out;
  for (const auto& v : j) out.push_back(statistic_from(v.get<std::string>()));
  return out;
}

struct ExperimentConfig {
  std::string scenario = "experiment";
  ProcessSpec spec;
  std::size_t M = 500;
  std::size_t N = 1000;
  std::vector<double> alphas{0.05, 0.10};
  std::vector<Statistic> statistics = all_statistics();
  std::uint64_t seed = 1;
  std::optional<std::size_t> max_lag;  ///< plug-in window; auto when absent
  std::size_t component = 1;           ///< marginal fed to the scalar tests on bivariate data
  std::size_t threads = 0;
  std::string output;

  void validate() const {
    if (M < 1) throw Error(ErrorCode::InvalidArgument, "M must be at least 1");
    if (N < 8) throw Error(ErrorCode::InvalidArgument, "N must be at least 8");
    if (alphas.empty()) throw Error(ErrorCode::InvalidArgument, "at least one alpha is required");
    for (double a : alphas) {
      if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::InvalidArgument, "every alpha must lie in (0, 1)");
    }
    if (statistics.empty()) throw Error(ErrorCode::InvalidArgument, "at least one statistic is required");
    if (component > 1) throw Error(ErrorCode::InvalidArgument, "component must be 0 or 1");
    spec.validate();
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"scenario", c.scenario}, {"spec", c.spec},   {"M", c.M},
                     {"N", c.N},               {"alphas", c.alphas}, {"statistics", c.statistics},
                     {"seed", c.seed},         {"component", c.component}};
  j["max_lag"] = c.max_lag ? nlohmann::json(*c.max_lag) : nlohmann::json();
  if (!c.output.empty()) j["output"] = c.output;
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::vector<std::string> known = {"scenario", "spec",      "M",       "N",       "alphas",
                                                 "statistics", "seed",    "max_lag", "component", "threads",
                                                 "output"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::InvalidArgument, "unknown config field '" + key + "'");
    }
  }
  c = ExperimentConfig{};
  if (j.contains("scenario")) c.scenario = j["scenario"].get<std::string>();
  if (j.contains("spec")) c.spec = j["spec"].get<ProcessSpec>();
  if (j.contains("M")) c.M = j["M"].get<std::size_t>();
  if (j.contains("N")) c.N = j["N"].get<std::size_t>();
  if (j.contains("alphas")) c.alphas = j["alphas"].get<std::vector<double>>();
  if (j.contains("statistics")) c.statistics = statistics_from(j["statistics"]);
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("max_lag") && !j["max_lag"].is_null()) c.max_lag = j["max_lag"].get<std::size_t>();
  if (j.contains("component")) c.component = j["component"].get<std::size_t>();
  if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
  if (j.contains("output")) c.output = j["output"].get<std::string>();
}

/// One cell of a rejection table: rate = rejections / M over the M
/// replications that completed.
struct RateCell {
  std::string scenario;
  Statistic statistic = Statistic::B2;
  double alpha = 0.05;
  double rate = 0.0;
  double se = 0.0;
  std::size_t M = 0;
  std::size_t N = 0;
  std::uint64_t seed = 0;

  bool operator==(const RateCell&) const = default;
};

struct RejectionTable {
  std::vector<RateCell> cells;
  std::size_t failures = 0;  ///< replications excluded after a numerical failure

  [[nodiscard]] const RateCell& at(const std::string& scenario, Statistic s, double alpha) const {
    for (const auto& c : cells) {
      if (c.scenario == scenario && c.statistic == s && c.alpha == alpha) return c;
    }
    throw Error(ErrorCode::InvalidArgument, "no cell for " + scenario + " / " + to_string(s));
  }

  void append(const RejectionTable& other) {
    cells.insert(cells.end(), other.cells.begin(), other.cells.end());
    failures += other.failures;
  }
};

inline double binomial_se(double rate, std::size_t m) {
  return m == 0 ? 0.0 : std::sqrt(rate * (1.0 - rate) / static_cast<double>(m));
}

namespace detail {

inline bool recoverable(ErrorCode c) {
  return c == ErrorCode::SingularCovariance || c == ErrorCode::DegenerateCovariance || c == ErrorCode::DomainError ||
         c == ErrorCode::NonPositiveS0;
}

inline TimeSeries column(const TimeSeries& x, std::size_t a) {
  return TimeSeries(Matrix(x.data().row(static_cast<Eigen::Index>(a))));
}

/// p-value of `stat` on one realization. Bivariate data feed the scalar tests
/// through one marginal; scalar data feed B2 through the delta-2 embedding.
inline double p_value(Statistic stat, const TimeSeries& x, const ExperimentConfig& cfg) {
  TestOptions opt;
  opt.max_lag = cfg.max_lag;
  const bool scalar = x.dim() == 1;
  const TimeSeries marginal = scalar ? x : column(x, cfg.component);
  switch (stat) {
    case Statistic::B1Iid: return run_test(marginal, NullModel::IID, 0.5, opt).p_value;
    case Statistic::B1Colored: return run_test(marginal, NullModel::ScalarColored, 0.5, opt).p_value;
    case Statistic::B2:
      return run_test(x, scalar ? NullModel::EmbeddedBivariate : NullModel::BivariateColored, 0.5, opt).p_value;
  }
  return 1.0;
}

/// p-values[replication][statistic]; failed replications hold nullopt.
template <class Generate>
std::vector<std::optional<std::vector<double>>> collect(const ExperimentConfig& cfg, std::size_t stream_base,
                                                        Generate&& generate) {
  std::vector<std::optional<std::vector<double>>> out(cfg.M);
  parallel_for(cfg.M, cfg.threads, [&](std::size_t r) {
    SeededRng rng(cfg.seed, stream_base + r);
    const TimeSeries x = generate(rng);
    std::vector<double> ps;
    ps.reserve(cfg.statistics.size());
    try {
      for (Statistic s : cfg.statistics) ps.push_back(p_value(s, x, cfg));
    } catch (const Error& e) {
      if (!recoverable(e.code())) throw;
      return;
    }
    out[r] = std::move(ps);
  });
  return out;
}

inline RejectionTable tally(const ExperimentConfig& cfg, const std::string& scenario,
                            const std::vector<std::optional<std::vector<double>>>& ps) {
  RejectionTable t;
  for (const auto& p : ps) t.failures += p ? 0 : 1;
  if (100 * t.failures > ps.size()) {
    throw Error(ErrorCode::TooManyFailures, scenario + ": " + std::to_string(t.failures) + " of " +
                                                std::to_string(ps.size()) + " replications failed");
  }
  const std::size_t m = ps.size() - t.failures;
  for (std::size_t s = 0; s < cfg.statistics.size(); ++s) {
    for (double alpha : cfg.alphas) {
      std::size_t rejections = 0;
      for (const auto& p : ps) {
        if (p && (*p)[s] < alpha) ++rejections;
      }
      const double rate = m == 0 ? 0.0 : static_cast<double>(rejections) / static_cast<double>(m);
      t.cells.push_back({scenario, cfg.statistics[s], alpha, rate, binomial_se(rate, m), m, cfg.N, cfg.seed});
    }
  }
  return t;
}

}  // namespace detail

/// Every statistic sees the same realization in each replication; replication
/// r draws from stream r of the config seed.
inline RejectionTable run_rejection_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto ps = detail::collect(cfg, 0, [&](SeededRng& rng) { return generate(cfg.spec, cfg.N, rng); });
  return detail::tally(cfg, cfg.scenario, ps);
}

/// Scenario label of one detection grid point.
inline std::string snr_scenario(double snr_db) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snr_db=%.3f", snr_db);
  return buf;
}

struct DetectionPoint {
  double snr_db = 0.0;
  Statistic statistic = Statistic::B2;
  double rate = 0.0;
  double se = 0.0;
};

struct DetectionCurve {
  RejectionTable table;
  std::vector<double> grid;

  [[nodiscard]] std::vector<DetectionPoint> points(Statistic s, double alpha) const {
    std::vector<DetectionPoint> out;
    for (double db : grid) {
      const auto& c = table.at(snr_scenario(db), s, alpha);
      out.push_back({db, s, c.rate, c.se});
    }
    return out;
  }
};

/// Rejection rates of the scalar detection record y = x + k b over an SNR grid.
/// Grid point i uses streams [i M, (i + 1) M) of the config seed.
inline DetectionCurve run_detection_curve(const std::vector<double>& snr_grid, std::size_t replications, double alpha,
                                          ExperimentConfig cfg) {
  if (snr_grid.empty()) throw Error(ErrorCode::InvalidArgument, "SNR grid is empty");
  cfg.M = replications;
  cfg.alphas = {alpha};
  cfg.spec = ProcessSpec{};
  cfg.spec.family = ProcessFamily::DetectionMixture;
  cfg.validate();
  DetectionCurve curve;
  curve.grid = snr_grid;
  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    const double k = detection::amplitude_for_snr_db(snr_grid[i]);
    const auto ps = detail::collect(cfg, i * replications, [&](SeededRng& rng) {
      return TimeSeries::scalar(detection_mixture(k, cfg.N, rng, cfg.spec.burn_in).y);
    });
    curve.table.append(detail::tally(cfg, snr_scenario(snr_grid[i]), ps));
  }
  return curve;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one point");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return g;
}

/// Default detection grid: three null-regime points, then the transition band.
inline std::vector<double> default_detection_grid(std::size_t points = 30) {
  if (points < 5) throw Error(ErrorCode::InvalidArgument, "detection grid needs at least 5 points");
  std::vector<double> g{-40.0, -35.0, -30.0};
  for (double v : linear_grid(-10.0, 15.0, points - 3)) g.push_back(v);
  return g;
}

/// Spearman rank correlation; tied values get their average rank.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "spearman needs two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx == 0.0 || syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
}

/// First SNR where the curve reaches `level`, interpolated linearly in dB.
inline std::optional<double> crossing_snr(const std::vector<DetectionPoint>& curve, double level = 0.5) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].rate < level) continue;
    if (i == 0) return curve[0].snr_db;
    const auto& a = curve[i - 1];
    const auto& b = curve[i];
    return a.snr_db + (level - a.rate) / (b.rate - a.rate) * (b.snr_db - a.snr_db);
  }
  return std::nullopt;
}

// ---- persistence ----------------------------------------------------------

enum class OutputFormat { Csv, Json };

inline OutputFormat format_for(const std::string& path) {
  return std::filesystem::path(path).extension() == ".json" ? OutputFormat::Json : OutputFormat::Csv;
}

namespace detail {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const RateCell& c) {
  j = nlohmann::json{{"scenario", c.scenario}, {"statistic", c.statistic}, {"alpha", c.alpha}, {"rate", c.rate},
                     {"se", c.se},             {"M", c.M},                 {"N", c.N},         {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, RateCell& c) {
  c.scenario = j.at("scenario").get<std::string>();
  c.statistic = statistic_from(j.at("statistic").get<std::string>());
  c.alpha = j.at("alpha").get<double>();
  c.rate = j.at("rate").get<double>();
  c.se = j.at("se").get<double>();
  c.M = j.at("M").get<std::size_t>();
  c.N = j.at("N").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {"scenario", "statistic", "alpha", "rate", "se", "M", "N", "seed"};
  return cols;
}

inline std::string results_csv(const RejectionTable& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < csv_columns().size(); ++i) out << (i ? "," : "") << csv_columns()[i];
  out << '\n';
  for (const auto& c : t.cells) {
    out << c.scenario << ',' << to_string(c.statistic) << ',' << detail::shortest(c.alpha) << ','
        << detail::shortest(c.rate) << ',' << detail::shortest(c.se) << ',' << c.M << ',' << c.N << ',' << c.seed
        << '\n';
  }
  return out.str();
}

/// {config, results, seed, version}; `config` is whatever produced the table.
inline std::string results_json(const RejectionTable& t, const nlohmann::json& config, std::uint64_t seed) {
  nlohmann::json j;
  j["config"] = config;
  j["results"] = t.cells;
  j["failures"] = t.failures;
  j["seed"] = seed;
  j["version"] = std::string(kVersion);
  return j.dump(2) + "\n";
}

inline void write_results(const RejectionTable& t, const std::string& path, OutputFormat format,
                          const nlohmann::json& config, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << (format == OutputFormat::Json ? results_json(t, config, seed) : results_csv(t));
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

inline RejectionTable read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  RejectionTable t;
  if (format_for(path) == OutputFormat::Json) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      t.cells = j.at("results").get<std::vector<RateCell>>();
      t.failures = j.value("failures", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, path + ": " + e.what());
    }
    return t;
  }
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, path + ": empty file");
  auto fail = [&](const std::string& msg) { throw Error(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": " + msg); };
  std::vector<std::string> header;
  for (auto f : csv::detail::split(line)) header.emplace_back(csv::detail::trim(f));
  if (header != csv_columns()) fail("unexpected header");
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::detail::trim(line).empty()) continue;
    const auto f = csv::detail::split(line);
    if (f.size() != csv_columns().size()) fail("expected " + std::to_string(csv_columns().size()) + " fields");
    RateCell c;
    try {
      c.scenario = std::string(csv::detail::trim(f[0]));
      c.statistic = statistic_from(std::string(csv::detail::trim(f[1])));
      auto num = [&](std::string_view s) {
        const auto v = csv::detail::parse_number(s);
        if (!v) fail("bad number '" + std::string(s) + "'");
        return *v;
      };
      c.alpha = num(f[2]);
      c.rate = num(f[3]);
      c.se = num(f[4]);
      c.M = static_cast<std::size_t>(num(f[5]));
      c.N = static_cast<std::size_t>(num(f[6]));
      c.seed = std::stoull(std::string(csv::detail::trim(f[7])));
    } catch (const std::exception& e) {
      if (dynamic_cast<const Error*>(&e)) throw;
      fail(e.what());
    }
    t.cells.push_back(std::move(c));
  }
  return t;
}

// ---- Table 1 scenarios ----------------------------------------------------

/// Gaussian R12 = 0.8, Clayton theta = 2 and Gumbel theta = 5, each with
/// AR(1) 0.8 marginals.
inline std::vector<ExperimentConfig> table1_configs(std::size_t M, std::size_t N, std::uint64_t seed) {
  std::vector<ExperimentConfig> out;
  auto add = [&](const std::string& name, ProcessFamily family, double param) {
    ExperimentConfig c;
    c.scenario = name;
    c.spec.family = family;
    c.spec.a = 0.8;
    if (family == ProcessFamily::GaussianCopula) c.spec.r12 = param;
    else c.spec.theta = param;
    c.M = M;
    c.N = N;
    c.seed = seed;
    out.push_back(c);
  };
  add("gaussian", ProcessFamily::GaussianCopula, 0.8);
  add("clayton", ProcessFamily::ClaytonCopula, 2.0);
  add("gumbel", ProcessFamily::GumbelCopula, 5.0);
  return out;
}

inline std::string format_table(const RejectionTable& t) {
  std::vector<std::string> scenarios;
  std::vector<double> alphas;
  for (const auto& c : t.cells) {
    if (std::find(scenarios.begin(), scenarios.end(), c.scenario) == scenarios.end()) scenarios.push_back(c.scenario);
    if (std::find(alphas.begin(), alphas.end(), c.alpha) == alphas.end()) alphas.push_back(c.alpha);
  }
  std::ostringstream out;
  char buf[64];
  out << "statistic  ";
  for (const auto& s : scenarios) {
    for (double a : alphas) {
      std::snprintf(buf, sizeof buf, " %10.10s@%-4g", s.c_str(), a);
      out << buf;
    }
  }
  out << '\n';
  for (Statistic st : all_statistics()) {
    bool any = false;
    std::ostringstream row;
    std::snprintf(buf, sizeof buf, "%-11s", to_string(st).c_str());
    row << buf;
    for (const auto& s : scenarios) {
      for (double a : alphas) {
        const auto it = std::find_if(t.cells.begin(), t.cells.end(), [&](const RateCell& c) {
          return c.scenario == s && c.statistic == st && c.alpha == a;
        });
        if (it == t.cells.end()) {
          std::snprintf(buf, sizeof buf, " %15s", "-");
        } else {
          any = true;
          std::snprintf(buf, sizeof buf, " %15.4f", it->rate);
        }
        row << buf;
      }
    }
    if (any) out << row.str() << '\n';
  }
  return out.str();
}

}  // namespace mardia
