/**
 * @file simstudy.hpp
 * @brief Monte Carlo comparison of six estimators on zero-truncated,
 *        left-censored normal data: single mean, two populations, and a
 *        non-inferiority test on the difference of means.
 *
 * Every replication draws its own generator from (base seed, scenario, k),
 * so reports do not depend on the number of threads or on scheduling.
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tcens/linear.hpp"
#include "tcens/model.hpp"
#include "tcens/table.hpp"
#include "tcens/truncnorm.hpp"

namespace tcens {

enum class Study { SingleMean, TwoPopulation, NonInferiority };

inline const char* to_string(Study s) {
  switch (s) {
    case Study::SingleMean: return "single-mean";
    case Study::TwoPopulation: return "two-population";
    case Study::NonInferiority: return "non-inferiority";
  }
  return "?";
}

inline Study parse_study(std::string_view s) {
  if (s == "single-mean") return Study::SingleMean;
  if (s == "two-population") return Study::TwoPopulation;
  if (s == "non-inferiority") return Study::NonInferiority;
  throw std::invalid_argument("unknown study '" + std::string(s) +
                              "' (expected single-mean, two-population or non-inferiority)");
}

/// Comparator estimators.
enum class Estimator { GS, UncensNT, DL, HalfDL, Tobit, TcensReg };

inline constexpr std::array<Estimator, 6> kEstimators{Estimator::GS,     Estimator::UncensNT, Estimator::DL,
                                                     Estimator::HalfDL, Estimator::Tobit,    Estimator::TcensReg};

inline const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::GS: return "GS";
    case Estimator::UncensNT: return "UncensNT";
    case Estimator::DL: return "DL";
    case Estimator::HalfDL: return "HalfDL";
    case Estimator::Tobit: return "Tobit";
    case Estimator::TcensReg: return "tcensReg";
  }
  return "?";
}

struct ScenarioGrid {
  Study study = Study::SingleMean;
  std::vector<double> mu;     ///< mu (single mean) or mu_1
  std::vector<double> delta;  ///< mu_2 - mu_1; ignored for a single mean
  std::vector<double> sigma;
  double a = 0.0;
  double nu = 0.61;
  int n = 100;  ///< per population
  int B = 2000;
  std::uint64_t seed = 20200521;
  double alpha = 0.05;    ///< one-sided level of the non-inferiority test
  double margin = -0.15;  ///< non-inferiority margin on delta
  OptimizerConfig optim;

  void validate() const {
    if (mu.empty() || sigma.empty()) throw std::invalid_argument("grid: mu and sigma need at least one value");
    if (study != Study::SingleMean && delta.empty()) throw std::invalid_argument("grid: delta needs at least one value");
    for (double s : sigma)
      if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("grid: sigma values must be positive");
    for (double m : mu)
      if (!std::isfinite(m)) throw std::invalid_argument("grid: mu values must be finite");
    for (double d : delta)
      if (!std::isfinite(d)) throw std::invalid_argument("grid: delta values must be finite");
    if (!std::isfinite(a) || !std::isfinite(nu) || !(nu > a))
      throw std::invalid_argument("grid: detection limit nu must exceed truncation bound a");
    if (n < 2) throw std::invalid_argument("grid: n must be at least 2");
    if (B < 1) throw std::invalid_argument("grid: B must be at least 1");
    if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("grid: alpha must lie in (0, 0.5)");
    optim.validate();
  }
};

struct Scenario {
  std::size_t index = 0;
  double mu = 0.0;
  double delta = 0.0;
  double sigma = 0.0;
};

/// Scenarios in mu-major, then delta, then sigma order.
inline std::vector<Scenario> scenarios(const ScenarioGrid& g) {
  const std::vector<double> deltas = g.study == Study::SingleMean ? std::vector<double>{0.0} : g.delta;
  std::vector<Scenario> out;
  for (double m : g.mu)
    for (double d : deltas)
      for (double s : g.sigma) out.push_back({out.size(), m, d, s});
  return out;
}

/// Estimated parameter names, in report order.
inline std::vector<std::string> study_parameters(Study s) {
  if (s == Study::SingleMean) return {"mu", "sigma"};
  return {"delta", "sigma"};
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t scenario, std::uint64_t k) {
  return splitmix64(splitmix64(splitmix64(base) ^ scenario) ^ k);
}

/// Open-interval uniform from 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

/// Latent (uncensored) and censored copies of one replication's data.
struct PairedSample {
  CensoredSample latent;
  CensoredSample observed;
};

inline PairedSample draw_replication(const ScenarioGrid& g, const Scenario& sc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int pops = g.study == Study::SingleMean ? 1 : 2;
  const auto n_total = static_cast<Eigen::Index>(pops * g.n);
  CensoredSample s;
  s.y.reserve(static_cast<std::size_t>(n_total));
  s.X = Eigen::MatrixXd::Ones(n_total, pops);
  for (int pop = 0; pop < pops; ++pop) {
    const TruncNormParams tp{sc.mu + (pop == 1 ? sc.delta : 0.0), sc.sigma, g.a};
    for (int i = 0; i < g.n; ++i) {
      const auto row = static_cast<Eigen::Index>(pop * g.n + i);
      s.y.push_back(tn_sample(tp, uniform01(rng)));
      if (pops == 2) s.X(row, 1) = pop == 1 ? 1.0 : 0.0;
    }
  }
  s.censored.assign(s.y.size(), false);
  PairedSample ps{s, censor_at(s, g.nu)};
  return ps;
}

/// One estimator's output on one replication.
struct MethodEstimate {
  bool ok = false;
  Eigen::VectorXd beta;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double se_last = std::numeric_limits<double>::quiet_NaN();  ///< se of the last coefficient
  std::string error;
};

namespace detail {

inline MethodEstimate from_normal(const CensoredSample& s, const std::vector<double>& y) {
  const NormalFit nf = normal_mle(s.X, y);
  MethodEstimate e;
  e.ok = true;
  e.beta = nf.beta;
  e.sigma = nf.sigma;
  const Eigen::Index last = nf.beta.size() - 1;
  e.se_last = std::sqrt(nf.vcov_beta(last, last));
  return e;
}

inline MethodEstimate from_fit(const CensoredSample& s, const ModelSpec& spec, const OptimizerConfig& cfg) {
  const FitResult fr = fit(s, spec, cfg);
  MethodEstimate e;
  e.beta = fr.beta_hat;
  e.sigma = fr.sigma_hat(0);
  if (!fr.optim.converged) {
    e.error = "did not converge";
    return e;
  }
  if (fr.se_available) e.se_last = fr.se_beta(fr.se_beta.size() - 1);
  e.ok = true;
  return e;
}

}  // namespace detail

/**
 * Apply one estimator. The latent sample feeds the two methods that see the
 * true values; the censored copy feeds the other four. Failures come back
 * with ok = false, never as exceptions.
 */
inline MethodEstimate apply_method(Estimator m, const PairedSample& data, double a, double nu,
                                   const OptimizerConfig& cfg = {}) {
  try {
    switch (m) {
      case Estimator::GS: return detail::from_fit(data.latent, ModelSpec::truncated(a), cfg);
      case Estimator::UncensNT: return detail::from_normal(data.latent, data.latent.y);
      case Estimator::DL: return detail::from_normal(data.observed, data.observed.y);
      case Estimator::HalfDL: {
        std::vector<double> y = data.observed.y;
        for (std::size_t i = 0; i < y.size(); ++i)
          if (data.observed.censored[i]) y[i] = 0.5 * nu;
        return detail::from_normal(data.observed, y);
      }
      case Estimator::Tobit: return detail::from_fit(data.observed, ModelSpec::censored(nu), cfg);
      case Estimator::TcensReg: return detail::from_fit(data.observed, ModelSpec::censored_truncated(a, nu), cfg);
    }
  } catch (const std::exception& ex) {
    MethodEstimate e;
    e.error = ex.what();
    return e;
  }
  return {};
}

/// Reject (declare non-inferiority) iff the lower bound of the two-sided
/// 1 - 2 alpha interval exceeds the margin.
inline bool noninferiority_test(double estimate, double se, double margin = -0.15, double alpha = 0.05) {
  if (!std::isfinite(se) || !(se >= 0.0)) throw FitError("standard error unavailable");
  const double lower = estimate - wald_multiplier(1.0 - 2.0 * alpha) * se;
  return lower > margin;
}

/// Same test on the last coefficient of a fit (the group contrast).
inline bool noninferiority_test(const FitResult& fr, double margin = -0.15, double alpha = 0.05) {
  const Eigen::Index j = fr.beta_hat.size() - 1;
  const Interval ci = confint(fr, j, 1.0 - 2.0 * alpha);
  return ci.lower > margin;
}

/// Aggregate for one (scenario, estimator, parameter).
struct ReportCell {
  Scenario scenario;
  Estimator method = Estimator::GS;
  std::string parameter;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double log_mse = 0.0;
  double mc_se = 0.0;  ///< Monte Carlo standard error of the mean estimate
  std::optional<double> reject_rate;
  int B = 0;
  int used = 0;
  int failures = 0;
};

struct CensoringAudit {
  Scenario scenario;
  double empirical = 0.0;  ///< censored share over all replications
  double expected = 0.0;   ///< analytic share, averaged over populations
  double observations = 0.0;
};

struct StudyReport {
  ScenarioGrid grid;
  std::vector<ReportCell> cells;
  std::vector<CensoringAudit> censoring;

  const ReportCell& cell(std::size_t scenario, Estimator m, std::string_view parameter) const {
    for (const auto& c : cells)
      if (c.scenario.index == scenario && c.method == m && c.parameter == parameter) return c;
    throw std::out_of_range("no report cell for the requested scenario/method/parameter");
  }
};

namespace detail {

/// Everything retained from one replication.
struct ReplicationRecord {
  std::array<MethodEstimate, kEstimators.size()> est;
  std::array<int, kEstimators.size()> reject{};  ///< -1 unavailable
  std::size_t n_censored = 0;
  std::size_t n_total = 0;
};

inline ReplicationRecord run_replication(const ScenarioGrid& g, const Scenario& sc, int k) {
  const PairedSample data = draw_replication(g, sc, replication_seed(g.seed, sc.index, static_cast<std::uint64_t>(k)));
  ReplicationRecord rec;
  rec.n_censored = data.observed.n_censored();
  rec.n_total = data.observed.size();
  for (std::size_t m = 0; m < kEstimators.size(); ++m) {
    rec.est[m] = apply_method(kEstimators[m], data, g.a, g.nu, g.optim);
    rec.reject[m] = -1;
    if (g.study == Study::NonInferiority && rec.est[m].ok) {
      auto& e = rec.est[m];
      if (std::isfinite(e.se_last)) {
        rec.reject[m] = noninferiority_test(e.beta(e.beta.size() - 1), e.se_last, g.margin, g.alpha) ? 1 : 0;
      } else {
        e.ok = false;
        e.error = "standard error unavailable";
      }
    }
  }
  return rec;
}

inline double parameter_value(const MethodEstimate& e, std::string_view parameter) {
  if (parameter == "sigma") return e.sigma;
  return e.beta(e.beta.size() - 1);  // mu (intercept-only) or delta
}

inline double parameter_truth(const Scenario& sc, std::string_view parameter) {
  if (parameter == "sigma") return sc.sigma;
  if (parameter == "delta") return sc.delta;
  return sc.mu;
}

inline double expected_censoring(const ScenarioGrid& g, const Scenario& sc) {
  const CensoringScheme cs{g.nu};
  double p = expected_fractions({sc.mu, sc.sigma, g.a}, cs).censor_frac;
  if (g.study == Study::SingleMean) return p;
  p += expected_fractions({sc.mu + sc.delta, sc.sigma, g.a}, cs).censor_frac;
  return 0.5 * p;
}

}  // namespace detail

/// Progress callback: (replications done, total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/**
 * Run every scenario of the grid. `threads` = 0 uses the hardware
 * concurrency. Aggregation walks replications in index order, so the
 * report is identical for any thread count.
 */
inline StudyReport run_study(const ScenarioGrid& grid, unsigned threads = 1, const ProgressFn& progress = {}) {
  grid.validate();
  const std::vector<Scenario> scs = scenarios(grid);
  const std::size_t B = static_cast<std::size_t>(grid.B);
  const std::size_t total = scs.size() * B;
  std::vector<detail::ReplicationRecord> records(total);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= total) return;
      records[t] = detail::run_replication(grid, scs[t / B], static_cast<int>(t % B));
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(d, total);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  StudyReport rep;
  rep.grid = grid;
  const auto params = study_parameters(grid.study);
  for (const Scenario& sc : scs) {
    const std::size_t base = sc.index * B;
    CompensatedSum cens, obs;
    for (std::size_t k = 0; k < B; ++k) {
      cens.add(static_cast<double>(records[base + k].n_censored));
      obs.add(static_cast<double>(records[base + k].n_total));
    }
    rep.censoring.push_back({sc, cens.value() / obs.value(), detail::expected_censoring(grid, sc), obs.value()});

    for (std::size_t m = 0; m < kEstimators.size(); ++m) {
      for (const auto& param : params) {
        ReportCell c;
        c.scenario = sc;
        c.method = kEstimators[m];
        c.parameter = param;
        c.truth = detail::parameter_truth(sc, param);
        c.B = grid.B;
        CompensatedSum sum, sq_err, rejects;
        for (std::size_t k = 0; k < B; ++k) {
          const auto& rec = records[base + k];
          if (!rec.est[m].ok) continue;
          const double v = detail::parameter_value(rec.est[m], param);
          ++c.used;
          sum.add(v);
          sq_err.add((v - c.truth) * (v - c.truth));
          if (rec.reject[m] >= 0) rejects.add(rec.reject[m]);
        }
        c.failures = grid.B - c.used;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (c.used > 0) {
          c.mean = sum.value() / c.used;
          c.bias = c.mean - c.truth;
          c.mse = sq_err.value() / c.used;
          c.log_mse = std::log(c.mse);
          const double var = std::max(0.0, c.mse - c.bias * c.bias);
          c.mc_se = c.used > 1 ? std::sqrt(var / (c.used - 1.0)) : nan;
          if (grid.study == Study::NonInferiority) c.reject_rate = rejects.value() / c.used;
        } else {
          c.mean = c.bias = c.mse = c.log_mse = c.mc_se = nan;
        }
        rep.cells.push_back(std::move(c));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

/// Long-format CSV, one row per (scenario, method, parameter).
inline std::string to_csv(const StudyReport& rep) {
  std::ostringstream out;
  out << "study,mu,delta,sigma,method,parameter,bias,mse,log_mse,reject_rate,B,failures\n";
  for (const auto& c : rep.cells) {
    out << to_string(rep.grid.study) << ',' << detail::fmt_num(c.scenario.mu) << ','
        << detail::fmt_num(c.scenario.delta) << ',' << detail::fmt_num(c.scenario.sigma) << ','
        << to_string(c.method) << ',' << c.parameter << ',' << detail::fmt_num(c.bias) << ','
        << detail::fmt_num(c.mse) << ',' << detail::fmt_num(c.log_mse) << ','
        << (c.reject_rate ? detail::fmt_num(*c.reject_rate) : std::string("NA")) << ',' << c.B << ','
        << c.failures << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Config files
//
//   # comment
//   study  = non-inferiority      single-mean | two-population | non-inferiority
//   mu     = 1.0, 1.1             mu, or mu_1 for two populations
//   delta  = -0.15                mu_2 - mu_1
//   sigma  = 0.40, 0.45, 0.50
//   a      = 0                    truncation bound
//   nu     = 0.61                 detection limit
//   n      = 100                  observations per population
//   B      = 2000                 replications per scenario
//   seed   = 20200521
//   alpha  = 0.05                 one-sided test level (90% two-sided CI)
//   margin = -0.15
//   method = newton               newton | bfgs | cg

namespace detail {

inline std::vector<double> parse_list(std::string_view v, const std::string& what) {
  std::vector<double> out;
  for (const auto& field : split_fields(v)) out.push_back(parse_double(field, what));
  return out;
}

inline long long parse_integer(std::string_view v, const std::string& what) {
  v = trim(v);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw std::invalid_argument("non-integer value '" + std::string(v) + "' in " + what);
  return x;
}

}  // namespace detail

inline Method parse_method(std::string_view s) {
  if (s == "newton") return Method::Newton;
  if (s == "bfgs") return Method::QuasiNewton;
  if (s == "cg") return Method::ConjGrad;
  throw std::invalid_argument("unknown optimizer method '" + std::string(s) + "' (expected newton, bfgs or cg)");
}

inline ScenarioGrid parse_grid(std::istream& in) {
  ScenarioGrid g;
  std::string line;
  int line_no = 0;
  bool have_study = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(text.substr(0, eq)));
    const std::string_view value = detail::trim(text.substr(eq + 1));
    const std::string what = "config key '" + key + "' (line " + std::to_string(line_no) + ")";
    if (key == "study") {
      g.study = parse_study(value);
      have_study = true;
    } else if (key == "mu") {
      g.mu = detail::parse_list(value, what);
    } else if (key == "delta") {
      g.delta = detail::parse_list(value, what);
    } else if (key == "sigma") {
      g.sigma = detail::parse_list(value, what);
    } else if (key == "a") {
      g.a = parse_double(value, what);
    } else if (key == "nu") {
      g.nu = parse_double(value, what);
    } else if (key == "n") {
      g.n = static_cast<int>(detail::parse_integer(value, what));
    } else if (key == "B") {
      g.B = static_cast<int>(detail::parse_integer(value, what));
    } else if (key == "seed") {
      const long long s = detail::parse_integer(value, what);
      if (s < 0) throw std::invalid_argument(what + ": seed must be non-negative");
      g.seed = static_cast<std::uint64_t>(s);
    } else if (key == "alpha") {
      g.alpha = parse_double(value, what);
    } else if (key == "margin") {
      g.margin = parse_double(value, what);
    } else if (key == "method") {
      g.optim.method = parse_method(value);
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_study) throw std::invalid_argument("config: missing 'study'");
  g.validate();
  return g;
}

inline ScenarioGrid read_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return parse_grid(in);
}

}  // namespace tcens
