// Command implementations behind tcens_cli. Kept apart from argument parsing
// so the test suites can drive them directly.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcens/calculus.hpp"
#include "tcens/design.hpp"
#include "tcens/json_io.hpp"
#include "tcens/model.hpp"
#include "tcens/simstudy.hpp"
#include "tcens/table.hpp"
#include "tcens/truncnorm.hpp"

namespace tcens::cli {

enum Exit : int { kOk = 0, kInputError = 1, kNotConverged = 2 };

inline constexpr std::uint64_t kDefaultSeed = 20200521;

/// Model and data options shared by fit and fd-check.
struct ModelOptions {
  std::string input;
  std::string response = "y";
  std::optional<std::string> group;
  std::vector<std::string> covariates;
  std::optional<std::string> censor_col;
  std::optional<std::string> reference;
  std::optional<std::string> variant;
  std::optional<double> left_trunc;
  std::optional<double> dl;
  std::string variance = "common";
  std::string method = "newton";
  int max_iter = 200;
  bool intercept = true;
};

inline Variant parse_variant(const std::string& s) {
  if (s == "censored" || s == "censored-only" || s == "tobit") return Variant::CensoredOnly;
  if (s == "truncated" || s == "truncated-only") return Variant::TruncatedOnly;
  if (s == "censored-truncated") return Variant::CensoredTruncated;
  throw std::invalid_argument("unknown variant '" + s + "' (expected censored, truncated or censored-truncated)");
}

inline VarianceStructure parse_variance(const std::string& s) {
  if (s == "common") return VarianceStructure::Common;
  if (s == "per-group") return VarianceStructure::PerGroup;
  throw std::invalid_argument("unknown variance structure '" + s + "' (expected common or per-group)");
}

/// Variant from the flags when not given: both bounds -> censored-truncated.
inline ModelSpec model_spec(const ModelOptions& o) {
  Variant v;
  if (o.variant) {
    v = parse_variant(*o.variant);
  } else if (o.dl && o.left_trunc) {
    v = Variant::CensoredTruncated;
  } else if (o.dl) {
    v = Variant::CensoredOnly;
  } else if (o.left_trunc) {
    v = Variant::TruncatedOnly;
  } else {
    throw std::invalid_argument("--dl and/or --left-trunc is required");
  }
  const VarianceStructure var = parse_variance(o.variance);
  if (var == VarianceStructure::PerGroup && !o.group)
    throw std::invalid_argument("--variance per-group requires --group");
  ModelSpec spec;
  switch (v) {
    case Variant::CensoredOnly:
      if (!o.dl) throw std::invalid_argument("variant censored requires --dl");
      if (o.left_trunc) throw std::invalid_argument("variant censored does not take --left-trunc");
      spec = ModelSpec::censored(*o.dl, var);
      break;
    case Variant::TruncatedOnly:
      if (!o.left_trunc) throw std::invalid_argument("variant truncated requires --left-trunc");
      if (o.dl) throw std::invalid_argument("variant truncated does not take --dl");
      spec = ModelSpec::truncated(*o.left_trunc, var);
      break;
    case Variant::CensoredTruncated:
      if (!o.dl || !o.left_trunc) throw std::invalid_argument("variant censored-truncated requires --dl and --left-trunc");
      if (!(*o.dl > *o.left_trunc))
        throw std::invalid_argument("--dl (" + std::to_string(*o.dl) + ") must exceed --left-trunc (" +
                                    std::to_string(*o.left_trunc) + ")");
      spec = ModelSpec::censored_truncated(*o.left_trunc, *o.dl, var);
      break;
  }
  return spec;
}

struct LoadedData {
  CensoredSample sample;
  Design design;
  std::size_t auto_censored = 0;  ///< rows marked by the y <= DL rule
};

/**
 * Read the table and build the sample. Without a censor column, rows with
 * y <= DL become censored at DL.
 */
inline LoadedData load_data(const ModelOptions& o, const ModelSpec& spec) {
  const DataTable table = read_csv_file(o.input);
  if (table.rows.empty()) throw std::invalid_argument("input has no data rows");
  const std::size_t ycol = table.index_of(o.response);
  std::optional<std::size_t> ccol;
  if (o.censor_col) ccol = table.index_of(*o.censor_col);

  LoadedData d;
  d.design = build_design(table, DesignSpec{o.intercept, o.group, o.covariates, o.reference});
  CensoredSample& s = d.sample;
  s.X = d.design.X;
  if (spec.variance == VarianceStructure::PerGroup) s.group = d.design.group;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string where = "column '" + o.response + "', row " + std::to_string(i + 1);
    double y = parse_double(table.rows[i][ycol], where);
    if (!std::isfinite(y)) throw std::invalid_argument("non-finite value in " + where);
    bool cens = false;
    if (ccol) {
      const double c = parse_double(table.rows[i][*ccol], "column '" + *o.censor_col + "', row " + std::to_string(i + 1));
      if (c != 0.0 && c != 1.0)
        throw std::invalid_argument("censor indicator must be 0 or 1 in column '" + *o.censor_col + "', row " +
                                    std::to_string(i + 1));
      cens = c == 1.0;
    } else if (spec.nu && y <= *spec.nu) {
      cens = true;
      y = *spec.nu;
      ++d.auto_censored;
    }
    s.y.push_back(y);
    s.censored.push_back(cens);
  }
  validate(s, spec);
  return d;
}

inline OptimizerConfig optimizer_config(const ModelOptions& o) {
  OptimizerConfig cfg;
  cfg.method = parse_method(o.method);
  cfg.max_iter = o.max_iter;
  cfg.validate();
  return cfg;
}

inline void write_output(const std::optional<std::string>& path, const std::string& text, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot write '" + *path + "'");
  f << text;
}

inline std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct FitCommand {
  ModelOptions model;
  double level = 0.95;
  std::string format = "json";
  std::optional<std::string> out;
};

/// Coefficient table: name, estimate, se, lower, upper.
inline std::string fit_csv(const FitResult& fr, const std::vector<std::string>& names,
                           const std::vector<std::string>& levels, double level) {
  std::ostringstream os;
  os << "parameter,estimate,se,lower,upper\n";
  for (Eigen::Index j = 0; j < fr.beta_hat.size(); ++j) {
    os << names[static_cast<std::size_t>(j)] << ',' << fmt(fr.beta_hat(j));
    if (fr.se_available) {
      const Interval ci = confint(fr, j, level);
      os << ',' << fmt(fr.se_beta(j)) << ',' << fmt(ci.lower) << ',' << fmt(ci.upper) << '\n';
    } else {
      os << ",NA,NA,NA\n";
    }
  }
  for (Eigen::Index j = 0; j < fr.sigma_hat.size(); ++j) {
    std::string name = "sigma";
    if (fr.sigma_hat.size() > 1) name += "[" + levels[static_cast<std::size_t>(j)] + "]";
    os << name << ',' << fmt(fr.sigma_hat(j));
    if (fr.se_available) {
      const Interval ci = sigma_confint(fr, j, level);
      os << ',' << fmt(fr.se_sigma(j)) << ',' << fmt(ci.lower) << ',' << fmt(ci.upper) << '\n';
    } else {
      os << ",NA,NA,NA\n";
    }
  }
  return os.str();
}

inline int cmd_fit(const FitCommand& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.format != "json" && c.format != "csv") throw std::invalid_argument("--format must be json or csv");
    wald_multiplier(c.level);
    const ModelSpec spec = model_spec(c.model);
    const LoadedData d = load_data(c.model, spec);
    const FitResult fr = fit(d.sample, spec, optimizer_config(c.model), d.design.names);
    const std::string text = c.format == "json" ? dump(to_json(fr)) : fit_csv(fr, d.design.names, d.design.levels, c.level);
    write_output(c.out, text, out);
    if (!fr.optim.converged) {
      err << "warning: optimizer stopped without convergence (" << to_string(fr.optim.convergence_reason)
          << ", |grad| = " << fr.optim.final_grad_norm << ")\n";
      return kNotConverged;
    }
    if (!fr.se_available)
      err << "warning: observed information is singular (condition number " << fr.condition_number
          << "); standard errors unavailable\n";
    return kOk;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kInputError;
  }
}

// ---------------------------------------------------------------------------

struct ExpectedCommand {
  std::vector<double> mu{0.7, 0.8, 0.9, 1.0, 1.1};
  std::vector<double> sigma{0.40, 0.45, 0.50};
  double left_trunc = 0.0;
  double dl = 0.61;
  std::string format = "csv";
  std::optional<std::string> out;
};

struct ExpectedRow {
  double mu, sigma, censor_pct, trunc_pct, ratio, ratio_exact;
};

inline std::vector<ExpectedRow> expected_rows(const ExpectedCommand& c) {
  if (!(c.dl > c.left_trunc)) throw std::invalid_argument("--dl must exceed --left-trunc");
  std::vector<ExpectedRow> rows;
  for (double m : c.mu)
    for (double s : c.sigma) {
      const ExpectedFractions f = expected_fractions({m, s, c.left_trunc}, {c.dl});
      rows.push_back({m, s, std::round(f.censor_frac * 1e4) / 100.0, std::round(f.trunc_frac * 1e4) / 100.0,
                      std::round(table_ratio(f) * 100.0) / 100.0, f.ratio});
    }
  return rows;
}

inline int cmd_expected(const ExpectedCommand& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.format != "json" && c.format != "csv") throw std::invalid_argument("--format must be json or csv");
    const auto rows = expected_rows(c);
    std::string text;
    if (c.format == "csv") {
      std::ostringstream os;
      os << "mu,sigma,censor_pct,trunc_pct,ratio,ratio_exact\n";
      char buf[160];
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f,%.2f,%.4f\n", r.mu, r.sigma, r.censor_pct, r.trunc_pct,
                      r.ratio, r.ratio_exact);
        os << buf;
      }
      text = os.str();
    } else {
      Json arr = Json::array();
      for (const auto& r : rows) {
        Json j;
        j["mu"] = r.mu;
        j["sigma"] = r.sigma;
        j["censor_pct"] = r.censor_pct;
        j["trunc_pct"] = r.trunc_pct;
        j["ratio"] = r.ratio;
        j["ratio_exact"] = r.ratio_exact;
        arr.push_back(std::move(j));
      }
      text = dump(arr);
    }
    write_output(c.out, text, out);
    return kOk;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kInputError;
  }
}

// ---------------------------------------------------------------------------

struct SimulateCommand {
  double mu = 1.0;
  double sigma = 0.45;
  std::optional<double> left_trunc;
  std::optional<double> dl;
  int n = 100;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::string> out;
};

/// Draws y from the (truncated) normal; with --dl adds a censored column.
inline int cmd_simulate(const SimulateCommand& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.n < 1) throw std::invalid_argument("--n must be positive");
    const TruncNormParams p{c.mu, c.sigma, c.left_trunc};
    p.validate();
    if (c.dl && c.left_trunc && !(*c.dl > *c.left_trunc)) throw std::invalid_argument("--dl must exceed --left-trunc");
    std::mt19937_64 rng(c.seed);
    std::ostringstream os;
    os << (c.dl ? "y,censored\n" : "y\n");
    char buf[64];
    for (int i = 0; i < c.n; ++i) {
      double y = tn_sample(p, uniform01(rng));
      if (c.dl) {
        const bool cens = y <= *c.dl;
        if (cens) y = *c.dl;
        std::snprintf(buf, sizeof buf, "%.17g,%d\n", y, cens ? 1 : 0);
      } else {
        std::snprintf(buf, sizeof buf, "%.17g\n", y);
      }
      os << buf;
    }
    write_output(c.out, os.str(), out);
    return kOk;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kInputError;
  }
}

// ---------------------------------------------------------------------------

struct SimStudyCommand {
  std::string config;
  std::optional<int> B;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  unsigned threads = 1;
  std::string format = "json";
  std::optional<std::string> out;
  bool quiet = false;
};

inline int cmd_sim_study(const SimStudyCommand& c, std::ostream& out, std::ostream& err) {
  ScenarioGrid grid;
  try {
    if (c.format != "json" && c.format != "csv") throw std::invalid_argument("--format must be json or csv");
    grid = read_grid_file(c.config);
    if (c.B) grid.B = *c.B;
    if (c.seed) grid.seed = *c.seed;
    if (c.method) grid.optim.method = parse_method(*c.method);
    grid.validate();
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kInputError;
  }
  std::size_t last_pct = 101;
  ProgressFn progress;
  if (!c.quiet)
    progress = [&](std::size_t done, std::size_t total) {
      const std::size_t pct = done * 100 / total;
      if (pct != last_pct && (pct % 5 == 0 || done == total)) {
        err << "\r[sim-study] " << done << "/" << total << " replications (" << pct << "%)" << std::flush;
        last_pct = pct;
      }
    };
  const StudyReport rep = run_study(grid, c.threads, progress);
  if (!c.quiet) err << '\n';
  try {
    write_output(c.out, c.format == "json" ? dump(to_json(rep)) : to_csv(rep), out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kInputError;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct FdCheckCommand {
  ModelOptions model;
  std::optional<double> step;
  bool at_optimum = false;
  std::optional<std::string> out;
};

/// Central-difference check of the analytic derivatives on a data file.
inline int cmd_fd_check(const FdCheckCommand& c, std::ostream& out, std::ostream& err) {
  try {
    const ModelSpec spec = model_spec(c.model);
    const LoadedData d = load_data(c.model, spec);
    const OptimizerConfig cfg = optimizer_config(c.model);
    ParamVector theta = initialize(d.sample, spec, cfg).theta;
    if (c.at_optimum) theta = fit(d.sample, spec, cfg).theta_hat;
    const double step = c.step.value_or(std::cbrt(std::numeric_limits<double>::epsilon()));
    const FdReport rep = fd_check(d.sample, spec, theta, step);
    const bool pass = rep.grad_max_rel_error < 1e-6 && rep.hess_max_rel_error < 1e-5;
    Json j;
    j["step"] = rep.step;
    j["grad_max_rel_error"] = rep.grad_max_rel_error;
    j["grad_worst_index"] = rep.grad_worst_index;
    j["hess_max_rel_error"] = rep.hess_max_rel_error;
    j["hess_worst_index"] = {rep.hess_worst_index.first, rep.hess_worst_index.second};
    j["cancellation_suspected"] = rep.cancellation_suspected;
    j["pass"] = pass;
    write_output(c.out, dump(j), out);
    return pass ? kOk : kNotConverged;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kInputError;
  }
}

}  // namespace tcens::cli
