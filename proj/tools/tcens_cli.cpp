// tcens: fit truncated/censored normal regressions, draw samples, tabulate
// expected censoring and run simulation studies.
//
// Exit codes: 0 success, 1 input error, 2 optimizer did not converge
// (fit) or derivative check failed (fd-check).

#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

namespace {

using namespace tcens::cli;

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("input", m.input, "Comma-delimited input file with a header row")->required();
  cmd->add_option("--response", m.response, "Response column")->capture_default_str();
  cmd->add_option("--group", m.group, "Categorical group column (treatment coded)");
  cmd->add_option("--covariates", m.covariates, "Numeric covariate columns")->delimiter(',');
  cmd->add_option("--censor-col", m.censor_col,
                  "0/1 censoring indicator column; without it rows with y <= DL are censored");
  cmd->add_option("--reference", m.reference, "Reference level of --group (default: first seen)");
  cmd->add_option("--variant", m.variant,
                  "censored | truncated | censored-truncated (default inferred from --dl / --left-trunc)");
  cmd->add_option("--left-trunc", m.left_trunc, "Left truncation bound a");
  cmd->add_option("--dl", m.dl, "Detection limit nu");
  cmd->add_option("--variance", m.variance, "common | per-group")->capture_default_str();
  cmd->add_option("--method", m.method, "newton | bfgs | cg")->capture_default_str();
  cmd->add_option("--max-iter", m.max_iter, "Optimizer iteration cap")->capture_default_str();
  cmd->add_flag("!--no-intercept", m.intercept, "Drop the intercept column");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum likelihood for truncated, left-censored normal regression"};
  app.require_subcommand(1);

  FitCommand fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a data file and print the estimates");
  add_model_options(fit_cmd, fit.model);
  fit_cmd->add_option("--level", fit.level, "Confidence level for --format csv intervals")->capture_default_str();
  fit_cmd->add_option("--format", fit.format, "json | csv")->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Output file (default stdout)");

  SimulateCommand sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw a sample from a (truncated) normal");
  sim_cmd->add_option("--mu", sim.mu, "Latent mean")->capture_default_str();
  sim_cmd->add_option("--sigma", sim.sigma, "Latent standard deviation")->capture_default_str();
  sim_cmd->add_option("--left-trunc", sim.left_trunc, "Left truncation bound a");
  sim_cmd->add_option("--dl", sim.dl, "Detection limit; adds a 'censored' column");
  sim_cmd->add_option("--n", sim.n, "Sample size")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output file (default stdout)");

  SimStudyCommand study;
  auto* study_cmd = app.add_subcommand("sim-study", "Run a simulation study from a key = value config file");
  study_cmd->add_option("config", study.config, "Study config file")->required();
  study_cmd->add_option("--B", study.B, "Override the replication count");
  study_cmd->add_option("--seed", study.seed, "Override the base seed");
  study_cmd->add_option("--method", study.method, "Override the optimizer: newton | bfgs | cg");
  study_cmd->add_option("--threads", study.threads, "Worker threads (0 = all cores)")->capture_default_str();
  study_cmd->add_option("--format", study.format, "json | csv")->capture_default_str();
  study_cmd->add_option("--out", study.out, "Output file (default stdout)");
  study_cmd->add_flag("--quiet", study.quiet, "No progress on stderr");

  ExpectedCommand expected;
  auto* exp_cmd = app.add_subcommand("expected", "Expected censoring and truncation percentages");
  exp_cmd->add_option("--mu", expected.mu, "Latent means")->delimiter(',')->capture_default_str();
  exp_cmd->add_option("--sigma", expected.sigma, "Standard deviations")->delimiter(',')->capture_default_str();
  exp_cmd->add_option("--left-trunc", expected.left_trunc, "Truncation bound a")->capture_default_str();
  exp_cmd->add_option("--dl", expected.dl, "Detection limit nu")->capture_default_str();
  exp_cmd->add_option("--format", expected.format, "json | csv")->capture_default_str();
  exp_cmd->add_option("--out", expected.out, "Output file (default stdout)");

  FdCheckCommand fd;
  auto* fd_cmd = app.add_subcommand("fd-check", "Compare analytic derivatives with central differences");
  add_model_options(fd_cmd, fd.model);
  fd_cmd->add_option("--step", fd.step, "Relative difference step (default cbrt(eps))");
  fd_cmd->add_flag("--at-optimum", fd.at_optimum, "Check at the fitted estimate instead of the start");
  fd_cmd->add_option("--out", fd.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  if (*fit_cmd) return cmd_fit(fit, std::cout, std::cerr);
  if (*sim_cmd) return cmd_simulate(sim, std::cout, std::cerr);
  if (*study_cmd) return cmd_sim_study(study, std::cout, std::cerr);
  if (*exp_cmd) return cmd_expected(expected, std::cout, std::cerr);
  if (*fd_cmd) return cmd_fd_check(fd, std::cout, std::cerr);
  return kInputError;
}
