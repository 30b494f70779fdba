#include "robshrink/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "robshrink/matrix_io.hpp"
#include "robshrink/portfolio.hpp"
#include "robshrink/simlab.hpp"

namespace robshrink {

namespace {

struct EstimateArgs {
  std::string input;
  std::string output;
  std::string meta;
  std::string format = "csv";
  std::string method = "rnl";
};

struct SimulateArgs {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  int jobs = 1;
};

struct BacktestArgs {
  std::string returns;
  std::string caps;
  std::string report;
  std::string summary;
  std::string method = "rcnl";
  int window = 252;
  int holding = 21;
  Index universe = 100;
  int max_missing = 32;
};

struct CommonArgs {
  std::optional<double> rho;
  double epsilon = 1e-10;
  int max_iter = 1000;
  double tol = 1e-8;
  bool demean = false;
  std::string trace_target = "dimension";
  int verbose = 0;
};

void add_common(CLI::App *cmd, CommonArgs &c) {
  cmd->add_option("--rho", c.rho,
                  "Shrinkage intensity in (0, 1] for the rls method")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--epsilon", c.epsilon,
                  "Stopping threshold of the eigenvector iteration")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", c.max_iter,
                  "Iteration budget of the eigenvector and fixed-point loops")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", c.tol,
                  "Fixed-point tolerance for tyler and rls (relative to p)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--demean", c.demean,
                "Subtract column means before estimating (default: location 0)");
  cmd->add_option("--trace-target", c.trace_target,
                  "Scale of dispersion estimates: 'dimension' (trace p) or "
                  "'sample' (trace of the sample covariance)")
      ->capture_default_str()
      ->check(CLI::IsMember({"dimension", "sample"}));
  cmd->add_flag("-v,--verbose", c.verbose,
                "Log every eigenvector-iteration step to standard error");
}

EstimatorOptions to_options(const CommonArgs &c, std::ostream &err) {
  EstimatorOptions o;
  o.demean = c.demean;
  o.rho = c.rho;
  o.epsilon = c.epsilon;
  o.max_iter = c.max_iter;
  o.fixed_point_tol = c.tol;
  o.fixed_point_max_iter = c.max_iter;
  o.trace_target = c.trace_target == "sample" ? TraceTarget::sample_trace
                                              : TraceTarget::dimension;
  if (c.verbose > 0) {
    o.observer = [&err](const VIterationStep &s) {
      err << "v-iteration " << s.iteration << " criterion "
          << format_double(s.criterion) << " objective "
          << format_double(s.objective) << '\n';
    };
  }
  return o;
}

std::ofstream open_output(const std::string &path) {
  std::ofstream f(path);
  if (!f) {
    throw InvalidInput("cannot open '" + path + "' for writing");
  }
  return f;
}

void cmd_estimate(const EstimateArgs &a, const CommonArgs &c, std::ostream &out,
                  std::ostream &err) {
  const Method method = parse_method(a.method);
  const DataMatrix y(read_csv_matrix_file(a.input));
  const auto t0 = std::chrono::steady_clock::now();
  const EstimateResult r = run_estimator(method, y, to_options(c, err));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json meta{{"method", std::string(method_name(method))},
                      {"n", y.n()},
                      {"p", y.p()},
                      {"trace", r.matrix.trace()},
                      {"wall_seconds", seconds}};
  meta["iterations"] = r.iterations ? nlohmann::json(*r.iterations) : nullptr;
  meta["final_criterion"] =
      r.final_criterion ? nlohmann::json(*r.final_criterion) : nullptr;

  auto write_matrix = [&](std::ostream &o) {
    if (a.format == "json") {
      o << nlohmann::json{{"matrix", matrix_to_json(r.matrix)}, {"meta", meta}}
                .dump(2)
        << '\n';
    } else {
      write_csv_matrix(o, r.matrix);
    }
  };
  if (a.output.empty()) {
    write_matrix(out);
  } else {
    auto f = open_output(a.output);
    write_matrix(f);
  }

  if (a.format == "json" && a.meta.empty()) {
    return;
  }
  if (!a.meta.empty()) {
    auto f = open_output(a.meta);
    f << meta.dump(2) << '\n';
  } else if (!a.output.empty()) {
    auto f = open_output(a.output + ".meta.json");
    f << meta.dump(2) << '\n';
  } else {
    err << meta.dump() << '\n';
  }
}

std::uint64_t parse_seed_env(const char *text) {
  std::uint64_t seed = 0;
  const std::string s(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(std::string(kSeedEnv) + " is not an unsigned integer: '" +
                          s + "'",
                      kSeedEnv);
  }
  return seed;
}

void cmd_simulate(const SimulateArgs &a, const CommonArgs &c, std::ostream &out,
                  std::ostream &err) {
  std::ifstream in(a.config);
  if (!in) {
    throw InvalidInput("cannot open config '" + a.config + "'");
  }
  ScenarioConfig cfg = parse_scenario_config(in);
  if (a.seed) {
    cfg.seed = *a.seed;
  } else if (!cfg.seed_from_config) {
    if (const char *env = std::getenv(kSeedEnv)) {
      cfg.seed = parse_seed_env(env);
    }
  }
  if (a.replications) {
    cfg.replications = *a.replications;
  }
  cfg.jobs = a.jobs;
  // Scenario files carry their own estimator settings; the shared flags
  // only add tracing.
  if (c.verbose > 0) {
    cfg.options.observer = to_options(c, err).observer;
    cfg.jobs = 1;
  }
  const PrialTable table = run_scenario(cfg);
  for (const auto &row : table.rows) {
    if (row.failures > 0) {
      err << method_name(row.estimator) << " at nu=" << row.nu.to_string()
          << ": " << row.failures << " failed replication(s)\n";
    }
  }
  if (a.output.empty()) {
    write_prial_csv(out, table);
  } else {
    auto f = open_output(a.output);
    write_prial_csv(f, table);
  }
}

void cmd_backtest(const BacktestArgs &a, const CommonArgs &c, std::ostream &out,
                  std::ostream &err) {
  BacktestConfig cfg;
  cfg.estimation_window = a.window;
  cfg.holding_period = a.holding;
  cfg.universe_size = a.universe;
  cfg.max_missing = a.max_missing;
  cfg.estimator = parse_method(a.method);
  cfg.options = to_options(c, err);
  const ReturnPanel panel = read_return_panel_file(a.returns, a.caps);
  const BacktestReport report = rolling_backtest(panel, cfg);
  if (report.flagged_months > 0) {
    err << report.flagged_months << " month(s) fell back to equal weights\n";
  }
  if (a.report.empty()) {
    write_report_json(out, report);
  } else {
    auto f = open_output(a.report);
    write_report_json(f, report);
  }
  if (!a.summary.empty()) {
    auto f = open_output(a.summary);
    write_summary_csv(f, report);
  }
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"Covariance and dispersion estimation with robust nonlinear "
               "shrinkage",
               "robshrink"};
  app.require_subcommand(1);

  const std::string methods = "sample, ls, nl, tyler, rls, rnl or rcnl";
  std::vector<std::string> method_ids;
  for (Method m : all_methods()) {
    method_ids.emplace_back(method_name(m));
  }

  EstimateArgs est;
  CommonArgs est_common;
  auto *estimate = app.add_subcommand(
      "estimate", "Estimate a covariance or dispersion matrix from an n x p CSV");
  estimate->add_option("-i,--input", est.input,
                       "Observations CSV, one row per observation, no header")
      ->required();
  estimate->add_option("-m,--method", est.method, "Estimator: " + methods)
      ->capture_default_str()
      ->check(CLI::IsMember(method_ids));
  estimate->add_option("-o,--output", est.output,
                       "Output file (default: standard output)");
  estimate->add_option("--format", est.format, "Output format: csv or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "json"}));
  estimate->add_option("--meta", est.meta,
                       "Run metadata JSON (default: <output>.meta.json, or "
                       "standard error when writing to standard output)");
  add_common(estimate, est_common);

  SimulateArgs sim;
  CommonArgs sim_common;
  auto *simulate = app.add_subcommand(
      "simulate", "Monte-Carlo PRIAL table for a scenario file");
  simulate->add_option("-c,--config", sim.config,
                       "Scenario file of key = value lines")
      ->required();
  simulate->add_option("-o,--output", sim.output,
                       "PRIAL CSV (default: standard output)");
  simulate->add_option("--seed", sim.seed,
                       std::string("Base seed; falls back to the config, then "
                                   "the ") +
                           kSeedEnv + " environment variable, then 0");
  simulate->add_option("--replications", sim.replications,
                       "Override the replication count")
      ->check(CLI::PositiveNumber);
  simulate->add_option("-j,--jobs", sim.jobs,
                       "Worker threads; results do not depend on this")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  simulate->add_flag("-v,--verbose", sim_common.verbose,
                     "Log every eigenvector-iteration step (forces one job)");

  BacktestArgs bt;
  CommonArgs bt_common;
  auto *backtest = app.add_subcommand(
      "backtest", "Rolling global minimum-variance backtest on a return panel");
  backtest->add_option("-r,--returns", bt.returns,
                       "Daily percentage returns CSV: date column then assets")
      ->required();
  backtest->add_option("--caps", bt.caps,
                       "Market capitalizations CSV with the same shape");
  backtest->add_option("-m,--method", bt.method, "Estimator: " + methods)
      ->capture_default_str()
      ->check(CLI::IsMember(method_ids));
  backtest->add_option("--window", bt.window, "Estimation window in days")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  backtest->add_option("--holding", bt.holding, "Holding period in days")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  backtest->add_option("-p,--universe", bt.universe,
                       "Number of assets held each month")
      ->capture_default_str();
  backtest->add_option("--max-missing", bt.max_missing,
                       "Most missing days allowed in the estimation window")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  backtest->add_option("--report", bt.report,
                       "Report JSON (default: standard output)");
  backtest->add_option("--summary", bt.summary, "Summary CSV of the metrics");
  add_common(backtest, bt_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (estimate->parsed()) {
      cmd_estimate(est, est_common, out, err);
    } else if (simulate->parsed()) {
      cmd_simulate(sim, sim_common, out, err);
    } else {
      cmd_backtest(bt, bt_common, out, err);
    }
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidInput &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const UnsupportedRegime &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const DegenerateInput &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const nlohmann::json::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

} // namespace robshrink
