#pragma once

// Command implementations behind the covest executable. Kept in a header so
// the test suite can drive them without spawning processes.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "covest/json_io.hpp"
#include "covest/persist.hpp"
#include "covest/scenarios.hpp"

namespace covest::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kNotConverged = 3, kUnknownScenario = 4 };

struct EstimateArgs {
  std::string spec_path;
  std::string y_path;
  std::string estimator = "cmap";
  double epsilon = 1e-6;
  int max_iters = 1000;
  int random_starts = 0;
  std::optional<std::string> start_mean;  // unset: mvu, or dre for rmap
  double step_size = 1e-4;
  int gibbs_samples = 20000;
  std::uint64_t seed = 1;
  std::string json_out;
};

struct ReproduceArgs {
  std::string scenario;
  std::optional<int> trials;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = "results";
  bool report = false;
};

struct ConvergenceArgs {
  std::vector<double> eps;
  int trials = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = "results/convergence";
};

struct MimoArgs {
  int k = 8;
  int antenna_dim = 2;
  double snr_db = 0.0;
  std::optional<double> nu_x, nu_w;
  int snapshots = 4;
  std::string out;
};

struct DrawArgs {
  std::string spec_path;
  std::uint64_t seed = 1;
  std::uint64_t trial = 0;
  std::string out;
};

namespace detail {

inline void print_matrix(std::ostream& out, const Matrix& a) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n", "  ", "");
  out << a.format(fmt) << '\n';
}

inline std::uint64_t effective_seed(std::uint64_t flag_value) {
  if (const char* env = std::getenv("COVEST_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("COVEST_SEED is not an unsigned integer: ") + env);
    }
  }
  return flag_value;
}

inline std::filesystem::path run_dir(const std::filesystem::path& out, const Scenario& s, const ExperimentConfig& c) {
  return s.runs.size() == 1 ? out : out / c.name;
}

inline std::vector<ExperimentResult> run_scenario(const Scenario& s, int trials, std::uint64_t seed, int workers,
                                                  std::ostream& log) {
  std::vector<ExperimentResult> results;
  for (ExperimentConfig cfg : s.runs) {
    cfg.trials = trials;
    cfg.base_seed = seed;
    log << s.name << '/' << cfg.name << ": " << trials << " trials x " << cfg.grid_values().size()
        << " grid points\n";
    results.push_back(run_experiment(cfg, workers));
  }
  return results;
}

inline void write_scenario_extras(const Scenario& s, const std::vector<ExperimentResult>& results,
                                  const std::filesystem::path& out) {
  if (s.name == "fig5") {
    covest::detail::CsvWriter csv(out / "delta_nmse.csv", "run,grid_value,delta_nmse_db");
    for (const auto& r : results)
      for (const auto& p : r.points) csv.row(r.config.name, p.grid_value, p.at("CMAP").nmse_db - p.at("MAP").nmse_db);
    csv.close();
  }
  if (s.name == "fig8") {
    covest::detail::CsvWriter csv(out / "covariance_gain.csv", "run,N,gain_p_db,gain_r_db");
    for (const auto& r : results)
      for (const auto& p : r.points) {
        const auto& e = p.at("CMAP");
        csv.row(r.config.name, p.grid_value, e.cov_nmse_p_db - p.nominal_cov_nmse_p_db,
                e.cov_nmse_r_db - p.nominal_cov_nmse_r_db);
      }
    csv.close();
  }
}

/// Returns the number of references missed.
inline int print_report(const Scenario& s, const std::vector<ExperimentResult>& results, std::ostream& out) {
  int missed = 0;
  out << std::setprecision(4);
  for (const auto& ref : s.references) {
    const double value = metric_value(results.at(ref.run).at(ref.grid_value), ref);
    const bool ok = ref.satisfied_by(value);
    if (!ok) ++missed;
    out << s.name << ' ' << results[ref.run].config.name << " @" << ref.grid_value << ' ' << to_string(ref.metric)
        << ' ' << ref.estimator << (ref.baseline.empty() ? "" : "-" + ref.baseline) << ": reference "
        << (ref.at_most ? "<= " : "") << ref.expected;
    if (!ref.at_most) out << " +/- " << ref.tolerance;
    out << ", obtained " << value << ", delta " << value - ref.expected << (ok ? "  ok" : "  MISS") << '\n';
  }
  return missed;
}

/// One realization; cost gap to the best cost seen along every path.
inline void write_trace(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& out,
                        std::ostream& log) {
  const ProblemSpec spec = cfg.setup.assumed_spec();
  RngStream rng(seed, 0);
  const Realization draw = draw_scenario(spec, rng);
  struct Path {
    std::string method;
    std::vector<double> cost;
  };
  std::vector<Path> paths;
  const double start_cost = cost_v(spec, draw.obs, estimate_mvu(spec, draw.obs));

  auto record = [&](std::string method, SolverOptions opts, bool gradient) {
    Path p{std::move(method), {start_cost}};
    opts.observer = [&](int start, int, const Matrix& x) {
      if (start == 0) p.cost.push_back(cost_v(spec, draw.obs, x));
    };
    if (gradient) {
      estimate_cmap_gd(spec, draw.obs, opts);
    } else {
      estimate_cmap(spec, draw.obs, opts);
    }
    paths.push_back(std::move(p));
  };
  SolverOptions fp;
  fp.epsilon = 1e-12;
  fp.max_iters = 2000;
  record("fixed_point", fp, false);
  for (double mu : {1e-5, 1e-4, 1e-3, 1e-2}) {
    SolverOptions gd;
    gd.epsilon = 1e-10;
    gd.max_iters = 2000;
    gd.step_size = mu;
    gd.backtracking = false;
    std::ostringstream name;
    name << "gd_mu_" << mu;
    record(name.str(), gd, true);
  }
  double v_min = std::numeric_limits<double>::infinity();
  for (const auto& p : paths)
    for (double c : p.cost)
      if (std::isfinite(c)) v_min = std::min(v_min, c);

  std::filesystem::create_directories(out);
  covest::detail::CsvWriter csv(out / "trace.csv", "method,iteration,cost_gap");
  for (const auto& p : paths)
    for (std::size_t i = 0; i < p.cost.size(); ++i) csv.row(p.method, i, p.cost[i] - v_min);
  csv.close();
  write_json_file((out / "config.json").string(),
                  Json{{"schema_version", kSchemaVersion}, {"config", config_to_json(cfg)}, {"seed", seed}});
  for (const auto& p : paths) {
    log << p.method << ": " << p.cost.size() - 1 << " iterations, final gap " << p.cost.back() - v_min << '\n';
  }
}

}  // namespace detail

inline int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const ProblemSpec spec = spec_from_json(read_json_file(a.spec_path));
  const ObservationBatch obs = observation_from_json(read_json_file(a.y_path));
  check_observation(spec, obs);
  const auto kind = parse_estimator_kind(a.estimator);
  if (!kind) throw ParseError("estimator", "unknown estimator '" + a.estimator + "'");
  EstimatorSpec est = EstimatorSpec::make(*kind);
  est.solver.epsilon = a.epsilon;
  est.solver.max_iters = a.max_iters;
  est.solver.step_size = a.step_size;
  if (a.random_starts > 0) est.solver.random_starts = a.random_starts;
  if (a.start_mean) {
    const auto mean = parse_start_mean(*a.start_mean);
    if (!mean) throw ParseError("start-mean", "unknown start mean '" + *a.start_mean + "'");
    est.solver.start_mean = *mean;
  }
  est.solver.random_start_seed = a.seed;

  EstimateResult res;
  const bool iterative = est.iterative() || est.solver.random_starts > 0;
  switch (*kind) {
    case EstimatorKind::kNull: res.x_hat = Matrix::Zero(spec.n(), spec.num_snapshots()); break;
    case EstimatorKind::kMvu: res.x_hat = estimate_mvu(spec, obs); break;
    case EstimatorKind::kMap: res.x_hat = estimate_map(spec, obs); break;
    case EstimatorKind::kDre: res.x_hat = estimate_dre(spec, obs, dre_bounds_heuristic(spec)); break;
    case EstimatorKind::kGibbs: {
      GibbsConfig cfg;
      cfg.n_samples = a.gibbs_samples;
      cfg.rng = RngStream(a.seed, 0);
      res.x_hat = gibbs_posterior_mean(spec, obs, cfg);
      break;
    }
    case EstimatorKind::kCmap:
    case EstimatorKind::kRmap: res = estimate_cmap(spec, obs, est.solver); break;
    case EstimatorKind::kMmap: res = estimate_mmap(spec, obs, est.solver); break;
    case EstimatorKind::kVmap: res = estimate_vmap(spec, obs, est.solver); break;
    case EstimatorKind::kCmapGd: res = estimate_cmap_gd(spec, obs, est.solver); break;
  }
  if (!iterative) {
    res.final_cost = cost_v(spec, obs, res.x_hat, est.solver.weight_mode);
    res.converged = true;
    res.status = SolverStatus::kConverged;
  }

  out << std::setprecision(17);
  out << "estimator: " << est.label << "\nX_hat:\n";
  detail::print_matrix(out, res.x_hat);
  out << "cost: " << res.final_cost << '\n';
  if (iterative) {
    out << "iterations: " << res.iterations << "\nstart_used: " << to_string(res.start_used)
        << "\nstatus: " << to_string(res.status) << '\n';
    for (std::size_t i = 0; i < res.starts.size(); ++i) {
      const auto& s = res.starts[i];
      out << "start " << i << " (" << to_string(s.kind) << "): cost " << s.cost << ", " << s.iterations
          << " iterations, " << to_string(s.status) << '\n';
    }
    if (res.starts.size() == 2 && est.solver.random_starts == 0) {
      out << "distinct_minima: " << (distinct_minima(res, spec.n(), spec.num_snapshots()) ? "yes" : "no") << '\n';
    }
  }
  if (!a.json_out.empty()) {
    Json doc = estimate_to_json(res);
    doc["estimator"] = est.label;
    write_json_file(a.json_out, doc);
  }
  return res.converged ? kOk : kNotConverged;
}

inline int cmd_reproduce(const ReproduceArgs& a, std::ostream& out) {
  const Scenario s = make_scenario(a.scenario);
  const std::uint64_t seed = detail::effective_seed(a.seed);
  const int trials = a.trials.value_or(s.default_trials);
  if (trials < 1) throw InvalidArgument("--trials must be >= 1");
  const std::filesystem::path dir(a.out);
  if (s.trace) {
    detail::write_trace(s.runs.front(), seed, dir, out);
    return kOk;
  }
  const auto results = detail::run_scenario(s, trials, seed, a.workers, out);
  for (std::size_t i = 0; i < results.size(); ++i) save_result(results[i], detail::run_dir(dir, s, s.runs[i]));
  detail::write_scenario_extras(s, results, dir);
  out << std::setprecision(4);
  for (const auto& r : results)
    for (const auto& p : r.points)
      for (const auto& e : p.estimators) {
        out << r.config.name << " " << to_string(r.config.axis) << "=" << p.grid_value << " " << e.label
            << ": NMSE " << e.nmse_db << " dB";
        if (std::isfinite(e.mean_iterations)) out << ", mean iterations " << e.mean_iterations;
        if (e.failures > 0) out << ", failures " << e.failures;
        out << '\n';
      }
  if (a.report) detail::print_report(s, results, out);
  return kOk;
}

inline int cmd_convergence(const ConvergenceArgs& a, std::ostream& out) {
  if (a.eps.empty()) throw InvalidArgument("--eps needs at least one tolerance");
  for (double e : a.eps)
    if (!(e > 0.0)) throw InvalidArgument("--eps values must be positive");
  if (a.trials < 1) throw InvalidArgument("--trials must be >= 1");
  ExperimentConfig cfg = covest::detail::base_run("convergence", 4, {});
  for (double e : a.eps) {
    auto spec = EstimatorSpec::make(EstimatorKind::kCmap);
    spec.solver.epsilon = e;
    std::ostringstream label;
    label << "CMAP_eps_" << e;
    spec.label = label.str();
    cfg.estimators.push_back(std::move(spec));
  }
  cfg.trials = a.trials;
  cfg.base_seed = detail::effective_seed(a.seed);
  const ExperimentResult r = run_experiment(cfg, a.workers);
  const std::filesystem::path dir(a.out);
  save_result(r, dir);
  covest::detail::CsvWriter csv(dir / "convergence.csv",
                                "eps,nmse_db,mean_iterations,pr_two_minima,pr_mvu_lower_given_two,trials,seed");
  const auto& p = r.points.front();
  out << std::setprecision(4);
  for (std::size_t i = 0; i < a.eps.size(); ++i) {
    const auto& e = p.estimators[i];
    csv.row(a.eps[i], e.nmse_db, e.mean_iterations, e.pr_two_minima, e.pr_mvu_lower_given_two, e.trials,
            cfg.base_seed);
    out << "eps " << a.eps[i] << ": NMSE " << e.nmse_db << " dB, mean N_iter " << e.mean_iterations
        << ", Pr{two minima} " << e.pr_two_minima << '\n';
  }
  csv.close();
  return kOk;
}

inline int cmd_spec_mimo(const MimoArgs& a, std::ostream& out) {
  MimoSetup s;
  s.k = a.k;
  s.antenna_dim = a.antenna_dim;
  s.snr_db = a.snr_db;
  s.nu_x = a.nu_x;
  s.nu_w = a.nu_w;
  s.num_snapshots = a.snapshots;
  const Json doc = spec_to_json(s.assumed_spec());
  if (a.out.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    write_json_file(a.out, doc);
  }
  return kOk;
}

inline int cmd_draw(const DrawArgs& a, std::ostream& out) {
  const ProblemSpec spec = spec_from_json(read_json_file(a.spec_path));
  RngStream rng(detail::effective_seed(a.seed), a.trial);
  const Realization r = draw_scenario(spec, rng);
  Json doc = observation_to_json(r.obs);
  doc["truth"] = {{"X", matrix_to_json(r.truth.x)},
                  {"P", matrix_to_json(r.truth.p.matrix())},
                  {"R", matrix_to_json(r.truth.r.matrix())}};
  if (a.out.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    write_json_file(a.out, doc);
  }
  return kOk;
}

/// Parses argv and dispatches; library errors map to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint signal and covariance MAP estimation under inverse-Wishart priors"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "run one estimator on a spec and observation file");
  estimate->add_option("--spec", est.spec_path, "problem spec JSON")->required();
  estimate->add_option("--y", est.y_path, "observation JSON {\"Y\": [[...]]}")->required();
  estimate->add_option("--estimator", est.estimator,
                       "null|mvu|map|dre|cmap|mmap|vmap|rmap|cmap_gd|gibbs")
      ->capture_default_str();
  estimate->add_option("--eps", est.epsilon, "convergence tolerance")->capture_default_str();
  estimate->add_option("--max-iters", est.max_iters)->capture_default_str();
  estimate->add_option("--random-starts", est.random_starts, "replace the two starts by k random ones");
  estimate->add_option("--start-mean", est.start_mean, "centre of random starts: mvu|prior|map|dre");
  estimate->add_option("--step-size", est.step_size, "gradient descent step")->capture_default_str();
  estimate->add_option("--samples", est.gibbs_samples, "Gibbs sweeps")->capture_default_str();
  estimate->add_option("--seed", est.seed, "seed for random starts and Gibbs")->capture_default_str();
  estimate->add_option("--json", est.json_out, "write the result as JSON");

  ReproduceArgs rep;
  int rep_trials = 0;
  auto* reproduce = app.add_subcommand("reproduce", "run a built-in scenario");
  reproduce->add_option("scenario", rep.scenario, "fig2 ... fig13")->required();
  auto* trials_opt = reproduce->add_option("--trials", rep_trials, "Monte Carlo trials (scenario default)");
  reproduce->add_option("--seed", rep.seed, "base seed (COVEST_SEED overrides)")->capture_default_str();
  reproduce->add_option("--workers", rep.workers)->capture_default_str()->check(CLI::PositiveNumber);
  reproduce->add_option("--out", rep.out, "output directory")->capture_default_str();
  reproduce->add_flag("--report", rep.report, "compare against the reference values");

  ConvergenceArgs conv;
  auto* convergence = app.add_subcommand("convergence", "iteration statistics of CMAP per tolerance");
  convergence->add_option("--eps", conv.eps, "tolerances")->delimiter(',')->expected(0, -1);
  convergence->add_option("--trials", conv.trials)->capture_default_str();
  convergence->add_option("--seed", conv.seed)->capture_default_str();
  convergence->add_option("--workers", conv.workers)->capture_default_str()->check(CLI::PositiveNumber);
  convergence->add_option("--out", conv.out)->capture_default_str();

  MimoArgs mimo;
  double nu_x = 0.0, nu_w = 0.0;
  auto* spec_cmd = app.add_subcommand("spec", "write problem spec JSON");
  auto* mimo_cmd = spec_cmd->add_subcommand("mimo", "MIMO training setup");
  spec_cmd->require_subcommand(1);
  mimo_cmd->add_option("--K", mimo.k, "training length")->capture_default_str();
  mimo_cmd->add_option("--antenna-dim", mimo.antenna_dim)->capture_default_str();
  mimo_cmd->add_option("--snr-db", mimo.snr_db)->capture_default_str();
  auto* nu_x_opt = mimo_cmd->add_option("--nu-x", nu_x, "signal dof (default n + 2)");
  auto* nu_w_opt = mimo_cmd->add_option("--nu-w", nu_w, "noise dof (default m + 2)");
  mimo_cmd->add_option("--N", mimo.snapshots)->capture_default_str();
  mimo_cmd->add_option("--out", mimo.out, "output file (stdout if empty)");

  DrawArgs draw;
  auto* draw_cmd = app.add_subcommand("draw", "draw one realization from a spec");
  draw_cmd->add_option("--spec", draw.spec_path)->required();
  draw_cmd->add_option("--seed", draw.seed)->capture_default_str();
  draw_cmd->add_option("--trial", draw.trial)->capture_default_str();
  draw_cmd->add_option("--out", draw.out, "output file (stdout if empty)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*estimate) return cmd_estimate(est, out);
    if (*reproduce) {
      if (*trials_opt) rep.trials = rep_trials;
      return cmd_reproduce(rep, out);
    }
    if (*convergence) return cmd_convergence(conv, out);
    if (*mimo_cmd) {
      if (*nu_x_opt) mimo.nu_x = nu_x;
      if (*nu_w_opt) mimo.nu_w = nu_w;
      return cmd_spec_mimo(mimo, out);
    }
    if (*draw_cmd) return cmd_draw(draw, out);
  } catch (const UnknownScenario& e) {
    err << "error: " << e.what() << '\n';
    return kUnknownScenario;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidDimension& e) {
    err << "dimension error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SchemaMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace covest::cli
