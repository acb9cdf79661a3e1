#pragma once

// Seeded Monte Carlo trial engine: per-trial normalized squared errors for a
// set of estimators, aggregated into NMSE, ccdf curves and solver statistics.
// Trial t always draws from stream (base_seed, t), so any worker count gives
// bitwise-identical results.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "covest/estimators.hpp"
#include "covest/gibbs.hpp"
#include "covest/model.hpp"

namespace covest {

enum class EstimatorKind { kNull, kMvu, kMap, kDre, kCmap, kMmap, kVmap, kRmap, kCmapGd, kGibbs };

inline constexpr EstimatorKind kAllEstimatorKinds[] = {
    EstimatorKind::kNull, EstimatorKind::kMvu,  EstimatorKind::kMap,  EstimatorKind::kDre,
    EstimatorKind::kCmap, EstimatorKind::kMmap, EstimatorKind::kVmap, EstimatorKind::kRmap,
    EstimatorKind::kCmapGd, EstimatorKind::kGibbs};

constexpr std::string_view default_label(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::kNull: return "NULL";
    case EstimatorKind::kMvu: return "MVU";
    case EstimatorKind::kMap: return "MAP";
    case EstimatorKind::kDre: return "DRE";
    case EstimatorKind::kCmap: return "CMAP";
    case EstimatorKind::kMmap: return "MMAP";
    case EstimatorKind::kVmap: return "VMAP";
    case EstimatorKind::kRmap: return "RMAP";
    case EstimatorKind::kCmapGd: return "CMAP_GD";
    case EstimatorKind::kGibbs: return "GIBBS";
  }
  return "?";
}

/// Accepts the upper-case label or its lower-case spelling ("cmap", "cmap_gd").
inline std::optional<EstimatorKind> parse_estimator_kind(std::string_view s) {
  std::string upper(s);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (auto k : kAllEstimatorKinds)
    if (upper == default_label(k)) return k;
  return std::nullopt;
}

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::kCmap;
  std::string label;
  SolverOptions solver;
  int gibbs_samples = 20000;
  int gibbs_burn_in = -1;

  static EstimatorSpec make(EstimatorKind kind, std::string label = {}) {
    EstimatorSpec e;
    e.kind = kind;
    e.label = label.empty() ? std::string(default_label(kind)) : std::move(label);
    if (kind == EstimatorKind::kMmap) e.solver.weight_mode = WeightMode::kMmap;
    if (kind == EstimatorKind::kRmap) {
      e.solver.random_starts = 10;
      e.solver.start_mean = StartMean::kDre;
    }
    return e;
  }

  static EstimatorSpec gibbs(int samples, std::string label = {}) {
    EstimatorSpec e = make(EstimatorKind::kGibbs, std::move(label));
    e.gibbs_samples = samples;
    return e;
  }

  bool iterative() const {
    return kind == EstimatorKind::kCmap || kind == EstimatorKind::kMmap || kind == EstimatorKind::kVmap ||
           kind == EstimatorKind::kRmap || kind == EstimatorKind::kCmapGd;
  }
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EstimatorOutcome {
  double nse = kNaN;
  int iterations = 0;
  bool converged = true;
  bool failed = false;
  bool two_minima = false;
  bool mvu_start_lower = false;  // meaningful when two_minima
  StartKind start_used = StartKind::kMvu;
  double cov_err_p = kNaN;  // ||P - P^||_F^2
  double cov_err_r = kNaN;  // ||R - R^||_F^2
  std::string error;
};

struct TrialRecord {
  std::uint64_t trial_id = 0;
  std::vector<EstimatorOutcome> outcomes;  // aligned with the estimator set
  double nominal_err_p = 0.0;              // ||P - P0||_F^2
  double nominal_err_r = 0.0;              // ||R - R0||_F^2
  double energy_p = 0.0;                   // ||P||_F^2
  double energy_r = 0.0;                   // ||R||_F^2
};

namespace detail {

inline constexpr std::uint64_t kGibbsSalt = 0x6769626273ULL;
inline constexpr std::uint64_t kStartSalt = 0x7374617274ULL;

struct PointEstimate {
  Matrix x;
  std::optional<EstimateResult> full;
};

inline PointEstimate run_estimator(const EstimatorSpec& est, std::size_t index, const ProblemSpec& spec,
                                   const ObservationBatch& obs, std::uint64_t trial_id, std::uint64_t base_seed) {
  switch (est.kind) {
    case EstimatorKind::kNull: return {Matrix::Zero(spec.n(), spec.num_snapshots()), std::nullopt};
    case EstimatorKind::kMvu: return {estimate_mvu(spec, obs), std::nullopt};
    case EstimatorKind::kMap: return {estimate_map(spec, obs), std::nullopt};
    case EstimatorKind::kDre: return {estimate_dre(spec, obs, dre_bounds_heuristic(spec)), std::nullopt};
    case EstimatorKind::kGibbs: {
      GibbsConfig cfg;
      cfg.n_samples = est.gibbs_samples;
      cfg.burn_in = est.gibbs_burn_in;
      cfg.rng = RngStream(RngStream::derive_seed(base_seed, kGibbsSalt + index), trial_id);
      return {gibbs_posterior_mean(spec, obs, cfg), std::nullopt};
    }
    case EstimatorKind::kCmap: {
      auto r = estimate_cmap(spec, obs, est.solver);
      return {r.x_hat, std::move(r)};
    }
    case EstimatorKind::kMmap: {
      auto r = estimate_mmap(spec, obs, est.solver);
      return {r.x_hat, std::move(r)};
    }
    case EstimatorKind::kVmap: {
      auto r = estimate_vmap(spec, obs, est.solver);
      return {r.x_hat, std::move(r)};
    }
    case EstimatorKind::kCmapGd: {
      auto r = estimate_cmap_gd(spec, obs, est.solver);
      return {r.x_hat, std::move(r)};
    }
    case EstimatorKind::kRmap: {
      SolverOptions opts = est.solver;
      if (opts.random_starts < 1) opts.random_starts = 10;
      opts.random_start_seed = splitmix64(RngStream::derive_seed(base_seed, kStartSalt + index) + trial_id);
      auto r = estimate_cmap(spec, obs, opts);
      return {r.x_hat, std::move(r)};
    }
  }
  throw InvalidArgument("unknown estimator kind");
}

}  // namespace detail

/// One Monte Carlo draw. The scenario comes from `truth` with stream
/// (base_seed, trial_id); every estimator sees the same observation and uses
/// the `assumed` model (they differ only in mismatch experiments).
inline TrialRecord run_trial(const ProblemSpec& truth, const ProblemSpec& assumed,
                             const std::vector<EstimatorSpec>& estimators, std::uint64_t trial_id,
                             std::uint64_t base_seed) {
  if (truth.m() != assumed.m() || truth.n() != assumed.n() || truth.num_snapshots() != assumed.num_snapshots()) {
    throw InvalidDimension("run_trial: truth and assumed models differ in shape");
  }
  RngStream rng(base_seed, trial_id);
  const Realization draw = draw_scenario(truth, rng);
  const double energy = expected_signal_energy(truth);

  TrialRecord rec;
  rec.trial_id = trial_id;
  rec.nominal_err_p = (draw.truth.p.matrix() - assumed.p0().matrix()).squaredNorm();
  rec.nominal_err_r = (draw.truth.r.matrix() - assumed.r0().matrix()).squaredNorm();
  rec.energy_p = draw.truth.p.matrix().squaredNorm();
  rec.energy_r = draw.truth.r.matrix().squaredNorm();
  rec.outcomes.resize(estimators.size());
  for (std::size_t k = 0; k < estimators.size(); ++k) {
    EstimatorOutcome& out = rec.outcomes[k];
    try {
      const auto est = detail::run_estimator(estimators[k], k, assumed, draw.obs, trial_id, base_seed);
      out.nse = (draw.truth.x - est.x).squaredNorm() / energy;
      if (est.full) {
        const EstimateResult& r = *est.full;
        out.iterations = r.iterations;
        out.converged = r.converged;
        out.start_used = r.start_used;
        if (r.starts.size() == 2 && estimators[k].solver.random_starts == 0) {
          out.two_minima = distinct_minima(r, assumed.n(), assumed.num_snapshots());
          out.mvu_start_lower = r.starts[0].cost < r.starts[1].cost;
        }
        if (!r.p_hat.empty()) out.cov_err_p = (draw.truth.p.matrix() - r.p_hat.matrix()).squaredNorm();
        if (!r.r_hat.empty()) out.cov_err_r = (draw.truth.r.matrix() - r.r_hat.matrix()).squaredNorm();
      }
      if (!std::isfinite(out.nse)) throw Error("non-finite estimate");
    } catch (const std::exception& e) {
      out.failed = true;
      out.nse = kNaN;
      out.error = e.what();
    }
  }
  return rec;
}

inline TrialRecord run_trial(const ProblemSpec& spec, const std::vector<EstimatorSpec>& estimators,
                             std::uint64_t trial_id, std::uint64_t base_seed) {
  return run_trial(spec, spec, estimators, trial_id, base_seed);
}

/// Runs trials [0, trials) on `workers` threads; records come back in trial order.
inline std::vector<TrialRecord> run_trials(const ProblemSpec& truth, const ProblemSpec& assumed,
                                           const std::vector<EstimatorSpec>& estimators, int trials,
                                           std::uint64_t base_seed, int workers) {
  if (trials < 1) throw InvalidArgument("run_trials: trials must be >= 1");
  std::vector<TrialRecord> records(static_cast<std::size_t>(trials));
  const int pool = std::clamp(workers, 1, trials);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= trials || failed.load()) return;
      try {
        records[static_cast<std::size_t>(t)] =
            run_trial(truth, assumed, estimators, static_cast<std::uint64_t>(t), base_seed);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  if (pool == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int i = 0; i < pool; ++i) threads.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

// ---------------------------------------------------------------------------
// Statistics

/// Empirical Pr{sample > kappa} for each kappa.
inline std::vector<double> ccdf(const std::vector<double>& samples, const std::vector<double>& kappas) {
  if (samples.empty()) throw EmptySample("ccdf: no samples");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(kappas.size());
  const double total = static_cast<double>(sorted.size());
  for (double k : kappas) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), k);
    out.push_back(static_cast<double>(above) / total);
  }
  return out;
}

inline std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(points));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < points; ++i) {
    g.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1)));
  }
  return g;
}

inline std::vector<double> default_kappa_grid() { return log_grid(1e-2, 1e2, 50); }

/// 0..100 step 1, then 110..2000 step 10.
inline std::vector<double> default_iteration_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 100; ++k) g.push_back(k);
  for (int k = 110; k <= 2000; k += 10) g.push_back(k);
  return g;
}

struct IterationStats {
  double mean = kNaN;
  std::vector<double> ccdf;  // on the supplied grid
};

/// Mean and ccdf of the per-trial iteration totals (both starts summed).
inline IterationStats iteration_stats(const std::vector<TrialRecord>& records, std::size_t estimator,
                                      const std::vector<double>& grid = default_iteration_grid()) {
  std::vector<double> its;
  for (const auto& r : records) {
    const auto& o = r.outcomes.at(estimator);
    if (!o.failed) its.push_back(static_cast<double>(o.iterations));
  }
  if (its.empty()) throw EmptySample("iteration_stats: no successful trials");
  IterationStats s;
  double sum = 0.0;
  for (double v : its) sum += v;
  s.mean = sum / static_cast<double>(its.size());
  s.ccdf = ccdf(its, grid);
  return s;
}

struct EstimatorSummary {
  std::string label;
  int trials = 0;    // successful trials
  int failures = 0;  // estimator threw
  int nonconverged = 0;
  double nmse = kNaN;  // linear
  double nmse_db = kNaN;
  double nse_stderr = kNaN;  // standard error of the mean NSE (linear)
  double mean_iterations = kNaN;
  std::vector<double> nse_ccdf;
  std::vector<double> iter_ccdf;  // empty for non-iterative estimators
  int two_minima = 0;
  double pr_two_minima = kNaN;
  double pr_mvu_lower_given_two = kNaN;
  double cov_nmse_p_db = kNaN;
  double cov_nmse_r_db = kNaN;

  std::vector<double> nse_samples;  // not persisted
};

struct GridPointResult {
  double grid_value = 0.0;
  double nominal_cov_nmse_p_db = kNaN;
  double nominal_cov_nmse_r_db = kNaN;
  std::vector<EstimatorSummary> estimators;

  const EstimatorSummary& at(std::string_view label) const {
    for (const auto& e : estimators)
      if (e.label == label) return e;
    throw InvalidArgument("no estimator labelled " + std::string(label));
  }
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Deterministic fold of trial records (in trial order) into summaries.
inline GridPointResult aggregate(double grid_value, const std::vector<TrialRecord>& records,
                                 const std::vector<EstimatorSpec>& estimators, const std::vector<double>& kappas,
                                 const std::vector<double>& iter_grid) {
  GridPointResult g;
  g.grid_value = grid_value;
  double energy_p = 0.0, energy_r = 0.0, nom_p = 0.0, nom_r = 0.0;
  for (const auto& r : records) {
    energy_p += r.energy_p;
    energy_r += r.energy_r;
    nom_p += r.nominal_err_p;
    nom_r += r.nominal_err_r;
  }
  const double count = static_cast<double>(records.size());
  // covariance NSEs are normalized by the empirical E||P||_F^2 over the trial set
  energy_p /= count;
  energy_r /= count;
  g.nominal_cov_nmse_p_db = linear_to_db(nom_p / count / energy_p);
  g.nominal_cov_nmse_r_db = linear_to_db(nom_r / count / energy_r);

  for (std::size_t k = 0; k < estimators.size(); ++k) {
    EstimatorSummary s;
    s.label = estimators[k].label;
    std::vector<double> its;
    double cov_p = 0.0, cov_r = 0.0;
    int cov_count = 0, mvu_lower = 0;
    for (const auto& r : records) {
      const auto& o = r.outcomes[k];
      if (o.failed) {
        ++s.failures;
        continue;
      }
      s.nse_samples.push_back(o.nse);
      if (!o.converged) ++s.nonconverged;
      if (estimators[k].iterative()) its.push_back(static_cast<double>(o.iterations));
      if (o.two_minima) {
        ++s.two_minima;
        if (o.mvu_start_lower) ++mvu_lower;
      }
      if (std::isfinite(o.cov_err_p) && std::isfinite(o.cov_err_r)) {
        cov_p += o.cov_err_p;
        cov_r += o.cov_err_r;
        ++cov_count;
      }
    }
    s.trials = static_cast<int>(s.nse_samples.size());
    if (s.trials > 0) {
      s.nmse = detail::mean_of(s.nse_samples);
      s.nmse_db = linear_to_db(s.nmse);
      double var = 0.0;
      for (double v : s.nse_samples) var += (v - s.nmse) * (v - s.nmse);
      if (s.trials > 1) s.nse_stderr = std::sqrt(var / static_cast<double>(s.trials - 1) / s.trials);
      s.nse_ccdf = ccdf(s.nse_samples, kappas);
      if (!its.empty()) {
        s.mean_iterations = detail::mean_of(its);
        s.iter_ccdf = ccdf(its, iter_grid);
      }
      if (estimators[k].iterative() && estimators[k].solver.random_starts == 0 &&
          estimators[k].kind != EstimatorKind::kVmap && estimators[k].kind != EstimatorKind::kCmapGd) {
        s.pr_two_minima = static_cast<double>(s.two_minima) / s.trials;
        if (s.two_minima > 0) s.pr_mvu_lower_given_two = static_cast<double>(mvu_lower) / s.two_minima;
      }
      if (cov_count > 0) {
        s.cov_nmse_p_db = linear_to_db(cov_p / cov_count / energy_p);
        s.cov_nmse_r_db = linear_to_db(cov_r / cov_count / energy_r);
      }
    }
    g.estimators.push_back(std::move(s));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Experiments over a MIMO setup

enum class SweepAxis { kNone, kSnrDb, kNuX, kNuW, kSnapshots, kDeltaNuX, kDeltaNuW };

constexpr std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kNone: return "none";
    case SweepAxis::kSnrDb: return "snr_db";
    case SweepAxis::kNuX: return "nu_x";
    case SweepAxis::kNuW: return "nu_w";
    case SweepAxis::kSnapshots: return "N";
    case SweepAxis::kDeltaNuX: return "delta_nu_x";
    case SweepAxis::kDeltaNuW: return "delta_nu_w";
  }
  return "?";
}

inline std::optional<SweepAxis> parse_sweep_axis(std::string_view s) {
  for (auto a : {SweepAxis::kNone, SweepAxis::kSnrDb, SweepAxis::kNuX, SweepAxis::kNuW, SweepAxis::kSnapshots,
                 SweepAxis::kDeltaNuX, SweepAxis::kDeltaNuW})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

/// MIMO setup; unset dof means the minimal value p + 2. The delta_nu fields
/// raise the dof that generates the data above what the estimators assume.
struct MimoSetup {
  int k = 8;
  int antenna_dim = 2;
  double snr_db = 0.0;
  std::optional<double> nu_x;
  std::optional<double> nu_w;
  int num_snapshots = 4;
  double delta_nu_x = 0.0;
  double delta_nu_w = 0.0;

  int n() const { return antenna_dim * antenna_dim; }
  int m() const { return antenna_dim * k; }
  double assumed_nu_x() const { return nu_x.value_or(minimal_dof(n())); }
  double assumed_nu_w() const { return nu_w.value_or(minimal_dof(m())); }

  ProblemSpec assumed_spec() const {
    return build_mimo_spec(k, db_to_linear(snr_db), assumed_nu_x(), assumed_nu_w(), num_snapshots, antenna_dim);
  }

  ProblemSpec truth_spec() const {
    return assumed_spec().with_dof(assumed_nu_x() + delta_nu_x, assumed_nu_w() + delta_nu_w);
  }
};

inline MimoSetup setup_at(const MimoSetup& base, SweepAxis axis, double value) {
  MimoSetup s = base;
  switch (axis) {
    case SweepAxis::kNone: break;
    case SweepAxis::kSnrDb: s.snr_db = value; break;
    case SweepAxis::kNuX: s.nu_x = value; break;
    case SweepAxis::kNuW: s.nu_w = value; break;
    case SweepAxis::kSnapshots: s.num_snapshots = static_cast<int>(std::lround(value)); break;
    case SweepAxis::kDeltaNuX: s.delta_nu_x = value; break;
    case SweepAxis::kDeltaNuW: s.delta_nu_w = value; break;
  }
  return s;
}

struct ExperimentConfig {
  std::string name = "experiment";
  MimoSetup setup;
  SweepAxis axis = SweepAxis::kNone;
  std::vector<double> grid;  // empty with kNone: one point at value 0
  std::vector<EstimatorSpec> estimators;
  int trials = 10000;
  std::uint64_t base_seed = 1;
  std::vector<double> kappa_grid = default_kappa_grid();
  std::vector<double> iteration_grid = default_iteration_grid();

  std::vector<double> grid_values() const {
    if (axis == SweepAxis::kNone || grid.empty()) return {0.0};
    return grid;
  }

  void validate() const {
    if (trials < 1) throw InvalidArgument("ExperimentConfig: trials must be >= 1");
    if (estimators.empty()) throw InvalidArgument("ExperimentConfig: no estimators");
    if (axis != SweepAxis::kNone && grid.empty()) throw InvalidArgument("ExperimentConfig: empty grid");
  }
};

inline constexpr int kSchemaVersion = 1;

struct ExperimentResult {
  int schema_version = kSchemaVersion;
  ExperimentConfig config;
  std::vector<GridPointResult> points;

  const GridPointResult& at(double grid_value) const {
    for (const auto& p : points)
      if (p.grid_value == grid_value) return p;
    throw InvalidArgument("no grid point " + std::to_string(grid_value));
  }
};

/// Every grid point reuses the same trial streams (common random numbers).
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 1) {
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;
  for (double v : cfg.grid_values()) {
    const MimoSetup setup = setup_at(cfg.setup, cfg.axis, v);
    const auto records =
        run_trials(setup.truth_spec(), setup.assumed_spec(), cfg.estimators, cfg.trials, cfg.base_seed, workers);
    res.points.push_back(aggregate(v, records, cfg.estimators, cfg.kappa_grid, cfg.iteration_grid));
  }
  return res;
}

}  // namespace covest
