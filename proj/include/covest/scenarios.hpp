#pragma once

// Built-in benchmark scenarios: MIMO training setups, estimator sets and the
// reference values used by report mode.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "covest/montecarlo.hpp"

namespace covest {

inline constexpr double kNuInfinity = 1e5;

enum class Metric { kNmseDb, kDeltaNmseDb, kMeanIterations, kPrTwoMinima, kPrMvuLowerGivenTwo };

constexpr std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kNmseDb: return "nmse_db";
    case Metric::kDeltaNmseDb: return "delta_nmse_db";
    case Metric::kMeanIterations: return "mean_iterations";
    case Metric::kPrTwoMinima: return "pr_two_minima";
    case Metric::kPrMvuLowerGivenTwo: return "pr_mvu_lower_given_two";
  }
  return "?";
}

/// A reference number to compare against. kDeltaNmseDb is nmse(estimator) - nmse(baseline).
/// With at_most the value only has to stay at or below expected.
struct Reference {
  std::size_t run = 0;
  double grid_value = 0.0;
  Metric metric = Metric::kNmseDb;
  std::string estimator;
  std::string baseline;
  double expected = 0.0;
  double tolerance = 0.0;
  bool at_most = false;

  bool satisfied_by(double value) const {
    if (!std::isfinite(value)) return false;
    return at_most ? value <= expected : std::abs(value - expected) <= tolerance;
  }
};

inline double metric_value(const GridPointResult& p, const Reference& ref) {
  const EstimatorSummary& e = p.at(ref.estimator);
  switch (ref.metric) {
    case Metric::kNmseDb: return e.nmse_db;
    case Metric::kDeltaNmseDb: return e.nmse_db - p.at(ref.baseline).nmse_db;
    case Metric::kMeanIterations: return e.mean_iterations;
    case Metric::kPrTwoMinima: return e.pr_two_minima;
    case Metric::kPrMvuLowerGivenTwo: return e.pr_mvu_lower_given_two;
  }
  return kNaN;
}

struct Scenario {
  std::string name;
  std::string description;
  std::vector<ExperimentConfig> runs;  // one output subdirectory each when more than one
  std::vector<Reference> references;
  int default_trials = 10000;
  bool trace = false;  // single-realization convergence trace instead of Monte Carlo runs
};

namespace detail {

inline std::vector<EstimatorSpec> estimators_of(std::initializer_list<EstimatorKind> kinds) {
  std::vector<EstimatorSpec> out;
  for (auto k : kinds) out.push_back(EstimatorSpec::make(k));
  return out;
}

inline ExperimentConfig base_run(std::string name, int snapshots, std::vector<EstimatorSpec> est) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.setup.num_snapshots = snapshots;
  c.estimators = std::move(est);
  return c;
}

inline const std::vector<double> kSnrGrid = {-10, -5, 0, 5, 10, 15, 20};

inline Scenario make_fig2() {
  Scenario s{"fig2", "NMSE versus SNR, minimal dof, N=1", {}, {}};
  auto c = base_run("nmse_vs_snr", 1,
                    estimators_of({EstimatorKind::kMvu, EstimatorKind::kMap, EstimatorKind::kDre, EstimatorKind::kCmap}));
  c.axis = SweepAxis::kSnrDb;
  c.grid = kSnrGrid;
  s.runs.push_back(std::move(c));
  s.references.push_back({0, 0.0, Metric::kDeltaNmseDb, "MAP", "CMAP", 2.0, 0.5});
  return s;
}

inline Scenario make_fig3() {
  Scenario s{"fig3", "ccdf of NSE at SNR=0 dB, minimal dof, N=1", {}, {}};
  s.runs.push_back(base_run(
      "ccdf_n1", 1,
      estimators_of({EstimatorKind::kMvu, EstimatorKind::kMap, EstimatorKind::kDre, EstimatorKind::kCmap})));
  return s;
}

inline std::vector<EstimatorSpec> gibbs_comparison_set() {
  auto est = estimators_of({EstimatorKind::kMvu, EstimatorKind::kMap, EstimatorKind::kDre, EstimatorKind::kCmap});
  est.push_back(EstimatorSpec::gibbs(200, "GIBBS_200"));
  est.push_back(EstimatorSpec::gibbs(2000, "GIBBS_2000"));
  est.push_back(EstimatorSpec::gibbs(20000, "GIBBS_20000"));
  return est;
}

inline Scenario make_fig4() {
  Scenario s{"fig4", "NMSE versus SNR against Gibbs posterior means, minimal dof, N=4", {}, {}};
  auto c = base_run("gibbs_vs_snr", 4, gibbs_comparison_set());
  c.axis = SweepAxis::kSnrDb;
  c.grid = {-10, 0, 10};
  s.runs.push_back(std::move(c));
  s.default_trials = 1000;
  return s;
}

inline Scenario make_fig5() {
  Scenario s{"fig5", "CMAP minus MAP NMSE versus SNR at extreme dof, N=4", {}, {}};
  const struct {
    const char* name;
    std::optional<double> nu_x, nu_w;
  } combos[] = {{"nu0_nu0", std::nullopt, std::nullopt},
                {"nu0_inf", std::nullopt, kNuInfinity},
                {"inf_nu0", kNuInfinity, std::nullopt},
                {"inf_inf", kNuInfinity, kNuInfinity}};
  for (const auto& k : combos) {
    auto c = base_run(k.name, 4, estimators_of({EstimatorKind::kMap, EstimatorKind::kCmap}));
    c.setup.nu_x = k.nu_x;
    c.setup.nu_w = k.nu_w;
    c.axis = SweepAxis::kSnrDb;
    c.grid = kSnrGrid;
    s.runs.push_back(std::move(c));
  }
  s.references.push_back({0, -10.0, Metric::kDeltaNmseDb, "CMAP", "MAP", -3.0, 0.0, true});
  s.references.push_back({3, 0.0, Metric::kDeltaNmseDb, "CMAP", "MAP", 0.0, 0.05});
  return s;
}

inline Scenario make_ccdf_n4(std::string name, std::string description,
                             std::vector<std::pair<std::optional<double>, std::optional<double>>> dofs) {
  Scenario s{std::move(name), std::move(description), {}, {}};
  for (const auto& [nx, nw] : dofs) {
    std::string run = std::string(nx ? "inf" : "nu0") + "_" + (nw ? "inf" : "nu0");
    auto c = base_run(run, 4,
                      estimators_of({EstimatorKind::kMvu, EstimatorKind::kMap, EstimatorKind::kDre, EstimatorKind::kCmap}));
    c.setup.nu_x = nx;
    c.setup.nu_w = nw;
    s.runs.push_back(std::move(c));
  }
  return s;
}

inline Scenario make_fig8() {
  Scenario s{"fig8", "covariance estimate gain over the nominals versus N, minimal dof", {}, {}};
  for (double snr : {-10.0, 0.0, 10.0}) {
    auto c = base_run("snr_" + std::to_string(static_cast<int>(snr)), 1, estimators_of({EstimatorKind::kCmap}));
    c.setup.snr_db = snr;
    c.axis = SweepAxis::kSnapshots;
    c.grid = {1, 2, 4, 8, 16, 32};
    s.runs.push_back(std::move(c));
  }
  return s;
}

inline Scenario make_mismatch(std::string name, SweepAxis axis, std::string description) {
  Scenario s{std::move(name), std::move(description), {}, {}};
  auto c = base_run(std::string(to_string(axis)), 4,
                    estimators_of({EstimatorKind::kMvu, EstimatorKind::kMap, EstimatorKind::kDre, EstimatorKind::kCmap}));
  c.axis = axis;
  c.grid = {0, 1, 2, 5, 10, 20, 50, 100};
  s.runs.push_back(std::move(c));
  return s;
}

inline Scenario make_fig10() {
  Scenario s{"fig10", "cost trace of gradient descent and fixed-point iteration on one realization, N=4", {}, {}};
  s.runs.push_back(base_run("trace", 4, {}));
  s.trace = true;
  s.default_trials = 1;
  return s;
}

/// CMAP at the three tolerances, labelled CMAP_EPS1, CMAP_EPS3, CMAP_EPS6.
inline std::vector<EstimatorSpec> tolerance_set(const std::vector<double>& eps) {
  std::vector<EstimatorSpec> est;
  for (double e : eps) {
    const int decade = static_cast<int>(std::lround(-std::log10(e)));
    auto spec = EstimatorSpec::make(EstimatorKind::kCmap, "CMAP_EPS" + std::to_string(decade));
    spec.solver.epsilon = e;
    est.push_back(std::move(spec));
  }
  return est;
}

inline Scenario make_fig11() {
  Scenario s{"fig11", "iteration counts and NMSE of CMAP per tolerance, minimal dof, N=4", {}, {}};
  s.runs.push_back(base_run("tolerances", 4, tolerance_set({1e-1, 1e-3, 1e-6})));
  s.references = {
      {0, 0.0, Metric::kMeanIterations, "CMAP_EPS1", "", 2.5, 1.0},
      {0, 0.0, Metric::kMeanIterations, "CMAP_EPS3", "", 10.3, 0.2 * 10.3},
      {0, 0.0, Metric::kMeanIterations, "CMAP_EPS6", "", 24.7, 0.2 * 24.7},
      {0, 0.0, Metric::kNmseDb, "CMAP_EPS1", "", -9.55, 0.3},
      {0, 0.0, Metric::kNmseDb, "CMAP_EPS3", "", -9.78, 0.3},
      {0, 0.0, Metric::kNmseDb, "CMAP_EPS6", "", -9.78, 0.3},
      {0, 0.0, Metric::kDeltaNmseDb, "CMAP_EPS1", "CMAP_EPS3", 0.24, 0.15},
      {0, 0.0, Metric::kPrTwoMinima, "CMAP_EPS6", "", 0.03, 0.01},
      {0, 0.0, Metric::kPrMvuLowerGivenTwo, "CMAP_EPS6", "", 0.98, 0.03},
  };
  return s;
}

inline Scenario make_fig12() {
  Scenario s{"fig12", "NMSE versus SNR for m=64, n=16, minimal dof, N=16", {}, {}};
  auto c = base_run("large", 16, estimators_of({EstimatorKind::kMvu, EstimatorKind::kMap, EstimatorKind::kCmap}));
  c.setup.k = 16;
  c.setup.antenna_dim = 4;
  c.axis = SweepAxis::kSnrDb;
  c.grid = {-10, -5, 0, 5, 10};
  s.runs.push_back(std::move(c));
  s.default_trials = 1000;
  return s;
}

inline Scenario make_fig13() {
  Scenario s{"fig13", "MAP, CMAP, MMAP, VMAP and RMAP at SNR=0 dB, minimal dof, N=4", {}, {}};
  s.runs.push_back(base_run("map_variants", 4,
                            estimators_of({EstimatorKind::kMap, EstimatorKind::kCmap, EstimatorKind::kMmap,
                                           EstimatorKind::kVmap, EstimatorKind::kRmap})));
  s.references = {
      {0, 0.0, Metric::kNmseDb, "MAP", "", -6.83, 0.3},  {0, 0.0, Metric::kNmseDb, "CMAP", "", -9.94, 0.3},
      {0, 0.0, Metric::kNmseDb, "MMAP", "", -9.98, 0.3}, {0, 0.0, Metric::kNmseDb, "VMAP", "", -8.10, 0.3},
      {0, 0.0, Metric::kNmseDb, "RMAP", "", -9.93, 0.3},
  };
  return s;
}

}  // namespace detail

inline std::vector<std::string> scenario_names() {
  return {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9a", "fig9b", "fig10", "fig11", "fig12", "fig13"};
}

/// Throws UnknownScenario for names outside scenario_names().
inline Scenario make_scenario(const std::string& name) {
  using namespace detail;
  if (name == "fig2") return make_fig2();
  if (name == "fig3") return make_fig3();
  if (name == "fig4") return make_fig4();
  if (name == "fig5") return make_fig5();
  if (name == "fig6") return make_ccdf_n4("fig6", "ccdf of NSE at SNR=0 dB, minimal dof, N=4", {{std::nullopt, std::nullopt}});
  if (name == "fig7") {
    return make_ccdf_n4("fig7", "ccdf of NSE at SNR=0 dB with one covariance nearly known, N=4",
                        {{std::nullopt, kNuInfinity}, {kNuInfinity, std::nullopt}});
  }
  if (name == "fig8") return make_fig8();
  if (name == "fig9a") return make_mismatch("fig9a", SweepAxis::kDeltaNuX, "NMSE versus true nu_x excess, N=4");
  if (name == "fig9b") return make_mismatch("fig9b", SweepAxis::kDeltaNuW, "NMSE versus true nu_w excess, N=4");
  if (name == "fig10") return make_fig10();
  if (name == "fig11") return make_fig11();
  if (name == "fig12") return make_fig12();
  if (name == "fig13") return make_fig13();
  throw UnknownScenario("unknown scenario '" + name + "'");
}

}  // namespace covest
