#pragma once

// Experiment output directory layout:
//   summary.json   schema_version, config and every aggregate (lossless)
//   config.json    schema_version and config only
//   nmse.csv       grid_value,estimator,nmse_db,trials,seed
//   ccdf.csv       kappa,estimator,exceedance_prob          (ccdf_<i>.csv per grid point in sweeps)
//   iterations.csv n_iter,estimator,exceedance_prob         (iterations_<i>.csv likewise)
//   stats.csv      solver and covariance statistics per grid point and estimator

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "covest/json_io.hpp"
#include "covest/montecarlo.hpp"

namespace covest {

namespace detail {

template <class E, std::size_t K>
std::optional<E> parse_enum(std::string_view s, const E (&values)[K]) {
  for (E v : values)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

}  // namespace detail

constexpr std::string_view to_string(WeightMode m) { return m == WeightMode::kMmap ? "mmap" : "cmap"; }

constexpr std::string_view to_string(StartMean m) {
  switch (m) {
    case StartMean::kMvu: return "mvu";
    case StartMean::kPrior: return "prior";
    case StartMean::kMap: return "map";
    case StartMean::kDre: return "dre";
  }
  return "?";
}

constexpr std::string_view to_string(VmapScatter s) {
  switch (s) {
    case VmapScatter::kScaledSignal: return "scaled_signal";
    case VmapScatter::kExact: return "exact";
    case VmapScatter::kLiteral: return "literal";
  }
  return "?";
}

inline std::optional<StartMean> parse_start_mean(std::string_view s) {
  constexpr StartMean all[] = {StartMean::kMvu, StartMean::kPrior, StartMean::kMap, StartMean::kDre};
  return detail::parse_enum(s, all);
}

inline std::optional<VmapScatter> parse_vmap_scatter(std::string_view s) {
  constexpr VmapScatter all[] = {VmapScatter::kScaledSignal, VmapScatter::kExact, VmapScatter::kLiteral};
  return detail::parse_enum(s, all);
}

inline std::optional<WeightMode> parse_weight_mode(std::string_view s) {
  constexpr WeightMode all[] = {WeightMode::kCmap, WeightMode::kMmap};
  return detail::parse_enum(s, all);
}

namespace detail {

// NaN and infinities become null.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double num_from(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

inline Json nums(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline std::vector<double> nums_from(const Json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(num_from(x));
  return v;
}

template <class E>
E enum_from(const Json& j, std::optional<E> (*parse)(std::string_view), const char* field) {
  const auto v = parse(j.get<std::string>());
  if (!v) throw ParseError(field, "unknown value '" + j.get<std::string>() + "'");
  return *v;
}

inline std::optional<EstimatorKind> parse_kind(std::string_view s) { return parse_estimator_kind(s); }

}  // namespace detail

inline Json estimator_spec_to_json(const EstimatorSpec& e) {
  return Json{{"kind", std::string(default_label(e.kind))},
              {"label", e.label},
              {"epsilon", e.solver.epsilon},
              {"max_iters", e.solver.max_iters},
              {"weight_mode", std::string(to_string(e.solver.weight_mode))},
              {"step_size", e.solver.step_size},
              {"backtracking", e.solver.backtracking},
              {"random_starts", e.solver.random_starts},
              {"start_mean", std::string(to_string(e.solver.start_mean))},
              {"vmap_scatter", std::string(to_string(e.solver.vmap_scatter))},
              {"gibbs_samples", e.gibbs_samples},
              {"gibbs_burn_in", e.gibbs_burn_in}};
}

inline EstimatorSpec estimator_spec_from_json(const Json& j) {
  EstimatorSpec e;
  e.kind = detail::enum_from(j.at("kind"), &detail::parse_kind, "kind");
  e.label = j.at("label").get<std::string>();
  e.solver.epsilon = j.at("epsilon").get<double>();
  e.solver.max_iters = j.at("max_iters").get<int>();
  e.solver.weight_mode = detail::enum_from(j.at("weight_mode"), &parse_weight_mode, "weight_mode");
  e.solver.step_size = j.at("step_size").get<double>();
  e.solver.backtracking = j.at("backtracking").get<bool>();
  e.solver.random_starts = j.at("random_starts").get<int>();
  e.solver.start_mean = detail::enum_from(j.at("start_mean"), &parse_start_mean, "start_mean");
  e.solver.vmap_scatter = detail::enum_from(j.at("vmap_scatter"), &parse_vmap_scatter, "vmap_scatter");
  e.gibbs_samples = j.at("gibbs_samples").get<int>();
  e.gibbs_burn_in = j.at("gibbs_burn_in").get<int>();
  return e;
}

inline Json config_to_json(const ExperimentConfig& c) {
  const MimoSetup& s = c.setup;
  Json est = Json::array();
  for (const auto& e : c.estimators) est.push_back(estimator_spec_to_json(e));
  return Json{{"name", c.name},
              {"setup",
               {{"K", s.k},
                {"antenna_dim", s.antenna_dim},
                {"snr_db", s.snr_db},
                {"nu_x", s.nu_x ? Json(*s.nu_x) : Json(nullptr)},
                {"nu_w", s.nu_w ? Json(*s.nu_w) : Json(nullptr)},
                {"N", s.num_snapshots},
                {"delta_nu_x", s.delta_nu_x},
                {"delta_nu_w", s.delta_nu_w}}},
              {"axis", std::string(to_string(c.axis))},
              {"grid", c.grid},
              {"estimators", std::move(est)},
              {"trials", c.trials},
              {"base_seed", c.base_seed},
              {"kappa_grid", c.kappa_grid},
              {"iteration_grid", c.iteration_grid}};
}

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  c.name = j.at("name").get<std::string>();
  const Json& s = j.at("setup");
  c.setup.k = s.at("K").get<int>();
  c.setup.antenna_dim = s.at("antenna_dim").get<int>();
  c.setup.snr_db = s.at("snr_db").get<double>();
  if (!s.at("nu_x").is_null()) c.setup.nu_x = s.at("nu_x").get<double>();
  if (!s.at("nu_w").is_null()) c.setup.nu_w = s.at("nu_w").get<double>();
  c.setup.num_snapshots = s.at("N").get<int>();
  c.setup.delta_nu_x = s.at("delta_nu_x").get<double>();
  c.setup.delta_nu_w = s.at("delta_nu_w").get<double>();
  c.axis = detail::enum_from(j.at("axis"), &parse_sweep_axis, "axis");
  c.grid = j.at("grid").get<std::vector<double>>();
  c.estimators.clear();
  for (const auto& e : j.at("estimators")) c.estimators.push_back(estimator_spec_from_json(e));
  c.trials = j.at("trials").get<int>();
  c.base_seed = j.at("base_seed").get<std::uint64_t>();
  c.kappa_grid = j.at("kappa_grid").get<std::vector<double>>();
  c.iteration_grid = j.at("iteration_grid").get<std::vector<double>>();
  return c;
}

inline Json summary_to_json(const EstimatorSummary& s) {
  using detail::num;
  return Json{{"label", s.label},
              {"trials", s.trials},
              {"failures", s.failures},
              {"nonconverged", s.nonconverged},
              {"nmse", num(s.nmse)},
              {"nmse_db", num(s.nmse_db)},
              {"nse_stderr", num(s.nse_stderr)},
              {"mean_iterations", num(s.mean_iterations)},
              {"nse_ccdf", detail::nums(s.nse_ccdf)},
              {"iter_ccdf", detail::nums(s.iter_ccdf)},
              {"two_minima", s.two_minima},
              {"pr_two_minima", num(s.pr_two_minima)},
              {"pr_mvu_lower_given_two", num(s.pr_mvu_lower_given_two)},
              {"cov_nmse_p_db", num(s.cov_nmse_p_db)},
              {"cov_nmse_r_db", num(s.cov_nmse_r_db)}};
}

inline EstimatorSummary summary_from_json(const Json& j) {
  using detail::num_from;
  EstimatorSummary s;
  s.label = j.at("label").get<std::string>();
  s.trials = j.at("trials").get<int>();
  s.failures = j.at("failures").get<int>();
  s.nonconverged = j.at("nonconverged").get<int>();
  s.nmse = num_from(j.at("nmse"));
  s.nmse_db = num_from(j.at("nmse_db"));
  s.nse_stderr = num_from(j.at("nse_stderr"));
  s.mean_iterations = num_from(j.at("mean_iterations"));
  s.nse_ccdf = detail::nums_from(j.at("nse_ccdf"));
  s.iter_ccdf = detail::nums_from(j.at("iter_ccdf"));
  s.two_minima = j.at("two_minima").get<int>();
  s.pr_two_minima = num_from(j.at("pr_two_minima"));
  s.pr_mvu_lower_given_two = num_from(j.at("pr_mvu_lower_given_two"));
  s.cov_nmse_p_db = num_from(j.at("cov_nmse_p_db"));
  s.cov_nmse_r_db = num_from(j.at("cov_nmse_r_db"));
  return s;
}

inline Json result_to_json(const ExperimentResult& r) {
  Json points = Json::array();
  for (const auto& p : r.points) {
    Json est = Json::array();
    for (const auto& e : p.estimators) est.push_back(summary_to_json(e));
    points.push_back({{"grid_value", p.grid_value},
                      {"nominal_cov_nmse_p_db", detail::num(p.nominal_cov_nmse_p_db)},
                      {"nominal_cov_nmse_r_db", detail::num(p.nominal_cov_nmse_r_db)},
                      {"estimators", std::move(est)}});
  }
  return Json{{"schema_version", r.schema_version}, {"config", config_to_json(r.config)}, {"points", std::move(points)}};
}

inline ExperimentResult result_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("schema_version")) throw SchemaMismatch("summary has no schema_version");
  if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion) {
    throw SchemaMismatch("unsupported summary schema_version");
  }
  ExperimentResult r;
  try {
    r.config = config_from_json(j.at("config"));
    for (const auto& p : j.at("points")) {
      GridPointResult g;
      g.grid_value = p.at("grid_value").get<double>();
      g.nominal_cov_nmse_p_db = detail::num_from(p.at("nominal_cov_nmse_p_db"));
      g.nominal_cov_nmse_r_db = detail::num_from(p.at("nominal_cov_nmse_r_db"));
      for (const auto& e : p.at("estimators")) g.estimators.push_back(summary_from_json(e));
      r.points.push_back(std::move(g));
    }
  } catch (const Json::exception& e) {
    throw SchemaMismatch(std::string("summary does not match the schema: ") + e.what());
  }
  return r;
}

namespace detail {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << std::setprecision(std::numeric_limits<double>::max_digits10) << header << '\n';
  }

  template <class... T>
  void row(const T&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << fields, first = false), ...);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline std::string point_file(const std::string& stem, std::size_t index, std::size_t total) {
  return total == 1 ? stem + ".csv" : stem + "_" + std::to_string(index) + ".csv";
}

}  // namespace detail

/// Writes the directory layout described at the top of this header.
inline void save_result(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_json_file((dir / "summary.json").string(), result_to_json(r));
  write_json_file((dir / "config.json").string(),
                  Json{{"schema_version", r.schema_version}, {"config", config_to_json(r.config)}});

  detail::CsvWriter nmse(dir / "nmse.csv", "grid_value,estimator,nmse_db,trials,seed");
  detail::CsvWriter stats(dir / "stats.csv",
                          "grid_value,estimator,failures,nonconverged,nse_stderr,mean_iterations,pr_two_minima,"
                          "pr_mvu_lower_given_two,cov_nmse_p_db,cov_nmse_r_db,nominal_cov_nmse_p_db,"
                          "nominal_cov_nmse_r_db");
  const std::size_t total = r.points.size();
  for (std::size_t i = 0; i < total; ++i) {
    const auto& p = r.points[i];
    detail::CsvWriter cc(dir / detail::point_file("ccdf", i, total), "kappa,estimator,exceedance_prob");
    detail::CsvWriter it(dir / detail::point_file("iterations", i, total), "n_iter,estimator,exceedance_prob");
    for (const auto& e : p.estimators) {
      nmse.row(p.grid_value, e.label, e.nmse_db, e.trials, r.config.base_seed);
      stats.row(p.grid_value, e.label, e.failures, e.nonconverged, e.nse_stderr, e.mean_iterations, e.pr_two_minima,
                e.pr_mvu_lower_given_two, e.cov_nmse_p_db, e.cov_nmse_r_db, p.nominal_cov_nmse_p_db,
                p.nominal_cov_nmse_r_db);
      for (std::size_t k = 0; k < e.nse_ccdf.size(); ++k) cc.row(r.config.kappa_grid[k], e.label, e.nse_ccdf[k]);
      for (std::size_t k = 0; k < e.iter_ccdf.size(); ++k) it.row(r.config.iteration_grid[k], e.label, e.iter_ccdf[k]);
    }
    cc.close();
    it.close();
  }
  nmse.close();
  stats.close();
}

inline ExperimentResult load_result(const std::filesystem::path& dir) {
  const auto path = dir / "summary.json";
  if (!std::filesystem::exists(path)) throw IoError("missing " + path.string());
  try {
    return result_from_json(read_json_file(path.string()));
  } catch (const ParseError& e) {
    throw SchemaMismatch(e.what());
  }
}

}  // namespace covest
