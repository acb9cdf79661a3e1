#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "covest/persist.hpp"

using namespace covest;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("covest_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ExperimentResult sample_result(bool sweep) {
  ExperimentConfig cfg;
  cfg.name = "roundtrip";
  cfg.trials = 30;
  cfg.base_seed = 0xfeedbeefcafeULL;
  cfg.setup.nu_w = 40.0;
  if (sweep) {
    cfg.axis = SweepAxis::kSnrDb;
    cfg.grid = {-10.0, 0.0};
  }
  cfg.estimators = {EstimatorSpec::make(EstimatorKind::kMvu), EstimatorSpec::make(EstimatorKind::kCmap),
                    EstimatorSpec::make(EstimatorKind::kVmap)};
  cfg.estimators[2].solver.vmap_scatter = VmapScatter::kExact;
  cfg.estimators[1].solver.epsilon = 1e-3;
  return run_experiment(cfg);
}

void expect_near_or_nan(double a, double b) {
  if (std::isnan(a)) {
    EXPECT_TRUE(std::isnan(b));
  } else {
    EXPECT_NEAR(a, b, 1e-12 * (1.0 + std::abs(a)));
  }
}

}  // namespace

TEST(SaveLoad, RoundTripPreservesAggregates) {
  TempDir dir;
  const ExperimentResult r = sample_result(true);
  save_result(r, dir.path());
  const ExperimentResult back = load_result(dir.path());
  EXPECT_EQ(back.schema_version, kSchemaVersion);
  EXPECT_EQ(back.config.name, "roundtrip");
  EXPECT_EQ(back.config.base_seed, r.config.base_seed);
  EXPECT_EQ(back.config.axis, SweepAxis::kSnrDb);
  EXPECT_EQ(back.config.grid, r.config.grid);
  EXPECT_EQ(back.config.setup.nu_w, 40.0);
  EXPECT_FALSE(back.config.setup.nu_x.has_value());
  EXPECT_EQ(back.config.estimators[2].solver.vmap_scatter, VmapScatter::kExact);
  EXPECT_EQ(back.config.estimators[1].solver.epsilon, 1e-3);
  ASSERT_EQ(back.points.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto &a = r.points[i], &b = back.points[i];
    EXPECT_EQ(a.grid_value, b.grid_value);
    expect_near_or_nan(a.nominal_cov_nmse_p_db, b.nominal_cov_nmse_p_db);
    ASSERT_EQ(a.estimators.size(), b.estimators.size());
    for (std::size_t k = 0; k < a.estimators.size(); ++k) {
      const auto &x = a.estimators[k], &y = b.estimators[k];
      EXPECT_EQ(x.label, y.label);
      EXPECT_EQ(x.trials, y.trials);
      EXPECT_EQ(x.two_minima, y.two_minima);
      expect_near_or_nan(x.nmse_db, y.nmse_db);
      expect_near_or_nan(x.nse_stderr, y.nse_stderr);
      expect_near_or_nan(x.mean_iterations, y.mean_iterations);
      expect_near_or_nan(x.pr_two_minima, y.pr_two_minima);
      expect_near_or_nan(x.pr_mvu_lower_given_two, y.pr_mvu_lower_given_two);
      expect_near_or_nan(x.cov_nmse_r_db, y.cov_nmse_r_db);
      ASSERT_EQ(x.nse_ccdf.size(), y.nse_ccdf.size());
      for (std::size_t c = 0; c < x.nse_ccdf.size(); ++c) EXPECT_NEAR(x.nse_ccdf[c], y.nse_ccdf[c], 1e-12);
      EXPECT_EQ(x.iter_ccdf.size(), y.iter_ccdf.size());
    }
  }
}

TEST(SaveLoad, CsvHeadersAndLayout) {
  TempDir dir;
  save_result(sample_result(false), dir.path());
  EXPECT_EQ(first_line(dir.path() / "nmse.csv"), "grid_value,estimator,nmse_db,trials,seed");
  EXPECT_EQ(first_line(dir.path() / "ccdf.csv"), "kappa,estimator,exceedance_prob");
  EXPECT_EQ(first_line(dir.path() / "iterations.csv"), "n_iter,estimator,exceedance_prob");
  EXPECT_TRUE(fs::exists(dir.path() / "config.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "stats.csv"));
  const auto nmse = lines(dir.path() / "nmse.csv");
  ASSERT_EQ(nmse.size(), 4u);
  EXPECT_EQ(nmse[1].rfind("0,MVU,", 0), 0u);
  EXPECT_NE(nmse[1].find(",30," + std::to_string(0xfeedbeefcafeULL)), std::string::npos);
  // one ccdf row per kappa and estimator; MVU has no iteration curve
  EXPECT_EQ(lines(dir.path() / "ccdf.csv").size(), 1u + 3u * 50u);
  EXPECT_EQ(lines(dir.path() / "iterations.csv").size(), 1u + 2u * default_iteration_grid().size());
}

TEST(SaveLoad, SweepWritesOneCurveFilePerPoint) {
  TempDir dir;
  save_result(sample_result(true), dir.path());
  EXPECT_TRUE(fs::exists(dir.path() / "ccdf_0.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "ccdf_1.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "iterations_1.csv"));
  EXPECT_FALSE(fs::exists(dir.path() / "ccdf.csv"));
}

TEST(SaveLoad, CsvNumbersCarrySeventeenDigits) {
  TempDir dir;
  const ExperimentResult r = sample_result(false);
  save_result(r, dir.path());
  const auto nmse = lines(dir.path() / "nmse.csv");
  const std::string row = nmse[1];
  const auto a = row.find(',', row.find(',') + 1);
  const auto b = row.find(',', a + 1);
  EXPECT_EQ(std::stod(row.substr(a + 1, b - a - 1)), r.points[0].estimators[0].nmse_db);
}

TEST(LoadResult, MissingDirectoryIsIoError) {
  EXPECT_THROW(load_result("/nonexistent/covest/dir"), IoError);
}

TEST(LoadResult, SchemaProblemsAreSchemaMismatch) {
  TempDir dir;
  const auto path = dir.path() / "summary.json";
  write_json_file(path.string(), Json{{"points", Json::array()}});
  EXPECT_THROW(load_result(dir.path()), SchemaMismatch);
  write_json_file(path.string(), Json{{"schema_version", 99}});
  EXPECT_THROW(load_result(dir.path()), SchemaMismatch);
  write_json_file(path.string(), Json{{"schema_version", kSchemaVersion}, {"points", 3}});
  EXPECT_THROW(load_result(dir.path()), SchemaMismatch);
  { std::ofstream(path) << "{ not json"; }
  EXPECT_THROW(load_result(dir.path()), SchemaMismatch);
}

TEST(SaveResult, UnwritableTargetIsIoError) {
  TempDir dir;
  const auto file = dir.path() / "plain";
  { std::ofstream(file) << "x"; }
  EXPECT_THROW(save_result(sample_result(false), file / "sub"), IoError);
}

TEST(JsonIo, SpecRoundTripIsExact) {
  const ProblemSpec s = build_mimo_spec(8, 0.7, 6.5, 19.0, 3).with_prior_mean(Matrix::Constant(4, 3, 0.1));
  const ProblemSpec back = spec_from_json(Json::parse(spec_to_json(s).dump()));
  EXPECT_EQ(back.h(), s.h());
  EXPECT_EQ(back.u(), s.u());
  EXPECT_EQ(back.p0().matrix(), s.p0().matrix());
  EXPECT_EQ(back.r0().matrix(), s.r0().matrix());
  EXPECT_EQ(back.nu_x(), 6.5);
  EXPECT_EQ(back.num_snapshots(), 3);
}

TEST(JsonIo, PriorMeanDefaultsToZero) {
  Json doc = spec_to_json(build_mimo_spec(8, 1.0, 6, 18, 2));
  doc.erase("U");
  EXPECT_TRUE(spec_from_json(doc).u().isZero());
}

TEST(JsonIo, StructuralErrorsNameTheField) {
  const Json good = spec_to_json(build_mimo_spec(8, 1.0, 6, 18, 2));
  auto expect_field = [](const Json& doc, const std::string& field) {
    try {
      spec_from_json(doc);
      ADD_FAILURE() << "no error for " << field;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  Json d = good;
  d.erase("H");
  expect_field(d, "H");
  d = good;
  d["R0"] = "oops";
  expect_field(d, "R0");
  d = good;
  d["P0"][1] = Json::array({1.0});
  expect_field(d, "P0");
  d = good;
  d["P0"] = Json::array({Json::array({1.0, 2.0}), Json::array({2.0, 1.0})});
  expect_field(d, "P0");
  d = good;
  d["nu_w"] = "big";
  expect_field(d, "nu_w");
  d = good;
  d["N"] = 0;
  expect_field(d, "N");
  d = good;
  d.erase("schema_version");
  expect_field(d, "schema_version");
  d = good;
  d["schema_version"] = 2;
  EXPECT_THROW(spec_from_json(d), SchemaMismatch);
  d = good;
  d["nu_x"] = 4.0;
  EXPECT_THROW(spec_from_json(d), InvalidArgument);
}

TEST(JsonIo, FileErrors) {
  EXPECT_THROW(read_json_file("/nonexistent/file.json"), IoError);
  TempDir dir;
  const auto p = (dir.path() / "bad.json").string();
  { std::ofstream(p) << "[1, 2"; }
  EXPECT_THROW(read_json_file(p), ParseError);
}

TEST(JsonIo, EstimateDocumentCarriesStarts) {
  const ProblemSpec s = build_mimo_spec(8, 1.0, minimal_dof(4), minimal_dof(16), 4);
  RngStream rng(1, 1);
  const Realization r = draw_scenario(s, rng);
  const EstimateResult res = estimate_cmap(s, r.obs);
  const Json j = estimate_to_json(res);
  EXPECT_EQ(matrix_from_json(j.at("X_hat"), "X_hat"), res.x_hat);
  EXPECT_EQ(j.at("starts").size(), 2u);
  EXPECT_EQ(j.at("starts")[0].at("kind"), "mvu");
  EXPECT_TRUE(j.contains("P_hat"));
  EXPECT_EQ(observation_from_json(observation_to_json(r.obs)).y, r.obs.y);
}

TEST(EnumNames, RoundTrip) {
  for (auto m : {WeightMode::kCmap, WeightMode::kMmap}) EXPECT_EQ(parse_weight_mode(to_string(m)), m);
  for (auto m : {StartMean::kMvu, StartMean::kPrior, StartMean::kMap, StartMean::kDre})
    EXPECT_EQ(parse_start_mean(to_string(m)), m);
  for (auto m : {VmapScatter::kScaledSignal, VmapScatter::kExact, VmapScatter::kLiteral})
    EXPECT_EQ(parse_vmap_scatter(to_string(m)), m);
  EXPECT_FALSE(parse_weight_mode("x").has_value());
}
