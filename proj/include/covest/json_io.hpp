#pragma once

// JSON documents for problem specs, observation batches and estimate results.
//
// Problem spec:
//   { "schema_version": 1, "H": [[..], ..], "U": [[..], ..] (optional, zeros),
//     "P0": [[..]], "R0": [[..]], "nu_x": 3, "nu_w": 3, "N": 1 }
// Matrices are arrays of rows. Observation: { "Y": [[..], ..] } (m rows, N columns).

#include <fstream>
#include <sstream>
#include <string>

#include "covest/estimators.hpp"
#include "covest/model.hpp"
#include "json.hpp"

namespace covest {

using Json = nlohmann::json;

inline constexpr int kSpecSchemaVersion = 1;

inline Json matrix_to_json(const Matrix& a) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ParseError(field, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw ParseError(field, "expected rows to be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError(field, "row " + std::to_string(i) + " has the wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ParseError(field, "non-numeric entry");
      a(i, c) = v.get<double>();
    }
  }
  return a;
}

namespace detail {

inline const Json& require(const Json& doc, const std::string& field) {
  if (!doc.is_object()) throw ParseError(field, "document is not a JSON object");
  const auto it = doc.find(field);
  if (it == doc.end()) throw ParseError(field, "missing");
  return *it;
}

inline double require_number(const Json& doc, const std::string& field) {
  const Json& v = require(doc, field);
  if (!v.is_number()) throw ParseError(field, "expected a number");
  return v.get<double>();
}

inline SpdMatrix spd_from_json(const Json& j, const std::string& field) {
  try {
    return SpdMatrix(matrix_from_json(j, field));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(field, e.what());
  }
}

}  // namespace detail

inline Json spec_to_json(const ProblemSpec& spec) {
  return Json{{"schema_version", kSpecSchemaVersion},
              {"H", matrix_to_json(spec.h())},
              {"U", matrix_to_json(spec.u())},
              {"P0", matrix_to_json(spec.p0().matrix())},
              {"R0", matrix_to_json(spec.r0().matrix())},
              {"nu_x", spec.nu_x()},
              {"nu_w", spec.nu_w()},
              {"N", spec.num_snapshots()}};
}

/// Structural problems raise ParseError naming the field; a well-formed
/// document describing an invalid model raises the model's own error.
inline ProblemSpec spec_from_json(const Json& doc) {
  const Json& version = detail::require(doc, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSpecSchemaVersion) {
    throw SchemaMismatch("problem spec schema_version must be " + std::to_string(kSpecSchemaVersion));
  }
  Matrix h = matrix_from_json(detail::require(doc, "H"), "H");
  const Json& n_field = detail::require(doc, "N");
  if (!n_field.is_number_integer() || n_field.get<long long>() < 1) throw ParseError("N", "expected a positive integer");
  const auto big_n = static_cast<Eigen::Index>(n_field.get<long long>());
  Matrix u = Matrix::Zero(h.cols(), big_n);
  if (doc.contains("U")) {
    u = matrix_from_json(doc.at("U"), "U");
    if (u.rows() != h.cols() || u.cols() != big_n) throw ParseError("U", "expected n rows and N columns");
  }
  SpdMatrix p0 = detail::spd_from_json(detail::require(doc, "P0"), "P0");
  SpdMatrix r0 = detail::spd_from_json(detail::require(doc, "R0"), "R0");
  const double nu_x = detail::require_number(doc, "nu_x");
  const double nu_w = detail::require_number(doc, "nu_w");
  return ProblemSpec(std::move(h), std::move(u), std::move(p0), std::move(r0), nu_x, nu_w);
}

inline Json observation_to_json(const ObservationBatch& obs) { return Json{{"Y", matrix_to_json(obs.y)}}; }

inline ObservationBatch observation_from_json(const Json& doc) {
  return ObservationBatch{matrix_from_json(detail::require(doc, "Y"), "Y")};
}

inline Json estimate_to_json(const EstimateResult& r) {
  Json j{{"X_hat", matrix_to_json(r.x_hat)},
         {"iterations", r.iterations},
         {"final_cost", r.final_cost},
         {"start_used", std::string(to_string(r.start_used))},
         {"converged", r.converged},
         {"status", std::string(to_string(r.status))}};
  if (!r.p_hat.empty()) j["P_hat"] = matrix_to_json(r.p_hat.matrix());
  if (!r.r_hat.empty()) j["R_hat"] = matrix_to_json(r.r_hat.matrix());
  Json starts = Json::array();
  for (const auto& s : r.starts) {
    starts.push_back({{"kind", std::string(to_string(s.kind))},
                      {"X", matrix_to_json(s.x)},
                      {"cost", s.cost},
                      {"iterations", s.iterations},
                      {"status", std::string(to_string(s.status))}});
  }
  j["starts"] = std::move(starts);
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ParseError(path, std::string("malformed JSON: ") + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace covest
