#include "innovgrad/json_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace innovgrad {

using nlohmann::json;

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw DomainError(name + ": expected a non-empty nested array of numbers");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  if (cols == 0) throw DomainError(name + ": rows must be non-empty");
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw DomainError(name + ": ragged rows, all rows must have " +
                        std::to_string(cols) + " entries");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) {
        throw DomainError(name + ": non-numeric entry at (" +
                          std::to_string(i) + "," + std::to_string(k) + ")");
      }
      M(i, k) = j[i][k].get<double>();
    }
  }
  require_finite(M, name.c_str());
  return M;
}

json system_to_json(const SystemModel& sys) {
  return json{{"A", matrix_to_json(sys.A)},
              {"C", matrix_to_json(sys.C)},
              {"Q_w", matrix_to_json(sys.Qw)},
              {"R_v", matrix_to_json(sys.Rv)}};
}

SystemModel system_from_json(const json& j) {
  for (const char* key : {"A", "C", "Q_w", "R_v"}) {
    if (!j.contains(key)) {
      throw DomainError(std::string("system: missing field \"") + key + "\"");
    }
  }
  return SystemModel::create(
      matrix_from_json(j["A"], "A"), matrix_from_json(j["C"], "C"),
      matrix_from_json(j["Q_w"], "Q_w"), matrix_from_json(j["R_v"], "R_v"));
}

json gain_to_json(const Gain& L) { return json{{"L", matrix_to_json(L)}}; }

Gain gain_from_json(const json& j) {
  if (!j.contains("L")) throw DomainError("gain: missing field \"L\"");
  return matrix_from_json(j["L"], "L");
}

json estimate_to_json(const MonteCarloEstimate& est, long horizon) {
  return json{{"Sigma_delta_hat", matrix_to_json(est.Sigma_delta_hat)},
              {"K_hat", matrix_to_json(est.K_hat)},
              {"P_hat", matrix_to_json(est.P_hat)},
              {"J_hat", est.J_hat},
              {"stderr_J", est.stderr_J},
              {"n_samples", est.n_samples},
              {"horizon", horizon},
              {"seed", est.seed}};
}

namespace {
json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DomainError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}
}  // namespace

SystemModel load_system_file(const std::string& path) {
  return system_from_json(parse_file(path));
}

Gain load_gain_file(const std::string& path) {
  return gain_from_json(parse_file(path));
}

}  // namespace innovgrad
