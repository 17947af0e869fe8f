#ifndef INNOVGRAD_JSON_IO_HPP
#define INNOVGRAD_JSON_IO_HPP

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "innovgrad/model.hpp"
#include "innovgrad/montecarlo.hpp"

namespace innovgrad {

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& name);

// {"A": [[...]], "C": [[...]], "Q_w": [[...]], "R_v": [[...]]}
nlohmann::json system_to_json(const SystemModel& sys);
SystemModel system_from_json(const nlohmann::json& j);

// {"L": [[...]]}
nlohmann::json gain_to_json(const Gain& L);
Gain gain_from_json(const nlohmann::json& j);

nlohmann::json estimate_to_json(const MonteCarloEstimate& est, long horizon);

SystemModel load_system_file(const std::string& path);
Gain load_gain_file(const std::string& path);

}  // namespace innovgrad

#endif
