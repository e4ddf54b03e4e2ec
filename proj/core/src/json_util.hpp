#pragma once

#include <nlohmann/json.hpp>

#include "tsgatr/params.hpp"

namespace tsgatr::detail {

nlohmann::json matrix_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json params_json(const ParameterStore& store);
ParameterStore params_from_json(const nlohmann::json& doc);

}  // namespace tsgatr::detail
