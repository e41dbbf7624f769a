#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "kinfer/diagnostics.hpp"
#include "kinfer/learn.hpp"
#include "kinfer/spline.hpp"

namespace kinfer {

// {R, D, coeffs[], M, kernel_name?}; knots follow from (R, D).
nlohmann::ordered_json to_json(const SplineModel& model);
SplineModel spline_model_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const LearnReport& report);
nlohmann::ordered_json to_json(const CoercivityReport& report);
nlohmann::ordered_json to_json(const BoundCheck& check);

// Writes `value` followed by a newline; throws IoError on failure.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& value);

}  // namespace kinfer
