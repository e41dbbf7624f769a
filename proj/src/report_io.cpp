#include "kinfer/report_io.hpp"

#include <cmath>
#include <fstream>

#include "kinfer/errors.hpp"

namespace kinfer {

namespace {

// JSON has no infinities; they are written as null.
nlohmann::ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

nlohmann::ordered_json to_json(const SplineModel& model) {
  nlohmann::ordered_json j;
  j["R"] = model.space.half_length();
  j["D"] = model.space.dim();
  j["coeffs"] = std::vector<double>(model.coeffs.data(), model.coeffs.data() + model.coeffs.size());
  j["M"] = model.constraint_M;
  if (!model.kernel_name.empty()) j["kernel_name"] = model.kernel_name;
  return j;
}

SplineModel spline_model_from_json(const nlohmann::json& j) {
  try {
    const SplineSpace space(j.at("R").get<double>(), j.at("D").get<int>());
    const auto coeffs = j.at("coeffs").get<std::vector<double>>();
    if (static_cast<int>(coeffs.size()) != space.dim()) throw InputError("spline model: coeffs length differs from D");
    SplineModel model{space, Eigen::Map<const Eigen::VectorXd>(coeffs.data(), coeffs.size()), j.at("M").get<double>(),
                      j.value("kernel_name", std::string{})};
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("spline model JSON: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const LearnReport& report) {
  nlohmann::ordered_json j;
  j["model"] = to_json(report.model);
  j["objective"] = report.objective;
  j["kkt_residual"] = report.kkt_residual;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["l2_rho_error"] = report.l2_rho_error ? number(*report.l2_rho_error) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json to_json(const CoercivityReport& report) {
  return {{"lhs", report.lhs},
          {"rhs_unscaled", report.rhs_unscaled},
          {"ratio", report.ratio},
          {"coincident_pairs", report.coincident_pairs}};
}

nlohmann::ordered_json to_json(const BoundCheck& check) {
  return {{"lhs", check.lhs},
          {"energy", check.energy},
          {"log_constant", number(check.log_constant)},
          {"rhs", number(check.rhs)},
          {"radius", number(check.radius)},
          {"sup", check.sup},
          {"lipschitz", check.lipschitz},
          {"holds", check.holds},
          {"log_slack", number(check.log_slack)}};
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& value) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace kinfer
