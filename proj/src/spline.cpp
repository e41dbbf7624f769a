#include "kinfer/spline.hpp"

#include <algorithm>
#include <cmath>

#include "kinfer/errors.hpp"

namespace kinfer {

SplineSpace::SplineSpace(double half_length, int dim) : half_length_(half_length), dim_(dim) {
  if (!(half_length > 0.0) || !std::isfinite(half_length)) throw InputError("spline domain radius must be positive");
  if (dim < 2) throw InputError("spline space needs at least two knots");
}

std::optional<SplineSpace::Cell> SplineSpace::locate(double r) const {
  if (!(r >= 0.0) || r > length()) return std::nullopt;
  double u = r / spacing();
  // snap to a knot when the quotient is off by rounding only
  const double nearest = std::round(u);
  if (std::abs(u - nearest) <= 1e-13 * std::max(1.0, nearest)) u = nearest;
  int c = std::min(static_cast<int>(u), dim_ - 2);
  return Cell{c, std::min(u - c, 1.0)};
}

double SplineSpace::basis(int index, double r) const {
  const auto cell = locate(r);
  if (!cell) return 0.0;
  if (cell->index == index) return 1.0 - cell->t;
  if (cell->index + 1 == index) return cell->t;
  return 0.0;
}

double SplineModel::operator()(double r) const {
  const auto cell = space.locate(r);
  if (!cell) return 0.0;
  return (1.0 - cell->t) * coeffs[cell->index] + cell->t * coeffs[cell->index + 1];
}

Kernel SplineModel::as_kernel() const {
  SplineModel copy = *this;
  const double sup = coeffs.size() ? coeffs.cwiseAbs().maxCoeff() : 0.0;
  return Kernel{kernel_name.empty() ? "spline" : kernel_name, [copy](double r) { return copy(r); }, sup, false,
                space.length()};
}

double evaluate(const SplineModel& model, double r) { return model(r); }

Eigen::MatrixXd difference_matrix(const SplineSpace& space) {
  const int n = space.dim();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l + 1 < n; ++l) {
    d(l, l) = 1.0;
    d(l, l + 1) = -1.0;
  }
  return d;
}

double constraint_value(const Eigen::VectorXd& coeffs) {
  if (coeffs.size() == 0) return 0.0;
  double jump = 0.0;
  for (Eigen::Index l = 0; l + 1 < coeffs.size(); ++l) jump = std::max(jump, std::abs(coeffs[l] - coeffs[l + 1]));
  return 2.0 * coeffs.cwiseAbs().maxCoeff() + jump;
}

SplineModel interpolate(const Kernel& kernel, const SplineSpace& space) {
  SplineModel model{space, Eigen::VectorXd(space.dim()), 0.0, kernel.name};
  for (int l = 0; l < space.dim(); ++l) model.coeffs[l] = kernel(space.knot(l));
  model.constraint_M = constraint_value(model.coeffs);
  return model;
}

SplineModel reinterpolate(const SplineModel& model, const SplineSpace& space) {
  SplineModel out{space, Eigen::VectorXd(space.dim()), 0.0, model.kernel_name};
  for (int l = 0; l < space.dim(); ++l) out.coeffs[l] = model(space.knot(l));
  out.constraint_M = constraint_value(out.coeffs);
  return out;
}

}  // namespace kinfer
