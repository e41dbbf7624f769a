#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "kinfer/kernel.hpp"

namespace kinfer {

// Linear B-splines on [0, 2R] with D uniform knots, both endpoints included.
// The endpoint functions are half hats, so constants are representable.
class SplineSpace {
 public:
  SplineSpace() : SplineSpace(1.0, 2) {}
  SplineSpace(double half_length, int dim);

  double half_length() const { return half_length_; }
  double length() const { return 2.0 * half_length_; }
  int dim() const { return dim_; }
  double spacing() const { return length() / (dim_ - 1); }
  double knot(int index) const { return index == dim_ - 1 ? length() : index * spacing(); }

  // Index c of the cell [knot c, knot c+1] holding r and the local
  // coordinate t in [0, 1]; nullopt outside the domain.
  struct Cell {
    int index;
    double t;
  };
  std::optional<Cell> locate(double r) const;

  // Value of the hat function `index` at r.
  double basis(int index, double r) const;

  bool operator==(const SplineSpace&) const = default;

 private:
  double half_length_;
  int dim_;
};

struct SplineModel {
  SplineSpace space;
  Eigen::VectorXd coeffs;
  double constraint_M = 0.0;
  std::string kernel_name;

  // sum_l coeffs[l] phi_l(r); zero outside [0, 2R].
  double operator()(double r) const;

  // View as a Kernel (sup bound max |coeff|, support 2R).
  Kernel as_kernel() const;
};

double evaluate(const SplineModel& model, double r);

// D x D matrix with +1 at (l, l), -1 at (l, l+1) for l < D-1, last row zero.
Eigen::MatrixXd difference_matrix(const SplineSpace& space);

// 2 max|a_l| + max|(D a)_l|; bounds sup|a| + sup|a'| of the spline.
double constraint_value(const Eigen::VectorXd& coeffs);
inline double constraint_value(const SplineModel& model) { return constraint_value(model.coeffs); }

SplineModel interpolate(const Kernel& kernel, const SplineSpace& space);

// Resample `model` at the knots of `space` (zero where the model's domain ends).
SplineModel reinterpolate(const SplineModel& model, const SplineSpace& space);

}  // namespace kinfer
