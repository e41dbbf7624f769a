#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kinfer/diagnostics.hpp"
#include "kinfer/dynamics.hpp"
#include "kinfer/errors.hpp"
#include "kinfer/kernel.hpp"
#include "kinfer/learn.hpp"
#include "kinfer/measures.hpp"
#include "kinfer/spline.hpp"

namespace py = pybind11;
using namespace kinfer;

namespace {

// (m+1, N, d) copy of the stored snapshots.
py::array_t<double> positions_array(const Trajectory& traj) {
  py::array_t<double> out({traj.positions.size(), static_cast<std::size_t>(traj.particle_count),
                           static_cast<std::size_t>(traj.dim)});
  double* dst = out.mutable_data();
  for (const auto& snap : traj.positions) dst = std::copy(snap.data(), snap.data() + snap.size(), dst);
  return out;
}

using DenseArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Elementwise evaluation keeping the input shape.
template <class F>
py::array_t<double> apply(const F& f, const DenseArray& r) {
  py::array_t<double> out(py::array::ShapeContainer(r.shape(), r.shape() + r.ndim()));
  const double* src = r.data();
  double* dst = out.mutable_data();
  for (py::ssize_t i = 0; i < r.size(); ++i) dst[i] = f(src[i]);
  return out;
}

DiscreteMeasure measure_from(const Positions& points, std::optional<std::vector<double>> weights) {
  DiscreteMeasure mu = DiscreteMeasure::empirical(points);
  if (weights) {
    if (weights->size() != mu.size()) throw InputError("weights must have one entry per point");
    mu.weights = *weights;
  }
  return mu;
}

py::dict measure_dict(const DiscreteMeasure& mu) {
  py::dict d;
  py::array_t<double> loc({mu.size(), static_cast<std::size_t>(mu.dim)});
  std::copy(mu.locations.begin(), mu.locations.end(), loc.mutable_data());
  d["locations"] = loc;
  d["weights"] = py::array_t<double>(mu.weights.size(), mu.weights.data());
  return d;
}

}  // namespace

PYBIND11_MODULE(_kinfer, m) {
  m.doc() = "Interaction kernel learning for first-order particle systems";

  py::register_exception<Error>(m, "KinferError", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<BlowUpError>(m, "BlowUpError", PyExc_ArithmeticError);

  py::class_<Kernel>(m, "Kernel")
      .def_readonly("name", &Kernel::name)
      .def_readonly("sup_bound", &Kernel::sup_bound)
      .def_readonly("singular_at_zero", &Kernel::singular_at_zero)
      .def("__call__", [](const Kernel& k, double r) { return k(r); })
      .def("__call__", [](const Kernel& k, const DenseArray& r) { return apply(k, r); })
      .def("__repr__", [](const Kernel& k) { return "<Kernel " + k.name + ">"; });

  m.def(
      "kernel", [](const std::string& name, std::map<std::string, double> params) {
        return make_kernel(KernelSpec{name, std::move(params)});
      },
      py::arg("name"), py::arg("params") = std::map<std::string, double>{});
  m.def("kernels", &builtin_kernels, "Built-in kernel names with their default parameters.");
  m.def(
      "custom_kernel",
      [](std::function<double(double)> f, double sup_bound, std::string name) {
        return Kernel{std::move(name), std::move(f), sup_bound};
      },
      py::arg("f"), py::arg("sup_bound"), py::arg("name") = "custom");

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("dim", &Trajectory::dim)
      .def_readonly("particle_count", &Trajectory::particle_count)
      .def_readonly("times", &Trajectory::times)
      .def_readonly("seed", &Trajectory::seed)
      .def_readonly("kernel_name", &Trajectory::kernel_name)
      .def_property_readonly("positions", &positions_array)
      .def_property_readonly("intervals", &Trajectory::intervals);

  m.def("sample_initial", &sample_initial, py::arg("dim"), py::arg("count"), py::arg("half_width"),
        py::arg("seed"));
  m.def("simulate", &simulate, py::arg("kernel"), py::arg("initial"), py::arg("horizon"), py::arg("intervals"),
        py::arg("substeps") = 10, py::arg("seed") = 0);

  py::class_<SplineModel>(m, "SplineModel")
      .def_readonly("coeffs", &SplineModel::coeffs)
      .def_readonly("constraint_M", &SplineModel::constraint_M)
      .def_property_readonly("knots",
                             [](const SplineModel& s) {
                               std::vector<double> k(s.space.dim());
                               for (int l = 0; l < s.space.dim(); ++l) k[l] = s.space.knot(l);
                               return k;
                             })
      .def_property_readonly("constraint_value", [](const SplineModel& s) { return constraint_value(s); })
      .def("__call__", [](const SplineModel& s, double r) { return s(r); })
      .def("__call__", [](const SplineModel& s, const DenseArray& r) { return apply(s, r); })
      .def("as_kernel", &SplineModel::as_kernel);

  py::class_<LearnReport>(m, "LearnReport")
      .def_readonly("model", &LearnReport::model)
      .def_readonly("objective", &LearnReport::objective)
      .def_readonly("kkt_residual", &LearnReport::kkt_residual)
      .def_readonly("iterations", &LearnReport::iterations)
      .def_readonly("converged", &LearnReport::converged)
      .def_readonly("l2_rho_error", &LearnReport::l2_rho_error);

  m.def(
      "learn",
      [](const Trajectory& traj, int basis_dim, double M, std::optional<Kernel> reference, bool exact) {
        VelocitySamples vel;
        LearnOptions opts;
        if (reference) opts.reference = &*reference;
        if (exact) {
          if (!reference) throw InputError("exact velocities need the reference kernel");
          vel = exact_velocities(traj, *reference);
          opts.velocities = &vel;
        }
        py::gil_scoped_release release;
        return learn_kernel(traj, basis_dim, M, opts);
      },
      py::arg("trajectory"), py::arg("basis_dim"), py::arg("M"), py::arg("reference") = py::none(),
      py::arg("exact_velocities") = false);

  m.def(
      "wasserstein1",
      [](const Positions& x, const Positions& y, std::optional<std::vector<double>> wx,
         std::optional<std::vector<double>> wy) { return wasserstein1(measure_from(x, wx), measure_from(y, wy)); },
      py::arg("x"), py::arg("y"), py::arg("x_weights") = py::none(), py::arg("y_weights") = py::none(),
      "Exact W1 between the point clouds x (n, d) and y (m, d); uniform weights unless given.");

  m.def(
      "empirical_rho",
      [](const Trajectory& traj) {
        const auto pair = empirical_rho(traj);
        py::dict d;
        d["rho_bar"] = measure_dict(pair.rho_bar);
        d["rho"] = measure_dict(pair.rho);
        return d;
      },
      py::arg("trajectory"));

  m.def(
      "coercivity",
      [](const Positions& x, const Kernel& reference, const Kernel& candidate) {
        const auto rep = coercivity_at(x, Misfit::between(reference, candidate));
        py::dict d;
        d["lhs"] = rep.lhs;
        d["rhs_unscaled"] = rep.rhs_unscaled;
        d["ratio"] = rep.ratio;
        d["coincident_pairs"] = rep.coincident_pairs;
        return d;
      },
      py::arg("x"), py::arg("reference"), py::arg("candidate"));

  m.def(
      "random_matrix_mc",
      [](int count, int dim, int trials, std::uint64_t seed) {
        const auto est = random_matrix_mc(count, dim, trials, seed);
        return py::make_tuple(est.mean, est.stderr_);
      },
      py::arg("count"), py::arg("dim"), py::arg("trials"), py::arg("seed") = 0);
}
