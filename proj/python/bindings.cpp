#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "pcinit/errors.hpp"
#include "pcinit/estimators.hpp"
#include "pcinit/geometry.hpp"
#include "pcinit/harness.hpp"
#include "pcinit/initialization.hpp"

namespace py = pybind11;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

pcinit::PointCloud to_cloud(const Array& points) {
  if (points.ndim() != 2) throw pcinit::InvalidArgument("points must be an (n, d) array");
  const auto* p = points.data();
  return pcinit::PointCloud(static_cast<int>(points.shape(1)), std::vector<double>(p, p + points.size()));
}

Array to_array(const pcinit::PointCloud& cloud) {
  Array out({cloud.size(), static_cast<std::size_t>(cloud.dim())});
  std::copy(cloud.positions().begin(), cloud.positions().end(), out.mutable_data());
  return out;
}

pcinit::EstimatorSpec simple_estimator(const std::string& mode) {
  switch (pcinit::parse_estimator_mode(mode)) {
    case pcinit::EstimatorMode::sum: return pcinit::EstimatorSpec::sum();
    case pcinit::EstimatorMode::avg: return pcinit::EstimatorSpec::avg();
    case pcinit::EstimatorMode::mc: return pcinit::EstimatorSpec::mc();
    case pcinit::EstimatorMode::nn: break;
  }
  throw pcinit::InvalidArgument("nn needs a density network; use sum, avg or mc");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Point convolution initialization core";
  m.attr("__version__") = PCINIT_VERSION;

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<pcinit::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<pcinit::InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<pcinit::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "uniform_cloud",
      [](int dim, std::size_t n, std::uint64_t seed, double lo, double hi) {
        const pcinit::Interval box{lo, hi};
        return to_array(pcinit::generate_uniform_cloud(dim, n, std::span(&box, 1), seed));
      },
      py::arg("dim"), py::arg("n"), py::arg("seed"), py::arg("lo") = 0.0, py::arg("hi") = 1.0);

  m.def(
      "clustered_cloud",
      [](int dim, std::size_t n, std::size_t clusters, double spread, std::uint64_t seed) {
        return to_array(pcinit::generate_clustered_cloud(dim, n, clusters, spread, seed));
      },
      py::arg("dim"), py::arg("n"), py::arg("clusters"), py::arg("spread"), py::arg("seed"));

  m.def(
      "radius_neighbors",
      [](const Array& queries, const Array& support, double radius) {
        const auto nb = pcinit::radius_neighbors(to_cloud(queries), to_cloud(support), radius);
        std::vector<std::vector<std::uint32_t>> out(nb.query_count());
        for (std::size_t i = 0; i < out.size(); ++i) out[i].assign(nb.neighbors(i).begin(), nb.neighbors(i).end());
        return out;
      },
      py::arg("queries"), py::arg("support"), py::arg("radius"), "Closed-ball neighbor indices per query.");

  m.def(
      "estimate_density",
      [](const Array& points, double bandwidth) { return pcinit::estimate_density(to_cloud(points), bandwidth); },
      py::arg("points"), py::arg("bandwidth"), "Gaussian KDE (a pdf, self term included).");

  m.def(
      "estimate",
      [](const std::string& mode, const std::vector<double>& a, const std::vector<double>& p) {
        return pcinit::estimate(simple_estimator(mode), a, p);
      },
      py::arg("mode"), py::arg("contributions"), py::arg("densities") = std::vector<double>{});

  m.def("he_variance", &pcinit::he_variance, py::arg("kernel_size"), py::arg("channels"));
  m.def("standard_variance", &pcinit::standard_variance, py::arg("basis_count"), py::arg("channels"));
  m.def("discrete_equivalence_error", &pcinit::discrete_equivalence_error, py::arg("height"), py::arg("width"),
        py::arg("channels"), py::arg("seed"));

  m.def(
      "normalize_config",
      [](const std::string& text) { return pcinit::parse_config(pcinit::Json::parse(text)).to_json().dump(); },
      py::arg("config_json"), "Validate a config document and return it with every default filled in.");

  m.def(
      "run",
      [](const std::string& text) {
        const auto config = pcinit::parse_config(pcinit::Json::parse(text));
        py::gil_scoped_release release;
        return pcinit::run(config).to_json().dump();
      },
      py::arg("config_json"), "Run an experiment; returns the manifest as JSON text.");
}
