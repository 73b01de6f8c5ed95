#pragma once

// Random instances shared by the unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "pcinit/convolution.hpp"
#include "pcinit/geometry.hpp"
#include "pcinit/initialization.hpp"
#include "pcinit/kernel_basis.hpp"
#include "pcinit/rng.hpp"

namespace fixtures {

inline pcinit::PointCloud unit_cloud(int dim, std::size_t n, std::uint64_t seed) {
  const pcinit::Interval unit{0.0, 1.0};
  return pcinit::generate_uniform_cloud(dim, n, std::span(&unit, 1), seed);
}

inline pcinit::FeatureMatrix normal_features(std::size_t rows, std::size_t channels, std::uint64_t seed) {
  pcinit::Rng rng(seed);
  pcinit::FeatureMatrix f(rows, channels);
  for (double& v : f.values()) v = rng.normal();
  return f;
}

inline pcinit::BasisSpec random_basis(pcinit::BasisFamily family, int dim, double radius, std::uint64_t seed) {
  using pcinit::BasisFamily;
  switch (family) {
    case BasisFamily::gaussian:
      return pcinit::BasisSpec::gaussian(dim, pcinit::make_kernel_points(pcinit::KernelLayout::grid, dim, 3, 0.6 * radius),
                                         0.25 * radius * radius, radius);
    case BasisFamily::box:
      return pcinit::BasisSpec::box(dim, pcinit::make_kernel_points(pcinit::KernelLayout::grid, dim, 3, 0.6 * radius),
                                    radius);
    case BasisFamily::linear:
      return pcinit::BasisSpec::linear(dim, pcinit::make_kernel_points(pcinit::KernelLayout::grid, dim, 3, 0.6 * radius),
                                       0.7 * radius, radius);
    case BasisFamily::mlp:
      return pcinit::BasisSpec::mlp_basis(dim, pcinit::init_mlp_basis(dim, radius, 8, 5, seed), radius);
    case BasisFamily::dot: {
      auto spec = pcinit::init_dot_basis(dim, radius, 4, seed);
      pcinit::Rng rng(pcinit::derive_seed(seed, 1));
      for (double& b : spec.biases) b = rng.normal();
      return spec;
    }
  }
  return {};
}

inline pcinit::EstimatorSpec make_estimator(pcinit::EstimatorMode mode, std::uint64_t seed) {
  switch (mode) {
    case pcinit::EstimatorMode::sum: return pcinit::EstimatorSpec::sum();
    case pcinit::EstimatorMode::avg: return pcinit::EstimatorSpec::avg();
    case pcinit::EstimatorMode::mc: return pcinit::EstimatorSpec::mc();
    case pcinit::EstimatorMode::nn: return pcinit::EstimatorSpec::nn(pcinit::init_density_mlp(4, seed));
  }
  return {};
}

inline pcinit::ConvLayer random_layer(pcinit::BasisFamily family, pcinit::EstimatorMode mode, int dim, std::size_t cin,
                                      std::size_t cout, double radius, std::uint64_t seed, bool with_weights = true) {
  pcinit::ConvLayer layer;
  layer.in_channels = cin;
  layer.out_channels = cout;
  layer.radius = radius;
  layer.basis = random_basis(family, dim, radius, pcinit::derive_seed(seed, 1));
  layer.estimator = make_estimator(mode, pcinit::derive_seed(seed, 2));
  if (with_weights)
    layer.weights = pcinit::sample_weights(1.0, cin, layer.kernel_size(), cout, pcinit::derive_seed(seed, 3));
  return layer;
}

inline constexpr pcinit::BasisFamily kFamilies[] = {pcinit::BasisFamily::gaussian, pcinit::BasisFamily::box,
                                                    pcinit::BasisFamily::linear, pcinit::BasisFamily::mlp,
                                                    pcinit::BasisFamily::dot};
inline constexpr pcinit::EstimatorMode kModes[] = {pcinit::EstimatorMode::sum, pcinit::EstimatorMode::avg,
                                                   pcinit::EstimatorMode::mc, pcinit::EstimatorMode::nn};

}  // namespace fixtures
