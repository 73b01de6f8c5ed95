#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pcinit/kernel_basis.hpp"

namespace pcinit {

/// How the convolution integral over a neighborhood is estimated:
///   sum: sum a(y)
///   avg: sum a(y) / |N|
///   mc:  sum a(y) / (p(y) |N|)
///   nn:  sum a(y) / pi(p(y))
enum class EstimatorMode { sum, avg, mc, nn };

std::string_view to_string(EstimatorMode mode);
EstimatorMode parse_estimator_mode(std::string_view name);

inline bool needs_density(EstimatorMode mode) { return mode == EstimatorMode::mc || mode == EstimatorMode::nn; }

/// Learned density correction pi(p) = softplus(mlp(p)) + epsilon, with a 1 -> H -> 1 perceptron.
struct DensityMlp {
  static constexpr double kEpsilon = 1e-6;
  MlpParams params;

  double operator()(double density) const;
};

/// Hidden weights ~ N(0, 1), output weights ~ N(0, 1/hidden), zero biases.
DensityMlp init_density_mlp(std::size_t hidden, std::uint64_t seed);

struct EstimatorSpec {
  EstimatorMode mode = EstimatorMode::sum;
  std::optional<DensityMlp> density_mlp;  ///< required for nn, forbidden otherwise

  void validate() const;

  static EstimatorSpec sum() { return {EstimatorMode::sum, std::nullopt}; }
  static EstimatorSpec avg() { return {EstimatorMode::avg, std::nullopt}; }
  static EstimatorSpec mc() { return {EstimatorMode::mc, std::nullopt}; }
  static EstimatorSpec nn(DensityMlp mlp) { return {EstimatorMode::nn, std::move(mlp)}; }
};

/// Estimates the neighborhood integral from contributions a(y). `densities`
/// (same length, all > 0) is required for mc and nn and ignored otherwise.
/// An empty neighborhood estimates to 0.
double estimate(const EstimatorSpec& spec, std::span<const double> contributions,
                std::span<const double> densities = {});

/// Per-neighbor factors w(y) such that estimate(a) == sum a(y) w(y). Every
/// estimator is linear in a, so convolutions apply them directly.
void estimator_factors(const EstimatorSpec& spec, std::size_t count, std::span<const double> densities,
                       std::span<double> out);

}  // namespace pcinit
