#include "pcinit/estimators.hpp"

#include <cmath>
#include <string>

#include "pcinit/errors.hpp"
#include "pcinit/rng.hpp"

namespace pcinit {

std::string_view to_string(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::sum: return "sum";
    case EstimatorMode::avg: return "avg";
    case EstimatorMode::mc: return "mc";
    case EstimatorMode::nn: return "nn";
  }
  return "?";
}

EstimatorMode parse_estimator_mode(std::string_view name) {
  if (name == "sum") return EstimatorMode::sum;
  if (name == "avg") return EstimatorMode::avg;
  if (name == "mc") return EstimatorMode::mc;
  if (name == "nn") return EstimatorMode::nn;
  throw InvalidArgument("unknown estimator mode '" + std::string(name) + "' (expected sum|avg|mc|nn)");
}

double DensityMlp::operator()(double density) const {
  double hidden_small[64];
  std::vector<double> hidden_big;
  std::span<double> hidden(hidden_small, params.hidden);
  if (params.hidden > 64) {
    hidden_big.resize(params.hidden);
    hidden = hidden_big;
  }
  double raw = 0.0;
  params.apply(std::span<const double>(&density, 1), hidden, std::span<double>(&raw, 1));
  // Numerically stable softplus.
  const double softplus = raw > 0.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
  return softplus + kEpsilon;
}

DensityMlp init_density_mlp(std::size_t hidden, std::uint64_t seed) {
  if (hidden < 1) throw InvalidArgument("density mlp needs at least one hidden unit");
  DensityMlp mlp;
  auto& p = mlp.params;
  p.inputs = 1;
  p.hidden = hidden;
  p.outputs = 1;
  Rng rng(seed);
  p.w1.resize(hidden);
  for (double& w : p.w1) w = rng.normal();
  p.b1.assign(hidden, 0.0);
  p.w2.resize(hidden);
  const double sd = std::sqrt(1.0 / static_cast<double>(hidden));
  for (double& w : p.w2) w = sd * rng.normal();
  p.b2.assign(1, 0.0);
  return mlp;
}

void EstimatorSpec::validate() const {
  if (mode == EstimatorMode::nn) {
    if (!density_mlp) throw InvalidArgument("nn estimator requires a density mlp");
    density_mlp->params.validate();
    if (density_mlp->params.inputs != 1 || density_mlp->params.outputs != 1)
      throw InvalidArgument("density mlp must map 1 -> 1");
  } else if (density_mlp) {
    throw InvalidArgument("only the nn estimator takes a density mlp");
  }
}

void estimator_factors(const EstimatorSpec& spec, std::size_t count, std::span<const double> densities,
                       std::span<double> out) {
  if (count == 0) return;
  const double n = static_cast<double>(count);
  if (needs_density(spec.mode)) {
    if (densities.size() != count)
      throw InvalidArgument(std::string(to_string(spec.mode)) + " estimator needs one density per contribution");
    for (double p : densities) {
      if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("densities must be positive and finite");
    }
  }
  switch (spec.mode) {
    case EstimatorMode::sum:
      for (std::size_t j = 0; j < count; ++j) out[j] = 1.0;
      break;
    case EstimatorMode::avg:
      for (std::size_t j = 0; j < count; ++j) out[j] = 1.0 / n;
      break;
    case EstimatorMode::mc:
      for (std::size_t j = 0; j < count; ++j) out[j] = 1.0 / (densities[j] * n);
      break;
    case EstimatorMode::nn:
      if (!spec.density_mlp) throw InvalidArgument("nn estimator requires a density mlp");
      for (std::size_t j = 0; j < count; ++j) out[j] = 1.0 / (*spec.density_mlp)(densities[j]);
      break;
  }
}

double estimate(const EstimatorSpec& spec, std::span<const double> contributions, std::span<const double> densities) {
  const std::size_t count = contributions.size();
  if (needs_density(spec.mode) && densities.size() != count)
    throw InvalidArgument(std::string(to_string(spec.mode)) + " estimator needs one density per contribution");
  if (needs_density(spec.mode)) {
    for (double p : densities) {
      if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("densities must be positive and finite");
    }
  }
  if (count == 0) return 0.0;
  const double n = static_cast<double>(count);
  double acc = 0.0;
  switch (spec.mode) {
    case EstimatorMode::sum:
      for (double a : contributions) acc += a;
      return acc;
    case EstimatorMode::avg:
      for (double a : contributions) acc += a;
      return acc / n;
    case EstimatorMode::mc:
      for (std::size_t j = 0; j < count; ++j) acc += contributions[j] / densities[j];
      return acc / n;
    case EstimatorMode::nn:
      if (!spec.density_mlp) throw InvalidArgument("nn estimator requires a density mlp");
      for (std::size_t j = 0; j < count; ++j) acc += contributions[j] / (*spec.density_mlp)(densities[j]);
      return acc;
  }
  return acc;
}

}  // namespace pcinit
