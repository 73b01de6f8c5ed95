#include "pcinit/initialization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcinit/errors.hpp"
#include "pcinit/format.hpp"
#include "pcinit/rng.hpp"

namespace pcinit {

namespace {

constexpr double kDegenerateZ = 1e-30;

// Stream indices keep weight, cloud and feature draws independent of each other.
constexpr std::uint64_t kWeightStream = 1000;
constexpr std::uint64_t kSampleStream = 7;

}  // namespace

double he_variance(std::size_t kernel_size, std::size_t channels) {
  if (kernel_size == 0 || channels == 0) throw InvalidArgument("kernel size and channels must be at least 1");
  return 2.0 / (static_cast<double>(kernel_size) * static_cast<double>(channels));
}

double standard_variance(std::size_t basis_count, std::size_t channels) {
  if (basis_count == 0 || channels == 0) throw InvalidArgument("basis count and channels must be at least 1");
  return 2.0 / (static_cast<double>(basis_count) * static_cast<double>(channels));
}

std::vector<double> sample_weights(double variance, std::size_t in_channels, std::size_t kernel_size,
                                   std::size_t out_channels, std::uint64_t seed) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw InvalidArgument("weight variance must be positive and finite, got " + format_double(variance));
  Rng rng(seed);
  const double sd = std::sqrt(variance);
  std::vector<double> w(in_channels * kernel_size * out_channels);
  for (double& v : w) v = sd * rng.normal();
  return w;
}

FeatureMatrix FeatureModel::sample(std::size_t rows, std::size_t channels, std::uint64_t seed) const {
  FeatureMatrix f(rows, channels);
  if (kind == Kind::constant) {
    std::fill(f.values().begin(), f.values().end(), value);
    return f;
  }
  if (!(value > 0.0)) throw InvalidArgument("gaussian feature variance must be positive");
  Rng rng(seed);
  const double sd = std::sqrt(value);
  for (double& v : f.values()) v = sd * rng.normal();
  return f;
}

std::string FeatureModel::describe() const {
  return (kind == Kind::gaussian ? "gaussian(" : "constant(") + format_double(value) + ")";
}

PointCloud make_grid_cloud(int dim, std::size_t per_axis, double spacing) {
  if (per_axis == 0) throw InvalidArgument("grid needs at least one point per axis");
  if (!(spacing > 0.0)) throw InvalidArgument("grid spacing must be positive");
  const auto d = static_cast<std::size_t>(dim);
  std::size_t total = 1;
  for (std::size_t a = 0; a < d; ++a) total *= per_axis;
  std::vector<double> pos;
  pos.reserve(total * d);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (std::size_t a = 0; a < d; ++a) {
      pos.push_back(static_cast<double>(rest % per_axis) * spacing);
      rest /= per_axis;
    }
  }
  return PointCloud(dim, std::move(pos));
}

PointCloud CloudGenerator::generate(std::uint64_t seed) const {
  switch (kind) {
    case Kind::uniform: return generate_uniform_cloud(dim, n, extent, seed);
    case Kind::clustered: return generate_clustered_cloud(dim, n, cluster_count, spread, seed);
    case Kind::grid: return make_grid_cloud(dim, n, spacing);
  }
  throw InvalidArgument("unknown cloud generator");
}

std::string CloudGenerator::describe() const {
  const std::string head = "dim=" + std::to_string(dim) + ",n=" + std::to_string(n);
  switch (kind) {
    case Kind::uniform: {
      std::string s = "uniform(" + head + ",extent=";
      for (std::size_t i = 0; i < extent.size(); ++i)
        s += (i ? ";" : "") + format_double(extent[i].lo) + ":" + format_double(extent[i].hi);
      return s + ")";
    }
    case Kind::clustered:
      return "clustered(" + head + ",clusters=" + std::to_string(cluster_count) + ",spread=" + format_double(spread) +
             ")";
    case Kind::grid: return "grid(" + head + ",spacing=" + format_double(spacing) + ")";
  }
  return "?";
}

std::string_view to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::he: return "he";
    case InitScheme::standard: return "standard";
    case InitScheme::variance_aware_direct: return "variance_aware_direct";
    case InitScheme::variance_aware_transfer: return "variance_aware_transfer";
  }
  return "?";
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "he") return InitScheme::he;
  if (name == "standard") return InitScheme::standard;
  if (name == "variance_aware_direct") return InitScheme::variance_aware_direct;
  if (name == "variance_aware_transfer") return InitScheme::variance_aware_transfer;
  throw InvalidArgument("unknown init scheme '" + std::string(name) + "'");
}

void InitPlan::validate() const {
  if (!(target_variance > 0.0) || !std::isfinite(target_variance))
    throw InvalidArgument("target_variance must be positive");
  if (!(gain > 0.0) || !std::isfinite(gain)) throw InvalidArgument("gain must be positive");
}

void ZTable::validate() const {
  if (entries.empty()) throw InvalidArgument("z table is empty");
  int prev = 0;
  for (const auto& e : entries) {
    if (e.depth <= prev) throw InvalidArgument("z table depths must be strictly increasing from 1");
    if (!(e.z > 0.0) || !std::isfinite(e.z)) throw InvalidArgument("z table values must be positive and finite");
    prev = e.depth;
  }
}

ZTable::Lookup ZTable::lookup(int depth) const {
  if (entries.empty()) throw InvalidArgument("z table is empty");
  const ZEntry* best = nullptr;
  for (const auto& e : entries) {
    if (e.depth == depth) return {e.z, e.depth, true};
    if (e.depth < depth) best = &e;
  }
  if (!best) best = &entries.front();
  return {best->z, best->depth, false};
}

std::uint64_t layer_weight_seed(const InitPlan& plan, std::size_t layer_index) {
  return derive_seed(plan.seed, kWeightStream + layer_index);
}

std::vector<SampleCloud> draw_sample_clouds(const ConvStack& stack, const CloudGenerator& generator,
                                            const FeatureModel& model, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("sample_count must be at least 1");
  if (stack.layers.empty()) throw InvalidArgument("stack has no layers");
  std::vector<SampleCloud> samples;
  samples.reserve(count);
  const std::size_t channels = stack.layers.front().in_channels;
  for (std::size_t s = 0; s < count; ++s) {
    const std::uint64_t base = derive_seed(seed, s);
    auto cloud = generator.generate(derive_seed(base, 0));
    auto levels = build_levels(stack, cloud, derive_seed(base, 1));
    auto features = model.sample(levels.front().size(), channels, derive_seed(base, 2));
    samples.push_back({std::move(levels), std::move(features)});
  }
  return samples;
}

double estimate_z_from_activations(const ConvStack& stack, std::size_t layer_index,
                                   std::span<const FeatureMatrix> activations, std::span<GeometryCache> caches) {
  const auto& layer = stack.layers.at(layer_index);
  const int depth = static_cast<int>(layer_index) + 1;
  if (activations.empty()) throw DegenerateEstimate(depth, "no sample clouds");
  const auto [in_level, out_level] = stack.levels_of(layer_index);
  const std::size_t width = layer.in_channels * layer.kernel_size();
  std::vector<double> acc(width);

  double z = 0.0;
  bool any_neighbors = false;
  for (std::size_t s = 0; s < activations.size(); ++s) {
    const auto& levels = caches[s].levels();
    const auto& g = caches[s].get(layer, in_level, out_level);
    const auto& cloud_in = levels[in_level];
    const auto& cloud_out = levels[out_level];
    double sample_sum = 0.0;
    for (std::size_t x = 0; x < cloud_out.size(); ++x) {
      if (basis_accumulations(layer, activations[s], cloud_in, cloud_out, g, x, acc) > 0) any_neighbors = true;
      double sq = 0.0;
      for (double v : acc) sq += v * v;
      sample_sum += sq;
    }
    z += sample_sum / static_cast<double>(cloud_out.size()) / static_cast<double>(layer.in_channels);
  }
  z /= static_cast<double>(activations.size());
  if (!any_neighbors) throw DegenerateEstimate(depth, "every neighborhood is empty");
  if (!(z >= kDegenerateZ) || !std::isfinite(z))
    throw DegenerateEstimate(depth, "z estimate " + format_double(z) + " is degenerate");
  return z;
}

double estimate_z(const ConvStack& stack, std::size_t layer_index, std::span<const SampleCloud> samples) {
  if (layer_index >= stack.depth()) throw InvalidArgument("layer index out of range");
  const ConvStack prefix = stack.prefix(layer_index);
  prefix.validate(true);
  stack.layers[layer_index].validate(false);

  std::vector<FeatureMatrix> activations;
  std::vector<GeometryCache> caches;
  activations.reserve(samples.size());
  caches.reserve(samples.size());
  for (const auto& sample : samples) {
    auto outs = stack_forward(prefix, sample.levels, sample.features);
    activations.push_back(std::move(outs.back()));
    caches.emplace_back(sample.levels);
  }
  return estimate_z_from_activations(stack, layer_index, activations, caches);
}

namespace {

ZTableMeta describe_stack(const ConvStack& stack, const CloudGenerator& generator, const FeatureModel& model,
                          std::size_t sample_count, const InitPlan& plan) {
  ZTableMeta meta;
  const auto& first = stack.layers.front();
  meta.basis_family = std::string(to_string(first.basis.family));
  meta.estimator_mode = std::string(to_string(first.estimator.mode));
  for (const auto& l : stack.layers) meta.radius_schedule.push_back(l.radius);
  meta.cloud_generator = generator.describe();
  meta.feature_model = model.describe();
  meta.sample_count = sample_count;
  meta.seed = plan.seed;
  meta.target_variance = plan.target_variance;
  meta.nonlinearity = std::string(to_string(first.nonlinearity));
  meta.channel_width = first.out_channels;
  return meta;
}

}  // namespace

InitResult variance_aware_init(const ConvStack& stack, const CloudGenerator& generator, std::size_t sample_count,
                               const InitPlan& plan, const FeatureModel& model) {
  plan.validate();
  if (plan.scheme != InitScheme::variance_aware_direct)
    throw InvalidArgument("variance_aware_init needs scheme variance_aware_direct");
  stack.validate(false);
  if (stack.layers.empty()) throw InvalidArgument("stack has no layers");

  InitResult result{stack, {}, {}};
  result.table.meta = describe_stack(stack, generator, model, sample_count, plan);

  const auto samples = draw_sample_clouds(stack, generator, model, sample_count, derive_seed(plan.seed, kSampleStream));
  std::vector<FeatureMatrix> activations;
  std::vector<GeometryCache> caches;
  for (const auto& s : samples) {
    activations.push_back(s.features);
    caches.emplace_back(s.levels);
  }

  for (std::size_t l = 0; l < stack.depth(); ++l) {
    auto& layer = result.stack.layers[l];
    const double z = estimate_z_from_activations(result.stack, l, activations, caches);
    const double var_w =
        plan.gain * plan.target_variance / (static_cast<double>(layer.in_channels) * z);
    layer.weights = sample_weights(var_w, layer.in_channels, layer.kernel_size(), layer.out_channels,
                                   layer_weight_seed(plan, l));
    result.table.entries.push_back({static_cast<int>(l) + 1, z});
    result.weight_variances.push_back(var_w);

    if (l + 1 == stack.depth()) break;
    const auto [in_level, out_level] = stack.levels_of(l);
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto& g = caches[s].get(layer, in_level, out_level);
      activations[s] =
          conv_forward(layer, activations[s], samples[s].levels[in_level], samples[s].levels[out_level], g);
    }
  }
  return result;
}

TransferResult transfer_init(const ConvStack& stack, const ZTable& table, const InitPlan& plan) {
  plan.validate();
  if (table.entries.empty()) throw InvalidArgument("z table is empty");
  table.validate();
  stack.validate(false);

  TransferResult result{stack, {}, {}};
  for (std::size_t l = 0; l < stack.depth(); ++l) {
    auto& layer = result.stack.layers[l];
    const int depth = static_cast<int>(l) + 1;
    if (!table.meta.basis_family.empty() && table.meta.basis_family != to_string(layer.basis.family))
      result.warnings.push_back("layer " + std::to_string(depth) + ": basis " +
                                std::string(to_string(layer.basis.family)) + " differs from table basis " +
                                table.meta.basis_family);
    if (!table.meta.estimator_mode.empty() && table.meta.estimator_mode != to_string(layer.estimator.mode))
      result.warnings.push_back("layer " + std::to_string(depth) + ": estimator " +
                                std::string(to_string(layer.estimator.mode)) + " differs from table estimator " +
                                table.meta.estimator_mode);
    const auto hit = table.lookup(depth);
    if (!hit.exact)
      result.warnings.push_back("layer " + std::to_string(depth) + ": no z entry, reusing depth " +
                                std::to_string(hit.depth_used));
    const double var_w = plan.gain * plan.target_variance / (static_cast<double>(layer.in_channels) * hit.z);
    layer.weights = sample_weights(var_w, layer.in_channels, layer.kernel_size(), layer.out_channels,
                                   layer_weight_seed(plan, l));
    result.weight_variances.push_back(var_w);
  }
  return result;
}

InitResult classic_init(const ConvStack& stack, const InitPlan& plan) {
  if (plan.scheme != InitScheme::he && plan.scheme != InitScheme::standard)
    throw InvalidArgument("classic_init handles the he and standard schemes");
  stack.validate(false);
  InitResult result{stack, {}, {}};
  for (std::size_t l = 0; l < stack.depth(); ++l) {
    auto& layer = result.stack.layers[l];
    const double var_w = plan.scheme == InitScheme::he ? he_variance(layer.kernel_size(), layer.in_channels)
                                                       : standard_variance(layer.kernel_size(), layer.in_channels);
    layer.weights = sample_weights(var_w, layer.in_channels, layer.kernel_size(), layer.out_channels,
                                   layer_weight_seed(plan, l));
    result.weight_variances.push_back(var_w);
  }
  return result;
}

}  // namespace pcinit
