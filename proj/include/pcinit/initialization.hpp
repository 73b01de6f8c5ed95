#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcinit/convolution.hpp"
#include "pcinit/geometry.hpp"

namespace pcinit {

/// He et al. variance for a discrete kernel of n taps and c input channels: 2 / (n c).
double he_variance(std::size_t kernel_size, std::size_t channels);

/// Framework default for continuous convolutions: 2 / (b c), b = number of basis functions.
double standard_variance(std::size_t basis_count, std::size_t channels);

/// C_in x K x C_out i.i.d. N(0, variance).
std::vector<double> sample_weights(double variance, std::size_t in_channels, std::size_t kernel_size,
                                   std::size_t out_channels, std::uint64_t seed);

/// Distribution of input features used while estimating z.
struct FeatureModel {
  enum class Kind { gaussian, constant };
  Kind kind = Kind::gaussian;
  double value = 1.0;  ///< variance for gaussian, the constant otherwise

  static FeatureModel gaussian(double variance) { return {Kind::gaussian, variance}; }
  static FeatureModel constant(double v) { return {Kind::constant, v}; }

  FeatureMatrix sample(std::size_t rows, std::size_t channels, std::uint64_t seed) const;
  std::string describe() const;
};

/// Seeded source of random point clouds.
struct CloudGenerator {
  enum class Kind { uniform, clustered, grid };
  Kind kind = Kind::uniform;
  int dim = 3;
  std::size_t n = 1000;  ///< point count; for grid, points per axis
  std::vector<Interval> extent{{0.0, 1.0}};
  std::size_t cluster_count = 4;
  double spread = 0.1;
  double spacing = 1.0;  ///< grid only

  PointCloud generate(std::uint64_t seed) const;
  std::string describe() const;
};

/// Regular lattice with `per_axis` points per axis and the given spacing, axis 0 fastest.
PointCloud make_grid_cloud(int dim, std::size_t per_axis, double spacing);

enum class InitScheme { he, standard, variance_aware_direct, variance_aware_transfer };

std::string_view to_string(InitScheme scheme);
InitScheme parse_init_scheme(std::string_view name);

struct InitPlan {
  InitScheme scheme = InitScheme::variance_aware_direct;
  double target_variance = 1.0;  ///< desired Var[F^l]
  double gain = 1.0;             ///< 2 corrects for a ReLU in the current layer
  std::uint64_t seed = 0;

  void validate() const;
  static double default_gain(Nonlinearity kind) { return kind == Nonlinearity::relu ? 2.0 : 1.0; }
};

struct ZEntry {
  int depth;
  double z;
};

/// Provenance of a z table.
struct ZTableMeta {
  std::string basis_family;
  std::string estimator_mode;
  std::vector<double> radius_schedule;
  std::string cloud_generator;
  std::string feature_model;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  double target_variance = 1.0;
  std::string nonlinearity;
  std::size_t channel_width = 0;
};

/// Per-depth z_l estimates, the product of the variance-aware initializer.
struct ZTable {
  static constexpr int kSchemaVersion = 1;

  std::vector<ZEntry> entries;
  ZTableMeta meta;

  void validate() const;

  struct Lookup {
    double z;
    int depth_used;
    bool exact;
  };
  /// Exact depth if present, else the nearest lower depth (or the shallowest entry).
  Lookup lookup(int depth) const;
};

/// Cloud levels and input features for one sample of the z estimate.
struct SampleCloud {
  std::vector<PointCloud> levels;
  FeatureMatrix features;
};

/// Draws `count` samples: clouds from `generator`, levels per `stack`, features per `model`.
std::vector<SampleCloud> draw_sample_clouds(const ConvStack& stack, const CloudGenerator& generator,
                                            const FeatureModel& model, std::size_t count, std::uint64_t seed);

/// z_l for layer `layer_index` (0-based) of `stack`, whose earlier layers must be
/// initialized. For each sample the prefix runs forward; then, per output point
/// x, sum_c sum_i c_{c,i}(x)^2 is averaged over points, divided by C_in, and
/// the per-sample means are averaged.
double estimate_z(const ConvStack& stack, std::size_t layer_index, std::span<const SampleCloud> samples);

/// Same estimate from already-propagated activations (one per sample, the
/// input of layer `layer_index`). `caches` holds one GeometryCache per sample.
double estimate_z_from_activations(const ConvStack& stack, std::size_t layer_index,
                                   std::span<const FeatureMatrix> activations, std::span<GeometryCache> caches);

struct InitResult {
  ConvStack stack;
  ZTable table;
  std::vector<double> weight_variances;  ///< Var[w] chosen per layer
};

/// Layer-by-layer variance-aware initialization. Draws `sample_count` clouds
/// once; each layer's z is estimated from the activations of the already
/// initialized prefix, then Var[w] = gain * target / (C_in z).
InitResult variance_aware_init(const ConvStack& stack, const CloudGenerator& generator, std::size_t sample_count,
                               const InitPlan& plan, const FeatureModel& model = FeatureModel::gaussian(1.0));

struct TransferResult {
  ConvStack stack;
  std::vector<double> weight_variances;
  std::vector<std::string> warnings;
};

/// Initializes `stack` from a precomputed table: Var[w] = gain * target / (C_in z_depth).
TransferResult transfer_init(const ConvStack& stack, const ZTable& table, const InitPlan& plan);

/// He or standard initialization of every layer.
InitResult classic_init(const ConvStack& stack, const InitPlan& plan);

/// Seed used for the weights of layer `layer_index` under `plan`.
std::uint64_t layer_weight_seed(const InitPlan& plan, std::size_t layer_index);

}  // namespace pcinit
