#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pcinit/estimators.hpp"
#include "pcinit/geometry.hpp"
#include "pcinit/kernel_basis.hpp"

namespace pcinit {

/// Per-point, per-channel activations of one layer (row-major N x C).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t channels, int layer_index = 0)
      : rows_(rows), channels_(channels), layer_index_(layer_index), values_(rows * channels, 0.0) {}
  FeatureMatrix(std::size_t rows, std::size_t channels, std::vector<double> values, int layer_index = 0);

  std::size_t rows() const { return rows_; }
  std::size_t channels() const { return channels_; }
  int layer_index() const { return layer_index_; }
  void set_layer_index(int l) { layer_index_ = l; }

  double& at(std::size_t row, std::size_t c) { return values_[row * channels_ + c]; }
  double at(std::size_t row, std::size_t c) const { return values_[row * channels_ + c]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * channels_, channels_}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * channels_, channels_}; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t channels_ = 0;
  int layer_index_ = 0;
  std::vector<double> values_;
};

/// CSV `point_index,channel,value`.
void write_features_csv(std::ostream& out, const FeatureMatrix& features);

enum class Nonlinearity { none, relu };

std::string_view to_string(Nonlinearity kind);
Nonlinearity parse_nonlinearity(std::string_view name);

FeatureMatrix apply_nonlinearity(FeatureMatrix features, Nonlinearity kind);

/// One continuous convolution: F_o(x) = act( sum_c E_{y in N(x)}[ F_c(y) sum_i b_i(y - x) w[c][i][o] ] ).
struct ConvLayer {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  BasisSpec basis;
  EstimatorSpec estimator;
  double radius = 1.0;
  Nonlinearity nonlinearity = Nonlinearity::none;
  /// C_in x K x C_out, index (c * K + i) * C_out + o. Empty until initialized.
  std::vector<double> weights;

  std::size_t kernel_size() const { return basis.size(); }
  std::size_t weight_count() const { return in_channels * kernel_size() * out_channels; }
  bool initialized() const { return weights.size() == weight_count(); }
  double& weight(std::size_t c, std::size_t i, std::size_t o) {
    return weights[(c * kernel_size() + i) * out_channels + o];
  }
  double weight(std::size_t c, std::size_t i, std::size_t o) const {
    return weights[(c * kernel_size() + i) * out_channels + o];
  }

  /// Structural checks. `require_weights` additionally demands initialized weights.
  void validate(bool require_weights = true) const;
};

/// Ordered layers plus which cloud level each layer reads from and writes to.
/// Level 0 is the input cloud; level k > 0 is a Poisson-disk subsample of
/// level k-1 with radius level_radii[k-1].
struct ConvStack {
  std::vector<ConvLayer> layers;
  std::vector<double> level_radii;
  /// (input level, output level) per layer; empty means every layer uses level 0.
  std::vector<std::pair<std::size_t, std::size_t>> layer_levels;

  std::size_t depth() const { return layers.size(); }
  std::pair<std::size_t, std::size_t> levels_of(std::size_t layer) const {
    return layer_levels.empty() ? std::pair<std::size_t, std::size_t>{0, 0} : layer_levels[layer];
  }
  /// Stack with only the first `count` layers.
  ConvStack prefix(std::size_t count) const;
  void validate(bool require_weights = true) const;
};

/// Builds level 0 (the cloud itself) and every subsampled level of the stack.
std::vector<PointCloud> build_levels(const ConvStack& stack, const PointCloud& cloud, std::uint64_t seed);

/// Support-side quantities a layer needs per input point: the neighborhood
/// and (for mc/nn) the density of the input cloud.
struct LayerGeometry {
  NeighborhoodSet neighbors;
  std::vector<double> density;  ///< empty unless the estimator needs it
};

/// Neighborhoods for `layer` plus densities when required (the input cloud's
/// own densities if attached, otherwise a KDE with bandwidth radius / 3).
LayerGeometry prepare_layer_geometry(const ConvLayer& layer, const PointCloud& cloud_in, const PointCloud& cloud_out);

/// Memoizes LayerGeometry per (input level, output level, radius, density need)
/// so deep stacks on one cloud pay for neighbor search and KDE once.
class GeometryCache {
 public:
  explicit GeometryCache(std::span<const PointCloud> levels) : levels_(levels) {}

  const LayerGeometry& get(const ConvLayer& layer, std::size_t in_level, std::size_t out_level);
  std::span<const PointCloud> levels() const { return levels_; }

 private:
  struct Key {
    std::size_t in_level;
    std::size_t out_level;
    double radius;
    bool density;
    auto operator<=>(const Key&) const = default;
  };
  std::span<const PointCloud> levels_;
  std::map<Key, LayerGeometry> entries_;
};

/// Per-basis accumulations c[c][i] = E_{y in N(x)}[ F_c(y) b_i(y - x) ] for one
/// output point, written to `out` (size C_in * K, index c * K + i).
/// Returns the neighborhood size.
std::size_t basis_accumulations(const ConvLayer& layer, const FeatureMatrix& features_in, const PointCloud& cloud_in,
                                const PointCloud& cloud_out, const LayerGeometry& geometry, std::size_t x,
                                std::span<double> out);

/// One layer forward. `neighbors` must be built for (cloud_out, cloud_in, layer.radius).
/// Densities for mc/nn come from cloud_in (attached or KDE).
FeatureMatrix conv_forward(const ConvLayer& layer, const FeatureMatrix& features_in, const PointCloud& cloud_in,
                           const PointCloud& cloud_out, const NeighborhoodSet& neighbors);

FeatureMatrix conv_forward(const ConvLayer& layer, const FeatureMatrix& features_in, const PointCloud& cloud_in,
                           const PointCloud& cloud_out, const LayerGeometry& geometry);

/// Runs every layer in order. Result[0] is the input, result[l] the output of layer l.
/// `levels` comes from build_levels.
std::vector<FeatureMatrix> stack_forward(const ConvStack& stack, std::span<const PointCloud> levels,
                                         const FeatureMatrix& features_in);

/// Dense H x W x C image, row-major with channels innermost.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c, std::size_t ch) const { return values[(r * width + c) * channels + ch]; }
};

/// Zero-padded 3x3 cross-correlation summed over channels.
/// `kernel` is 3 x 3 x C, index ((dr + 1) * 3 + (dc + 1)) * C + ch. Returns H x W.
std::vector<double> discrete_conv_reference(const Image& image, std::span<const double> kernel);

}  // namespace pcinit
