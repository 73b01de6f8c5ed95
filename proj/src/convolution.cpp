#include "pcinit/convolution.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "pcinit/errors.hpp"
#include "pcinit/format.hpp"
#include "pcinit/rng.hpp"

namespace pcinit {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t channels, std::vector<double> values, int layer_index)
    : rows_(rows), channels_(channels), layer_index_(layer_index), values_(std::move(values)) {
  if (values_.size() != rows_ * channels_) throw InvalidArgument("feature values do not match rows x channels");
}

void write_features_csv(std::ostream& out, const FeatureMatrix& features) {
  out << "point_index,channel,value\n";
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.channels(); ++c)
      out << r << ',' << c << ',' << format_double(features.at(r, c)) << '\n';
  }
}

std::string_view to_string(Nonlinearity kind) { return kind == Nonlinearity::relu ? "relu" : "none"; }

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "none") return Nonlinearity::none;
  if (name == "relu") return Nonlinearity::relu;
  throw InvalidArgument("unknown nonlinearity '" + std::string(name) + "' (expected none|relu)");
}

FeatureMatrix apply_nonlinearity(FeatureMatrix features, Nonlinearity kind) {
  if (kind == Nonlinearity::relu) {
    for (double& v : features.values()) v = v > 0.0 ? v : 0.0;
  }
  return features;
}

void ConvLayer::validate(bool require_weights) const {
  basis.validate();
  estimator.validate();
  if (in_channels == 0 || out_channels == 0) throw InvalidArgument("layer channel counts must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("layer radius must be positive");
  if (require_weights && !initialized())
    throw InvalidArgument("layer weights must have C_in x K x C_out = " + std::to_string(weight_count()) + " entries");
  if (!weights.empty() && weights.size() != weight_count())
    throw InvalidArgument("layer weight count does not match C_in x K x C_out");
  for (double w : weights) {
    if (!std::isfinite(w)) throw InvalidArgument("layer weights must be finite");
  }
}

ConvStack ConvStack::prefix(std::size_t count) const {
  ConvStack out;
  out.level_radii = level_radii;
  out.layers.assign(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(count));
  if (!layer_levels.empty())
    out.layer_levels.assign(layer_levels.begin(), layer_levels.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

void ConvStack::validate(bool require_weights) const {
  if (!layer_levels.empty() && layer_levels.size() != layers.size())
    throw InvalidArgument("layer_levels must list one (input, output) pair per layer");
  for (double r : level_radii) {
    if (!(r > 0.0)) throw InvalidArgument("level radii must be positive");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    try {
      layers[l].validate(require_weights);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("layer " + std::to_string(l + 1) + ": " + e.what());
    }
    const auto [in_level, out_level] = levels_of(l);
    if (in_level > level_radii.size() || out_level > level_radii.size())
      throw InvalidArgument("layer " + std::to_string(l + 1) + " references a missing cloud level");
    if (l > 0) {
      if (layers[l - 1].out_channels != layers[l].in_channels)
        throw InvalidArgument("layer " + std::to_string(l + 1) + " input channels do not match previous output");
      if (levels_of(l - 1).second != in_level)
        throw InvalidArgument("layer " + std::to_string(l + 1) + " reads a different level than the previous layer wrote");
    }
  }
}

std::vector<PointCloud> build_levels(const ConvStack& stack, const PointCloud& cloud, std::uint64_t seed) {
  std::vector<PointCloud> levels{cloud};
  for (std::size_t k = 0; k < stack.level_radii.size(); ++k)
    levels.push_back(poisson_disk_subsample(levels.back(), stack.level_radii[k], derive_seed(seed, k)));
  return levels;
}

LayerGeometry prepare_layer_geometry(const ConvLayer& layer, const PointCloud& cloud_in, const PointCloud& cloud_out) {
  LayerGeometry g{radius_neighbors(cloud_out, cloud_in, layer.radius), {}};
  if (needs_density(layer.estimator.mode)) {
    if (cloud_in.has_density()) {
      g.density.assign(cloud_in.density().begin(), cloud_in.density().end());
    } else {
      g.density = estimate_density(cloud_in, default_density_bandwidth(layer.radius));
    }
  }
  return g;
}

const LayerGeometry& GeometryCache::get(const ConvLayer& layer, std::size_t in_level, std::size_t out_level) {
  const Key key{in_level, out_level, layer.radius, needs_density(layer.estimator.mode)};
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  if (in_level >= levels_.size() || out_level >= levels_.size())
    throw InvalidArgument("layer references a cloud level that was not built");
  auto geometry = prepare_layer_geometry(layer, levels_[in_level], levels_[out_level]);
  return entries_.emplace(key, std::move(geometry)).first->second;
}

namespace {

struct Scratch {
  std::vector<double> offset;
  std::vector<double> basis;
  std::vector<double> factors;
  std::vector<double> densities;
};

std::size_t accumulate_point(const ConvLayer& layer, const FeatureMatrix& features_in, const PointCloud& cloud_in,
                             const PointCloud& cloud_out, const NeighborhoodSet& neighbors,
                             std::span<const double> density, std::size_t x, Scratch& s, std::span<double> out) {
  const std::size_t k = layer.kernel_size();
  const std::size_t cin = layer.in_channels;
  const auto d = static_cast<std::size_t>(cloud_in.dim());
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(cin * k), 0.0);

  const auto nbrs = neighbors.neighbors(x);
  const std::size_t count = nbrs.size();
  if (count == 0) return 0;

  s.factors.resize(count);
  if (needs_density(layer.estimator.mode)) {
    s.densities.resize(count);
    for (std::size_t j = 0; j < count; ++j) s.densities[j] = density[nbrs[j]];
    estimator_factors(layer.estimator, count, s.densities, s.factors);
  } else {
    estimator_factors(layer.estimator, count, {}, s.factors);
  }

  const auto xp = cloud_out.point(x);
  s.offset.resize(d);
  s.basis.resize(k);
  for (std::size_t j = 0; j < count; ++j) {
    const auto yp = cloud_in.point(nbrs[j]);
    for (std::size_t a = 0; a < d; ++a) s.offset[a] = yp[a] - xp[a];
    eval_basis(layer.basis, s.offset, s.basis);
    const auto f = features_in.row(nbrs[j]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double fc = f[c] * s.factors[j];
      double* acc = out.data() + c * k;
      for (std::size_t i = 0; i < k; ++i) acc[i] += fc * s.basis[i];
    }
  }
  return count;
}

void check_inputs(const ConvLayer& layer, const FeatureMatrix& features_in, const PointCloud& cloud_in,
                  const PointCloud& cloud_out, const NeighborhoodSet& neighbors) {
  if (cloud_in.dim() != cloud_out.dim() || cloud_in.dim() != layer.basis.dim)
    throw InvalidArgument("cloud and basis dimensions differ");
  if (features_in.channels() != layer.in_channels)
    throw InvalidArgument("feature channels (" + std::to_string(features_in.channels()) +
                          ") do not match layer input channels (" + std::to_string(layer.in_channels) + ")");
  if (features_in.rows() != cloud_in.size()) throw InvalidArgument("feature rows do not match input cloud size");
  if (neighbors.query_count() != cloud_out.size())
    throw InvalidArgument("neighborhoods were not built for the output cloud");
}

}  // namespace

std::size_t basis_accumulations(const ConvLayer& layer, const FeatureMatrix& features_in, const PointCloud& cloud_in,
                                const PointCloud& cloud_out, const LayerGeometry& geometry, std::size_t x,
                                std::span<double> out) {
  check_inputs(layer, features_in, cloud_in, cloud_out, geometry.neighbors);
  if (out.size() < layer.in_channels * layer.kernel_size()) throw InvalidArgument("accumulation buffer too small");
  Scratch s;
  return accumulate_point(layer, features_in, cloud_in, cloud_out, geometry.neighbors, geometry.density, x, s, out);
}

FeatureMatrix conv_forward(const ConvLayer& layer, const FeatureMatrix& features_in, const PointCloud& cloud_in,
                           const PointCloud& cloud_out, const LayerGeometry& geometry) {
  layer.validate();
  check_inputs(layer, features_in, cloud_in, cloud_out, geometry.neighbors);
  if (needs_density(layer.estimator.mode) && geometry.density.size() != cloud_in.size())
    throw InvalidArgument("estimator needs one density per input point");

  const int out_index = features_in.layer_index() + 1;
  const std::size_t k = layer.kernel_size();
  const std::size_t cin = layer.in_channels;
  const std::size_t cout = layer.out_channels;
  FeatureMatrix out(cloud_out.size(), cout, out_index);
  std::vector<double> acc(cin * k);
  Scratch s;
  for (std::size_t x = 0; x < cloud_out.size(); ++x) {
    accumulate_point(layer, features_in, cloud_in, cloud_out, geometry.neighbors, geometry.density, x, s, acc);
    auto row = out.row(x);
    for (std::size_t ci = 0; ci < cin * k; ++ci) {
      const double a = acc[ci];
      if (a == 0.0) continue;
      const double* w = layer.weights.data() + ci * cout;
      for (std::size_t o = 0; o < cout; ++o) row[o] += a * w[o];
    }
    for (double& v : row) {
      if (layer.nonlinearity == Nonlinearity::relu && v < 0.0) v = 0.0;
      if (!std::isfinite(v)) throw NumericOverflow(out_index, "non-finite activation at output point " + std::to_string(x));
    }
  }
  return out;
}

FeatureMatrix conv_forward(const ConvLayer& layer, const FeatureMatrix& features_in, const PointCloud& cloud_in,
                           const PointCloud& cloud_out, const NeighborhoodSet& neighbors) {
  LayerGeometry g{neighbors, {}};
  if (needs_density(layer.estimator.mode)) {
    if (cloud_in.has_density())
      g.density.assign(cloud_in.density().begin(), cloud_in.density().end());
    else
      g.density = estimate_density(cloud_in, default_density_bandwidth(layer.radius));
  }
  return conv_forward(layer, features_in, cloud_in, cloud_out, g);
}

std::vector<FeatureMatrix> stack_forward(const ConvStack& stack, std::span<const PointCloud> levels,
                                         const FeatureMatrix& features_in) {
  stack.validate();
  std::vector<FeatureMatrix> out;
  out.reserve(stack.depth() + 1);
  out.push_back(features_in);
  out.back().set_layer_index(0);
  GeometryCache cache(levels);
  for (std::size_t l = 0; l < stack.depth(); ++l) {
    const auto [in_level, out_level] = stack.levels_of(l);
    const auto& layer = stack.layers[l];
    try {
      const auto& g = cache.get(layer, in_level, out_level);
      out.push_back(conv_forward(layer, out.back(), levels[in_level], levels[out_level], g));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("layer " + std::to_string(l + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<double> discrete_conv_reference(const Image& image, std::span<const double> kernel) {
  if (image.values.size() != image.height * image.width * image.channels)
    throw InvalidArgument("image values do not match H x W x C");
  if (kernel.size() != 9 * image.channels) throw InvalidArgument("kernel must be 3 x 3 x C");
  std::vector<double> out(image.height * image.width, 0.0);
  const auto h = static_cast<std::ptrdiff_t>(image.height);
  const auto w = static_cast<std::ptrdiff_t>(image.width);
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
          const std::ptrdiff_t rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          const auto tap = static_cast<std::size_t>((dr + 1) * 3 + (dc + 1));
          for (std::size_t ch = 0; ch < image.channels; ++ch)
            acc += image.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc), ch) *
                   kernel[tap * image.channels + ch];
        }
      }
      out[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  return out;
}

}  // namespace pcinit
