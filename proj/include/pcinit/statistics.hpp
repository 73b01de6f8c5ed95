#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "pcinit/convolution.hpp"
#include "pcinit/geometry.hpp"

namespace pcinit {

struct VarianceEntry {
  int depth;
  double variance;
  std::size_t count;
};

struct VarianceProfile {
  std::vector<VarianceEntry> entries;
};

/// `runs[cloud][layer]` holds the activations of one forward pass. For every
/// layer, the unbiased sample variance pooled over points, channels and clouds.
/// Entry depths come from FeatureMatrix::layer_index.
VarianceProfile layer_variance_profile(const std::vector<std::vector<FeatureMatrix>>& runs);

/// Unbiased variance of one pooled sample set.
double pooled_variance(std::span<const FeatureMatrix* const> matrices, std::size_t& count);

struct CorrelogramBin {
  double lo;
  double hi;
  std::size_t pairs;
  std::optional<double> r;  ///< empty when undefined (too few pairs or zero variance)
};

struct Correlogram {
  int layer_depth = 0;
  std::vector<CorrelogramBin> bins;
};

/// `count` uniform bins over [0, max_distance].
std::vector<double> uniform_bin_edges(std::size_t count, double max_distance);

/// Pearson correlation of feature values over point pairs binned by distance
/// (bins are [lo, hi)). Every channel contributes, and each unordered pair
/// enters in both orders so r is symmetric.
Correlogram correlogram(const PointCloud& cloud, const FeatureMatrix& features, std::span<const double> bin_edges);

/// CSV `layer,variance,n`.
void write_variance_csv(std::ostream& out, const VarianceProfile& profile);
/// CSV `layer,bin_lo,bin_hi,pairs,r`; undefined r is written as `null`.
void write_correlogram_csv(std::ostream& out, std::span<const Correlogram> correlograms);

}  // namespace pcinit
