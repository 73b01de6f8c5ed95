#include "pcinit/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "pcinit/errors.hpp"
#include "pcinit/format.hpp"

namespace pcinit {

double pooled_variance(std::span<const FeatureMatrix* const> matrices, std::size_t& count) {
  count = 0;
  double sum = 0.0;
  for (const auto* m : matrices) {
    for (double v : m->values()) sum += v;
    count += m->values().size();
  }
  if (count < 2) throw InvalidArgument("variance needs at least two samples");
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  double comp = 0.0;
  for (const auto* m : matrices) {
    for (double v : m->values()) {
      const double d = v - mean;
      sq += d * d;
      comp += d;
    }
  }
  // Two-pass with the correction term for the residual mean error.
  const double n = static_cast<double>(count);
  return std::max(0.0, (sq - comp * comp / n) / (n - 1.0));
}

VarianceProfile layer_variance_profile(const std::vector<std::vector<FeatureMatrix>>& runs) {
  if (runs.empty()) throw InvalidArgument("variance profile needs at least one run");
  const std::size_t layers = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != layers) throw InvalidArgument("every run must have the same number of layers");
  }
  VarianceProfile profile;
  std::vector<const FeatureMatrix*> group;
  for (std::size_t l = 0; l < layers; ++l) {
    group.clear();
    for (const auto& r : runs) group.push_back(&r[l]);
    std::size_t count = 0;
    const double var = pooled_variance(group, count);
    profile.entries.push_back({runs.front()[l].layer_index(), var, count});
  }
  return profile;
}

std::vector<double> uniform_bin_edges(std::size_t count, double max_distance) {
  if (count == 0 || !(max_distance > 0.0)) throw InvalidArgument("bins need a positive count and range");
  std::vector<double> edges(count + 1);
  for (std::size_t i = 0; i <= count; ++i)
    edges[i] = max_distance * static_cast<double>(i) / static_cast<double>(count);
  return edges;
}

Correlogram correlogram(const PointCloud& cloud, const FeatureMatrix& features, std::span<const double> bin_edges) {
  if (cloud.size() < 2) throw InvalidArgument("correlogram needs at least two points");
  if (features.rows() != cloud.size()) throw InvalidArgument("feature rows do not match the cloud");
  if (bin_edges.size() < 2) throw InvalidArgument("correlogram needs at least one bin");
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) throw InvalidArgument("bin edges must be strictly increasing");
  }
  if (bin_edges.front() < 0.0) throw InvalidArgument("bin edges must be non-negative");

  const std::size_t nbins = bin_edges.size() - 1;
  const double max_d = bin_edges.back();
  // Pairs per bin with their value pairs, gathered in ascending (i, j) order.
  std::vector<std::vector<std::pair<double, double>>> values(nbins);
  std::vector<std::size_t> pairs(nbins, 0);
  const NeighborhoodSet near = radius_neighbors(cloud, cloud, max_d);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::uint32_t j : near.neighbors(i)) {
      if (j <= i) continue;
      const double d = std::sqrt(squared_distance(cloud.point(i), cloud.point(j)));
      if (d < bin_edges.front() || d >= max_d) continue;
      const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), d);
      const auto b = static_cast<std::size_t>(it - bin_edges.begin()) - 1;
      ++pairs[b];
      for (std::size_t c = 0; c < features.channels(); ++c) values[b].emplace_back(features.at(i, c), features.at(j, c));
    }
  }

  Correlogram out;
  out.layer_depth = features.layer_index();
  for (std::size_t b = 0; b < nbins; ++b) {
    CorrelogramBin bin{bin_edges[b], bin_edges[b + 1], pairs[b], std::nullopt};
    const auto& v = values[b];
    if (pairs[b] >= 2) {
      // Symmetrized sample: both orders share one mean and one variance.
      double sum = 0.0;
      double lo = v.front().first, hi = v.front().first;
      for (const auto& [a, c] : v) {
        sum += a + c;
        lo = std::min({lo, a, c});
        hi = std::max({hi, a, c});
      }
      if (hi > lo) {
        const double mean = sum / (2.0 * static_cast<double>(v.size()));
        double cross = 0.0, sq = 0.0;
        for (const auto& [a, c] : v) {
          const double da = a - mean, dc = c - mean;
          cross += 2.0 * da * dc;
          sq += da * da + dc * dc;
        }
        if (sq > 0.0) bin.r = std::clamp(cross / sq, -1.0, 1.0);
      }
    }
    out.bins.push_back(bin);
  }
  return out;
}

void write_variance_csv(std::ostream& out, const VarianceProfile& profile) {
  out << "layer,variance,n\n";
  for (const auto& e : profile.entries) out << e.depth << ',' << format_double(e.variance) << ',' << e.count << '\n';
}

void write_correlogram_csv(std::ostream& out, std::span<const Correlogram> correlograms) {
  out << "layer,bin_lo,bin_hi,pairs,r\n";
  for (const auto& cg : correlograms) {
    for (const auto& b : cg.bins) {
      out << cg.layer_depth << ',' << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.pairs << ','
          << (b.r ? format_double(*b.r) : std::string("null")) << '\n';
    }
  }
}

}  // namespace pcinit
