#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace pcinit {

/// Positions in d-dimensional space (d in {1,2,3}) with optional per-point densities.
/// Immutable after construction.
class PointCloud {
 public:
  /// `positions` is row-major N x dim. Throws InvalidArgument on an empty cloud,
  /// non-finite coordinates or non-positive densities.
  PointCloud(int dim, std::vector<double> positions,
             std::optional<std::vector<double>> density = std::nullopt);

  int dim() const { return dim_; }
  std::size_t size() const { return positions_.size() / static_cast<std::size_t>(dim_); }

  std::span<const double> point(std::size_t i) const {
    return {positions_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& positions() const { return positions_; }

  bool has_density() const { return density_.has_value(); }
  /// Empty span when no density is attached.
  std::span<const double> density() const {
    return density_ ? std::span<const double>(*density_) : std::span<const double>();
  }

  PointCloud with_density(std::vector<double> density) const;
  PointCloud without_density() const;
  PointCloud translated(std::span<const double> shift) const;
  /// Points at `indices`, in that order; densities follow.
  PointCloud subset(std::span<const std::size_t> indices) const;

 private:
  int dim_;
  std::vector<double> positions_;
  std::optional<std::vector<double>> density_;
};

struct Interval {
  double lo;
  double hi;
};

/// Per-query closed-ball neighbor lists, stored compressed (CSR).
class NeighborhoodSet {
 public:
  NeighborhoodSet(double radius, std::vector<std::size_t> offsets, std::vector<std::uint32_t> indices)
      : radius_(radius), offsets_(std::move(offsets)), indices_(std::move(indices)) {}

  double radius() const { return radius_; }
  std::size_t query_count() const { return offsets_.size() - 1; }
  /// Support indices within `radius` of query `q`, ascending.
  std::span<const std::uint32_t> neighbors(std::size_t q) const {
    return {indices_.data() + offsets_[q], offsets_[q + 1] - offsets_[q]};
  }
  std::size_t total() const { return indices_.size(); }

 private:
  double radius_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> indices_;
};

/// Uniform spatial hash grid over a point cloud. Cells are cubes of side `cell`.
class HashGrid {
 public:
  HashGrid(const PointCloud& cloud, double cell);
  HashGrid(int dim, double cell);

  void insert(std::span<const double> p, std::uint32_t index);

  /// Calls `fn(index)` for every stored point in the 3^d cells around `q`.
  /// Any point within distance `cell` of `q` is visited; others may be too.
  template <class Fn>
  void for_each_candidate(std::span<const double> q, Fn&& fn) const {
    const Key center = key_of(q);
    const int ry = dim_ >= 2 ? 1 : 0;
    const int rz = dim_ >= 3 ? 1 : 0;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -ry; dy <= ry; ++dy) {
        for (int dz = -rz; dz <= rz; ++dz) {
          const Key k{center[0] + dx, center[1] + dy, center[2] + dz};
          auto it = cells_.find(k);
          if (it == cells_.end()) continue;
          for (std::uint32_t idx : it->second) fn(idx);
        }
      }
    }
  }

 private:
  using Key = std::array<std::int64_t, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = 1469598103934665603ULL;
      for (auto v : k) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };
  Key key_of(std::span<const double> p) const;

  int dim_;
  double inv_cell_;
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> cells_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// n i.i.d. uniform points over the box. `extent` has one interval per axis,
/// or a single interval applied to all axes.
PointCloud generate_uniform_cloud(int dim, std::size_t n, std::span<const Interval> extent,
                                  std::uint64_t seed);

/// Centers used by generate_clustered_cloud for the same arguments: uniform in [0,1]^dim.
std::vector<double> cluster_centers(int dim, std::size_t cluster_count, std::uint64_t seed);

/// Equal-weight isotropic Gaussian mixture; point k belongs to cluster k mod cluster_count.
PointCloud generate_clustered_cloud(int dim, std::size_t n, std::size_t cluster_count,
                                    double spread, std::uint64_t seed);

/// Indices (ascending) of a maximal subset with pairwise distances >= radius,
/// chosen by greedy dart throwing over a seeded random permutation.
std::vector<std::size_t> poisson_disk_indices(const PointCloud& cloud, double radius,
                                              std::uint64_t seed);

PointCloud poisson_disk_subsample(const PointCloud& cloud, double radius, std::uint64_t seed);

/// Closed-ball neighbors (||y - x|| <= radius) of every query among `support`.
NeighborhoodSet radius_neighbors(const PointCloud& queries, const PointCloud& support,
                                 double radius);

/// Gaussian kernel density estimate at every point, self term included:
/// p(y_j) = (1/N) sum_k exp(-|y_j - y_k|^2 / (2 h^2)) / (2 pi h^2)^(d/2).
///
/// This is a stand-in: the density estimator used by the original MC-based
/// convolutions is not documented, and this one integrates to 1 over space.
std::vector<double> estimate_density(const PointCloud& cloud, double bandwidth);

/// Default KDE bandwidth for a convolution of receptive radius r.
inline double default_density_bandwidth(double radius) { return radius / 3.0; }

/// CSV with header `x[,y[,z]][,density]`.
void write_cloud_csv(std::ostream& out, const PointCloud& cloud);
PointCloud read_cloud_csv(std::istream& in);

}  // namespace pcinit
