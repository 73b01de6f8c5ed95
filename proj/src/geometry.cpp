#include "pcinit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "pcinit/errors.hpp"
#include "pcinit/format.hpp"
#include "pcinit/rng.hpp"

namespace pcinit {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > 3) throw InvalidArgument("dimension must be 1, 2 or 3, got " + std::to_string(dim));
}

void check_density(const std::vector<double>& density, std::size_t n) {
  if (density.size() != n) throw InvalidArgument("density length does not match point count");
  for (double p : density) {
    if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("density values must be positive and finite");
  }
}

}  // namespace

PointCloud::PointCloud(int dim, std::vector<double> positions, std::optional<std::vector<double>> density)
    : dim_(dim), positions_(std::move(positions)), density_(std::move(density)) {
  check_dim(dim_);
  if (positions_.empty()) throw InvalidArgument("point cloud must contain at least one point");
  if (positions_.size() % static_cast<std::size_t>(dim_) != 0)
    throw InvalidArgument("position array length is not a multiple of the dimension");
  for (double v : positions_) {
    if (!std::isfinite(v)) throw InvalidArgument("point coordinates must be finite");
  }
  if (density_) check_density(*density_, size());
}

PointCloud PointCloud::with_density(std::vector<double> density) const {
  return PointCloud(dim_, positions_, std::move(density));
}

PointCloud PointCloud::without_density() const { return PointCloud(dim_, positions_); }

PointCloud PointCloud::translated(std::span<const double> shift) const {
  if (shift.size() != static_cast<std::size_t>(dim_)) throw InvalidArgument("translation has wrong dimension");
  std::vector<double> moved = positions_;
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += shift[i % static_cast<std::size_t>(dim_)];
  return PointCloud(dim_, std::move(moved), density_);
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  const auto d = static_cast<std::size_t>(dim_);
  std::vector<double> pos;
  pos.reserve(indices.size() * d);
  std::optional<std::vector<double>> dens;
  if (density_) dens.emplace().reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= size()) throw InvalidArgument("subset index out of range");
    auto p = point(idx);
    pos.insert(pos.end(), p.begin(), p.end());
    if (dens) dens->push_back((*density_)[idx]);
  }
  return PointCloud(dim_, std::move(pos), std::move(dens));
}

HashGrid::HashGrid(int dim, double cell) : dim_(dim), inv_cell_(1.0 / cell) {
  check_dim(dim);
  if (!(cell > 0.0) || !std::isfinite(cell)) throw InvalidArgument("grid cell size must be positive");
}

HashGrid::HashGrid(const PointCloud& cloud, double cell) : HashGrid(cloud.dim(), cell) {
  cells_.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) insert(cloud.point(i), static_cast<std::uint32_t>(i));
}

void HashGrid::insert(std::span<const double> p, std::uint32_t index) { cells_[key_of(p)].push_back(index); }

HashGrid::Key HashGrid::key_of(std::span<const double> p) const {
  Key k{0, 0, 0};
  for (int a = 0; a < dim_; ++a) k[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::floor(p[a] * inv_cell_));
  return k;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

PointCloud generate_uniform_cloud(int dim, std::size_t n, std::span<const Interval> extent, std::uint64_t seed) {
  check_dim(dim);
  if (n == 0) throw InvalidArgument("point count must be at least 1");
  if (extent.size() != 1 && extent.size() != static_cast<std::size_t>(dim))
    throw InvalidArgument("extent needs one interval per axis (or a single shared interval)");
  for (const auto& iv : extent) {
    if (!(iv.hi > iv.lo) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw InvalidArgument("extent has zero volume");
  }
  Rng rng(seed);
  std::vector<double> pos(n * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto& iv = extent.size() == 1 ? extent[0] : extent[i % static_cast<std::size_t>(dim)];
    pos[i] = rng.uniform(iv.lo, iv.hi);
  }
  return PointCloud(dim, std::move(pos));
}

std::vector<double> cluster_centers(int dim, std::size_t cluster_count, std::uint64_t seed) {
  check_dim(dim);
  Rng rng(derive_seed(seed, 0));
  std::vector<double> centers(cluster_count * static_cast<std::size_t>(dim));
  for (double& c : centers) c = rng.uniform01();
  return centers;
}

PointCloud generate_clustered_cloud(int dim, std::size_t n, std::size_t cluster_count, double spread,
                                    std::uint64_t seed) {
  check_dim(dim);
  if (cluster_count == 0) throw InvalidArgument("cluster_count must be at least 1");
  if (n < cluster_count) throw InvalidArgument("n must be at least cluster_count");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw InvalidArgument("spread must be positive");
  const auto centers = cluster_centers(dim, cluster_count, seed);
  const auto d = static_cast<std::size_t>(dim);
  Rng rng(derive_seed(seed, 1));
  std::vector<double> pos(n * d);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = k % cluster_count;
    for (std::size_t a = 0; a < d; ++a) pos[k * d + a] = centers[c * d + a] + spread * rng.normal();
  }
  return PointCloud(dim, std::move(pos));
}

std::vector<std::size_t> poisson_disk_indices(const PointCloud& cloud, double radius, std::uint64_t seed) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("poisson radius must be positive");
  const std::size_t n = cloud.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const double r2 = radius * radius;
  HashGrid accepted(cloud.dim(), radius * (1.0 + 1e-9));
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const auto p = cloud.point(idx);
    bool blocked = false;
    accepted.for_each_candidate(p, [&](std::uint32_t other) {
      if (!blocked && squared_distance(p, cloud.point(other)) < r2) blocked = true;
    });
    if (blocked) continue;
    accepted.insert(p, static_cast<std::uint32_t>(idx));
    kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

PointCloud poisson_disk_subsample(const PointCloud& cloud, double radius, std::uint64_t seed) {
  const auto kept = poisson_disk_indices(cloud, radius, seed);
  return cloud.subset(kept);
}

NeighborhoodSet radius_neighbors(const PointCloud& queries, const PointCloud& support, double radius) {
  if (queries.dim() != support.dim()) throw InvalidArgument("query and support dimensions differ");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("neighbor radius must be positive");
  // Slightly inflated cells keep every closed-ball neighbor inside the 3^d
  // stencil despite rounding in floor(x / cell).
  const HashGrid grid(support, radius * (1.0 + 1e-9));
  const double r2 = radius * radius;
  std::vector<std::size_t> offsets;
  offsets.reserve(queries.size() + 1);
  offsets.push_back(0);
  std::vector<std::uint32_t> indices;
  std::vector<std::uint32_t> scratch;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto x = queries.point(q);
    scratch.clear();
    grid.for_each_candidate(x, [&](std::uint32_t j) {
      if (squared_distance(support.point(j), x) <= r2) scratch.push_back(j);
    });
    std::sort(scratch.begin(), scratch.end());
    indices.insert(indices.end(), scratch.begin(), scratch.end());
    offsets.push_back(indices.size());
  }
  return NeighborhoodSet(radius, std::move(offsets), std::move(indices));
}

std::vector<double> estimate_density(const PointCloud& cloud, double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidArgument("bandwidth must be positive");
  const std::size_t n = cloud.size();
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double norm =
      std::pow(2.0 * std::numbers::pi * bandwidth * bandwidth, -0.5 * cloud.dim()) / static_cast<double>(n);
  std::vector<double> density(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto yj = cloud.point(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += std::exp(-squared_distance(yj, cloud.point(k)) * inv_two_h2);
    density[j] = acc * norm;
  }
  return density;
}

void write_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (int a = 0; a < cloud.dim(); ++a) out << (a ? "," : "") << kAxis[a];
  if (cloud.has_density()) out << ",density";
  out << '\n';
  const auto dens = cloud.density();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    for (std::size_t a = 0; a < p.size(); ++a) out << (a ? "," : "") << format_double(p[a]);
    if (cloud.has_density()) out << ',' << format_double(dens[i]);
    out << '\n';
  }
}

PointCloud read_cloud_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("point cloud CSV is empty");
  const auto header = split_csv_line(line);
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  int dim = 0;
  while (dim < 3 && static_cast<std::size_t>(dim) < header.size() && header[static_cast<std::size_t>(dim)] == kAxis[dim])
    ++dim;
  const bool has_density = header.size() == static_cast<std::size_t>(dim) + 1 && header.back() == "density";
  if (dim == 0 || header.size() != static_cast<std::size_t>(dim) + (has_density ? 1 : 0))
    throw InvalidArgument("point cloud CSV header must be x[,y[,z]][,density]");

  std::vector<double> pos;
  std::vector<double> dens;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw InvalidArgument("point cloud CSV row " + std::to_string(row) + " has the wrong field count");
    for (std::size_t f = 0; f < fields.size(); ++f) {
      double v;
      if (!parse_double(fields[f], v))
        throw InvalidArgument("point cloud CSV row " + std::to_string(row) + " has a malformed number");
      if (f < static_cast<std::size_t>(dim))
        pos.push_back(v);
      else
        dens.push_back(v);
    }
  }
  if (has_density) return PointCloud(dim, std::move(pos), std::move(dens));
  return PointCloud(dim, std::move(pos));
}

}  // namespace pcinit
