#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "pcinit/errors.hpp"
#include "pcinit/geometry.hpp"

using namespace pcinit;

TEST_CASE("uniform cloud stays inside its box and is seed-deterministic") {
  const Interval unit{0.0, 1.0};
  const auto a = generate_uniform_cloud(1, 1000, std::span(&unit, 1), 7);
  CHECK(a.size() == 1000);
  for (double x : a.positions()) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
  const auto b = generate_uniform_cloud(1, 1000, std::span(&unit, 1), 7);
  CHECK(a.positions() == b.positions());

  const Interval boxes[] = {{0.0, 1.0}, {-2.0, -1.0}};
  const auto c = generate_uniform_cloud(2, 200, boxes, 3);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c.point(i)[1] >= -2.0);
    CHECK(c.point(i)[1] <= -1.0);
  }
}

TEST_CASE("uniform cloud rejects degenerate input") {
  const Interval flat{0.0, 0.0};
  CHECK_THROWS_AS(generate_uniform_cloud(1, 1, std::span(&flat, 1), 1), InvalidArgument);
  const Interval unit{0.0, 1.0};
  CHECK_THROWS_AS(generate_uniform_cloud(1, 0, std::span(&unit, 1), 1), InvalidArgument);
  CHECK_THROWS_AS(generate_uniform_cloud(4, 10, std::span(&unit, 1), 1), InvalidArgument);
}

TEST_CASE("point cloud validates coordinates and densities") {
  CHECK_THROWS_AS(PointCloud(1, {}), InvalidArgument);
  CHECK_THROWS_AS(PointCloud(2, {0.0, 1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(PointCloud(1, {std::nan("")}), InvalidArgument);
  CHECK_THROWS_AS(PointCloud(1, {0.0, 1.0}, std::vector<double>{1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(PointCloud(1, {0.0, 1.0}, std::vector<double>{1.0}), InvalidArgument);
  const PointCloud ok(1, {0.0, 1.0}, std::vector<double>{1.0, 2.0});
  CHECK(ok.has_density());
  CHECK_FALSE(ok.without_density().has_density());
}

TEST_CASE("clustered cloud: count, determinism and cluster mean") {
  const auto c = generate_clustered_cloud(3, 300, 3, 0.05, 11);
  CHECK(c.size() == 300);
  CHECK(c.positions() == generate_clustered_cloud(3, 300, 3, 0.05, 11).positions());

  const double spread = 0.1;
  const std::size_t n = 100;
  const auto blob = generate_clustered_cloud(2, n, 1, spread, 3);
  const auto center = cluster_centers(2, 1, 3);
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += blob.point(i)[axis];
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean - center[axis]) < 3.0 * spread / std::sqrt(static_cast<double>(n)));
  }

  CHECK_THROWS_AS(generate_clustered_cloud(2, 10, 0, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_clustered_cloud(2, 2, 3, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_clustered_cloud(2, 10, 2, 0.0, 1), InvalidArgument);
}

TEST_CASE("radius neighbors: hand examples and closed ball") {
  const PointCloud q(1, {0.0});
  const PointCloud s(1, {0.0, 0.5, 2.0});
  const auto nb = radius_neighbors(q, s, 1.0);
  const auto got = nb.neighbors(0);
  CHECK(std::vector<std::uint32_t>(got.begin(), got.end()) == std::vector<std::uint32_t>{0, 1});

  // 0.25 and 0.75 are exact in binary, so the pair sits exactly on the sphere.
  const PointCloud pair(1, {0.25, 0.75});
  CHECK(radius_neighbors(pair, pair, 0.5).neighbors(0).size() == 2);
  CHECK(radius_neighbors(pair, pair, 0.49).neighbors(0).size() == 1);

  CHECK_THROWS_AS(radius_neighbors(q, PointCloud(2, {0.0, 0.0}), 1.0), InvalidArgument);
  CHECK_THROWS_AS(radius_neighbors(q, s, 0.0), InvalidArgument);
}

TEST_CASE("radius neighbors equal brute force on 120 random instances") {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const int dim = 1 + static_cast<int>(seed % 3);
    Rng rng(seed);
    const std::size_t nq = 1 + rng.below(80);
    const std::size_t ns = 1 + rng.below(200);
    const double radius = 0.02 + 0.3 * rng.uniform01();
    const auto queries = fixtures::unit_cloud(dim, nq, derive_seed(seed, 1));
    const auto support = fixtures::unit_cloud(dim, ns, derive_seed(seed, 2));
    const auto got = radius_neighbors(queries, support, radius);
    const auto want = oracle::neighbors(queries, support, radius);
    REQUIRE(got.query_count() == nq);
    for (std::size_t i = 0; i < nq; ++i) {
      const auto row = got.neighbors(i);
      CHECK(std::vector<std::size_t>(row.begin(), row.end()) == want[i]);
    }
  }
  // one larger instance
  const auto cloud = fixtures::unit_cloud(3, 500, 99);
  const auto got = radius_neighbors(cloud, cloud, 0.2);
  const auto want = oracle::neighbors(cloud, cloud, 0.2);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto row = got.neighbors(i);
    CHECK(std::vector<std::size_t>(row.begin(), row.end()) == want[i]);
  }
}

namespace {

void check_poisson(const PointCloud& cloud, double radius, std::uint64_t seed) {
  const auto keep = poisson_disk_indices(cloud, radius, seed);
  REQUIRE_FALSE(keep.empty());
  CHECK(std::is_sorted(keep.begin(), keep.end()));
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = a + 1; b < keep.size(); ++b)
      CHECK(oracle::dist2(cloud, keep[a], cloud, keep[b]) >= radius * radius);
  // Maximality: every rejected point is blocked by an accepted one.
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::binary_search(keep.begin(), keep.end(), i)) continue;
    bool blocked = false;
    for (std::size_t k : keep) blocked = blocked || oracle::dist2(cloud, i, cloud, k) < radius * radius;
    CHECK(blocked);
  }
}

}  // namespace

TEST_CASE("poisson disk subsampling: separation and maximality") {
  const PointCloud single(2, {0.3, 0.4});
  CHECK(poisson_disk_subsample(single, 10.0, 1).size() == 1);

  const PointCloud close(1, {0.0, 0.05});
  CHECK(poisson_disk_subsample(close, 0.1, 5).size() == 1);

  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.1 * i);
  const PointCloud line(1, grid);
  for (std::uint64_t seed = 0; seed < 10; ++seed) check_poisson(line, 0.1, seed);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int dim = 1 + static_cast<int>(seed % 3);
    check_poisson(fixtures::unit_cloud(dim, 300, seed), 0.05 + 0.01 * static_cast<double>(seed % 5), seed);
  }
  const auto cloud = fixtures::unit_cloud(2, 400, 4);
  CHECK(poisson_disk_indices(cloud, 0.1, 9) == poisson_disk_indices(cloud, 0.1, 9));
}

TEST_CASE("kernel density estimate") {
  SUBCASE("single point is the normalizing constant") {
    const double h = 0.3;
    for (int dim = 1; dim <= 3; ++dim) {
      const PointCloud one(dim, std::vector<double>(static_cast<std::size_t>(dim), 0.5));
      CHECK(estimate_density(one, h)[0] == doctest::Approx(std::pow(2.0 * std::numbers::pi * h * h, -dim / 2.0)));
    }
  }
  SUBCASE("double-loop oracle") {
    const auto cloud = fixtures::unit_cloud(2, 200, 21);
    const auto got = estimate_density(cloud, 0.05);
    const auto want = oracle::kde(cloud, 0.05);
    double interior = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK(oracle::rel_err(got[i], want[i]) < 1e-12);
      const auto p = cloud.point(i);
      if (p[0] > 0.15 && p[0] < 0.85 && p[1] > 0.15 && p[1] < 0.85) {
        interior += got[i];
        ++count;
      }
    }
    // The estimate is a pdf, so N * p ~ 200 in the interior, except that the
    // self term adds 1 / (N 2 pi h^2) ~ 0.32 to every point. Check the
    // neighbor part against 200 +- 30% and the whole against its expectation.
    const double self = 1.0 / (200.0 * 2.0 * std::numbers::pi * 0.05 * 0.05);
    const double mean = interior / static_cast<double>(count);
    CHECK(200.0 * (mean - self) > 0.7 * 200.0);
    CHECK(200.0 * (mean - self) < 1.3 * 200.0);
    CHECK(mean == doctest::Approx(1.0 + self).epsilon(0.15));
  }
  SUBCASE("translation and permutation invariance") {
    const auto cloud = fixtures::unit_cloud(3, 150, 8);
    const std::vector<double> shift{4.0, -2.0, 8.0};
    const auto a = estimate_density(cloud, 0.1);
    const auto b = estimate_density(cloud.translated(shift), 0.1);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(oracle::rel_err(a[i], b[i]) < 1e-12);

    std::vector<std::size_t> perm(cloud.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 7 + 3) % perm.size();
    const auto c = estimate_density(cloud.subset(perm), 0.1);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(oracle::rel_err(c[i], a[perm[i]]) < 1e-12);
  }
  CHECK_THROWS_AS(estimate_density(PointCloud(1, {0.0}), 0.0), InvalidArgument);
}

TEST_CASE("cloud CSV round trip") {
  const auto cloud = fixtures::unit_cloud(3, 20, 5);
  const auto dense = cloud.with_density(estimate_density(cloud, 0.2));
  for (const auto* c : {&cloud, &dense}) {
    std::stringstream ss;
    write_cloud_csv(ss, *c);
    const auto back = read_cloud_csv(ss);
    CHECK(back.positions() == c->positions());
    CHECK(back.has_density() == c->has_density());
    if (c->has_density())
      CHECK(std::equal(back.density().begin(), back.density().end(), c->density().begin()));
  }
  std::stringstream bad("x,y\n0.1,zz\n");
  CHECK_THROWS_AS(read_cloud_csv(bad), InvalidArgument);
}
