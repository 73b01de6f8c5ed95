#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../fixtures.hpp"
#include "pcinit/errors.hpp"
#include "pcinit/statistics.hpp"

using namespace pcinit;

namespace {

std::vector<std::vector<FeatureMatrix>> one_layer(FeatureMatrix m) {
  m.set_layer_index(1);
  return {{std::move(m)}};
}

}  // namespace

TEST_CASE("variance profile") {
  const auto flat = layer_variance_profile(one_layer(FeatureMatrix(10, 2, std::vector<double>(20, 3.5))));
  REQUIRE(flat.entries.size() == 1);
  CHECK(flat.entries[0].variance == 0.0);
  CHECK(flat.entries[0].count == 20);
  CHECK(flat.entries[0].depth == 1);

  CHECK(layer_variance_profile(one_layer(FeatureMatrix(2, 1, std::vector<double>{-1.0, 1.0}))).entries[0].variance ==
        2.0);

  Rng rng(5);
  FeatureMatrix normal(10000, 1);
  for (double& v : normal.values()) v = 0.5 * rng.normal();
  CHECK(layer_variance_profile(one_layer(normal)).entries[0].variance == doctest::Approx(0.25).epsilon(0.05));

  // pooling across clouds and layers
  FeatureMatrix a(2, 1, std::vector<double>{0.0, 0.0}, 1), b(2, 1, std::vector<double>{2.0, 2.0}, 1);
  FeatureMatrix c(2, 1, std::vector<double>{1.0, 1.0}, 2), d(2, 1, std::vector<double>{1.0, 1.0}, 2);
  const auto pooled = layer_variance_profile({{a, c}, {b, d}});
  REQUIRE(pooled.entries.size() == 2);
  CHECK(pooled.entries[0].variance == doctest::Approx(4.0 / 3.0));
  CHECK(pooled.entries[0].count == 4);
  CHECK(pooled.entries[1].variance == 0.0);

  CHECK_THROWS_AS(layer_variance_profile(one_layer(FeatureMatrix(1, 1))), InvalidArgument);
  CHECK_THROWS_AS(layer_variance_profile({}), InvalidArgument);
  CHECK_THROWS_AS(layer_variance_profile({{a}, {a, c}}), InvalidArgument);

  std::ostringstream csv;
  write_variance_csv(csv, pooled);
  CHECK(csv.str().rfind("layer,variance,n\n1,", 0) == 0);
}

TEST_CASE("correlogram degenerate and smooth fields") {
  const auto cloud = fixtures::unit_cloud(1, 300, 2);
  const auto edges = uniform_bin_edges(10, 0.1);
  CHECK(edges.size() == 11);
  CHECK(edges.back() == 0.1);

  const auto flat = correlogram(cloud, FeatureMatrix(300, 2, std::vector<double>(600, 1.0)), edges);
  for (const auto& bin : flat.bins) {
    CHECK(bin.pairs > 0);
    CHECK_FALSE(bin.r.has_value());
  }

  FeatureMatrix ramp(300, 1);
  for (std::size_t i = 0; i < 300; ++i) ramp.at(i, 0) = cloud.point(i)[0];
  const auto smooth = correlogram(cloud, ramp, edges);
  REQUIRE(smooth.bins[0].r.has_value());
  CHECK(*smooth.bins[0].r > 0.99);
  for (const auto& bin : smooth.bins)
    if (bin.r) {
      CHECK(*bin.r <= 1.0);
      CHECK(*bin.r >= -1.0);
    }

  CHECK_THROWS_AS(correlogram(PointCloud(1, {0.0}), FeatureMatrix(1, 1), edges), InvalidArgument);
  CHECK_THROWS_AS(correlogram(cloud, FeatureMatrix(3, 1), edges), InvalidArgument);
  const std::vector<double> bad{0.1, 0.05};
  CHECK_THROWS_AS(correlogram(cloud, ramp, bad), InvalidArgument);
  CHECK_THROWS_AS(uniform_bin_edges(0, 1.0), InvalidArgument);
}

TEST_CASE("correlogram of independent features shows no structure") {
  const auto cloud = fixtures::unit_cloud(1, 1000, 8);
  const auto f = fixtures::normal_features(1000, 2, 9);
  const auto c = correlogram(cloud, f, uniform_bin_edges(20, 0.2));
  for (const auto& bin : c.bins) {
    REQUIRE(bin.pairs >= 200);
    REQUIRE(bin.r.has_value());
    CHECK(std::abs(*bin.r) < 0.1);
  }
}

TEST_CASE("correlogram is invariant to relabeling and translation") {
  const auto cloud = fixtures::unit_cloud(2, 200, 3);
  FeatureMatrix f(200, 1);
  for (std::size_t i = 0; i < 200; ++i) f.at(i, 0) = std::sin(6.0 * cloud.point(i)[0]) + 0.1 * cloud.point(i)[1];
  const auto edges = uniform_bin_edges(8, 0.4);
  const auto base = correlogram(cloud, f, edges);

  std::vector<std::size_t> perm(200);
  for (std::size_t i = 0; i < 200; ++i) perm[i] = (i * 37 + 11) % 200;
  FeatureMatrix g(200, 1);
  for (std::size_t i = 0; i < 200; ++i) g.at(i, 0) = f.at(perm[i], 0);
  const auto relabeled = correlogram(cloud.subset(perm), g, edges);
  const auto moved = correlogram(cloud.translated(std::vector<double>{8.0, -4.0}), f, edges);

  for (std::size_t b = 0; b < base.bins.size(); ++b) {
    for (const auto* other : {&relabeled, &moved}) {
      CHECK(other->bins[b].pairs == base.bins[b].pairs);
      REQUIRE(other->bins[b].r.has_value() == base.bins[b].r.has_value());
      if (base.bins[b].r) CHECK(*other->bins[b].r == doctest::Approx(*base.bins[b].r).epsilon(1e-12));
    }
  }

  std::ostringstream csv;
  const Correlogram one{3, {{0.0, 0.1, 0, std::nullopt}, {0.1, 0.2, 5, 0.5}}};
  write_correlogram_csv(csv, std::span(&one, 1));
  CHECK(csv.str() == "layer,bin_lo,bin_hi,pairs,r\n3,0,0.1,0,null\n3,0.1,0.2,5,0.5\n");
}
