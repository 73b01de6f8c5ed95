#include <doctest.h>

#include <cmath>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "pcinit/errors.hpp"
#include "pcinit/initialization.hpp"

using namespace pcinit;

namespace {

ConvStack one_point_stack() {
  ConvStack stack;
  ConvLayer layer;
  layer.basis = BasisSpec::box(1, {0.0}, 1.0);
  layer.estimator = EstimatorSpec::sum();
  layer.radius = 1.0;
  stack.layers.push_back(layer);
  return stack;
}

}  // namespace

TEST_CASE("classic variances") {
  CHECK(he_variance(9, 64) == doctest::Approx(2.0 / 576.0).epsilon(1e-15));
  CHECK(he_variance(1, 2) == 1.0);
  CHECK(he_variance(1, 1) == 2.0);
  CHECK(standard_variance(16, 128) == 2.0 / 2048.0);
  CHECK(standard_variance(2, 1) == 1.0);
  CHECK(standard_variance(1, 2) == 1.0);
  CHECK_THROWS_AS(he_variance(0, 3), InvalidArgument);
  CHECK_THROWS_AS(standard_variance(3, 0), InvalidArgument);
}

TEST_CASE("weight sampler") {
  const auto w = sample_weights(0.01, 10, 100, 100, 1);
  REQUIRE(w.size() == 100000);
  double mean = 0.0, sq = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());
  for (double v : w) sq += (v - mean) * (v - mean);
  const double var = sq / static_cast<double>(w.size() - 1);
  CHECK(std::abs(mean) <= 0.001);
  CHECK(var == doctest::Approx(0.01).epsilon(0.05));
  CHECK(w == sample_weights(0.01, 10, 100, 100, 1));
  CHECK(w != sample_weights(0.01, 10, 100, 100, 2));
  CHECK_THROWS_AS(sample_weights(0.0, 1, 1, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_weights(std::nan(""), 1, 1, 1, 1), InvalidArgument);
}

TEST_CASE("z of the one-point construction") {
  const auto stack = one_point_stack();
  for (double f : {0.5, 3.0, -2.0}) {
    std::vector<SampleCloud> samples{{{PointCloud(1, {0.0})}, FeatureMatrix(1, 1, std::vector<double>{f})}};
    CHECK(estimate_z(stack, 0, samples) == f * f);
  }
  // Var[w] = gain * target / (C f^2)
  CloudGenerator single{CloudGenerator::Kind::grid, 1, 1};
  InitPlan plan;
  plan.gain = 2.0;
  plan.target_variance = 0.5;
  const auto r = variance_aware_init(stack, single, 3, plan, FeatureModel::constant(2.0));
  REQUIRE(r.weight_variances.size() == 1);
  CHECK(r.table.entries[0].z == 4.0);
  CHECK(r.weight_variances[0] == doctest::Approx(2.0 * 0.5 / 4.0).epsilon(1e-15));
}

TEST_CASE("estimate_z matches the double-loop oracle") {
  std::size_t instances = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto family = fixtures::kFamilies[seed % 5];
    const auto mode = fixtures::kModes[(seed / 5) % 4];
    const int dim = 1 + static_cast<int>((seed / 20) % 3);
    Rng rng(seed);
    const double radius = 0.15 + 0.2 * rng.uniform01();
    const std::size_t cin = 1 + rng.below(3);

    // Two layers so the second z runs over propagated activations.
    ConvStack stack;
    stack.layers.push_back(fixtures::random_layer(family, mode, dim, cin, 2, radius, seed));
    stack.layers.push_back(fixtures::random_layer(family, mode, dim, 2, 2, radius, derive_seed(seed, 5), false));
    stack.layers[0].nonlinearity = seed % 3 ? Nonlinearity::none : Nonlinearity::relu;

    CloudGenerator gen;
    gen.dim = dim;
    gen.n = 15 + rng.below(40);
    const auto samples = draw_sample_clouds(stack, gen, FeatureModel::gaussian(1.0), 3, seed);
    std::vector<FeatureMatrix> inputs, hidden;
    std::vector<PointCloud> clouds;
    for (const auto& s : samples) {
      inputs.push_back(s.features);
      hidden.push_back(oracle::conv(stack.layers[0], s.features, s.levels[0], s.levels[0]));
      clouds.push_back(s.levels[0]);
    }
    const double z0 = estimate_z(stack, 0, samples);
    const double z1 = estimate_z(stack, 1, samples);
    CHECK(z0 >= 0.0);
    CHECK(oracle::rel_err(z0, oracle::z(stack.layers[0], inputs, clouds)) <= 1e-9);
    CHECK(oracle::rel_err(z1, oracle::z(stack.layers[1], hidden, clouds)) <= 1e-9);
    instances += 2;
  }
  CHECK(instances >= 50);
}

TEST_CASE("estimate_z rejects degenerate input") {
  const auto stack = one_point_stack();
  std::vector<SampleCloud> zero{{{PointCloud(1, {0.0})}, FeatureMatrix(1, 1, std::vector<double>{0.0})}};
  CHECK_THROWS_AS(estimate_z(stack, 0, zero), DegenerateEstimate);
  CHECK_THROWS_AS(estimate_z(stack, 0, std::span<const SampleCloud>{}), DegenerateEstimate);
  CHECK_THROWS_AS(estimate_z(stack, 1, zero), InvalidArgument);

  // An uninitialized prefix cannot be propagated.
  ConvStack two = stack;
  two.layers.push_back(two.layers[0]);
  std::vector<SampleCloud> ok{{{PointCloud(1, {0.0})}, FeatureMatrix(1, 1, std::vector<double>{1.0})}};
  CHECK_THROWS_AS(estimate_z(two, 1, ok), InvalidArgument);
}

TEST_CASE("init plan and scheme parsing") {
  CHECK(parse_init_scheme("he") == InitScheme::he);
  CHECK(parse_init_scheme(to_string(InitScheme::variance_aware_transfer)) == InitScheme::variance_aware_transfer);
  CHECK_THROWS_AS(parse_init_scheme("xavier"), InvalidArgument);
  InitPlan bad;
  bad.gain = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = {};
  bad.target_variance = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK(InitPlan::default_gain(Nonlinearity::relu) == 2.0);
  CHECK(InitPlan::default_gain(Nonlinearity::none) == 1.0);
}

TEST_CASE("z table lookup") {
  ZTable t;
  t.entries = {{1, 2.0}, {2, 3.0}, {4, 5.0}};
  CHECK(t.lookup(2).z == 3.0);
  CHECK(t.lookup(2).exact);
  CHECK(t.lookup(3).z == 3.0);
  CHECK_FALSE(t.lookup(3).exact);
  CHECK(t.lookup(9).depth_used == 4);
  CHECK(t.lookup(0).depth_used == 1);
  t.entries.push_back({4, 1.0});
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  t.entries = {{1, 0.0}};
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  CHECK_THROWS_AS(ZTable{}.lookup(1), InvalidArgument);
}

TEST_CASE("initialization is deterministic and transfer reproduces direct mode") {
  ConvStack stack;
  for (int l = 0; l < 4; ++l)
    stack.layers.push_back(
        fixtures::random_layer(BasisFamily::gaussian, EstimatorMode::mc, 2, l == 0 ? 1 : 3, 3, 0.2, 40 + l, false));
  CloudGenerator gen;
  gen.dim = 2;
  gen.n = 120;
  InitPlan plan;
  plan.seed = 77;
  const auto a = variance_aware_init(stack, gen, 4, plan);
  const auto b = variance_aware_init(stack, gen, 4, plan);
  REQUIRE(a.table.entries.size() == 4);
  for (std::size_t l = 0; l < 4; ++l) {
    CHECK(a.stack.layers[l].weights == b.stack.layers[l].weights);
    CHECK(a.table.entries[l].z == b.table.entries[l].z);
    CHECK(a.table.entries[l].depth == static_cast<int>(l) + 1);
  }
  CHECK(a.table.meta.basis_family == "gaussian");
  CHECK(a.table.meta.sample_count == 4);

  InitPlan transfer = plan;
  transfer.scheme = InitScheme::variance_aware_transfer;
  const auto t = transfer_init(stack, a.table, transfer);
  CHECK(t.warnings.empty());
  for (std::size_t l = 0; l < 4; ++l) {
    CHECK(t.weight_variances[l] == a.weight_variances[l]);
    CHECK(t.stack.layers[l].weights == a.stack.layers[l].weights);
  }

  // A deeper stack reuses the deepest entry and says so.
  ConvStack deeper = stack;
  deeper.layers.push_back(deeper.layers.back());
  const auto d = transfer_init(deeper, a.table, transfer);
  REQUIRE(d.warnings.size() == 1);
  CHECK(d.warnings[0].find("reusing depth 4") != std::string::npos);
  CHECK(d.weight_variances[4] == a.weight_variances[3]);

  // A different basis family is flagged.
  ConvStack other = stack;
  other.layers[0] = fixtures::random_layer(BasisFamily::box, EstimatorMode::mc, 2, 1, 3, 0.2, 1, false);
  CHECK_FALSE(transfer_init(other, a.table, transfer).warnings.empty());

  InitPlan he = plan;
  he.scheme = InitScheme::he;
  const auto c = classic_init(stack, he);
  CHECK(c.weight_variances[1] == he_variance(stack.layers[1].kernel_size(), 3));
  CHECK_THROWS_AS(classic_init(stack, plan), InvalidArgument);
  CHECK_THROWS_AS(variance_aware_init(stack, gen, 4, he), InvalidArgument);
}

TEST_CASE("cloud generators") {
  CloudGenerator grid{CloudGenerator::Kind::grid, 2, 4};
  grid.spacing = 0.5;
  const auto g = grid.generate(1);
  CHECK(g.size() == 16);
  CHECK(g.point(1)[0] == 0.5);
  CHECK(g.point(4)[1] == 0.5);
  CloudGenerator clustered{CloudGenerator::Kind::clustered, 3, 200};
  CHECK(clustered.generate(3).positions() == clustered.generate(3).positions());
  CHECK_FALSE(clustered.describe().empty());
  CHECK_THROWS_AS(make_grid_cloud(2, 0, 1.0), InvalidArgument);
}
