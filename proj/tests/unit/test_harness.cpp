#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcinit/errors.hpp"
#include "pcinit/harness.hpp"

using namespace pcinit;

namespace {

Json small_config(const std::string& experiment, const std::filesystem::path& dir) {
  return Json{{"experiment", experiment},
              {"seed", 5},
              {"output_dir", dir.string()},
              {"stack", {{"depth", 3}, {"channels", 2}, {"radius", 0.3}}},
              {"cloud", {{"dim", 2}, {"n", 80}}},
              {"init", {{"sample_count", 2}}},
              {"evaluation", {{"clouds", 2}}}};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::string config_error_field(const Json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config validation names the field") {
  const TempDir dir("pcinit_cfg");
  auto j = small_config("variance_profile", dir.path);
  CHECK_NOTHROW(parse_config(j));

  j["stack"]["radius"] = -0.1;
  CHECK(config_error_field(j).find("stack.radius") != std::string::npos);

  j = small_config("variance_profile", dir.path);
  j["stack"]["depth"] = 0;
  CHECK(config_error_field(j).find("stack.depth") != std::string::npos);

  j = small_config("variance_profile", dir.path);
  j["stack"]["basis"] = "hexagon";
  CHECK(config_error_field(j).find("stack.basis") != std::string::npos);

  j = small_config("variance_profile", dir.path);
  j["stack"]["radiu"] = 0.2;
  CHECK(config_error_field(j).find("stack.radiu") != std::string::npos);

  j = small_config("warp", dir.path);
  CHECK(config_error_field(j).find("experiment") != std::string::npos);

  j = small_config("transfer_check", dir.path);
  CHECK(config_error_field(j).find("init.table") != std::string::npos);
}

TEST_CASE("defaults round-trip through the config document") {
  const ExperimentConfig defaults;
  const auto again = parse_config(defaults.to_json());
  CHECK(again.to_json() == defaults.to_json());
}

TEST_CASE("build_stack wires levels and kernels") {
  StackConfig sc;
  sc.depth = 4;
  sc.channels = 3;
  sc.in_channels = 1;
  sc.radius = 0.1;
  sc.level_radii = {0.05, 0.1};
  const auto stack = build_stack(sc, 3, 1);
  REQUIRE(stack.depth() == 4);
  CHECK(stack.layers[0].in_channels == 1);
  CHECK(stack.layers[1].in_channels == 3);
  CHECK(stack.layers[0].kernel_size() == 27);
  CHECK(stack.layers[0].radius == doctest::Approx(0.15));  // 3 x the radius of the level it writes
  CHECK(stack.levels_of(0) == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(stack.levels_of(1) == std::pair<std::size_t, std::size_t>{1, 2});
  CHECK(stack.levels_of(3) == std::pair<std::size_t, std::size_t>{2, 2});
  CHECK(stack.layers[1].radius == doctest::Approx(0.3));
  for (auto family : {BasisFamily::box, BasisFamily::linear, BasisFamily::mlp, BasisFamily::dot}) {
    sc.basis = family;
    CHECK_NOTHROW(build_stack(sc, 3, 2).validate(false));
  }
  sc.basis = BasisFamily::gaussian;
  sc.kernel_layout = "spherical_grid";
  CHECK_THROWS(build_stack(sc, 3, 2));
}

TEST_CASE("runs are deterministic and write a manifest") {
  for (const char* experiment : {"variance_profile", "correlogram", "compute_ztable"}) {
    const TempDir a("pcinit_run_a"), b("pcinit_run_b");
    auto ca = parse_config(small_config(experiment, a.path));
    auto cb = parse_config(small_config(experiment, b.path));
    if (std::string(experiment) == "correlogram") {
      ca.stack.depth = cb.stack.depth = 5;
      ca.correlogram_layers = cb.correlogram_layers = {0, 1, 5};
    }
    const auto ma = run(ca);
    const auto mb = run(cb);
    REQUIRE(ma.outputs.size() == mb.outputs.size());
    CHECK_FALSE(ma.outputs.empty());
    for (std::size_t i = 0; i < ma.outputs.size(); ++i) {
      CHECK(ma.outputs[i].name == mb.outputs[i].name);
      CHECK(ma.outputs[i].sha256 == mb.outputs[i].sha256);
      CHECK(ma.outputs[i].sha256 == sha256_hex(a.path / ma.outputs[i].name));
    }
    const auto manifest = Json::parse(slurp(a.path / "manifest.json"));
    CHECK(manifest.at("seed") == 5);
    CHECK(manifest.contains("wall_clock_seconds"));
    CHECK(manifest.at("outputs").size() == ma.outputs.size());
    CHECK_FALSE(std::filesystem::exists(a.path / "manifest.json.tmp"));
  }
}

TEST_CASE("variance experiment writes one row per layer") {
  const TempDir dir("pcinit_rows");
  run(parse_config(small_config("variance_profile", dir.path)));
  std::ifstream csv(dir.path / "variance.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  CHECK(line == "layer,variance,n");
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);
  CHECK(std::filesystem::exists(dir.path / "variance.svg"));
  CHECK(std::filesystem::exists(dir.path / "ztable.json"));
}

TEST_CASE("a computed table feeds transfer") {
  const TempDir dir("pcinit_transfer"), out("pcinit_transfer_out");
  run(parse_config(small_config("compute_ztable", dir.path)));
  auto j = small_config("transfer_check", out.path);
  j["init"]["table"] = (dir.path / "ztable.json").string();
  const auto m = run(parse_config(j));
  CHECK(m.warnings.empty());
  CHECK(std::filesystem::exists(out.path / "variance.csv"));
}

TEST_CASE("discrete equivalence check") {
  CHECK(discrete_equivalence_error(8, 8, 3, 1) <= 1e-12);
  const TempDir dir("pcinit_discrete");
  auto j = small_config("discrete_equivalence", dir.path);
  j["discrete"] = {{"trials", 3}};
  run(parse_config(j));
  std::ifstream csv(dir.path / "discrete_check.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "trial,max_rel_error");
}
