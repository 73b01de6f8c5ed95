// pcinit: config-driven runner for variance profiles, correlograms and z tables.
//
// Exit status: 0 ok, 2 bad config or usage, 3 numeric/degenerate estimate,
// 4 a check ran but missed its tolerance, 1 anything else.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "pcinit/errors.hpp"
#include "pcinit/harness.hpp"
#include "pcinit/plot.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kNumeric = 3, kCheck = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the config seed");
}

pcinit::ExperimentConfig load(const Common& c, pcinit::ExperimentKind kind, const std::string& table = {}) {
  pcinit::Json j;
  try {
    j = pcinit::read_json_file(c.config);
  } catch (const pcinit::InvalidArgument& e) {
    throw pcinit::ConfigError("<file>", e.what());
  }
  if (!j.is_object()) throw pcinit::ConfigError("<root>", "expected an object");
  j["experiment"] = std::string(pcinit::to_string(kind));
  if (!table.empty()) j["init"]["table"] = table;
  auto config = pcinit::parse_config(j);
  if (c.seed) config.seed = *c.seed;
  return config;
}

int execute(const pcinit::ExperimentConfig& config) {
  const auto manifest = pcinit::run(config);
  for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : manifest.outputs) std::cout << f.name << ' ' << f.sha256 << '\n';
  return kOk;
}

std::string defaults_footer() {
  return "Config fields and defaults (any may be omitted; see docs/config.md):\n" +
         pcinit::ExperimentConfig{}.to_json().dump(2) +
         "\n\nEnvironment: PCINIT_OUTPUT_DIR overrides output_dir.\n"
         "Exit status: 0 ok, 2 config/usage error, 3 numeric or degenerate estimate, 4 check failed, 1 other.";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point convolution initialization experiments", "pcinit"};
  app.set_version_flag("--version", std::string(PCINIT_VERSION));
  app.footer(defaults_footer());
  app.require_subcommand(1);

  Common variance_opts, correlogram_opts, compute_opts, apply_opts, discrete_opts;
  std::string table;

  auto* variance = app.add_subcommand("variance", "Per-layer variance profile (variance.csv)");
  add_common(variance, variance_opts);

  auto* correlogram = app.add_subcommand("correlogram", "Distance-binned feature correlation per layer");
  add_common(correlogram, correlogram_opts);

  auto* ztable = app.add_subcommand("ztable", "Compute or apply a z table");
  ztable->require_subcommand(1);
  auto* compute = ztable->add_subcommand("compute", "Run direct-mode initialization, write ztable.json");
  add_common(compute, compute_opts);
  auto* apply = ztable->add_subcommand("apply", "Initialize from an existing table, write the variance profile");
  add_common(apply, apply_opts);
  apply->add_option("--table", table, "z table (defaults to init.table in the config)")->check(CLI::ExistingFile);

  auto* check = app.add_subcommand("check", "Self checks");
  check->require_subcommand(1);
  auto* discrete = check->add_subcommand("discrete", "Point convolution vs discrete convolution on grids");
  add_common(discrete, discrete_opts);

  std::string csv, kind = "line_log_y", out;
  auto* plot = app.add_subcommand("plot", "Render a variance or correlogram CSV as SVG");
  plot->add_option("csv", csv, "Input CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", kind, "line | line_log_y")->capture_default_str();
  plot->add_option("-o,--out", out, "Output SVG (default: next to the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  using pcinit::ExperimentKind;
  try {
    if (*variance) return execute(load(variance_opts, ExperimentKind::variance_profile));
    if (*correlogram) return execute(load(correlogram_opts, ExperimentKind::correlogram));
    if (*compute) return execute(load(compute_opts, ExperimentKind::compute_ztable));
    if (*apply) return execute(load(apply_opts, ExperimentKind::transfer_check, table));
    if (*discrete) return execute(load(discrete_opts, ExperimentKind::discrete_equivalence));
    if (*plot) {
      std::cout << pcinit::emit_plot(csv, pcinit::parse_plot_kind(kind), out).string() << '\n';
      return kOk;
    }
  } catch (const pcinit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const pcinit::NumericOverflow& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const pcinit::DegenerateEstimate& e) {
    std::cerr << "degenerate estimate: " << e.what() << '\n';
    return kNumeric;
  } catch (const pcinit::CheckFailed& e) {
    std::cerr << "check failed: " << e.what() << '\n';
    return kCheck;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
