#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcinit/convolution.hpp"
#include "pcinit/errors.hpp"
#include "pcinit/initialization.hpp"
#include "pcinit/serialization.hpp"
#include "pcinit/statistics.hpp"

namespace pcinit {

/// Uniform description of a deep stack of identical-shape layers.
struct StackConfig {
  std::size_t depth = 25;
  std::size_t channels = 16;
  std::size_t in_channels = 0;  ///< 0 means `channels`
  BasisFamily basis = BasisFamily::gaussian;
  EstimatorMode estimator = EstimatorMode::mc;
  double radius = 0.2;
  Nonlinearity nonlinearity = Nonlinearity::none;
  /// grid | sphere | spherical_grid (box only)
  std::string kernel_layout = "grid";
  std::size_t kernel_per_axis = 3;
  /// Kernel points span kernel_extent * radius.
  double kernel_extent = 2.0 / 3.0;
  /// gaussian: s = (bandwidth_scale * radius)^2; linear: s = bandwidth_scale * radius.
  double bandwidth_scale = 0.5;
  std::size_t mlp_hidden = 8;
  std::size_t basis_size = 8;  ///< K for mlp and dot bases
  std::size_t density_hidden = 4;
  std::vector<double> level_radii;
};

/// Builds an uninitialized stack. Learned basis and density parameters are
/// drawn per layer from `seed`.
ConvStack build_stack(const StackConfig& config, int dim, std::uint64_t seed);

enum class ExperimentKind { variance_profile, correlogram, compute_ztable, transfer_check, discrete_equivalence };

std::string_view to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::variance_profile;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "pcinit_out";
  bool plots = true;

  StackConfig stack;
  CloudGenerator cloud;
  FeatureModel features = FeatureModel::gaussian(1.0);

  InitScheme scheme = InitScheme::variance_aware_direct;
  double target_variance = 1.0;
  std::optional<double> gain;  ///< default from the nonlinearity
  std::size_t sample_count = 16;
  std::filesystem::path table_path;  ///< transfer input

  std::size_t eval_clouds = 4;
  std::optional<CloudGenerator> eval_cloud;  ///< defaults to `cloud`

  std::vector<int> correlogram_layers{0, 1, 5, 10, 20};
  std::size_t correlogram_bins = 20;
  double correlogram_max_distance = 0.2;

  std::size_t discrete_trials = 100;
  std::size_t discrete_height = 8;
  std::size_t discrete_width = 8;
  std::size_t discrete_channels = 3;

  InitPlan plan() const;
  Json to_json() const;
};

/// Parses and validates a config document. Throws ConfigError naming the field.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Initializes `stack` under `config`'s scheme. Transfer reads `config.table_path`.
struct InitOutcome {
  ConvStack stack;
  std::optional<ZTable> table;
  std::vector<double> weight_variances;
  std::vector<std::string> warnings;
};
InitOutcome initialize_stack(const ConvStack& stack, const ExperimentConfig& config, const InitPlan& plan,
                             const std::optional<ZTable>& table = std::nullopt);

/// Forward passes on `clouds` fresh clouds; per-layer pooled variance for layers 1..depth.
VarianceProfile evaluate_variance(const ConvStack& stack, const CloudGenerator& generator, const FeatureModel& model,
                                  std::size_t clouds, std::uint64_t seed);

/// Largest relative error between discrete_conv_reference and conv_forward on a
/// grid-aligned cloud (box basis, 3 taps per axis, sum estimator) over interior pixels.
double discrete_equivalence_error(std::size_t height, std::size_t width, std::size_t channels, std::uint64_t seed);

struct OutputFile {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes;
};

struct RunManifest {
  Json config;
  std::string version;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
  std::vector<OutputFile> outputs;
  std::vector<std::string> warnings;
  Json to_json() const;
};

/// Thrown when a check experiment runs but its tolerance is not met.
class CheckFailed : public Error {
 public:
  using Error::Error;
};

/// Executes the experiment, writes CSV/SVG/JSON outputs and `manifest.json`
/// into the output directory (overridden by $PCINIT_OUTPUT_DIR when set).
RunManifest run(const ExperimentConfig& config);

std::string sha256_hex(const std::filesystem::path& path);

}  // namespace pcinit
