#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pcinit {

enum class BasisFamily { gaussian, box, linear, mlp, dot };

std::string_view to_string(BasisFamily family);
BasisFamily parse_basis_family(std::string_view name);

enum class KernelLayout { grid, sphere };

/// Coordinate frame in which box-basis kernel points live. `spherical`
/// converts offsets to (rho, theta, phi) first, as SPHConv does.
enum class BasisCoordinates { cartesian, spherical };

/// One-hidden-layer perceptron: out = w2 * relu(w1 * in + b1) + b2.
/// Matrices are row-major: w1 is hidden x inputs, w2 is outputs x hidden.
struct MlpParams {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;

  void validate() const;
  /// `scratch` must hold `hidden` values; `out` must hold `outputs` values.
  void apply(std::span<const double> in, std::span<double> scratch, std::span<double> out) const;
};

/// Parameters of one of the five basis families. `size()` is K.
struct BasisSpec {
  BasisFamily family = BasisFamily::gaussian;
  int dim = 3;
  double radius = 1.0;  ///< receptive radius the basis was built for
  std::vector<double> kernel_points;  ///< K x dim, gaussian/box/linear
  double bandwidth = 1.0;             ///< s, gaussian/linear
  BasisCoordinates coordinates = BasisCoordinates::cartesian;  ///< box only
  std::vector<double> vectors;  ///< K x dim, dot only
  std::vector<double> biases;   ///< K, dot only: weight of the constant coordinate
  MlpParams mlp;                ///< dim -> hidden -> K, mlp only

  std::size_t size() const;
  /// Throws InvalidArgument when the spec violates its invariants.
  void validate() const;

  static BasisSpec gaussian(int dim, std::vector<double> kernel_points, double bandwidth, double radius);
  static BasisSpec box(int dim, std::vector<double> kernel_points, double radius,
                       BasisCoordinates coords = BasisCoordinates::cartesian);
  static BasisSpec linear(int dim, std::vector<double> kernel_points, double bandwidth, double radius);
  static BasisSpec dot(int dim, std::vector<double> vectors, std::vector<double> biases, double radius);
  static BasisSpec mlp_basis(int dim, MlpParams params, double radius);
};

/// Kernel point layouts.
///  grid: per_axis^dim lattice over [-radius, radius] per axis; axis 0 varies fastest.
///  sphere (dim 3 only): origin followed by the 12 vertices of a regular icosahedron
///  at distance `radius`; `count` must be 13.
std::vector<double> make_kernel_points(KernelLayout layout, int dim, std::size_t per_axis_or_count,
                                       double radius);

/// (rho, theta, phi) grid for spherical box bases: rho in [0, radius],
/// theta in [0, pi], phi in [-pi, pi), cell centers of a regular subdivision.
std::vector<double> make_spherical_kernel_points(std::size_t rho_bins, std::size_t theta_bins,
                                                 std::size_t phi_bins, double radius);

/// Cartesian offset (dim 3) to (rho, theta, phi).
void to_spherical(std::span<const double> offset, std::span<double> out);

/// Evaluates all K basis functions at `offset` into `out` (size K).
void eval_basis(const BasisSpec& spec, std::span<const double> offset, std::span<double> out);
std::vector<double> eval_basis(const BasisSpec& spec, std::span<const double> offset);

/// Row-major M x K; row i equals eval_basis(spec, offsets[i]).
std::vector<double> eval_basis_batch(const BasisSpec& spec, std::span<const double> offsets);

/// First layer ~ N(0, 1/(dim radius^2)), second layer ~ N(0, 2/hidden), zero biases.
MlpParams init_mlp_basis(int dim, double radius, std::size_t hidden, std::size_t outputs, std::uint64_t seed);

/// Dot-basis vectors ~ N(0, 1/(dim radius^2)), zero biases.
BasisSpec init_dot_basis(int dim, double radius, std::size_t count, std::uint64_t seed);

}  // namespace pcinit
