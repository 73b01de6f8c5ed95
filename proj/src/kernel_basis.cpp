#include "pcinit/kernel_basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pcinit/errors.hpp"
#include "pcinit/rng.hpp"

namespace pcinit {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double dist2(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

}  // namespace

std::string_view to_string(BasisFamily family) {
  switch (family) {
    case BasisFamily::gaussian: return "gaussian";
    case BasisFamily::box: return "box";
    case BasisFamily::linear: return "linear";
    case BasisFamily::mlp: return "mlp";
    case BasisFamily::dot: return "dot";
  }
  return "?";
}

BasisFamily parse_basis_family(std::string_view name) {
  if (name == "gaussian") return BasisFamily::gaussian;
  if (name == "box") return BasisFamily::box;
  if (name == "linear") return BasisFamily::linear;
  if (name == "mlp") return BasisFamily::mlp;
  if (name == "dot") return BasisFamily::dot;
  throw InvalidArgument("unknown basis family '" + std::string(name) + "'");
}

void MlpParams::validate() const {
  if (inputs == 0 || hidden == 0 || outputs == 0) throw InvalidArgument("mlp sizes must be positive");
  if (w1.size() != hidden * inputs || b1.size() != hidden || w2.size() != outputs * hidden || b2.size() != outputs)
    throw InvalidArgument("mlp parameter arrays have inconsistent sizes");
  if (!all_finite(w1) || !all_finite(b1) || !all_finite(w2) || !all_finite(b2))
    throw InvalidArgument("mlp parameters must be finite");
}

void MlpParams::apply(std::span<const double> in, std::span<double> scratch, std::span<double> out) const {
  for (std::size_t h = 0; h < hidden; ++h) {
    double acc = b1[h];
    for (std::size_t j = 0; j < inputs; ++j) acc += w1[h * inputs + j] * in[j];
    scratch[h] = acc > 0.0 ? acc : 0.0;
  }
  for (std::size_t o = 0; o < outputs; ++o) {
    double acc = b2[o];
    for (std::size_t h = 0; h < hidden; ++h) acc += w2[o * hidden + h] * scratch[h];
    out[o] = acc;
  }
}

std::size_t BasisSpec::size() const {
  switch (family) {
    case BasisFamily::gaussian:
    case BasisFamily::box:
    case BasisFamily::linear: return kernel_points.size() / static_cast<std::size_t>(std::max(dim, 1));
    case BasisFamily::dot: return biases.size();
    case BasisFamily::mlp: return mlp.outputs;
  }
  return 0;
}

void BasisSpec::validate() const {
  if (dim < 1 || dim > 3) throw InvalidArgument("basis dimension must be 1, 2 or 3");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("basis radius must be positive");
  const auto d = static_cast<std::size_t>(dim);
  switch (family) {
    case BasisFamily::gaussian:
    case BasisFamily::linear:
      if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidArgument("basis bandwidth must be positive");
      [[fallthrough]];
    case BasisFamily::box:
      if (coordinates == BasisCoordinates::spherical && (family != BasisFamily::box || dim != 3))
        throw InvalidArgument("spherical coordinates need a 3D box basis");
      if (kernel_points.empty() || kernel_points.size() % d != 0)
        throw InvalidArgument("kernel points must be a non-empty K x dim array");
      if (!all_finite(kernel_points)) throw InvalidArgument("kernel points must be finite");
      break;
    case BasisFamily::dot:
      if (biases.empty() || vectors.size() != biases.size() * d)
        throw InvalidArgument("dot basis needs K x dim vectors and K biases");
      if (!all_finite(vectors) || !all_finite(biases)) throw InvalidArgument("dot basis parameters must be finite");
      break;
    case BasisFamily::mlp:
      mlp.validate();
      if (mlp.inputs != d) throw InvalidArgument("mlp basis input width must equal the dimension");
      break;
  }
}

BasisSpec BasisSpec::gaussian(int dim, std::vector<double> kernel_points, double bandwidth, double radius) {
  BasisSpec s;
  s.family = BasisFamily::gaussian;
  s.dim = dim;
  s.kernel_points = std::move(kernel_points);
  s.bandwidth = bandwidth;
  s.radius = radius;
  s.validate();
  return s;
}

BasisSpec BasisSpec::box(int dim, std::vector<double> kernel_points, double radius, BasisCoordinates coords) {
  BasisSpec s;
  s.family = BasisFamily::box;
  s.dim = dim;
  s.kernel_points = std::move(kernel_points);
  s.radius = radius;
  s.coordinates = coords;
  s.validate();
  return s;
}

BasisSpec BasisSpec::linear(int dim, std::vector<double> kernel_points, double bandwidth, double radius) {
  BasisSpec s = gaussian(dim, std::move(kernel_points), bandwidth, radius);
  s.family = BasisFamily::linear;
  return s;
}

BasisSpec BasisSpec::dot(int dim, std::vector<double> vectors, std::vector<double> biases, double radius) {
  BasisSpec s;
  s.family = BasisFamily::dot;
  s.dim = dim;
  s.vectors = std::move(vectors);
  s.biases = std::move(biases);
  s.radius = radius;
  s.validate();
  return s;
}

BasisSpec BasisSpec::mlp_basis(int dim, MlpParams params, double radius) {
  BasisSpec s;
  s.family = BasisFamily::mlp;
  s.dim = dim;
  s.mlp = std::move(params);
  s.radius = radius;
  s.validate();
  return s;
}

std::vector<double> make_kernel_points(KernelLayout layout, int dim, std::size_t per_axis_or_count, double radius) {
  if (dim < 1 || dim > 3) throw InvalidArgument("kernel point dimension must be 1, 2 or 3");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("kernel radius must be positive");
  const auto d = static_cast<std::size_t>(dim);

  if (layout == KernelLayout::sphere) {
    if (dim != 3) throw InvalidArgument("sphere layout requires dim 3");
    if (per_axis_or_count != 13) throw InvalidArgument("sphere layout has exactly 13 points (center + icosahedron)");
    const double phi = std::numbers::phi;
    const double scale = radius / std::sqrt(1.0 + phi * phi);
    std::vector<double> pts = {0.0, 0.0, 0.0};
    // Cyclic permutations of (0, +-1, +-phi).
    for (int perm = 0; perm < 3; ++perm) {
      for (double s1 : {-1.0, 1.0}) {
        for (double s2 : {-1.0, 1.0}) {
          double v[3];
          v[perm] = 0.0;
          v[(perm + 1) % 3] = s1;
          v[(perm + 2) % 3] = s2 * phi;
          for (double c : v) pts.push_back(c * scale);
        }
      }
    }
    return pts;
  }

  const std::size_t per_axis = per_axis_or_count;
  if (per_axis < 1) throw InvalidArgument("grid layout needs at least one point per axis");
  std::size_t total = 1;
  for (std::size_t a = 0; a < d; ++a) total *= per_axis;
  std::vector<double> pts;
  pts.reserve(total * d);
  const auto coord = [&](std::size_t t) {
    if (per_axis == 1) return 0.0;
    return -radius + 2.0 * radius * static_cast<double>(t) / static_cast<double>(per_axis - 1);
  };
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (std::size_t a = 0; a < d; ++a) {
      pts.push_back(coord(rest % per_axis));
      rest /= per_axis;
    }
  }
  return pts;
}

std::vector<double> make_spherical_kernel_points(std::size_t rho_bins, std::size_t theta_bins, std::size_t phi_bins,
                                                 double radius) {
  if (rho_bins == 0 || theta_bins == 0 || phi_bins == 0) throw InvalidArgument("spherical grid bins must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("kernel radius must be positive");
  std::vector<double> pts;
  pts.reserve(rho_bins * theta_bins * phi_bins * 3);
  for (std::size_t p = 0; p < phi_bins; ++p) {
    for (std::size_t t = 0; t < theta_bins; ++t) {
      for (std::size_t r = 0; r < rho_bins; ++r) {
        pts.push_back(radius * (static_cast<double>(r) + 0.5) / static_cast<double>(rho_bins));
        pts.push_back(std::numbers::pi * (static_cast<double>(t) + 0.5) / static_cast<double>(theta_bins));
        pts.push_back(-std::numbers::pi + 2.0 * std::numbers::pi * (static_cast<double>(p) + 0.5) /
                                              static_cast<double>(phi_bins));
      }
    }
  }
  return pts;
}

void to_spherical(std::span<const double> offset, std::span<double> out) {
  const double x = offset[0], y = offset[1], z = offset[2];
  const double rho = std::sqrt(x * x + y * y + z * z);
  out[0] = rho;
  out[1] = rho > 0.0 ? std::acos(std::clamp(z / rho, -1.0, 1.0)) : 0.0;
  double phi = std::atan2(y, x);
  if (phi >= std::numbers::pi) phi -= 2.0 * std::numbers::pi;
  out[2] = phi;
}

void eval_basis(const BasisSpec& spec, std::span<const double> offset, std::span<double> out) {
  const auto d = static_cast<std::size_t>(spec.dim);
  const std::size_t k = spec.size();
  switch (spec.family) {
    case BasisFamily::gaussian: {
      const double inv_s = 1.0 / spec.bandwidth;
      for (std::size_t i = 0; i < k; ++i)
        out[i] = std::exp(-dist2(spec.kernel_points.data() + i * d, offset.data(), d) * inv_s);
      break;
    }
    case BasisFamily::linear: {
      const double inv_s = 1.0 / spec.bandwidth;
      for (std::size_t i = 0; i < k; ++i) {
        const double v = 1.0 - std::sqrt(dist2(spec.kernel_points.data() + i * d, offset.data(), d)) * inv_s;
        out[i] = v > 0.0 ? v : 0.0;
      }
      break;
    }
    case BasisFamily::box: {
      double local[3];
      const double* q = offset.data();
      if (spec.coordinates == BasisCoordinates::spherical) {
        to_spherical(offset, local);
        q = local;
      }
      // Strict < keeps the lowest index on ties.
      std::size_t best = 0;
      double best_d2 = dist2(spec.kernel_points.data(), q, d);
      for (std::size_t i = 1; i < k; ++i) {
        const double d2 = dist2(spec.kernel_points.data() + i * d, q, d);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = i;
        }
      }
      std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
      out[best] = 1.0;
      break;
    }
    case BasisFamily::dot: {
      for (std::size_t i = 0; i < k; ++i) {
        double acc = 0.0;
        for (std::size_t a = 0; a < d; ++a) acc += spec.vectors[i * d + a] * offset[a];
        out[i] = acc + spec.biases[i];
      }
      break;
    }
    case BasisFamily::mlp: {
      double scratch_small[64];
      std::vector<double> scratch_big;
      std::span<double> scratch(scratch_small, spec.mlp.hidden);
      if (spec.mlp.hidden > 64) {
        scratch_big.resize(spec.mlp.hidden);
        scratch = scratch_big;
      }
      spec.mlp.apply(offset, scratch, out);
      break;
    }
  }
}

std::vector<double> eval_basis(const BasisSpec& spec, std::span<const double> offset) {
  std::vector<double> out(spec.size());
  eval_basis(spec, offset, out);
  return out;
}

std::vector<double> eval_basis_batch(const BasisSpec& spec, std::span<const double> offsets) {
  const auto d = static_cast<std::size_t>(spec.dim);
  if (offsets.size() % d != 0) throw InvalidArgument("offset batch length is not a multiple of the dimension");
  const std::size_t m = offsets.size() / d;
  const std::size_t k = spec.size();
  std::vector<double> out(m * k);
  for (std::size_t i = 0; i < m; ++i)
    eval_basis(spec, offsets.subspan(i * d, d), std::span<double>(out).subspan(i * k, k));
  return out;
}

MlpParams init_mlp_basis(int dim, double radius, std::size_t hidden, std::size_t outputs, std::uint64_t seed) {
  if (hidden < 1 || outputs < 1) throw InvalidArgument("mlp basis needs hidden >= 1 and K >= 1");
  if (dim < 1 || dim > 3) throw InvalidArgument("mlp basis dimension must be 1, 2 or 3");
  if (!(radius > 0.0)) throw InvalidArgument("mlp basis radius must be positive");
  const auto d = static_cast<std::size_t>(dim);
  MlpParams p;
  p.inputs = d;
  p.hidden = hidden;
  p.outputs = outputs;
  Rng rng(seed);
  const double sd1 = std::sqrt(1.0 / (static_cast<double>(d) * radius * radius));
  const double sd2 = std::sqrt(2.0 / static_cast<double>(hidden));
  p.w1.resize(hidden * d);
  for (double& w : p.w1) w = sd1 * rng.normal();
  p.b1.assign(hidden, 0.0);
  p.w2.resize(outputs * hidden);
  for (double& w : p.w2) w = sd2 * rng.normal();
  p.b2.assign(outputs, 0.0);
  return p;
}

BasisSpec init_dot_basis(int dim, double radius, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("dot basis needs K >= 1");
  if (dim < 1 || dim > 3) throw InvalidArgument("dot basis dimension must be 1, 2 or 3");
  if (!(radius > 0.0)) throw InvalidArgument("dot basis radius must be positive");
  const auto d = static_cast<std::size_t>(dim);
  Rng rng(seed);
  const double sd = std::sqrt(1.0 / (static_cast<double>(d) * radius * radius));
  std::vector<double> vectors(count * d);
  for (double& v : vectors) v = sd * rng.normal();
  return BasisSpec::dot(dim, std::move(vectors), std::vector<double>(count, 0.0), radius);
}

}  // namespace pcinit
