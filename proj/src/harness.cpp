#include "pcinit/harness.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pcinit/errors.hpp"
#include "pcinit/format.hpp"
#include "pcinit/plot.hpp"
#include "pcinit/rng.hpp"

namespace pcinit {

namespace {

// Seed streams derived from the run seed.
constexpr std::uint64_t kBasisStream = 11;
constexpr std::uint64_t kInitStream = 12;
constexpr std::uint64_t kEvalStream = 13;

}  // namespace

ConvStack build_stack(const StackConfig& c, int dim, std::uint64_t seed) {
  ConvStack stack;
  stack.level_radii = c.level_radii;
  const std::size_t levels = c.level_radii.size();
  for (std::size_t l = 0; l < c.depth; ++l) {
    ConvLayer layer;
    layer.in_channels = l == 0 && c.in_channels > 0 ? c.in_channels : c.channels;
    layer.out_channels = c.channels;
    layer.nonlinearity = c.nonlinearity;
    std::size_t in_level = 0, out_level = 0;
    if (levels > 0) {
      in_level = std::min(l, levels);
      out_level = std::min(l + 1, levels);
      stack.layer_levels.emplace_back(in_level, out_level);
    }
    // Receptive field is three times the Poisson radius of the output level.
    layer.radius = out_level == 0 ? c.radius : 3.0 * c.level_radii[out_level - 1];
    const double r = layer.radius;
    const std::uint64_t basis_seed = derive_seed(seed, 100 + l);

    switch (c.basis) {
      case BasisFamily::gaussian:
      case BasisFamily::linear:
      case BasisFamily::box: {
        std::vector<double> kp;
        auto coords = BasisCoordinates::cartesian;
        if (c.kernel_layout == "grid") {
          kp = make_kernel_points(KernelLayout::grid, dim, c.kernel_per_axis, c.kernel_extent * r);
        } else if (c.kernel_layout == "sphere") {
          kp = make_kernel_points(KernelLayout::sphere, dim, 13, c.kernel_extent * r);
        } else if (c.kernel_layout == "spherical_grid") {
          if (c.basis != BasisFamily::box) throw ConfigError("stack.kernel_layout", "spherical_grid needs the box basis");
          kp = make_spherical_kernel_points(c.kernel_per_axis, c.kernel_per_axis, 2 * c.kernel_per_axis, r);
          coords = BasisCoordinates::spherical;
        } else {
          throw ConfigError("stack.kernel_layout", "expected grid|sphere|spherical_grid");
        }
        if (c.basis == BasisFamily::gaussian) {
          const double sigma = c.bandwidth_scale * r;
          layer.basis = BasisSpec::gaussian(dim, std::move(kp), sigma * sigma, r);
        } else if (c.basis == BasisFamily::linear) {
          layer.basis = BasisSpec::linear(dim, std::move(kp), c.bandwidth_scale * r, r);
        } else {
          layer.basis = BasisSpec::box(dim, std::move(kp), r, coords);
        }
        break;
      }
      case BasisFamily::mlp:
        layer.basis = BasisSpec::mlp_basis(dim, init_mlp_basis(dim, r, c.mlp_hidden, c.basis_size, basis_seed), r);
        break;
      case BasisFamily::dot:
        layer.basis = init_dot_basis(dim, r, c.basis_size, basis_seed);
        break;
    }
    layer.estimator.mode = c.estimator;
    if (c.estimator == EstimatorMode::nn)
      layer.estimator.density_mlp = init_density_mlp(c.density_hidden, derive_seed(seed, 200 + l));
    stack.layers.push_back(std::move(layer));
  }
  stack.validate(false);
  return stack;
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::variance_profile: return "variance_profile";
    case ExperimentKind::correlogram: return "correlogram";
    case ExperimentKind::compute_ztable: return "compute_ztable";
    case ExperimentKind::transfer_check: return "transfer_check";
    case ExperimentKind::discrete_equivalence: return "discrete_equivalence";
  }
  return "?";
}

InitPlan ExperimentConfig::plan() const {
  InitPlan p;
  p.scheme = scheme;
  p.target_variance = target_variance;
  p.gain = gain.value_or(InitPlan::default_gain(stack.nonlinearity));
  p.seed = derive_seed(seed, kInitStream);
  return p;
}

namespace {

Json generator_to_json(const CloudGenerator& g) {
  Json extent = Json::array();
  for (const auto& iv : g.extent) extent.push_back(Json::array({iv.lo, iv.hi}));
  const char* kind = g.kind == CloudGenerator::Kind::uniform     ? "uniform"
                     : g.kind == CloudGenerator::Kind::clustered ? "clustered"
                                                                 : "grid";
  return Json{{"kind", kind},
              {"dim", g.dim},
              {"n", g.n},
              {"extent", extent},
              {"cluster_count", g.cluster_count},
              {"spread", g.spread},
              {"spacing", g.spacing}};
}

// Reads optional typed fields, reporting the dotted path on failure.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class T>
  void opt(const char* key, T& out) const {
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(name(key), "has the wrong type");
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  const Json& at(const char* key) const { return j_.at(key); }
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void reject_unknown(std::initializer_list<const char*> known) const {
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* name : known) ok = ok || k == name;
      if (!ok) throw ConfigError(path_.empty() ? k : path_ + "." + k, "unknown field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

template <class Fn>
auto parse_enum(const Reader& r, const char* key, Fn&& fn, decltype(fn(std::string_view{})) fallback) {
  std::string text;
  r.opt(key, text);
  if (text.empty()) return fallback;
  try {
    return fn(text);
  } catch (const InvalidArgument& e) {
    throw ConfigError(r.name(key), e.what());
  }
}

CloudGenerator parse_generator(const Json& j, const std::string& path) {
  const Reader r(j, path);
  r.reject_unknown({"kind", "dim", "n", "extent", "cluster_count", "spread", "spacing"});
  CloudGenerator g;
  std::string kind = "uniform";
  r.opt("kind", kind);
  if (kind == "uniform")
    g.kind = CloudGenerator::Kind::uniform;
  else if (kind == "clustered")
    g.kind = CloudGenerator::Kind::clustered;
  else if (kind == "grid")
    g.kind = CloudGenerator::Kind::grid;
  else
    throw ConfigError(r.name("kind"), "expected uniform|clustered|grid");
  r.opt("dim", g.dim);
  r.opt("n", g.n);
  r.opt("cluster_count", g.cluster_count);
  r.opt("spread", g.spread);
  r.opt("spacing", g.spacing);
  if (r.has("extent")) {
    std::vector<std::vector<double>> ext;
    r.opt("extent", ext);
    g.extent.clear();
    for (const auto& iv : ext) {
      require(iv.size() == 2, r.name("extent"), "each interval is [lo, hi]");
      g.extent.push_back({iv[0], iv[1]});
    }
  }
  require(g.dim >= 1 && g.dim <= 3, r.name("dim"), "must be 1, 2 or 3");
  require(g.n >= 1, r.name("n"), "must be at least 1");
  require(g.extent.size() == 1 || g.extent.size() == static_cast<std::size_t>(g.dim), r.name("extent"),
          "needs one interval per axis or a single shared interval");
  for (const auto& iv : g.extent) require(iv.hi > iv.lo, r.name("extent"), "intervals must have hi > lo");
  require(g.spread > 0.0, r.name("spread"), "must be positive");
  require(g.spacing > 0.0, r.name("spacing"), "must be positive");
  if (g.kind == CloudGenerator::Kind::clustered) {
    require(g.cluster_count >= 1, r.name("cluster_count"), "must be at least 1");
    require(g.n >= g.cluster_count, r.name("n"), "must be at least cluster_count");
  }
  return g;
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  const Reader root(j, "");
  root.reject_unknown({"experiment", "seed", "output_dir", "plots", "stack", "cloud", "features", "init",
                       "evaluation", "correlogram", "discrete"});
  ExperimentConfig c;
  std::string experiment(to_string(c.experiment));
  root.opt("experiment", experiment);
  if (experiment == "variance_profile")
    c.experiment = ExperimentKind::variance_profile;
  else if (experiment == "correlogram")
    c.experiment = ExperimentKind::correlogram;
  else if (experiment == "compute_ztable")
    c.experiment = ExperimentKind::compute_ztable;
  else if (experiment == "transfer_check")
    c.experiment = ExperimentKind::transfer_check;
  else if (experiment == "discrete_equivalence")
    c.experiment = ExperimentKind::discrete_equivalence;
  else
    throw ConfigError("experiment",
                      "expected variance_profile|correlogram|compute_ztable|transfer_check|discrete_equivalence");
  root.opt("seed", c.seed);
  std::string out_dir = c.output_dir.string();
  root.opt("output_dir", out_dir);
  c.output_dir = out_dir;
  root.opt("plots", c.plots);

  if (root.has("cloud")) c.cloud = parse_generator(root.at("cloud"), "cloud");

  if (root.has("stack")) {
    const Reader r(root.at("stack"), "stack");
    r.reject_unknown({"depth", "channels", "in_channels", "basis", "estimator", "radius", "nonlinearity",
                      "kernel_layout", "kernel_per_axis", "kernel_extent", "bandwidth_scale", "mlp_hidden",
                      "basis_size", "density_hidden", "level_radii"});
    auto& s = c.stack;
    r.opt("depth", s.depth);
    r.opt("channels", s.channels);
    r.opt("in_channels", s.in_channels);
    s.basis = parse_enum(r, "basis", parse_basis_family, s.basis);
    s.estimator = parse_enum(r, "estimator", parse_estimator_mode, s.estimator);
    s.nonlinearity = parse_enum(r, "nonlinearity", parse_nonlinearity, s.nonlinearity);
    r.opt("radius", s.radius);
    r.opt("kernel_layout", s.kernel_layout);
    r.opt("kernel_per_axis", s.kernel_per_axis);
    r.opt("kernel_extent", s.kernel_extent);
    r.opt("bandwidth_scale", s.bandwidth_scale);
    r.opt("mlp_hidden", s.mlp_hidden);
    r.opt("basis_size", s.basis_size);
    r.opt("density_hidden", s.density_hidden);
    r.opt("level_radii", s.level_radii);
    require(s.depth >= 1, r.name("depth"), "must be at least 1");
    require(s.channels >= 1, r.name("channels"), "must be at least 1");
    require(s.radius > 0.0 && std::isfinite(s.radius), r.name("radius"), "must be positive");
    require(s.kernel_layout == "grid" || s.kernel_layout == "sphere" || s.kernel_layout == "spherical_grid",
            r.name("kernel_layout"), "expected grid|sphere|spherical_grid");
    require(s.kernel_per_axis >= 1, r.name("kernel_per_axis"), "must be at least 1");
    require(s.kernel_extent > 0.0, r.name("kernel_extent"), "must be positive");
    require(s.bandwidth_scale > 0.0, r.name("bandwidth_scale"), "must be positive");
    require(s.mlp_hidden >= 1, r.name("mlp_hidden"), "must be at least 1");
    require(s.basis_size >= 1, r.name("basis_size"), "must be at least 1");
    require(s.density_hidden >= 1, r.name("density_hidden"), "must be at least 1");
    for (double lr : s.level_radii) require(lr > 0.0, r.name("level_radii"), "radii must be positive");
    if (s.kernel_layout == "sphere") require(c.cloud.dim == 3, r.name("kernel_layout"), "sphere layout needs dim 3");
  }

  if (root.has("features")) {
    const Reader r(root.at("features"), "features");
    r.reject_unknown({"kind", "value"});
    std::string kind = "gaussian";
    r.opt("kind", kind);
    r.opt("value", c.features.value);
    if (kind == "gaussian")
      c.features.kind = FeatureModel::Kind::gaussian;
    else if (kind == "constant")
      c.features.kind = FeatureModel::Kind::constant;
    else
      throw ConfigError(r.name("kind"), "expected gaussian|constant");
    if (c.features.kind == FeatureModel::Kind::gaussian)
      require(c.features.value > 0.0, r.name("value"), "gaussian variance must be positive");
  }

  if (root.has("init")) {
    const Reader r(root.at("init"), "init");
    r.reject_unknown({"scheme", "target_variance", "gain", "sample_count", "table"});
    c.scheme = parse_enum(r, "scheme", parse_init_scheme, c.scheme);
    r.opt("target_variance", c.target_variance);
    if (r.has("gain") && !r.at("gain").is_null()) {
      double g = 0.0;
      r.opt("gain", g);
      require(g > 0.0, r.name("gain"), "must be positive");
      c.gain = g;
    }
    r.opt("sample_count", c.sample_count);
    std::string table;
    r.opt("table", table);
    c.table_path = table;
    require(c.target_variance > 0.0, r.name("target_variance"), "must be positive");
    require(c.sample_count >= 1, r.name("sample_count"), "must be at least 1");
  }

  if (root.has("evaluation")) {
    const Reader r(root.at("evaluation"), "evaluation");
    r.reject_unknown({"clouds", "cloud"});
    r.opt("clouds", c.eval_clouds);
    require(c.eval_clouds >= 1, r.name("clouds"), "must be at least 1");
    if (r.has("cloud")) c.eval_cloud = parse_generator(r.at("cloud"), "evaluation.cloud");
  }

  if (root.has("correlogram")) {
    const Reader r(root.at("correlogram"), "correlogram");
    r.reject_unknown({"layers", "bins", "max_distance"});
    r.opt("layers", c.correlogram_layers);
    r.opt("bins", c.correlogram_bins);
    r.opt("max_distance", c.correlogram_max_distance);
    require(c.correlogram_bins >= 1, r.name("bins"), "must be at least 1");
    require(c.correlogram_max_distance > 0.0, r.name("max_distance"), "must be positive");
    for (int l : c.correlogram_layers)
      require(l >= 0 && static_cast<std::size_t>(l) <= c.stack.depth, r.name("layers"),
              "layers must lie in [0, stack.depth]");
  }

  if (root.has("discrete")) {
    const Reader r(root.at("discrete"), "discrete");
    r.reject_unknown({"trials", "height", "width", "channels"});
    r.opt("trials", c.discrete_trials);
    r.opt("height", c.discrete_height);
    r.opt("width", c.discrete_width);
    r.opt("channels", c.discrete_channels);
    require(c.discrete_trials >= 1, r.name("trials"), "must be at least 1");
    require(c.discrete_height >= 3, r.name("height"), "must be at least 3");
    require(c.discrete_width >= 3, r.name("width"), "must be at least 3");
    require(c.discrete_channels >= 1, r.name("channels"), "must be at least 1");
  }

  const bool transfer = c.experiment == ExperimentKind::transfer_check ||
                        (c.scheme == InitScheme::variance_aware_transfer && c.experiment != ExperimentKind::compute_ztable);
  if (transfer) require(!c.table_path.empty(), "init.table", "transfer needs a z table path");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const InvalidArgument& e) {
    throw ConfigError("<file>", e.what());
  }
  return parse_config(j);
}

Json ExperimentConfig::to_json() const {
  const auto& s = stack;
  Json j{{"experiment", std::string(pcinit::to_string(experiment))},
         {"seed", seed},
         {"output_dir", output_dir.string()},
         {"plots", plots},
         {"stack",
          {{"depth", s.depth},
           {"channels", s.channels},
           {"in_channels", s.in_channels},
           {"basis", std::string(pcinit::to_string(s.basis))},
           {"estimator", std::string(pcinit::to_string(s.estimator))},
           {"radius", s.radius},
           {"nonlinearity", std::string(pcinit::to_string(s.nonlinearity))},
           {"kernel_layout", s.kernel_layout},
           {"kernel_per_axis", s.kernel_per_axis},
           {"kernel_extent", s.kernel_extent},
           {"bandwidth_scale", s.bandwidth_scale},
           {"mlp_hidden", s.mlp_hidden},
           {"basis_size", s.basis_size},
           {"density_hidden", s.density_hidden},
           {"level_radii", s.level_radii}}},
         {"cloud", generator_to_json(cloud)},
         {"features",
          {{"kind", features.kind == FeatureModel::Kind::gaussian ? "gaussian" : "constant"},
           {"value", features.value}}},
         {"init",
          {{"scheme", std::string(pcinit::to_string(scheme))},
           {"target_variance", target_variance},
           {"gain", gain ? Json(*gain) : Json(nullptr)},
           {"sample_count", sample_count},
           {"table", table_path.string()}}},
         {"evaluation", {{"clouds", eval_clouds}}},
         {"correlogram",
          {{"layers", correlogram_layers}, {"bins", correlogram_bins}, {"max_distance", correlogram_max_distance}}},
         {"discrete",
          {{"trials", discrete_trials},
           {"height", discrete_height},
           {"width", discrete_width},
           {"channels", discrete_channels}}}};
  if (eval_cloud) j["evaluation"]["cloud"] = generator_to_json(*eval_cloud);
  return j;
}

InitOutcome initialize_stack(const ConvStack& stack, const ExperimentConfig& config, const InitPlan& plan,
                             const std::optional<ZTable>& table) {
  InitOutcome out;
  switch (plan.scheme) {
    case InitScheme::he:
    case InitScheme::standard: {
      auto r = classic_init(stack, plan);
      out.stack = std::move(r.stack);
      out.weight_variances = std::move(r.weight_variances);
      break;
    }
    case InitScheme::variance_aware_direct: {
      auto r = variance_aware_init(stack, config.cloud, config.sample_count, plan, config.features);
      out.stack = std::move(r.stack);
      out.table = std::move(r.table);
      out.weight_variances = std::move(r.weight_variances);
      break;
    }
    case InitScheme::variance_aware_transfer: {
      ZTable t;
      if (table) {
        t = *table;
      } else {
        if (config.table_path.empty()) throw ConfigError("init.table", "transfer needs a z table path");
        t = ztable_from_json(read_json_file(config.table_path));
      }
      auto r = transfer_init(stack, t, plan);
      out.stack = std::move(r.stack);
      out.table = std::move(t);
      out.weight_variances = std::move(r.weight_variances);
      out.warnings = std::move(r.warnings);
      break;
    }
  }
  return out;
}

VarianceProfile evaluate_variance(const ConvStack& stack, const CloudGenerator& generator, const FeatureModel& model,
                                  std::size_t clouds, std::uint64_t seed) {
  std::vector<std::vector<FeatureMatrix>> runs;
  for (std::size_t k = 0; k < clouds; ++k) {
    const std::uint64_t base = derive_seed(seed, k);
    const auto cloud = generator.generate(derive_seed(base, 0));
    const auto levels = build_levels(stack, cloud, derive_seed(base, 1));
    const auto features = model.sample(levels.front().size(), stack.layers.front().in_channels, derive_seed(base, 2));
    auto outs = stack_forward(stack, levels, features);
    outs.erase(outs.begin());
    runs.push_back(std::move(outs));
  }
  return layer_variance_profile(runs);
}

double discrete_equivalence_error(std::size_t height, std::size_t width, std::size_t channels, std::uint64_t seed) {
  Rng rng(seed);
  Image image{height, width, channels, std::vector<double>(height * width * channels)};
  for (double& v : image.values) v = rng.normal();
  std::vector<double> kernel(9 * channels);
  for (double& v : kernel) v = rng.normal();
  const auto reference = discrete_conv_reference(image, kernel);

  // Pixel (r, c) sits at (x, y) = (c, r); kernel point index = (dc + 1) + 3 (dr + 1).
  std::vector<double> pos;
  pos.reserve(height * width * 2);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      pos.push_back(static_cast<double>(c));
      pos.push_back(static_cast<double>(r));
    }
  }
  const PointCloud cloud(2, std::move(pos));
  ConvLayer layer;
  layer.in_channels = channels;
  layer.out_channels = 1;
  layer.radius = 1.5;
  layer.basis = BasisSpec::box(2, make_kernel_points(KernelLayout::grid, 2, 3, 1.0), layer.radius);
  layer.estimator = EstimatorSpec::sum();
  layer.weights.assign(channels * 9, 0.0);
  for (std::size_t tap = 0; tap < 9; ++tap) {
    for (std::size_t ch = 0; ch < channels; ++ch) layer.weight(ch, tap, 0) = kernel[tap * channels + ch];
  }
  const FeatureMatrix features(height * width, channels, image.values);
  const auto out = conv_forward(layer, features, cloud, cloud, radius_neighbors(cloud, cloud, layer.radius));

  double worst = 0.0;
  for (std::size_t r = 1; r + 1 < height; ++r) {
    for (std::size_t c = 1; c + 1 < width; ++c) {
      // Scale: sum of absolute products, the conditioning of the dot product.
      double scale = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const std::size_t tap = static_cast<std::size_t>((dr + 1) * 3 + (dc + 1));
          for (std::size_t ch = 0; ch < channels; ++ch)
            scale += std::abs(image.at(r + dr, c + dc, ch) * kernel[tap * channels + ch]);
        }
      }
      const double a = out.at(r * width + c, 0);
      const double b = reference[r * width + c];
      if (scale > 0.0) worst = std::max(worst, std::abs(a - b) / scale);
    }
  }
  return worst;
}

std::string sha256_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 15]);
  }
  return hex;
}

Json RunManifest::to_json() const {
  Json files = Json::array();
  for (const auto& f : outputs) files.push_back(Json{{"file", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return Json{{"artifact", "pcinit"},
              {"version", version},
              {"seed", seed},
              {"wall_clock_seconds", wall_clock_seconds},
              {"config", config},
              {"outputs", files},
              {"warnings", warnings}};
}

namespace {

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw Error("cannot write " + path(name).string());
    fn(out);
    out.close();
    files_.push_back(name);
  }
  void add(const std::string& name) { files_.push_back(name); }
  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

void plot_if(OutputDir& out, bool enabled, const std::string& csv, PlotKind kind) {
  if (!enabled) return;
  const auto svg = emit_plot(out.path(csv), kind);
  out.add(svg.filename().string());
}

void write_variance(OutputDir& out, const ExperimentConfig& config, const VarianceProfile& profile) {
  out.write("variance.csv", [&](std::ostream& os) { write_variance_csv(os, profile); });
  plot_if(out, config.plots, "variance.csv", PlotKind::line_log_y);
}

std::string pad_layer(int layer) {
  std::string s = std::to_string(layer);
  return std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

}  // namespace

RunManifest run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::path dir = config.output_dir;
  if (const char* env = std::getenv("PCINIT_OUTPUT_DIR"); env && *env) dir = env;
  OutputDir out(dir);

  RunManifest manifest;
  manifest.config = config.to_json();
  manifest.version = PCINIT_VERSION;
  manifest.seed = config.seed;

  const InitPlan plan = config.plan();
  const auto stack = build_stack(config.stack, config.cloud.dim, derive_seed(config.seed, kBasisStream));
  const CloudGenerator& eval_gen = config.eval_cloud ? *config.eval_cloud : config.cloud;
  const std::uint64_t eval_seed = derive_seed(config.seed, kEvalStream);

  switch (config.experiment) {
    case ExperimentKind::variance_profile: {
      const auto init = initialize_stack(stack, config, plan);
      manifest.warnings = init.warnings;
      write_variance(out, config, evaluate_variance(init.stack, eval_gen, config.features, config.eval_clouds, eval_seed));
      if (init.table && plan.scheme == InitScheme::variance_aware_direct)
        out.write("ztable.json", [&](std::ostream& os) { os << pcinit::to_json(*init.table).dump(2) << '\n'; });
      break;
    }
    case ExperimentKind::compute_ztable: {
      InitPlan direct = plan;
      direct.scheme = InitScheme::variance_aware_direct;
      const auto init = initialize_stack(stack, config, direct);
      out.write("ztable.json", [&](std::ostream& os) { os << pcinit::to_json(*init.table).dump(2) << '\n'; });
      out.write("stack.json", [&](std::ostream& os) { os << pcinit::to_json(init.stack).dump(2) << '\n'; });
      write_variance(out, config, evaluate_variance(init.stack, eval_gen, config.features, config.eval_clouds, eval_seed));
      break;
    }
    case ExperimentKind::transfer_check: {
      InitPlan transfer = plan;
      transfer.scheme = InitScheme::variance_aware_transfer;
      const auto init = initialize_stack(stack, config, transfer);
      manifest.warnings = init.warnings;
      out.write("stack.json", [&](std::ostream& os) { os << pcinit::to_json(init.stack).dump(2) << '\n'; });
      write_variance(out, config, evaluate_variance(init.stack, eval_gen, config.features, config.eval_clouds, eval_seed));
      break;
    }
    case ExperimentKind::correlogram: {
      const auto init = initialize_stack(stack, config, plan);
      manifest.warnings = init.warnings;
      const std::uint64_t base = derive_seed(eval_seed, 0);
      const auto cloud = eval_gen.generate(derive_seed(base, 0));
      const auto levels = build_levels(init.stack, cloud, derive_seed(base, 1));
      if (levels.size() > 1) throw ConfigError("stack.level_radii", "correlograms need a single-level stack");
      const auto features =
          config.features.sample(cloud.size(), init.stack.layers.front().in_channels, derive_seed(base, 2));
      const auto acts = stack_forward(init.stack, levels, features);
      const auto edges = uniform_bin_edges(config.correlogram_bins, config.correlogram_max_distance);
      std::vector<Correlogram> all;
      for (int layer : config.correlogram_layers) {
        if (static_cast<std::size_t>(layer) >= acts.size()) throw ConfigError("correlogram.layers", "layer beyond depth");
        auto cg = correlogram(cloud, acts[static_cast<std::size_t>(layer)], edges);
        out.write("correlogram_layer_" + pad_layer(layer) + ".csv",
                  [&](std::ostream& os) { write_correlogram_csv(os, std::span(&cg, 1)); });
        all.push_back(std::move(cg));
      }
      out.write("correlogram.csv", [&](std::ostream& os) { write_correlogram_csv(os, all); });
      plot_if(out, config.plots, "correlogram.csv", PlotKind::line);
      break;
    }
    case ExperimentKind::discrete_equivalence: {
      double worst = 0.0;
      out.write("discrete_check.csv", [&](std::ostream& os) {
        os << "trial,max_rel_error\n";
        for (std::size_t t = 0; t < config.discrete_trials; ++t) {
          const double err = discrete_equivalence_error(config.discrete_height, config.discrete_width,
                                                        config.discrete_channels, derive_seed(eval_seed, t));
          worst = std::max(worst, err);
          os << t << ',' << format_double(err) << '\n';
        }
      });
      if (!(worst <= 1e-12)) manifest.warnings.push_back("max relative error " + format_double(worst) + " exceeds 1e-12");
      break;
    }
  }

  for (const auto& name : out.files())
    manifest.outputs.push_back({name, sha256_hex(out.path(name)), std::filesystem::file_size(out.path(name))});
  manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // Atomic publish: readers never see a partial manifest.
  const auto tmp = out.path("manifest.json.tmp");
  write_json_file(tmp, manifest.to_json());
  std::filesystem::rename(tmp, out.path("manifest.json"));

  if (config.experiment == ExperimentKind::discrete_equivalence && !manifest.warnings.empty())
    throw CheckFailed(manifest.warnings.front());
  return manifest;
}

}  // namespace pcinit
