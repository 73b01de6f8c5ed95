#include "pcinit/serialization.hpp"

#include <fstream>
#include <sstream>

#include "pcinit/errors.hpp"

namespace pcinit {

namespace {

constexpr int kSchemaVersion = 1;

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
  }
}

Json mlp_to_json(const MlpParams& p) {
  return Json{{"inputs", p.inputs}, {"hidden", p.hidden}, {"outputs", p.outputs},
              {"w1", p.w1},         {"b1", p.b1},         {"w2", p.w2},
              {"b2", p.b2}};
}

MlpParams mlp_from_json(const Json& j) {
  MlpParams p;
  p.inputs = get<std::size_t>(j, "inputs");
  p.hidden = get<std::size_t>(j, "hidden");
  p.outputs = get<std::size_t>(j, "outputs");
  p.w1 = get<std::vector<double>>(j, "w1");
  p.b1 = get<std::vector<double>>(j, "b1");
  p.w2 = get<std::vector<double>>(j, "w2");
  p.b2 = get<std::vector<double>>(j, "b2");
  p.validate();
  return p;
}

void check_schema(const Json& j, const char* kind) {
  const int version = get<int>(j, "schema_version");
  if (version != kSchemaVersion)
    throw InvalidArgument("unsupported schema_version " + std::to_string(version));
  if (get<std::string>(j, "kind") != kind) throw InvalidArgument(std::string("document is not a ") + kind);
}

}  // namespace

Json to_json(const BasisSpec& spec) {
  Json j{{"family", std::string(to_string(spec.family))}, {"dim", spec.dim}, {"radius", spec.radius}};
  switch (spec.family) {
    case BasisFamily::gaussian:
    case BasisFamily::linear:
      j["bandwidth"] = spec.bandwidth;
      [[fallthrough]];
    case BasisFamily::box:
      j["kernel_points"] = spec.kernel_points;
      if (spec.family == BasisFamily::box)
        j["coordinates"] = spec.coordinates == BasisCoordinates::spherical ? "spherical" : "cartesian";
      break;
    case BasisFamily::dot:
      j["vectors"] = spec.vectors;
      j["biases"] = spec.biases;
      break;
    case BasisFamily::mlp:
      j["mlp"] = mlp_to_json(spec.mlp);
      break;
  }
  return j;
}

BasisSpec basis_from_json(const Json& j) {
  BasisSpec s;
  s.family = parse_basis_family(get<std::string>(j, "family"));
  s.dim = get<int>(j, "dim");
  s.radius = get<double>(j, "radius");
  switch (s.family) {
    case BasisFamily::gaussian:
    case BasisFamily::linear:
      s.bandwidth = get<double>(j, "bandwidth");
      [[fallthrough]];
    case BasisFamily::box:
      s.kernel_points = get<std::vector<double>>(j, "kernel_points");
      if (s.family == BasisFamily::box && j.contains("coordinates")) {
        const auto c = get<std::string>(j, "coordinates");
        if (c != "cartesian" && c != "spherical") throw InvalidArgument("field 'coordinates' must be cartesian|spherical");
        s.coordinates = c == "spherical" ? BasisCoordinates::spherical : BasisCoordinates::cartesian;
      }
      break;
    case BasisFamily::dot:
      s.vectors = get<std::vector<double>>(j, "vectors");
      s.biases = get<std::vector<double>>(j, "biases");
      break;
    case BasisFamily::mlp:
      s.mlp = mlp_from_json(field(j, "mlp"));
      break;
  }
  s.validate();
  return s;
}

Json to_json(const EstimatorSpec& spec) {
  Json j{{"mode", std::string(to_string(spec.mode))}};
  if (spec.density_mlp) j["density_mlp"] = mlp_to_json(spec.density_mlp->params);
  return j;
}

EstimatorSpec estimator_from_json(const Json& j) {
  EstimatorSpec s;
  s.mode = parse_estimator_mode(get<std::string>(j, "mode"));
  if (j.contains("density_mlp")) s.density_mlp = DensityMlp{mlp_from_json(j.at("density_mlp"))};
  s.validate();
  return s;
}

Json to_json(const ConvLayer& layer) {
  return Json{{"in_channels", layer.in_channels},
              {"out_channels", layer.out_channels},
              {"radius", layer.radius},
              {"nonlinearity", std::string(to_string(layer.nonlinearity))},
              {"basis", to_json(layer.basis)},
              {"estimator", to_json(layer.estimator)},
              {"weights", layer.weights}};
}

ConvLayer layer_from_json(const Json& j) {
  ConvLayer l;
  l.in_channels = get<std::size_t>(j, "in_channels");
  l.out_channels = get<std::size_t>(j, "out_channels");
  l.radius = get<double>(j, "radius");
  l.nonlinearity = parse_nonlinearity(get<std::string>(j, "nonlinearity"));
  l.basis = basis_from_json(field(j, "basis"));
  l.estimator = estimator_from_json(field(j, "estimator"));
  l.weights = get<std::vector<double>>(j, "weights");
  l.validate(false);
  return l;
}

Json to_json(const ConvStack& stack) {
  Json layers = Json::array();
  for (const auto& l : stack.layers) layers.push_back(to_json(l));
  Json levels = Json::array();
  for (const auto& [a, b] : stack.layer_levels) levels.push_back(Json::array({a, b}));
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "conv_stack"},
              {"level_radii", stack.level_radii},
              {"layer_levels", levels},
              {"layers", layers}};
}

ConvStack stack_from_json(const Json& j) {
  check_schema(j, "conv_stack");
  ConvStack s;
  s.level_radii = get<std::vector<double>>(j, "level_radii");
  for (const auto& pair : field(j, "layer_levels")) {
    if (!pair.is_array() || pair.size() != 2) throw InvalidArgument("field 'layer_levels' entries must be pairs");
    s.layer_levels.emplace_back(pair[0].get<std::size_t>(), pair[1].get<std::size_t>());
  }
  std::size_t index = 0;
  for (const auto& lj : field(j, "layers")) {
    ++index;
    try {
      s.layers.push_back(layer_from_json(lj));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("layers[" + std::to_string(index - 1) + "]: " + e.what());
    }
  }
  s.validate(false);
  return s;
}

Json to_json(const ZTable& table) {
  const auto& m = table.meta;
  Json entries = Json::array();
  for (const auto& e : table.entries) entries.push_back(Json{{"depth", e.depth}, {"z", e.z}});
  return Json{{"schema_version", ZTable::kSchemaVersion},
              {"kind", "ztable"},
              {"meta",
               {{"basis_family", m.basis_family},
                {"estimator_mode", m.estimator_mode},
                {"radius_schedule", m.radius_schedule},
                {"cloud_generator", m.cloud_generator},
                {"feature_model", m.feature_model},
                {"sample_count", m.sample_count},
                {"seed", m.seed},
                {"target_variance", m.target_variance},
                {"nonlinearity", m.nonlinearity},
                {"channel_width", m.channel_width}}},
              {"entries", entries}};
}

ZTable ztable_from_json(const Json& j) {
  check_schema(j, "ztable");
  ZTable t;
  const Json& m = field(j, "meta");
  t.meta.basis_family = get<std::string>(m, "basis_family");
  t.meta.estimator_mode = get<std::string>(m, "estimator_mode");
  t.meta.radius_schedule = get<std::vector<double>>(m, "radius_schedule");
  t.meta.cloud_generator = get<std::string>(m, "cloud_generator");
  t.meta.feature_model = get<std::string>(m, "feature_model");
  t.meta.sample_count = get<std::size_t>(m, "sample_count");
  t.meta.seed = get<std::uint64_t>(m, "seed");
  t.meta.target_variance = get<double>(m, "target_variance");
  t.meta.nonlinearity = get<std::string>(m, "nonlinearity");
  t.meta.channel_width = get<std::size_t>(m, "channel_width");
  for (const auto& e : field(j, "entries")) t.entries.push_back({get<int>(e, "depth"), get<double>(e, "z")});
  t.validate();
  return t;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace pcinit
