#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pcinit/convolution.hpp"
#include "pcinit/estimators.hpp"
#include "pcinit/initialization.hpp"
#include "pcinit/kernel_basis.hpp"

namespace pcinit {

using Json = nlohmann::json;

// JSON documents for the persistent types. Doubles are written in shortest
// round-trip form, so load(store(x)) reproduces every value exactly.
// Readers throw InvalidArgument naming the offending key.

Json to_json(const BasisSpec& spec);
BasisSpec basis_from_json(const Json& j);

Json to_json(const EstimatorSpec& spec);
EstimatorSpec estimator_from_json(const Json& j);

Json to_json(const ConvLayer& layer);
ConvLayer layer_from_json(const Json& j);

/// {"schema_version": 1, "kind": "conv_stack", ...}
Json to_json(const ConvStack& stack);
ConvStack stack_from_json(const Json& j);

/// {"schema_version": 1, "kind": "ztable", "meta": {...}, "entries": [...]}
Json to_json(const ZTable& table);
ZTable ztable_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace pcinit
