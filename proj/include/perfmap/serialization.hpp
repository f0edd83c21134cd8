#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "perfmap/context.hpp"
#include "perfmap/dataset.hpp"
#include "perfmap/paramspace.hpp"

namespace perfmap {

// Ordered so that emitted documents keep a stable, readable key order.
using json = nlohmann::ordered_json;

json atom_to_json(const Atom& atom);
Atom atom_from_json(const json& j);

/// [{"name": ..., "values": [...]}, ...]
json space_to_json(const ParamSpace& space);
ParamSpace space_from_json(const json& j);

/// {"name": value, ...} in domain order.
json settings_to_json(const ParamSpace& space, const Settings& s);
Settings settings_from_json(const ParamSpace& space, const json& j);

json sga_config_to_json(const SgaConfig& cfg);
/// Fields present in `j` override `base`; unknown keys are rejected.
SgaConfig sga_config_from_json(const json& j, SgaConfig base = {});

/// {"path": ..., "task": ..., "schema": {"target": ..., "columns": [{name, kind}]}}
DatasetSource dataset_source_from_json(const std::string& name, const json& entry,
                                       const std::filesystem::path& base_dir);

}  // namespace perfmap
