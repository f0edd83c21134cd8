#include "perfmap/serialization.hpp"

#include <cmath>

namespace perfmap {

json atom_to_json(const Atom& atom) {
  return std::visit([](const auto& v) { return json(v); }, atom);
}

Atom atom_from_json(const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw ParamSpaceError("parameter value must be a number or a string, got " + j.dump());
}

json space_to_json(const ParamSpace& space) {
  json out = json::array();
  for (const auto& d : space.domains()) {
    json values = json::array();
    for (const auto& v : d.values()) values.push_back(atom_to_json(v));
    out.push_back({{"name", d.name()}, {"values", std::move(values)}});
  }
  return out;
}

ParamSpace space_from_json(const json& j) {
  if (!j.is_array()) throw ParamSpaceError("space must be a list of {name, values}");
  std::vector<ParamDomain> domains;
  for (const auto& d : j) {
    if (!d.is_object() || !d.contains("name") || !d.contains("values") ||
        !d["name"].is_string() || !d["values"].is_array()) {
      throw ParamSpaceError("each domain needs a string 'name' and a list 'values'");
    }
    std::vector<Atom> values;
    for (const auto& v : d["values"]) values.push_back(atom_from_json(v));
    domains.emplace_back(d["name"].get<std::string>(), std::move(values));
  }
  return ParamSpace(std::move(domains));
}

json settings_to_json(const ParamSpace& space, const Settings& s) {
  json out = json::object();
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    out[space.domains()[i].name()] = atom_to_json(s.atoms.at(i));
  }
  return out;
}

Settings settings_from_json(const ParamSpace& space, const json& j) {
  if (!j.is_object() || j.size() != space.dimension()) {
    throw ParamSpaceError("settings must name every domain exactly once: " + j.dump());
  }
  Settings s;
  for (const auto& d : space.domains()) {
    if (!j.contains(d.name())) throw ParamSpaceError("settings lack domain '" + d.name() + "'");
    const Atom a = atom_from_json(j.at(d.name()));
    const auto idx = d.index_of(a);
    if (!idx) {
      throw ParamSpaceError("value " + format_atom(a) + " is not in domain '" + d.name() + "'");
    }
    s.atoms.push_back(d.values()[*idx]);
  }
  return s;
}

DatasetSource dataset_source_from_json(const std::string& name, const json& entry,
                                       const std::filesystem::path& base_dir) {
  const std::string where = "dataset '" + name + "': ";
  try {
    DatasetSource src;
    src.name = name;
    std::filesystem::path p = entry.at("path").get<std::string>();
    src.path = p.is_absolute() ? p : base_dir / p;
    src.schema.task = parse_task(entry.at("task").get<std::string>());
    const json& schema = entry.at("schema");
    src.schema.target = schema.at("target").get<std::string>();
    for (const auto& c : schema.at("columns")) {
      src.schema.columns.push_back(
          {c.at("name").get<std::string>(), parse_column_kind(c.at("kind").get<std::string>())});
    }
    return src;
  } catch (const json::exception& e) {
    throw DatasetError(where + e.what());
  }
}

json sga_config_to_json(const SgaConfig& cfg) {
  return {{"population_size", cfg.population_size}, {"max_generations", cfg.max_generations},
          {"mutation_rate", cfg.mutation_rate},     {"crossover_rate", cfg.crossover_rate},
          {"replacement_rate", cfg.replacement_rate}, {"crossover_type", cfg.crossover_type},
          {"stop_fitness", cfg.stop_fitness},       {"seed", cfg.seed}};
}

SgaConfig sga_config_from_json(const json& j, SgaConfig base) {
  if (!j.is_object()) throw std::invalid_argument("sga settings must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "population_size") {
        base.population_size = v.get<std::size_t>();
      } else if (key == "max_generations") {
        base.max_generations = v.get<std::size_t>();
      } else if (key == "mutation_rate") {
        base.mutation_rate = v.get<double>();
      } else if (key == "crossover_rate") {
        base.crossover_rate = v.get<double>();
      } else if (key == "replacement_rate") {
        base.replacement_rate = v.get<double>();
      } else if (key == "crossover_type") {
        base.crossover_type = v.get<std::string>();
      } else if (key == "stop_fitness") {
        base.stop_fitness = v.get<double>();
      } else if (key == "seed") {
        base.seed = v.get<std::uint64_t>();
      } else {
        throw std::invalid_argument("unknown sga setting '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("sga settings: ") + e.what());
  }
  base.validate();
  return base;
}

}  // namespace perfmap
