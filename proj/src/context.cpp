#include "perfmap/context.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace perfmap {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Grid ? "Grid" : "SGA"; }

OptimizerKind parse_optimizer(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "grid") return OptimizerKind::Grid;
  if (lower == "sga") return OptimizerKind::Sga;
  throw std::invalid_argument("unknown optimizer '" + std::string(text) +
                              "' (expected grid or sga)");
}

void SgaConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
  if (max_generations < 1) throw std::invalid_argument("max_generations must be >= 1");
  if (!unit(mutation_rate)) throw std::invalid_argument("mutation_rate must be in [0, 1]");
  if (!unit(crossover_rate)) throw std::invalid_argument("crossover_rate must be in [0, 1]");
  if (!unit(replacement_rate)) throw std::invalid_argument("replacement_rate must be in [0, 1]");
  if (crossover_type != "uniform") {
    throw std::invalid_argument("crossover_type must be 'uniform'");
  }
  if (std::isnan(stop_fitness)) throw std::invalid_argument("stop_fitness is NaN");
}

}  // namespace perfmap
