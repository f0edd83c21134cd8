#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "perfmap/paramspace.hpp"

namespace perfmap {

/// Recorded in maps when an evaluation runs past its deadline. Also the floor
/// to which very negative R^2 values are clamped.
inline constexpr double kTimeoutSentinel = -0.2;

enum class OptimizerKind { Grid, Sga };

std::string to_string(OptimizerKind kind);  // "Grid" / "SGA"
/// Case-insensitive "grid" or "sga".
OptimizerKind parse_optimizer(std::string_view text);

/// Defaults are the meta-optimizer settings reported for the original study.
struct SgaConfig {
  std::size_t population_size = 50;
  std::size_t max_generations = 50;
  double mutation_rate = 0.1;
  double crossover_rate = 0.9;
  double replacement_rate = 0.9;
  std::string crossover_type = "uniform";
  double stop_fitness = 0.99;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  bool operator==(const SgaConfig&) const = default;
};

/// Plain description of a learning context, as recorded in a map file.
struct ContextInfo {
  std::string learner;
  std::string optimizer;
  std::string dataset;
  std::string task;
  std::size_t rows = 0;  // after cleaning and subsampling
  std::optional<std::size_t> subsample;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  double timeout = 40.0;
  std::optional<SgaConfig> sga;
  ParamSpace space;

  bool operator==(const ContextInfo&) const = default;
};

}  // namespace perfmap
