#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfmap/context.hpp"
#include "perfmap/dataset.hpp"
#include "perfmap/metaopt.hpp"
#include "perfmap/serialization.hpp"

namespace perfmap {

/// Bad command line or run configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string dataset;                  // manifest key, or a label for `source`
  std::optional<DatasetSource> source;  // inline path + schema
  std::filesystem::path manifest;       // empty: $PERFMAP_MANIFEST or data/manifest.json
  std::string learner;
  OptimizerKind optimizer = OptimizerKind::Grid;
  SgaConfig sga;
  bool sga_seed_given = false;
  std::optional<ParamSpace> space;  // defaults to the learner's builtin space
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  double timeout = 40.0;
  std::optional<std::size_t> subsample;
  std::size_t jobs = 0;  // 0: one per hardware thread
  std::optional<std::filesystem::path> out_map, out_csv, out_svg;
};

/// Relative paths inside the document resolve against `base_dir`.
RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Resolves the dataset (loading and subsampling it) and the learner.
LearningContext build_context(const RunConfig& cfg);

/// Parses "0.05,0.10,0.20"; every k must lie in (0, 1).
std::vector<double> parse_ks(const std::string& text);

/// Entry point shared by the executable and the Python module. Returns the
/// process exit code: 0 success, 1 usage or configuration error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace perfmap
