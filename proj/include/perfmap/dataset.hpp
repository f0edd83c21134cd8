#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfmap/matrix.hpp"

namespace perfmap {

enum class Task { Classification, Regression };
enum class ColumnKind { Categorical, Integer, Real };

std::string to_string(Task task);
std::string to_string(ColumnKind kind);
Task parse_task(std::string_view text);
ColumnKind parse_column_kind(std::string_view text);

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureMeta {
  std::string name;
  ColumnKind kind = ColumnKind::Real;
  std::vector<std::string> lexicon;  // categorical only; code i <-> lexicon[i]

  bool operator==(const FeatureMeta&) const = default;
};

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Real;
};

/// Feature columns to read, in output order, plus the target column.
/// Header columns not listed are ignored.
struct Schema {
  std::vector<ColumnSpec> columns;
  std::string target;
  Task task = Task::Classification;
};

/// Encoded tabular data. One feature_meta record per matrix column.
struct Dataset {
  std::string name;
  Matrix features;
  std::vector<double> target;  // class index or real value
  Task task = Task::Classification;
  std::vector<FeatureMeta> feature_meta;
  std::vector<std::string> class_labels;  // classification only, sorted
  std::size_t dropped_rows = 0;

  std::size_t size() const noexcept { return target.size(); }
  std::size_t n_features() const noexcept { return features.cols(); }
  std::size_t n_classes() const noexcept { return class_labels.size(); }

  /// Throws DatasetError if a structural invariant is broken.
  void validate() const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
};

Dataset load_csv(std::istream& in, const Schema& schema, std::string name = {});
Dataset load_csv(const std::filesystem::path& path, const Schema& schema,
                 std::string name = {});

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; 0 marks a constant column
};

/// Column-wise (x - mean) / stddev. Stats are computed from `x` when not
/// supplied. Zero-variance columns become all zeros.
std::pair<Matrix, Standardization> standardize(
    const Matrix& x, const std::optional<Standardization>& stats = std::nullopt);
std::pair<Dataset, Standardization> standardize(
    const Dataset& ds, const std::optional<Standardization>& stats = std::nullopt);

/// Replaces each categorical column with more than two categories by one
/// 0/1 indicator column per category. Other columns pass through unchanged.
Dataset one_hot_expand(const Dataset& ds);

/// Seeded row subsample of size n, stratified by class for classification.
/// Row order of the result follows the original order.
Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed);

struct FoldPlan {
  std::uint64_t seed = 0;
  std::size_t n_folds = 0;
  std::vector<std::size_t> assignments;  // fold index per instance

  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
  void validate(std::size_t n_instances) const;
};

/// Seeded shuffle then round-robin assignment; for classification the
/// shuffled indices are grouped by class first, which stratifies the folds.
FoldPlan make_folds(const Dataset& ds, std::size_t n_folds, std::uint64_t seed);

struct DatasetSource {
  std::string name;
  std::filesystem::path path;
  Schema schema;

  Dataset load() const { return load_csv(path, schema, name); }
};

/// Manifest file: JSON object mapping dataset name to {path, task, schema}.
/// Relative paths resolve against the manifest's directory.
std::map<std::string, DatasetSource> load_manifest(const std::filesystem::path& path);

}  // namespace perfmap
