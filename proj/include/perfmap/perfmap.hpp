#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfmap/context.hpp"
#include "perfmap/paramspace.hpp"
#include "perfmap/serialization.hpp"

namespace perfmap {

class PerfMapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// HP(k) needs a positive best; raised when the map's best is <= 0.
class HpUndefinedError : public PerfMapError {
 public:
  HpUndefinedError() : PerfMapError("HP undefined (best \xE2\x89\xA4 0)") {}
};

struct MapEntry {
  Settings settings;
  double mean = 0.0;
  double std = 0.0;
  bool timed_out = false;  // mean holds the sentinel
  bool clamped = false;    // mean was raised to the sentinel floor

  bool operator==(const MapEntry&) const = default;
};

/// Settings -> (mean, std) pairs of one learning context, in evaluation order.
struct PerformanceMap {
  ContextInfo context;
  std::vector<MapEntry> entries;
  std::size_t evaluated_points = 0;
  std::optional<double> wall_time_seconds;  // absent in strict-deterministic runs
  std::optional<std::size_t> generations;   // SGA only

  /// Throws PerfMapError on duplicate keys, invalid settings or a count mismatch.
  void validate() const;

  bool operator==(const PerformanceMap&) const = default;
};

/// Highest mean; the earliest entry wins ties.
const MapEntry& best(const PerformanceMap& map);

/// Fraction of means >= best * (1 - k), for 0 < k < 1.
double hp(std::span<const double> means, double k);
double hp(const PerformanceMap& map, double k);

inline const std::vector<double> kDefaultKs{0.05, 0.10, 0.20};

struct HpProfile {
  std::vector<double> ks;
  std::vector<double> values;

  bool operator==(const HpProfile&) const = default;
};

HpProfile hp_profile(const PerformanceMap& map, const std::vector<double>& ks = kDefaultKs);

/// Weak dominance: a.values[i] >= b.values[i] at every k.
bool dominates(const HpProfile& a, const HpProfile& b);

enum class Verdict { ADominatesB, BDominatesA, Equivalent, Incomparable };
Verdict compare(const HpProfile& a, const HpProfile& b);
std::string to_string(Verdict v);

// ---------------------------------------------------------------------------
// Plot projection

enum class CellState { Value, Timeout, Absent };

struct PlotCell {
  CellState state = CellState::Absent;
  double value = 0.0;  // sentinel for Timeout cells
};

/// Heatmap grid: x labels join the x-parameter values with " - ", in domain
/// order with the last x-parameter varying fastest. Domains that are neither
/// x nor y are collapsed by taking the best mean per cell.
struct Projection {
  std::vector<std::string> x_params;
  std::string y_param;
  std::vector<std::string> x_labels;
  std::vector<std::string> y_labels;
  std::vector<PlotCell> cells;  // row-major: cells[y * x_labels.size() + x]
  bool collapsed = false;

  const PlotCell& at(std::size_t x, std::size_t y) const { return cells[y * x_labels.size() + x]; }
};

Projection project_for_plot(const PerformanceMap& map, const std::vector<std::string>& x_params,
                            const std::string& y_param);

/// Default axes: DT x=(min_impurity, min_samples), y=max_depth; SVM x=(gamma, C),
/// y=kernel; otherwise the first domains of the space.
std::pair<std::vector<std::string>, std::string> default_plot_axes(const PerformanceMap& map);

std::string render_svg(const Projection& p, const std::string& title = {});

// ---------------------------------------------------------------------------
// Files

json map_to_json(const PerformanceMap& map);
PerformanceMap map_from_json(const json& j);

/// Header: one column per parameter, then mean, std.
std::string map_to_csv(const PerformanceMap& map);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_map(const PerformanceMap& map, const std::filesystem::path& path);
PerformanceMap read_map(const std::filesystem::path& path);

}  // namespace perfmap
