#include "perfmap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "perfmap/rng.hpp"
#include "perfmap/serialization.hpp"

namespace perfmap {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Comma-separated fields with optional double quotes ("" escapes a quote).
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

bool is_missing(std::string_view cell) { return cell.empty() || cell == "?"; }

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::vector<std::string> sorted_lexicon(const std::vector<std::vector<std::string>>& rows,
                                        std::size_t col) {
  std::set<std::string> values;
  for (const auto& r : rows) values.insert(r[col]);
  return {values.begin(), values.end()};
}

}  // namespace

std::string to_string(Task task) {
  return task == Task::Classification ? "classification" : "regression";
}

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Integer: return "integer";
    case ColumnKind::Real: return "real";
  }
  return "real";
}

Task parse_task(std::string_view text) {
  if (text == "classification") return Task::Classification;
  if (text == "regression") return Task::Regression;
  throw DatasetError("unknown task '" + std::string(text) + "'");
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "categorical") return ColumnKind::Categorical;
  if (text == "integer") return ColumnKind::Integer;
  if (text == "real") return ColumnKind::Real;
  throw DatasetError("unknown column kind '" + std::string(text) + "'");
}

void Dataset::validate() const {
  if (features.rows() != target.size()) {
    throw DatasetError("feature rows do not match target length");
  }
  if (target.size() < 2) throw DatasetError("dataset needs at least 2 rows");
  if (feature_meta.size() != features.cols()) {
    throw DatasetError("feature metadata does not match column count");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw DatasetError("non-finite feature value");
  }
  if (task == Task::Classification) {
    for (double t : target) {
      if (t < 0 || t >= static_cast<double>(class_labels.size()) || t != std::floor(t)) {
        throw DatasetError("class index out of range");
      }
    }
  }
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.name = name;
  out.features = features.select_rows(rows);
  out.target.reserve(rows.size());
  for (auto r : rows) out.target.push_back(target[r]);
  out.task = task;
  out.feature_meta = feature_meta;
  out.class_labels = class_labels;
  return out;
}

Dataset load_csv(std::istream& in, const Schema& schema, std::string name) {
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  auto column_of = [&](const std::string& col) {
    auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) throw DatasetError("unknown column '" + col + "' in schema");
    return static_cast<std::size_t>(it - header.begin());
  };
  if (schema.columns.empty()) throw DatasetError("schema has no feature columns");
  const std::size_t target_col = column_of(schema.target);
  std::vector<std::size_t> feature_cols;
  for (const auto& spec : schema.columns) {
    if (spec.name == schema.target) {
      throw DatasetError("target column '" + spec.name + "' listed as a feature");
    }
    feature_cols.push_back(column_of(spec.name));
  }

  // Raw cells per kept row: features then target.
  std::vector<std::vector<std::string>> rows;
  std::size_t dropped = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DatasetError("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, got " +
                         std::to_string(cells.size()));
    }
    std::vector<std::string> kept;
    kept.reserve(feature_cols.size() + 1);
    bool missing = false;
    for (auto c : feature_cols) {
      missing = missing || is_missing(cells[c]);
      kept.push_back(std::move(cells[c]));
    }
    missing = missing || is_missing(cells[target_col]);
    kept.push_back(std::move(cells[target_col]));
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(kept));
  }
  if (rows.size() < 2) throw DatasetError("fewer than 2 rows after cleaning");

  Dataset ds;
  ds.name = std::move(name);
  ds.task = schema.task;
  ds.dropped_rows = dropped;
  ds.features = Matrix(rows.size(), feature_cols.size());
  for (std::size_t j = 0; j < schema.columns.size(); ++j) {
    const auto& spec = schema.columns[j];
    FeatureMeta meta{spec.name, spec.kind, {}};
    if (spec.kind == ColumnKind::Categorical) {
      meta.lexicon = sorted_lexicon(rows, j);
      std::unordered_map<std::string, double> code;
      for (std::size_t k = 0; k < meta.lexicon.size(); ++k) {
        code[meta.lexicon[k]] = static_cast<double>(k);
      }
      for (std::size_t i = 0; i < rows.size(); ++i) ds.features(i, j) = code.at(rows[i][j]);
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto v = parse_number(rows[i][j]);
        if (!v || (spec.kind == ColumnKind::Integer && *v != std::floor(*v))) {
          throw DatasetError("column '" + spec.name + "': non-numeric value '" + rows[i][j] +
                             "' in " + to_string(spec.kind) + " column");
        }
        ds.features(i, j) = *v;
      }
    }
    ds.feature_meta.push_back(std::move(meta));
  }

  const std::size_t t = feature_cols.size();
  ds.target.resize(rows.size());
  if (schema.task == Task::Classification) {
    ds.class_labels = sorted_lexicon(rows, t);
    std::unordered_map<std::string, double> code;
    for (std::size_t k = 0; k < ds.class_labels.size(); ++k) {
      code[ds.class_labels[k]] = static_cast<double>(k);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) ds.target[i] = code.at(rows[i][t]);
  } else {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto v = parse_number(rows[i][t]);
      if (!v) throw DatasetError("non-numeric regression target '" + rows[i][t] + "'");
      ds.target[i] = *v;
    }
  }
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, std::string name) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read '" + path.string() + "'");
  if (name.empty()) name = path.stem().string();
  return load_csv(in, schema, std::move(name));
}

std::pair<Matrix, Standardization> standardize(const Matrix& x,
                                               const std::optional<Standardization>& stats) {
  Standardization s;
  if (stats) {
    if (stats->mean.size() != x.cols() || stats->stddev.size() != x.cols()) {
      throw DatasetError("standardization stats dimension mismatch");
    }
    s = *stats;
  } else {
    s.mean.assign(x.cols(), 0.0);
    s.stddev.assign(x.cols(), 0.0);
    const double n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) sum += x(r, c);
      const double mean = x.rows() ? sum / n : 0.0;
      double ss = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - mean) * (x(r, c) - mean);
      s.mean[c] = mean;
      const double sd = x.rows() ? std::sqrt(ss / n) : 0.0;
      // Relative floor: a column whose spread is rounding noise counts as constant.
      s.stddev[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 0.0;
    }
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = s.stddev[c] > 0.0 ? (x(r, c) - s.mean[c]) / s.stddev[c] : 0.0;
    }
  }
  return {std::move(out), std::move(s)};
}

std::pair<Dataset, Standardization> standardize(const Dataset& ds,
                                                const std::optional<Standardization>& stats) {
  if (ds.n_features() == 0) throw DatasetError("standardize needs at least one feature column");
  auto [x, s] = standardize(ds.features, stats);
  Dataset out = ds;
  out.features = std::move(x);
  return {std::move(out), std::move(s)};
}

Dataset one_hot_expand(const Dataset& ds) {
  std::vector<FeatureMeta> meta;
  std::vector<std::pair<std::size_t, int>> plan;  // (source column, category or -1)
  for (std::size_t c = 0; c < ds.feature_meta.size(); ++c) {
    const auto& m = ds.feature_meta[c];
    if (m.kind == ColumnKind::Categorical && m.lexicon.size() > 2) {
      for (std::size_t k = 0; k < m.lexicon.size(); ++k) {
        meta.push_back({m.name + "=" + m.lexicon[k], ColumnKind::Integer, {}});
        plan.emplace_back(c, static_cast<int>(k));
      }
    } else {
      meta.push_back(m);
      plan.emplace_back(c, -1);
    }
  }
  Dataset out = ds;
  out.feature_meta = std::move(meta);
  out.features = Matrix(ds.size(), plan.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t j = 0; j < plan.size(); ++j) {
      const auto [src, cat] = plan[j];
      const double v = ds.features(r, src);
      out.features(r, j) = cat < 0 ? v : (v == static_cast<double>(cat) ? 1.0 : 0.0);
    }
  }
  return out;
}

namespace {

// Shuffled row indices, grouped by class (class order ascending) when stratifying.
std::vector<std::size_t> shuffled_order(const Dataset& ds, std::uint64_t seed) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  shuffle(idx, rng);
  if (ds.task == Task::Classification) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return ds.target[a] < ds.target[b]; });
  }
  return idx;
}

}  // namespace

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n < 2 || n > ds.size()) {
    throw DatasetError("subsample size must be in [2, " + std::to_string(ds.size()) + "]");
  }
  if (n == ds.size()) return ds;
  auto order = shuffled_order(ds, seed);
  std::vector<std::size_t> picked;
  picked.reserve(n);
  if (ds.task == Task::Classification) {
    // Take ceil/floor of the proportional share per class, spreading the
    // remainder over the largest fractional parts.
    std::vector<std::size_t> counts(ds.n_classes(), 0);
    for (double t : ds.target) ++counts[static_cast<std::size_t>(t)];
    std::vector<std::size_t> take(counts.size());
    std::vector<std::pair<double, std::size_t>> frac;
    std::size_t total = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const double share = static_cast<double>(counts[c]) * static_cast<double>(n) /
                           static_cast<double>(ds.size());
      take[c] = static_cast<std::size_t>(std::floor(share));
      total += take[c];
      frac.emplace_back(-(share - std::floor(share)), c);
    }
    std::sort(frac.begin(), frac.end());
    for (std::size_t k = 0; total < n; ++k, ++total) ++take[frac[k % frac.size()].second];
    std::size_t pos = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      for (std::size_t k = 0; k < take[c]; ++k) picked.push_back(order[pos + k]);
      pos += counts[c];
    }
  } else {
    picked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(picked.begin(), picked.end());
  Dataset out = ds.select_rows(picked);
  out.dropped_rows = ds.dropped_rows;
  return out;
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) rows.push_back(i);
  }
  return rows;
}

void FoldPlan::validate(std::size_t n_instances) const {
  if (assignments.size() != n_instances) {
    throw DatasetError("fold plan covers " + std::to_string(assignments.size()) +
                       " instances, dataset has " + std::to_string(n_instances));
  }
  if (n_folds < 2) throw DatasetError("fold plan needs at least 2 folds");
  std::vector<std::size_t> sizes(n_folds, 0);
  for (auto a : assignments) {
    if (a >= n_folds) throw DatasetError("fold index out of range");
    ++sizes[a];
  }
  if (std::find(sizes.begin(), sizes.end(), 0u) != sizes.end()) {
    throw DatasetError("fold plan has an empty fold");
  }
}

FoldPlan make_folds(const Dataset& ds, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2 || n_folds > ds.size()) {
    throw DatasetError("n_folds must be in [2, " + std::to_string(ds.size()) + "], got " +
                       std::to_string(n_folds));
  }
  FoldPlan plan{seed, n_folds, std::vector<std::size_t>(ds.size())};
  auto order = shuffled_order(ds, seed);
  for (std::size_t k = 0; k < order.size(); ++k) plan.assignments[order[k]] = k % n_folds;
  return plan;
}

std::map<std::string, DatasetSource> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read manifest '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError("manifest '" + path.string() + "': " + e.what());
  }
  if (!doc.is_object()) throw DatasetError("manifest must be a JSON object");
  std::map<std::string, DatasetSource> out;
  for (const auto& [name, entry] : doc.items()) {
    out.emplace(name, dataset_source_from_json(name, entry, path.parent_path()));
  }
  return out;
}

}  // namespace perfmap
