#include "perfmap/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "perfmap/perfmap.hpp"

namespace perfmap {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string context_label(const ContextInfo& c) { return c.learner + "-" + c.optimizer; }

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig cfg;
  std::optional<json> space_doc;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "dataset") {
        if (v.is_string()) {
          cfg.dataset = v.get<std::string>();
        } else if (v.is_object()) {
          cfg.dataset = v.value("name", std::string("dataset"));
          cfg.source = dataset_source_from_json(cfg.dataset, v, base_dir);
        } else {
          throw ConfigError("'dataset' must be a manifest key or {path, task, schema}");
        }
      } else if (key == "manifest") {
        cfg.manifest = resolve(base_dir, v.get<std::string>());
      } else if (key == "learner") {
        cfg.learner = v.get<std::string>();
      } else if (key == "optimizer") {
        cfg.optimizer = parse_optimizer(v.get<std::string>());
      } else if (key == "sga") {
        cfg.sga = sga_config_from_json(v, cfg.sga);
        cfg.sga_seed_given = v.contains("seed");
      } else if (key == "space") {
        space_doc = v;
      } else if (key == "folds") {
        cfg.folds = v.get<std::size_t>();
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "timeout") {
        cfg.timeout = v.get<double>();
      } else if (key == "subsample") {
        if (!v.is_null()) cfg.subsample = v.get<std::size_t>();
      } else if (key == "jobs") {
        cfg.jobs = v.get<std::size_t>();
      } else if (key == "out") {
        if (v.is_string()) {
          cfg.out_map = resolve(base_dir, v.get<std::string>());
        } else {
          for (const auto& [okey, ov] : v.items()) {
            const auto path = resolve(base_dir, ov.get<std::string>());
            if (okey == "map") {
              cfg.out_map = path;
            } else if (okey == "csv") {
              cfg.out_csv = path;
            } else if (okey == "svg") {
              cfg.out_svg = path;
            } else {
              throw ConfigError("unknown output kind '" + okey + "'");
            }
          }
        }
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
    if (space_doc) cfg.space = space_from_json(*space_doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ParamSpaceError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DatasetError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.dataset.empty()) throw ConfigError("config needs a 'dataset'");
  if (cfg.learner.empty()) throw ConfigError("config needs a 'learner'");
  if (cfg.folds < 2) throw ConfigError("'folds' must be >= 2");
  if (!(cfg.timeout > 0)) throw ConfigError("'timeout' must be > 0");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

LearningContext build_context(const RunConfig& cfg) {
  LearningContext lc;
  try {
    lc.learner = make_learner(cfg.learner);
    lc.space = cfg.space ? *cfg.space : lc.learner->default_space();
    lc.learner->check_space(lc.space);
    // Rejects values the learner cannot interpret, such as a symbolic depth.
    for (const auto& s : enumerate(lc.space)) {
      if (lc.learner->name() == "DT") DecisionTreeLearner::params(lc.space, s);
      if (lc.learner->name() == "SVM") SvmLearner::params(lc.space, s);
    }
  } catch (const ParamSpaceError& e) {
    throw ConfigError(e.what());
  }
  lc.optimizer = cfg.optimizer;
  lc.sga = cfg.sga;
  if (!cfg.sga_seed_given) lc.sga.seed = cfg.seed;
  lc.folds = cfg.folds;
  lc.seed = cfg.seed;
  lc.timeout_seconds = cfg.timeout;
  lc.jobs = cfg.jobs > 0 ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());

  DatasetSource source;
  if (cfg.source) {
    source = *cfg.source;
  } else {
    std::filesystem::path manifest = cfg.manifest;
    if (manifest.empty()) {
      const char* env = std::getenv("PERFMAP_MANIFEST");
      manifest = env && *env ? env : "data/manifest.json";
    }
    std::map<std::string, DatasetSource> sources;
    try {
      sources = load_manifest(manifest);
    } catch (const DatasetError& e) {
      throw ConfigError(e.what());
    }
    auto it = sources.find(cfg.dataset);
    if (it == sources.end()) {
      throw ConfigError("dataset '" + cfg.dataset + "' is not in " + manifest.string());
    }
    source = it->second;
  }
  Dataset ds = source.load();
  if (cfg.subsample && *cfg.subsample < ds.size()) {
    ds = subsample(ds, *cfg.subsample, cfg.seed);
    lc.subsample = cfg.subsample;
  }
  lc.dataset = std::make_shared<const Dataset>(std::move(ds));
  if (lc.folds > lc.dataset->size()) throw ConfigError("more folds than rows");
  return lc;
}

std::vector<double> parse_ks(const std::string& text) {
  std::vector<double> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double k = 0;
    try {
      k = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad k value '" + item + "'");
    }
    if (used != item.size() || !(k > 0.0 && k < 1.0)) {
      throw ConfigError("k values must be numbers in (0, 1), got '" + item + "'");
    }
    ks.push_back(k);
  }
  if (ks.empty()) throw ConfigError("no k values given");
  return ks;
}

namespace {

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string profile_text(const HpProfile& p) {
  std::string s;
  for (std::size_t i = 0; i < p.values.size(); ++i) s += (i ? " " : "") + fixed(p.values[i], 2);
  return s;
}

std::string ks_header(const std::vector<double>& ks) {
  std::string s;
  for (std::size_t i = 0; i < ks.size(); ++i) s += (i ? " " : "") + ("HP(" + fixed(ks[i], 2) + ")");
  return s;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_path,
            std::optional<std::size_t> jobs, std::optional<std::uint64_t> seed,
            std::optional<double> timeout, std::optional<std::size_t> sub, std::ostream& out) {
  RunConfig cfg = load_run_config(config_path);
  if (out_path) cfg.out_map = *out_path;
  if (jobs) cfg.jobs = *jobs;
  if (seed) {
    cfg.seed = *seed;
    cfg.sga_seed_given = false;
  }
  if (timeout) {
    if (!(*timeout > 0)) throw ConfigError("--timeout must be > 0");
    cfg.timeout = *timeout;
  }
  if (sub) cfg.subsample = *sub;
  const LearningContext lc = build_context(cfg);
  if (!cfg.out_map) {
    cfg.out_map = lc.dataset->name + "-" + lc.learner->name() + "-" + to_string(lc.optimizer) +
                  ".json";
  }

  const OptimizationResult r = run_context(lc);
  write_map(r.map, *cfg.out_map);
  if (cfg.out_csv) write_text(*cfg.out_csv, map_to_csv(r.map));
  if (cfg.out_svg) {
    const auto [xs, y] = default_plot_axes(r.map);
    write_text(*cfg.out_svg,
               render_svg(project_for_plot(r.map, xs, y), r.map.context.dataset + " " +
                                                              context_label(r.map.context)));
  }

  const MapEntry& top = best(r.map);
  char line[256];
  out << "dataset            learner-optimizer  best    std     points  time(s)\n";
  std::snprintf(line, sizeof line, "%-18s %-18s %-7s %-7s %-7zu %.1f\n",
                r.map.context.dataset.c_str(), context_label(r.map.context).c_str(),
                fixed(top.mean, 4).c_str(), fixed(top.std, 4).c_str(), r.map.evaluated_points,
                r.wall_seconds);
  out << line;
  out << "best settings: " << canonical_key(lc.space, top.settings) << "\n";
  if (lc.subsample) out << "rows: " << lc.dataset->size() << " (seeded subsample)\n";
  if (r.map.generations) out << "generations: " << *r.map.generations << "\n";
  const auto timeouts = std::count_if(r.map.entries.begin(), r.map.entries.end(),
                                      [](const MapEntry& e) { return e.timed_out; });
  if (timeouts > 0) out << "timeouts: " << timeouts << " (recorded as -0.2)\n";
  if (lc.learner->name() == "DT" && lc.space == builtin_space(LearnerKind::DecisionTree)) {
    out << "note: the DT builtin space has 1680 points (7 x 15 x 16); a 1440-point count "
           "corresponds to min_impurity 0.0-0.5 only\n";
  }
  if (!r.map.wall_time_seconds) out << "note: wall time is not stored in strict-deterministic maps\n";
  out << "map: " << cfg.out_map->string() << "\n";
  return 0;
}

int cmd_hp(const std::string& map_path, const std::vector<double>& ks, std::ostream& out) {
  const PerformanceMap m = read_map(map_path);
  const MapEntry& top = best(m);
  out << "dataset learner-optimizer best " << ks_header(ks) << "\n";
  out << m.context.dataset << " " << context_label(m.context) << " " << fixed(top.mean, 4) << " ";
  try {
    out << profile_text(hp_profile(m, ks)) << "\n";
  } catch (const HpUndefinedError& e) {
    out << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::vector<double>& ks, std::ostream& out) {
  const PerformanceMap a = read_map(a_path);
  const PerformanceMap b = read_map(b_path);
  const HpProfile pa = hp_profile(a, ks);
  const HpProfile pb = hp_profile(b, ks);
  out << "  context best " << ks_header(ks) << "\n";
  out << "A " << a.context.dataset << "/" << context_label(a.context) << " "
      << fixed(best(a).mean, 4) << " " << profile_text(pa) << "\n";
  out << "B " << b.context.dataset << "/" << context_label(b.context) << " "
      << fixed(best(b).mean, 4) << " " << profile_text(pb) << "\n";
  out << to_string(compare(pa, pb)) << "\n";
  return 0;
}

int cmd_plot(const std::string& map_path, const std::string& x, const std::string& y,
             const std::optional<std::string>& out_path, std::ostream& out) {
  const PerformanceMap m = read_map(map_path);
  auto [xs, yname] = default_plot_axes(m);
  if (!x.empty()) xs = split_names(x);
  if (!y.empty()) yname = y;
  Projection p;
  try {
    p = project_for_plot(m, xs, yname);
  } catch (const PerfMapError& e) {
    throw ConfigError(e.what());
  }
  std::filesystem::path target =
      out_path ? std::filesystem::path(*out_path)
               : std::filesystem::path(map_path).replace_extension(".svg");
  write_text(target, render_svg(p, m.context.dataset + " " + context_label(m.context)));
  std::size_t absent = 0, timeouts = 0;
  for (const auto& c : p.cells) {
    absent += c.state == CellState::Absent ? 1 : 0;
    timeouts += c.state == CellState::Timeout ? 1 : 0;
  }
  out << "plot: " << p.x_labels.size() << " x " << p.y_labels.size() << " cells (" << absent
      << " absent, " << timeouts << " timeout) -> " << target.string() << "\n";
  return 0;
}

int cmd_spaces(std::ostream& out) {
  for (auto kind : {LearnerKind::DecisionTree, LearnerKind::Svm}) {
    const ParamSpace s = builtin_space(kind);
    out << (kind == LearnerKind::DecisionTree ? "DT" : "SVM") << " (" << s.size() << " points)\n";
    for (const auto& d : s.domains()) {
      out << "  " << d.name() << " [" << d.size() << "]:";
      for (const auto& v : d.values()) out << " " << format_atom(v);
      out << "\n";
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Performance maps of learners over their hyper-parameter spaces", "perfmap"};
  app.require_subcommand(1);

  std::string config_path, ks_text = "0.05,0.10,0.20", x_names, y_name;
  std::optional<std::string> out_path;
  std::optional<std::size_t> jobs, sub;
  std::optional<std::uint64_t> seed;
  std::optional<double> timeout;
  std::string map_a, map_b;

  auto* run = app.add_subcommand("run", "Meta-optimize one learning context");
  run->add_option("--config", config_path, "Run configuration (JSON)")->required();
  run->add_option("--out", out_path, "Map JSON output path");
  run->add_option("--jobs", jobs, "Parallel evaluations (1 = strict-deterministic)")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Seed for folds and SGA");
  run->add_option("--timeout", timeout, "Per-evaluation deadline in seconds");
  run->add_option("--subsample", sub, "Seeded row subsample size")->check(CLI::PositiveNumber);

  auto* hp_cmd = app.add_subcommand("hp", "Best and HP(k) of a map");
  hp_cmd->add_option("map", map_a, "Map JSON")->required();
  hp_cmd->add_option("--ks", ks_text, "Comma-separated k values");

  auto* cmp = app.add_subcommand("compare", "Dominance verdict between two maps");
  cmp->add_option("map_a", map_a, "Map JSON (A)")->required();
  cmp->add_option("map_b", map_b, "Map JSON (B)")->required();
  cmp->add_option("--ks", ks_text, "Comma-separated k values");

  auto* plot = app.add_subcommand("plot", "SVG heatmap of a map projection");
  plot->add_option("map", map_a, "Map JSON")->required();
  plot->add_option("--x", x_names, "One or two comma-separated x parameters");
  plot->add_option("--y", y_name, "y parameter");
  plot->add_option("--out", out_path, "SVG output path");

  auto* spaces = app.add_subcommand("spaces", "Print the builtin parameter spaces");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_path, jobs, seed, timeout, sub, out);
    if (hp_cmd->parsed()) return cmd_hp(map_a, parse_ks(ks_text), out);
    if (cmp->parsed()) return cmd_compare(map_a, map_b, parse_ks(ks_text), out);
    if (plot->parsed()) return cmd_plot(map_a, x_names, y_name, out_path, out);
    if (spaces->parsed()) return cmd_spaces(out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace perfmap
