#include "perfmap/perfmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace perfmap {

void PerformanceMap::validate() const {
  if (evaluated_points != entries.size()) {
    throw PerfMapError("evaluated_points (" + std::to_string(evaluated_points) +
                       ") differs from entry count (" + std::to_string(entries.size()) + ")");
  }
  std::set<std::string> keys;
  for (const auto& e : entries) {
    std::string key;
    try {
      key = canonical_key(context.space, e.settings);
    } catch (const ParamSpaceError& err) {
      throw PerfMapError(std::string("map entry outside its space: ") + err.what());
    }
    if (!keys.insert(key).second) throw PerfMapError("duplicate map entry " + key);
  }
}

const MapEntry& best(const PerformanceMap& map) {
  if (map.entries.empty()) throw PerfMapError("best of an empty map");
  const MapEntry* top = &map.entries.front();
  for (const auto& e : map.entries) {
    if (e.mean > top->mean) top = &e;
  }
  return *top;
}

double hp(std::span<const double> means, double k) {
  if (means.empty()) throw PerfMapError("HP of an empty map");
  if (!(k > 0.0 && k < 1.0)) throw PerfMapError("k must lie strictly between 0 and 1");
  const double top = *std::max_element(means.begin(), means.end());
  if (!(top > 0.0)) throw HpUndefinedError();
  const double threshold = top * (1.0 - k);
  const auto n = std::count_if(means.begin(), means.end(), [&](double m) { return m >= threshold; });
  return static_cast<double>(n) / static_cast<double>(means.size());
}

double hp(const PerformanceMap& map, double k) {
  std::vector<double> means;
  means.reserve(map.entries.size());
  for (const auto& e : map.entries) means.push_back(e.mean);
  return hp(means, k);
}

HpProfile hp_profile(const PerformanceMap& map, const std::vector<double>& ks) {
  HpProfile p{ks, {}};
  for (double k : ks) p.values.push_back(hp(map, k));
  return p;
}

bool dominates(const HpProfile& a, const HpProfile& b) {
  if (a.ks != b.ks || a.values.size() != b.values.size()) {
    throw PerfMapError("profiles were computed at different k values");
  }
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] < b.values[i]) return false;
  }
  return true;
}

Verdict compare(const HpProfile& a, const HpProfile& b) {
  const bool ab = dominates(a, b);
  const bool ba = dominates(b, a);
  if (ab && ba) return Verdict::Equivalent;
  if (ab) return Verdict::ADominatesB;
  if (ba) return Verdict::BDominatesA;
  return Verdict::Incomparable;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ADominatesB: return "A dominates B";
    case Verdict::BDominatesA: return "B dominates A";
    case Verdict::Equivalent: return "equivalent";
    case Verdict::Incomparable: return "incomparable";
  }
  return "?";
}

// ---------------------------------------------------------------------------

Projection project_for_plot(const PerformanceMap& map, const std::vector<std::string>& x_params,
                            const std::string& y_param) {
  const ParamSpace& space = map.context.space;
  if (x_params.empty() || x_params.size() > 2) {
    throw PerfMapError("plot needs one or two x parameters");
  }
  std::vector<std::size_t> xd;
  for (const auto& name : x_params) {
    auto i = space.index_of(name);
    if (!i) throw PerfMapError("unknown parameter '" + name + "'");
    if (std::find(xd.begin(), xd.end(), *i) != xd.end()) {
      throw PerfMapError("parameter '" + name + "' used twice");
    }
    xd.push_back(*i);
  }
  std::optional<std::size_t> yd;
  if (!y_param.empty()) {
    yd = space.index_of(y_param);
    if (!yd) throw PerfMapError("unknown parameter '" + y_param + "'");
    if (std::find(xd.begin(), xd.end(), *yd) != xd.end()) {
      throw PerfMapError("parameter '" + y_param + "' is on both axes");
    }
  }

  Projection p;
  p.x_params = x_params;
  p.y_param = y_param;
  p.collapsed = space.dimension() > xd.size() + (yd ? 1 : 0);
  const auto& d0 = space.domains()[xd[0]];
  for (const auto& a : d0.values()) {
    if (xd.size() == 1) {
      p.x_labels.push_back(format_atom(a));
      continue;
    }
    for (const auto& b : space.domains()[xd[1]].values()) {
      p.x_labels.push_back(format_atom(a) + " - " + format_atom(b));
    }
  }
  if (yd) {
    for (const auto& a : space.domains()[*yd].values()) p.y_labels.push_back(format_atom(a));
  } else {
    p.y_labels.emplace_back();
  }
  p.cells.assign(p.x_labels.size() * p.y_labels.size(), {});

  for (const auto& e : map.entries) {
    const Genes g = encode(space, e.settings);
    std::size_t x = g[xd[0]];
    if (xd.size() == 2) x = x * space.domains()[xd[1]].size() + g[xd[1]];
    const std::size_t y = yd ? g[*yd] : 0;
    PlotCell& c = p.cells[y * p.x_labels.size() + x];
    if (e.timed_out) {
      if (c.state == CellState::Absent) c = {CellState::Timeout, kTimeoutSentinel};
    } else if (c.state != CellState::Value || e.mean > c.value) {
      c = {CellState::Value, e.mean};
    }
  }
  return p;
}

std::pair<std::vector<std::string>, std::string> default_plot_axes(const PerformanceMap& map) {
  const ParamSpace& s = map.context.space;
  auto has = [&](const char* n) { return s.index_of(n).has_value(); };
  if (has("min_impurity") && has("min_samples") && has("max_depth")) {
    return {{"min_impurity", "min_samples"}, "max_depth"};
  }
  if (has("gamma") && has("C") && has("kernel")) return {{"gamma", "C"}, "kernel"};
  const auto& d = s.domains();
  if (d.empty()) throw PerfMapError("map has an empty parameter space");
  if (d.size() == 1) return {{d[0].name()}, ""};
  if (d.size() == 2) return {{d[0].name()}, d[1].name()};
  return {{d[0].name(), d[1].name()}, d[2].name()};
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Viridis sampled at five stops, linearly interpolated.
std::string color_for(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{{68, 1, 84},
                                                               {59, 82, 139},
                                                               {33, 145, 140},
                                                               {94, 201, 98},
                                                               {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

}  // namespace

std::string render_svg(const Projection& p, const std::string& title) {
  const std::size_t nx = p.x_labels.size(), ny = p.y_labels.size();
  const double cw = std::clamp(900.0 / static_cast<double>(std::max<std::size_t>(nx, 1)), 8.0, 48.0);
  const double ch = 18.0;
  const double left = 110.0, top = 50.0, bottom = 140.0, legend_w = 190.0;
  const double width = left + cw * static_cast<double>(nx) + legend_w;
  const double height = top + ch * static_cast<double>(std::max<std::size_t>(ny, 5)) + bottom;

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& c : p.cells) {
    if (c.state != CellState::Value) continue;
    lo = any ? std::min(lo, c.value) : c.value;
    hi = any ? std::max(hi, c.value) : c.value;
    any = true;
  }
  auto scale = [&](double v) { return hi > lo ? (v - lo) / (hi - lo) : 1.0; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt("%.0f", width) << "\" height=\""
    << fmt("%.0f", height) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  o << "<defs>\n"
       "<pattern id=\"timeout-hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
       "patternTransform=\"rotate(45)\">"
       "<rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
       "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#d62728\" stroke-width=\"3\"/>"
       "</pattern>\n";
  o << "<linearGradient id=\"scale\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">";
  for (int i = 0; i <= 4; ++i) {
    o << "<stop offset=\"" << fmt("%.2f", i / 4.0) << "\" stop-color=\"" << color_for(i / 4.0)
      << "\"/>";
  }
  o << "</linearGradient>\n</defs>\n";
  if (!title.empty()) {
    o << "<text x=\"" << fmt("%.1f", left) << "\" y=\"20\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  }

  const std::string x_name = [&] {
    std::string s;
    for (std::size_t i = 0; i < p.x_params.size(); ++i) s += (i ? " - " : "") + p.x_params[i];
    return s;
  }();
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      const PlotCell& c = p.at(x, y);
      const double px = left + cw * static_cast<double>(x);
      const double py = top + ch * static_cast<double>(y);
      std::string cls = "cell", fill, label;
      switch (c.state) {
        case CellState::Value:
          fill = color_for(scale(c.value));
          label = fmt("%.4f", c.value);
          break;
        case CellState::Timeout:
          cls += " timeout";
          fill = "url(#timeout-hatch)";
          label = "timeout (" + fmt("%.1f", c.value) + ")";
          break;
        case CellState::Absent:
          cls += " absent";
          fill = "#e6e6e6";
          label = "not evaluated";
          break;
      }
      o << "<rect class=\"" << cls << "\" x=\"" << fmt("%.2f", px) << "\" y=\"" << fmt("%.2f", py)
        << "\" width=\"" << fmt("%.2f", cw) << "\" height=\"" << fmt("%.2f", ch) << "\" fill=\""
        << fill << "\"><title>" << xml_escape(p.x_labels[x]) << " / "
        << xml_escape(p.y_labels[y]) << ": " << label << "</title></rect>\n";
    }
    o << "<text x=\"" << fmt("%.1f", left - 4) << "\" y=\""
      << fmt("%.1f", top + ch * (static_cast<double>(y) + 0.7)) << "\" text-anchor=\"end\">"
      << xml_escape(p.y_labels[y]) << "</text>\n";
  }
  for (std::size_t x = 0; x < nx; ++x) {
    const double px = left + cw * (static_cast<double>(x) + 0.5);
    const double py = top + ch * static_cast<double>(ny) + 6;
    o << "<text class=\"xlabel\" transform=\"translate(" << fmt("%.2f", px) << ","
      << fmt("%.2f", py) << ") rotate(-60)\" text-anchor=\"end\" font-size=\"8\">"
      << xml_escape(p.x_labels[x]) << "</text>\n";
  }
  o << "<text x=\"" << fmt("%.1f", left + cw * static_cast<double>(nx) / 2) << "\" y=\""
    << fmt("%.1f", height - 8) << "\" text-anchor=\"middle\">" << xml_escape(x_name)
    << "</text>\n";
  o << "<text x=\"14\" y=\"" << fmt("%.1f", top + ch * static_cast<double>(ny) / 2)
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << fmt("%.1f", top + ch * static_cast<double>(ny) / 2) << ")\">" << xml_escape(p.y_param)
    << "</text>\n";

  const double lx = left + cw * static_cast<double>(nx) + 30;
  o << "<g class=\"legend\">\n";
  o << "<rect x=\"" << fmt("%.1f", lx) << "\" y=\"" << fmt("%.1f", top)
    << "\" width=\"16\" height=\"100\" fill=\"url(#scale)\"/>\n";
  o << "<text x=\"" << fmt("%.1f", lx + 22) << "\" y=\"" << fmt("%.1f", top + 8) << "\">"
    << (any ? fmt("%.4f", hi) : "n/a") << "</text>\n";
  o << "<text x=\"" << fmt("%.1f", lx + 22) << "\" y=\"" << fmt("%.1f", top + 100) << "\">"
    << (any ? fmt("%.4f", lo) : "n/a") << "</text>\n";
  o << "<rect class=\"legend-timeout\" x=\"" << fmt("%.1f", lx) << "\" y=\""
    << fmt("%.1f", top + 115) << "\" width=\"16\" height=\"16\" fill=\"url(#timeout-hatch)\"/>";
  o << "<text x=\"" << fmt("%.1f", lx + 22) << "\" y=\"" << fmt("%.1f", top + 127)
    << "\">timeout (-0.2)</text>\n";
  o << "<rect class=\"legend-absent\" x=\"" << fmt("%.1f", lx) << "\" y=\""
    << fmt("%.1f", top + 137) << "\" width=\"16\" height=\"16\" fill=\"#e6e6e6\"/>";
  o << "<text x=\"" << fmt("%.1f", lx + 22) << "\" y=\"" << fmt("%.1f", top + 149)
    << "\">not evaluated</text>\n";
  if (p.collapsed) {
    o << "<text x=\"" << fmt("%.1f", lx) << "\" y=\"" << fmt("%.1f", top + 171)
      << "\">best over hidden parameters</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------

json map_to_json(const PerformanceMap& map) {
  const ContextInfo& c = map.context;
  json ctx = {{"learner", c.learner},
              {"optimizer", c.optimizer},
              {"dataset", c.dataset},
              {"task", c.task},
              {"rows", c.rows},
              {"subsample", c.subsample ? json(*c.subsample) : json(nullptr)},
              {"folds", c.folds},
              {"seed", c.seed},
              {"timeout", c.timeout}};
  if (c.sga) ctx["sga"] = sga_config_to_json(*c.sga);
  ctx["space"] = space_to_json(c.space);

  json entries = json::array();
  for (const auto& e : map.entries) {
    json je = {{"settings", settings_to_json(c.space, e.settings)}, {"mean", e.mean}, {"std", e.std}};
    if (e.timed_out) je["timeout"] = true;
    if (e.clamped) je["clamped"] = true;
    entries.push_back(std::move(je));
  }
  json out = {{"context", std::move(ctx)},
              {"entries", std::move(entries)},
              {"evaluated_points", map.evaluated_points},
              {"wall_time_seconds",
               map.wall_time_seconds ? json(*map.wall_time_seconds) : json(nullptr)}};
  if (map.generations) out["generations"] = *map.generations;
  return out;
}

PerformanceMap map_from_json(const json& j) {
  PerformanceMap m;
  try {
    const json& c = j.at("context");
    m.context.learner = c.at("learner").get<std::string>();
    m.context.optimizer = c.at("optimizer").get<std::string>();
    m.context.dataset = c.at("dataset").get<std::string>();
    m.context.task = c.value("task", std::string{});
    m.context.rows = c.value("rows", std::size_t{0});
    if (c.contains("subsample") && !c["subsample"].is_null()) {
      m.context.subsample = c["subsample"].get<std::size_t>();
    }
    m.context.folds = c.at("folds").get<std::size_t>();
    m.context.seed = c.at("seed").get<std::uint64_t>();
    m.context.timeout = c.at("timeout").get<double>();
    if (c.contains("sga")) m.context.sga = sga_config_from_json(c["sga"]);
    m.context.space = space_from_json(c.at("space"));
    for (const auto& je : j.at("entries")) {
      MapEntry e;
      e.settings = settings_from_json(m.context.space, je.at("settings"));
      e.mean = je.at("mean").get<double>();
      e.std = je.at("std").get<double>();
      e.timed_out = je.value("timeout", false);
      e.clamped = je.value("clamped", false);
      m.entries.push_back(std::move(e));
    }
    m.evaluated_points = j.at("evaluated_points").get<std::size_t>();
    if (j.contains("wall_time_seconds") && !j["wall_time_seconds"].is_null()) {
      m.wall_time_seconds = j["wall_time_seconds"].get<double>();
    }
    if (j.contains("generations")) m.generations = j["generations"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw PerfMapError(std::string("malformed map: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw PerfMapError(std::string("malformed map: ") + e.what());
  } catch (const ParamSpaceError& e) {
    throw PerfMapError(std::string("malformed map: ") + e.what());
  }
  m.validate();
  return m;
}

std::string map_to_csv(const PerformanceMap& map) {
  std::ostringstream o;
  for (const auto& d : map.context.space.domains()) o << d.name() << ',';
  o << "mean,std\n";
  for (const auto& e : map.entries) {
    for (const auto& a : e.settings.atoms) o << format_atom(a) << ',';
    o << json(e.mean).dump() << ',' << json(e.std).dump() << '\n';
  }
  return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PerfMapError("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw PerfMapError("write failed for '" + path.string() + "'");
}

void write_map(const PerformanceMap& map, const std::filesystem::path& path) {
  write_text(path, map_to_json(map).dump(2) + "\n");
}

PerformanceMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PerfMapError("cannot read map '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw PerfMapError("map '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return map_from_json(j);
}

}  // namespace perfmap
