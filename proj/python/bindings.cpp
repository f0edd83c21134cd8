#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "perfmap/cli.hpp"
#include "perfmap/perfmap.hpp"

namespace py = pybind11;
using namespace perfmap;

namespace {

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

std::string run_config(const std::string& config, std::size_t jobs, std::optional<std::uint64_t> seed,
                       std::optional<double> timeout, std::optional<std::size_t> subsample) {
  RunConfig cfg = load_run_config(config);
  cfg.jobs = jobs;
  if (seed) {
    cfg.seed = *seed;
    cfg.sga_seed_given = false;
  }
  if (timeout) cfg.timeout = *timeout;
  if (subsample) cfg.subsample = *subsample;
  const LearningContext lc = build_context(cfg);
  OptimizationResult r;
  {
    py::gil_scoped_release release;
    r = run_context(lc);
  }
  return map_to_json(r.map).dump();
}

PerformanceMap map_from_text(const std::string& text) { return map_from_json(json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hyper-parameter performance maps: grid and genetic meta-optimization, HP analysis";

  // Later registrations are tried first, so derived types come last.
  auto perfmap_error = py::register_exception<PerfMapError>(m, "PerfMapError", PyExc_ValueError);
  py::register_exception<HpUndefinedError>(m, "HpUndefinedError", perfmap_error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<ParamSpaceError>(m, "ParamSpaceError", PyExc_ValueError);

  m.def("cli", &cli, py::arg("args"),
        "Runs the command-line interface; returns (exit_code, stdout, stderr).");

  m.def("run_config", &run_config, py::arg("config"), py::arg("jobs") = 1,
        py::arg("seed") = py::none(), py::arg("timeout") = py::none(),
        py::arg("subsample") = py::none(),
        "Meta-optimizes the context described by a run configuration; returns the map as JSON text.");

  m.def("hp", [](const std::vector<double>& means, double k) { return hp(means, k); },
        py::arg("means"), py::arg("k"), "Fraction of means within relative distance k of the best.");

  m.def(
      "hp_profile",
      [](const std::string& map_json, const std::vector<double>& ks) {
        return hp_profile(map_from_text(map_json), ks).values;
      },
      py::arg("map_json"), py::arg("ks") = kDefaultKs);

  m.def(
      "compare",
      [](const std::vector<double>& ks, const std::vector<double>& a, const std::vector<double>& b) {
        return to_string(compare(HpProfile{ks, a}, HpProfile{ks, b}));
      },
      py::arg("ks"), py::arg("a"), py::arg("b"),
      "Dominance verdict between two HP profiles taken at the same ks.");

  m.def(
      "render_svg",
      [](const std::string& map_json, std::vector<std::string> x, std::string y) {
        const PerformanceMap pm = map_from_text(map_json);
        if (x.empty()) std::tie(x, y) = default_plot_axes(pm);
        return render_svg(project_for_plot(pm, x, y), pm.context.dataset);
      },
      py::arg("map_json"), py::arg("x") = std::vector<std::string>{}, py::arg("y") = "");

  m.def(
      "map_to_csv", [](const std::string& map_json) { return map_to_csv(map_from_text(map_json)); },
      py::arg("map_json"));

  m.def(
      "builtin_space",
      [](const std::string& learner) {
        const auto kind = learner == "SVM" ? LearnerKind::Svm : LearnerKind::DecisionTree;
        if (learner != "SVM" && learner != "DT") throw ParamSpaceError("unknown learner '" + learner + "'");
        return space_to_json(builtin_space(kind)).dump();
      },
      py::arg("learner"), "The learner's builtin space as JSON text.");

  m.attr("TIMEOUT_SENTINEL") = kTimeoutSentinel;
}
