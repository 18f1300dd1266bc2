#include "splitlab/config.hpp"
#include "splitlab/domination.hpp"
#include "splitlab/lyapunov.hpp"
#include "splitlab/run.hpp"
#include "splitlab/zoo.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

namespace py = pybind11;
using namespace splitlab;

namespace {

/// Builds the model named by a YAML config text.
ModelSystem model_from_yaml(const std::string& config_yaml) { return model_zoo(parse_config(config_yaml).model); }

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of splitlab. JSON crosses the boundary as text; the Python package decodes it.";

  // Translators run newest first, so the base class is registered before its subclasses.
  py::register_exception<Error>(m, "SplitlabError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);

  m.attr("REPORT_SCHEMA_VERSION") = kReportSchemaVersion;

  m.def("normalize_config", [](const std::string& text) { return to_yaml(parse_config(text, "<python>")); },
        py::arg("config_yaml"), "Parses, validates and re-serializes a YAML config with all defaults filled in.");

  m.def(
      "analyze",
      [](const std::string& text) {
        const RunConfig config = parse_config(text, "<python>");
        RunReport run;
        {
          py::gil_scoped_release release;
          run = run_analysis(config);
        }
        return py::make_tuple(run.report.dump(), run.tables, run.failed);
      },
      py::arg("config_yaml"), "Runs every enabled analysis; returns (report_json, tables, failed).");

  m.def(
      "analyze_to_dir",
      [](const std::string& text, const std::string& out) {
        const RunConfig config = parse_config(text, "<python>");
        py::gil_scoped_release release;
        const RunReport run = run_analysis(config);
        return write_run(run, config, resolve_output_root(config, out));
      },
      py::arg("config_yaml"), py::arg("out") = "", "Runs and writes a run directory; returns its path.");

  m.def("plot_keys", &plot_keys);
  m.def(
      "plotdata",
      [](const std::string& report_json, const std::string& key) {
        return plotdata_csv(nlohmann::json::parse(report_json), key);
      },
      py::arg("report_json"), py::arg("key"));
  m.def("load_report", [](const std::string& path) { return load_report(path).dump(); }, py::arg("path"));

  m.def("zoo", []() { return zoo_json().dump(); }, "Zoo catalog as JSON text.");

  m.def(
      "pointwise_ratios",
      [](const std::string& config_yaml, const std::vector<double>& x) {
        const PointwiseRatios r = pointwise_ratios(model_from_yaml(config_yaml), to_vec(x));
        return py::dict(py::arg("dyn_ratio") = r.dyn_ratio, py::arg("vol_ratio_fwd") = r.vol_ratio_fwd,
                        py::arg("vol_ratio_bwd") = r.vol_ratio_bwd);
      },
      py::arg("config_yaml"), py::arg("x"));

  m.def(
      "lyapunov_spectrum",
      [](const std::string& config_yaml, const std::vector<double>& x, long k, const std::string& subbundle) {
        const ModelSystem model = model_from_yaml(config_yaml);
        py::gil_scoped_release release;
        return lyapunov_spectrum(model, to_vec(x), k, subbundle_from_string(subbundle)).exponents;
      },
      py::arg("config_yaml"), py::arg("x"), py::arg("k"), py::arg("subbundle") = "full",
      "Ascending Lyapunov exponents from k steps of the restricted cocycle.");
}
