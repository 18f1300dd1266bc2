#include "splitlab/run.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitModuleError = 1;
constexpr int kExitUsageError = 2;

struct AnalyzeArgs {
  std::string config_path;
  std::string model;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> kmax;
  std::optional<int> points;
  bool quiet = false;
};

splitlab::RunConfig build_config(const AnalyzeArgs& a) {
  splitlab::RunConfig config;
  if (!a.config_path.empty()) {
    config = splitlab::load_config(a.config_path);
  } else {
    bool found = false;
    for (const auto& e : splitlab::zoo_catalog())
      if (e.name == a.model) {
        config.model = e.example;
        found = true;
      }
    if (!found) throw splitlab::ConfigError("--model: unknown zoo model '" + a.model + "'");
  }
  if (a.seed) config.samples.seed = *a.seed;
  if (a.kmax) config.horizons.k_max = *a.kmax;
  if (a.points) {
    if (config.samples.points.empty())
      config.samples.count = *a.points;
    else if (static_cast<std::size_t>(*a.points) < config.samples.points.size())
      config.samples.points.resize(static_cast<std::size_t>(*a.points));
  }
  splitlab::validate(config);
  return config;
}

void print_summary(const nlohmann::json& rep, const std::string& dir) {
  std::cout << "run directory: " << dir << "\n";
  std::cout << "model: " << rep["model"]["name"].get<std::string>() << "  status: " << rep["status"].get<std::string>()
            << "\n";
  std::cout << "conditions:\n";
  for (const auto& c : rep["verdicts"]["conditions"]) {
    std::cout << "  " << c["condition"].get<std::string>() << ": "
              << c["status"].get<std::string>()
              << "  margin=" << c["margin"].dump() << "\n";
  }
  std::cout << "results:\n";
  for (const auto& r : rep["verdicts"]["results"]) {
    std::cout << "  " << r["result"].get<std::string>() << ": " << r["predicts"].get<std::string>();
    if (r["contradicted_by_brackets"].get<bool>()) std::cout << " (contradicted by bracket verdicts)";
    std::cout << "\n";
  }
  for (const auto& p : rep["points"])
    for (const auto& e : p["errors"])
      std::cout << "error at point " << p["id"].get<int>() << " in " << e["module"].get<std::string>() << ": "
                << e["message"].get<std::string>() << "\n";
}

int run_analyze(const AnalyzeArgs& a) {
  const splitlab::RunConfig config = build_config(a);
  const splitlab::RunReport run = splitlab::run_analysis(config);
  const std::string dir = splitlab::write_run(run, config, splitlab::resolve_output_root(config, a.out));
  if (!a.quiet) print_summary(run.report, dir);
  if (run.failed) {
    for (const auto& e : run.report["errors"])
      std::cerr << "error in " << e["module"].get<std::string>() << ": " << e["message"].get<std::string>() << "\n";
    if (a.quiet) std::cerr << "analysis finished with module errors; see " << dir << "/report.json\n";
    return kExitModuleError;
  }
  return 0;
}

int run_plotdata(const std::string& report_path, const std::vector<std::string>& keys, const std::string& out_dir,
                 bool quiet) {
  const nlohmann::json rep = splitlab::load_report(report_path);
  namespace fs = std::filesystem;
  const fs::path dir = out_dir.empty() ? fs::path(report_path).parent_path() : fs::path(out_dir);
  std::vector<std::pair<std::string, std::string>> outputs;
  for (const auto& key : keys) outputs.emplace_back(key, splitlab::plotdata_csv(rep, key));
  if (!dir.empty()) fs::create_directories(dir);
  for (const auto& [key, text] : outputs) {
    const fs::path file = dir / ("plot_" + key + ".csv");
    std::ofstream out(file, std::ios::binary);
    if (!out) throw splitlab::Error("cannot write " + file.string());
    out << text;
    if (!quiet) std::cout << file.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"splitlab: numerical laboratory for integrability of dominated splittings"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Run every enabled analysis and write a report directory");
  auto* config_opt = analyze->add_option("--config", analyze_args.config_path, "YAML run configuration")
                         ->check(CLI::ExistingFile);
  analyze->add_option("--model", analyze_args.model, "Zoo model name (uses its example parameters)")
      ->excludes(config_opt);
  analyze->add_option("--out", analyze_args.out, "Output root (overrides $SPLITLAB_OUT and the config)");
  analyze->add_option("--seed", analyze_args.seed, "Sampling seed override");
  analyze->add_option("--kmax", analyze_args.kmax, "k_max override for the domination sequences");
  analyze->add_option("--points", analyze_args.points, "Number of sample points override");
  analyze->add_flag("--quiet", analyze_args.quiet, "Suppress the summary");

  bool zoo_json = false;
  auto* zoo = app.add_subcommand("zoo", "List the model zoo with parameter schemas and hypothesis tags");
  zoo->add_flag("--json", zoo_json, "Print the listing as JSON");

  std::string report_path, plot_out;
  std::vector<std::string> plot_keys;
  bool plot_quiet = false;
  auto* plotdata = app.add_subcommand("plotdata", "Export plot-ready CSV from a report");
  plotdata->add_option("report", report_path, "Path to report.json")->required();
  plotdata->add_option("keys", plot_keys, "Sections: star, regularity, holonomy, brackets, bound")->required();
  plotdata->add_option("--out", plot_out, "Directory for plot_<key>.csv (default: the report directory)");
  plotdata->add_flag("--quiet", plot_quiet, "Do not print written paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsageError;
  }

  try {
    if (*analyze) {
      if (analyze_args.config_path.empty() && analyze_args.model.empty()) {
        std::cerr << "analyze: one of --config or --model is required\n";
        return kExitUsageError;
      }
      return run_analyze(analyze_args);
    }
    if (*zoo) {
      if (zoo_json)
        std::cout << splitlab::zoo_json().dump(2) << "\n";
      else
        std::cout << splitlab::zoo_listing();
      return 0;
    }
    if (*plotdata) return run_plotdata(report_path, plot_keys, plot_out, plot_quiet);
  } catch (const splitlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const splitlab::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModuleError;
  }
  return 0;
}
