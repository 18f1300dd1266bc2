#pragma once

#include "splitlab/config.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace splitlab {

inline constexpr const char* kReportSchemaVersion = "1.0";
inline constexpr int kReportSchemaMajor = 1;

/// Everything `analyze` produces, before it touches the filesystem.
struct RunReport {
  nlohmann::json report;
  /// File name -> CSV text. Bodies are deterministic given the config.
  std::map<std::string, std::string> tables;
  /// File name -> mesh text.
  std::map<std::string, std::string> meshes;
  bool failed = false;
};

/// Sample points: the explicit list if given, else `count` seeded draws.
std::vector<Vec> sample_points(const RunConfig& config, const ModelSystem& model);

/// Runs every enabled analysis on every sample point. Module errors are recorded in
/// the report (and set `failed`) instead of aborting the run.
RunReport run_analysis(const RunConfig& config);

/// Output root precedence: explicit override, then $SPLITLAB_OUT, then config.output_dir.
std::string resolve_output_root(const RunConfig& config, const std::string& override_root);

/// Writes report.json (with a creation timestamp), config.yaml and all tables into
/// <root>/<run name>/ and returns that directory.
std::string write_run(const RunReport& run, const RunConfig& config, const std::string& root);

/// Loads a report and rejects unknown major schema versions (ConfigError).
nlohmann::json load_report(const std::string& path);

/// Plot keys understood by `plotdata_csv`.
std::vector<std::string> plot_keys();

/// CSV for one report section; identical to the table written by `analyze`.
/// Unknown keys throw PreconditionError listing the valid keys.
std::string plotdata_csv(const nlohmann::json& report, const std::string& key);

/// Human-readable zoo listing and its JSON form.
std::string zoo_listing();
nlohmann::json zoo_json();

/// YAML config tree as JSON (scalars typed as int, float, bool or string).
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace splitlab
