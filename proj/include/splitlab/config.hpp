#pragma once

#include "splitlab/zoo.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace splitlab {

struct SampleSpec {
  int count = 4;
  std::uint64_t seed = 20240501;
  /// Explicit points; when non-empty they replace the random draw.
  std::vector<Vec> points;
};

struct Horizons {
  /// Longest k for the second-order and triple-bound sequences.
  int k_max = 50;
  std::vector<long> k_grid = {10, 100, 1000};
  std::vector<double> h_list = {1e-2, 1e-2 * 0.4641588833612779, 1e-2 * 0.21544346900318834, 1e-3};
  long lyapunov_k = 2000;
  std::vector<long> probe_k = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
};

/// Overrides of module defaults. Each field has a documented safe range checked on load.
struct Tolerances {
  double star_rate_floor = 1e-3;
  double star_min_threshold = -5.0;
  double starstar_rate_floor = 1e-9;
  double fd_step = 1e-4;
  double involutivity = 1e-6;
  double frame_radius = 1e-2;
  double integrator = 1e-12;
  double holonomy_floor = 1e-11;
  double margin_zero = 1e-6;
  double det_product = 1e-8;
  /// Pointwise ratios must stay below 1 - domination_margin to count as dominated.
  double domination_margin = 1e-9;
  /// Upper bound asserted on K_k by the bound probe.
  double bound_constant = std::numeric_limits<double>::infinity();
};

struct Analyses {
  bool domination = true;
  bool lyapunov = true;
  bool regularity = true;
  bool brackets = true;
  bool holonomy = true;
  bool bound_probe = true;
  int apriori_trials = 20;
  bool surface = false;
  double surface_extent = 0.3;
  int surface_resolution = 9;
};

struct RunConfig {
  ModelParams model;
  SampleSpec samples;
  Horizons horizons;
  Tolerances tolerances;
  Analyses analyses;
  /// Output root; the run directory is <dir>/<name>.
  std::string output_dir = "splitlab_runs";
  /// Empty selects the model name.
  std::string run_name;
};

/// Parses YAML text. Errors are ConfigError with "<source>:<line>: <field>: <reason>".
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Lossless YAML serialization (doubles with 17 significant digits).
std::string to_yaml(const RunConfig& config);

/// Range checks; throws ConfigError naming the field.
void validate(const RunConfig& config);

}  // namespace splitlab
