#pragma once

#include "splitlab/manifold.hpp"

#include <complex>
#include <string>
#include <vector>

namespace splitlab {

using IntMatrix = std::vector<std::vector<long>>;

/// Parameters accepted by `model_zoo`. Unused fields are ignored by a given model.
struct ModelParams {
  std::string name;
  /// Integer matrix (torus_auto, perturbed_auto, skew_shear). Empty selects the model's default.
  IntMatrix matrix;
  /// Perturbation amplitude (perturbed_auto, skew_shear).
  double epsilon = 0.0;
  /// Fiber rotation (skew_shear).
  double tau = 0.0;
  /// Shear profile s(u): "sin" = sin(2 pi u), "sin_cos" = sin(2 pi u) + 0.5 cos(4 pi u).
  std::string profile = "sin";
  /// Coordinate the shear depends on, and the coordinate it moves (perturbed_auto).
  int shear_source = 0;
  int shear_target = 1;
  /// dim E; -1 means "n - 1".
  int dim_e = -1;
  /// Explicit E selection: indices into the eigenvalues sorted by (modulus, argument).
  std::vector<int> e_eigen_indices;
  /// Ambient dimension (identity only).
  int dim = 3;
  /// Graph-transform iterations for numeric splittings.
  int refine_iterations = 40;
};

/// Hypothesis tags advertised by a zoo entry.
struct ModelTags {
  bool volume_preserving = false;
  int dim_e = 0;
  int dim_f = 0;
  bool analytic_splitting = true;
  bool chart_only = false;
  /// Which integrability results the model is built to exercise.
  std::vector<std::string> applicable_results;
};

struct ZooEntry {
  std::string name;
  std::string summary;
  std::string params_schema;
  ModelParams example;
  ModelTags tags;
};

/// Builds a zoo model. Throws PreconditionError for unknown names or invalid parameters.
ModelSystem model_zoo(const ModelParams& params);

/// Documented listing of every zoo entry with example parameters.
std::vector<ZooEntry> zoo_catalog();

/// Tags for an instantiated model (volume preservation measured, not assumed).
ModelTags model_tags(const ModelSystem& model);

/// Tribonacci companion matrix used by cat3.
IntMatrix cat3_matrix();

/// Real invariant subspaces of a matrix for a conjugation-closed eigenvalue selection.
struct EigenSplitting {
  Mat e_basis;
  Mat f_basis;
  std::vector<std::complex<double>> eigenvalues;  ///< sorted by (modulus, argument)
};
EigenSplitting eigen_splitting(const Mat& a, const std::vector<int>& e_indices);

}  // namespace splitlab
