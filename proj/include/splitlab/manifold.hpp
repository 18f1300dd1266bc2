#pragma once

#include "splitlab/types.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace splitlab {

enum class SpaceKind { torus, chart_box };

/// Flat torus [0,1)^n or an open box in R^n, both with the Euclidean metric.
class Space {
 public:
  static Space torus(int dim);
  static Space box(std::vector<std::pair<double, double>> bounds);

  SpaceKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }

  /// Torus: reduce to [0,1)^n. Box: identity.
  Vec canonicalize(const Vec& x) const;
  /// Torus: always true. Box: strictly inside the bounds.
  bool contains(const Vec& x) const;
  /// Shortest displacement from a to b (wrap-around on the torus).
  Vec displacement(const Vec& a, const Vec& b) const;
  double distance(const Vec& a, const Vec& b) const { return displacement(a, b).norm(); }

 private:
  SpaceKind kind_ = SpaceKind::torus;
  int dim_ = 0;
  std::vector<std::pair<double, double>> bounds_;
};

using PointMap = std::function<Vec(const Vec&)>;
using MatrixField = std::function<Mat(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;

/// Invariant splitting E + F given as basis fields. Columns of e_basis(x) span E(x).
struct SplittingField {
  int dim_e = 0;
  int dim_f = 0;
  MatrixField e_basis;
  MatrixField f_basis;

  /// [E | F], n x n.
  Mat combined(const Vec& x) const;
  double condition(const Vec& x) const;
};

enum class Smoothness { analytic, numeric_splitting };

struct ModelSystem {
  std::string name;
  Space space = Space::torus(3);
  /// Lifted map: on tori the result is not reduced mod 1; `iterate` does that.
  PointMap map;
  PointMap inverse;
  MatrixField jacobian;
  SplittingField splitting;
  /// Splitting used to start graph-transform refinement (equals `splitting` for analytic models).
  SplittingField seed;
  Smoothness smoothness = Smoothness::analytic;
  bool volume_preserving = false;
  /// Constant Jacobian, when the model is a linear automorphism.
  std::optional<Mat> linear_part;
  /// Iteration count used when `splitting` is refined on demand.
  int refine_iterations = 0;

  int dim() const { return space.dim(); }
  /// Derivative of the inverse map at y.
  Mat inverse_jacobian(const Vec& y) const;
};

inline constexpr long kDefaultMaxIterate = 1'000'000;

/// phi^k(x), using the inverse for k < 0; canonicalized after each step.
/// Throws OrbitEscapeError if a chart-box orbit leaves the box.
Vec iterate(const ModelSystem& model, const Vec& x, long k, long max_steps = kDefaultMaxIterate);

/// Orbit points x, phi(x), ..., phi^k(x) (or backwards for k < 0).
std::vector<Vec> orbit(const ModelSystem& model, const Vec& x, long k);

struct RefinedSplitting {
  Mat e_basis;  ///< orthonormal, n x d
  Mat f_basis;  ///< orthonormal, n x l
  /// Sine of the largest principal angle between the last two iterates, per bundle.
  double e_angle_change = 0.0;
  double f_angle_change = 0.0;
  int iterations = 0;
};

/// Graph transform for the seed splitting: F is pushed forward `iterations`
/// steps from phi^-k(x), E backward from phi^k(x). Throws ConvergenceError when
/// the final angle change exceeds `tolerance`.
RefinedSplitting refine_splitting(const ModelSystem& model, const Vec& x, int iterations,
                                  double tolerance = 1e-9);

/// Pushes only (no convergence bookkeeping). Used by refined SplittingFields.
Mat push_forward_bundle(const ModelSystem& model, const MatrixField& seed, const Vec& x, int iterations);
Mat pull_back_bundle(const ModelSystem& model, const MatrixField& seed, const Vec& x, int iterations);

/// Relative distance of Dphi_x E(x) from E(phi x), and the same for F; the larger one.
double invariance_residual(const ModelSystem& model, const Vec& x);

/// max_i |(map(x + h e_i) - map(x)) / h - jacobian(x) e_i|.
double jacobian_fd_error(const ModelSystem& model, const Vec& x, double h);

/// Uniform point in the space (box: inner 80% of each axis).
Vec random_point(const Space& space, std::mt19937_64& rng);

}  // namespace splitlab
