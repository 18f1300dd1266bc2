#pragma once

#include "splitlab/frobenius.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace splitlab {

struct FlowOptions {
  /// Adaptive Dormand-Prince step control.
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  /// Radius passed to the frame construction (at least the loop/extent size is used).
  double frame_radius = 1e-2;
  /// Transverse defects at or below this count as the machine floor.
  double floor = 1e-11;
};

/// Closure error of the loop Y_i, Y_j, -Y_i, -Y_j with sides of time h.
struct HolonomyRecord {
  Vec center;
  double h = 0.0;
  int i = 1;
  int j = 2;
  Vec defect_vector;
  double defect_norm = 0.0;
  /// |Pi_x defect|: the part transverse to E(x).
  double transverse = 0.0;
  /// transverse / h^2.
  double normalized = 0.0;
  long integrator_steps = 0;
};

/// Flows along frame fields (1-based i, j). Throws StencilEscapeError if the loop leaves a chart box.
HolonomyRecord holonomy_defect(const SplittingField& splitting, const Space& space, const Vec& x, double h, int i,
                               int j, const FlowOptions& options = {});

enum class HolonomyVerdict { involutive, non_involutive, involutive_at_resolution, inconclusive };
std::string to_string(HolonomyVerdict v);

struct ScalingFit {
  std::vector<HolonomyRecord> records;
  /// log transverse = p log h + log C over the records above the floor.
  double exponent = 0.0;
  double coefficient = 0.0;
  bool exponent_defined = false;
  HolonomyVerdict verdict = HolonomyVerdict::inconclusive;
};

/// Needs a geometric h_list with at least 4 values.
ScalingFit defect_scaling(const SplittingField& splitting, const Space& space, const Vec& x,
                          const std::vector<double>& h_list, int i = 1, int j = 2, const FlowOptions& options = {});

/// Candidate integral surface vertex(u, v) = flow_{Y2}^v(flow_{Y1}^u(x)) on a square grid.
struct SurfaceMesh {
  Vec center;
  double extent = 0.0;
  int resolution = 0;
  /// Complete grid rows kept (== resolution unless truncated).
  int rows = 0;
  /// Row-major: index = row * resolution + column; row follows u, column follows v.
  std::vector<Vec> vertices;
  std::vector<std::array<int, 4>> quads;
  /// Angle in radians between the parameterization's tangent plane and E(vertex).
  std::vector<double> tangency_residual;
  bool truncated = false;
  std::string truncation_reason;
  double max_residual() const;
};

/// dim E must be 2. Folding or chart escape truncates the mesh at the failing row.
SurfaceMesh grow_surface(const SplittingField& splitting, const Space& space, const Vec& x, double extent,
                         int resolution, const FlowOptions& options = {});

/// OBJ-compatible text: "v x y z ..." per vertex, "f a b c d" per quad (1-based),
/// tangency residuals as "# t index value" comment lines.
void write_mesh(std::ostream& out, const SurfaceMesh& mesh);

/// "point_id,h,defect,transverse,normalized".
void write_holonomy_csv(std::ostream& out, int point_id, const ScalingFit& fit, bool header);

}  // namespace splitlab
