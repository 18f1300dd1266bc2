#pragma once

#include "splitlab/manifold.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace splitlab {

/// Projection onto F along E at x. Throws SplittingDegeneracyError when [E|F] is singular.
Mat projection_onto_F(const SplittingField& splitting, const Vec& x, double degeneracy_threshold = 1e8);

/// d vector fields spanning E near `center`, stored as one n x d matrix field.
struct LocalFrame {
  Vec center;
  double radius = 0.0;
  MatrixField matrix;
  /// Coordinate directions projected onto E, in Gram-Schmidt order.
  std::vector<int> pivots;
  /// Constant d x d change of frame applied after Gram-Schmidt (identity unless prescribed).
  Mat rotation;
  bool orthonormal_at_center = false;

  int dim() const { return static_cast<int>(rotation.rows()); }
  VectorField field(int i) const;
};

/// Projects coordinate directions onto E(y) orthogonally and runs Gram-Schmidt.
/// Pivots are chosen greedily at the center. Throws FrameInstabilityError when the
/// projected pivot set drops rank at the center, at the ball probes, or at any later
/// evaluation inside the radius.
LocalFrame orthonormal_frame(const SplittingField& splitting, const Space& space, const Vec& x, double radius);

/// Same frame rotated by a constant orthogonal matrix so that the fields take the
/// values `initial` (n x d, orthonormal, spanning E(x)) at x.
LocalFrame frame_with_initial_vectors(const SplittingField& splitting, const Space& space, const Vec& x,
                                      double radius, const Mat& initial);

struct FdOptions {
  double h = 1e-4;
  /// One Richardson level over {h, h/2}.
  bool richardson = true;
};

struct BracketValue {
  Vec value;
  /// |bracket(h/2) - bracket(h)| when Richardson is on, else 0.
  double error_estimate = 0.0;
};

/// [X,Y] = DY.X - DX.Y with central differences. Throws StencilEscapeError if a
/// stencil point leaves a chart box, PreconditionError if h is outside [1e-7, 1e-2].
BracketValue lie_bracket_fd(const VectorField& x_field, const VectorField& y_field, const Space& space, const Vec& x,
                            const FdOptions& options = {});

enum class InvolutivityVerdict { involutive, non_involutive, unresolved };
std::string to_string(InvolutivityVerdict v);

struct BracketDiagnostics {
  Vec center;
  int dim = 0;
  /// |Pi[Y_i,Y_j]| and the matching fd error estimates; symmetric with zero diagonal.
  Mat pair_defects;
  Mat pair_errors;
  /// 1-based, lexicographically smallest maximizing pair.
  int max_i = 1;
  int max_j = 2;
  double max_defect = 0.0;
  /// max over fields of the value norm and the Jacobian norm on the stencil.
  double c1_norm = 0.0;
  double tolerance = 0.0;
  /// Max pair defect recomputed on the step ladder {10h, 3h, h/3, h/10} (steps outside
  /// [1e-7, 1e-2] or leaving the chart are skipped). Filled only when the defect exceeds
  /// the tolerance; a non-involutive verdict needs every rung within a factor 2 of it.
  std::vector<double> ladder_steps;
  std::vector<double> ladder_defects;
  InvolutivityVerdict verdict = InvolutivityVerdict::involutive;
  bool involutive = true;
  double fd_step = 0.0;
  int richardson_order = 0;
};

struct DefectOptions {
  FdOptions fd;
  double radius = 1e-2;
  /// Involutivity threshold before scaling by max(1, c1_norm).
  double base_tolerance = 1e-6;
};

BracketDiagnostics bracket_defect(const SplittingField& splitting, const Space& space, const Vec& x,
                                  const DefectOptions& options = {});
BracketDiagnostics frame_bracket_defect(const LocalFrame& frame, const SplittingField& splitting, const Space& space,
                                        const DefectOptions& options = {});

struct AprioriRecord {
  int trials = 0;
  int dim = 0;
  double max_pair_defect = 0.0;
  /// d(d-1) * max pair defect.
  double bound = 0.0;
  double max_lhs = 0.0;
  /// Smallest bound + tolerance - |Pi[Z,W]| over the draws.
  double min_slack = 0.0;
  int violations = 0;
  /// Coefficients (alpha(x), beta(x)) of the first violating draw, 2 x d.
  Mat witness;
};

/// Random pairs Z = sum a_l Y_l, W = sum b_l Y_l with C1 coefficient profiles of
/// modulus <= 1 at x; checks |Pi[Z,W]_x| <= d(d-1) max pair defect + fd tolerance.
AprioriRecord apriori_bound_check(const SplittingField& splitting, const Space& space, const Vec& x, int trials,
                                  std::uint64_t seed, const DefectOptions& options = {});

/// (phi^k)_* X evaluated in lifted coordinates.
VectorField push_forward_field(const ModelSystem& model, const VectorField& field, int k);

struct NaturalityRecord {
  int k = 0;
  double h = 0.0;
  double residual = 0.0;
  Vec lhs;
  Vec rhs;
};

/// || Dphi^k_x [X,Y]_x - [phi^k_* X, phi^k_* Y]_{phi^k x} ||. Plain central
/// differences by default so the residual exposes the O(h^2) scheme error.
NaturalityRecord naturality_check(const ModelSystem& model, const VectorField& x_field, const VectorField& y_field,
                                  const Vec& x, int k_small, const FdOptions& options = {1e-4, false});

/// Log-log slope of the residual over `h_list`.
double naturality_slope(const ModelSystem& model, const VectorField& x_field, const VectorField& y_field,
                        const Vec& x, int k_small, const std::vector<double>& h_list);

/// Covector field: coefficients eta_i(y) of eta = sum eta_i dx_i.
using CovectorField = std::function<Vec(const Vec&)>;

struct AnnihilatorForm {
  CovectorField eta;
  /// Fixed ambient vector whose E-orthogonal component defines eta.
  Vec reference;
};

/// eta = g(V, .) with V the normalized component of `reference` orthogonal to E.
/// An empty `reference` picks the coordinate axis farthest from E(center).
AnnihilatorForm annihilating_form(const SplittingField& splitting, const Vec& center, Vec reference = Vec());

struct CartanRecord {
  double eta_bracket = 0.0;  ///< eta([Z,W])
  double z_eta_w = 0.0;      ///< Z(eta(W))
  double w_eta_z = 0.0;      ///< W(eta(Z))
  double d_eta = 0.0;        ///< d eta(Z,W)
  double residual = 0.0;
};

/// Residual of eta([Z,W]) = Z(eta(W)) - W(eta(Z)) - d eta(Z,W).
CartanRecord cartan_check(const CovectorField& eta, const VectorField& z_field, const VectorField& w_field,
                          const Space& space, const Vec& x, const FdOptions& options = {});

/// max |eta(E basis)| at x.
double annihilation_residual(const CovectorField& eta, const SplittingField& splitting, const Vec& x);

struct BoundProbeEntry {
  long k = 0;
  /// Max pair defect of the frame with Y_i(x) = v^k_i, and its fd error estimate.
  double defect = 0.0;
  double defect_error = 0.0;
  int max_i = 1;
  int max_j = 2;
  /// ln(s^k_d s^k_{d-1} / m(Dphi^k|F)).
  double log_ratio = 0.0;
  /// defect / ratio; 0 when the defect is exactly 0.
  double constant = 0.0;
};

struct BoundProbe {
  Vec point;
  std::vector<BoundProbeEntry> entries;
  double max_constant = 0.0;
  /// max_constant <= bound (always true when bound is infinite).
  double bound = 0.0;
  bool bounded = true;
};

struct BoundProbeOptions {
  DefectOptions defect;
  double bound = std::numeric_limits<double>::infinity();
};

BoundProbe dynamical_bound_probe(const ModelSystem& model, const Vec& x, const std::vector<long>& k_list,
                                 const BoundProbeOptions& options = {});

/// "point_id,k,D_k,log_R_k,K_k".
void write_bound_csv(std::ostream& out, int point_id, const BoundProbe& probe, bool header);

}  // namespace splitlab
