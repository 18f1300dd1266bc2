#pragma once

#include "splitlab/manifold.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace splitlab {

enum class Subbundle { E, F, full };

std::string to_string(Subbundle s);
Subbundle subbundle_from_string(const std::string& s);

/// A matrix stored as exp(log_scale) * unit, with unit normalized to Frobenius norm 1.
struct ScaledMatrix {
  Mat unit;
  double log_scale = 0.0;
};

/// Dphi^k restricted to a subbundle, written between orthonormal frames of the
/// subbundle at x and at phi^k(x).
///
/// `matrix`/`log_scale` hold the product itself. `exterior[j-1]` holds the j-th
/// exterior power of the product, accumulated step by step with its own scale,
/// so every ln-singular value stays accurate even when the spread between the
/// largest and smallest singular value exceeds double range.
struct RestrictedCocycle {
  Vec base_point;
  long steps = 0;
  Subbundle subbundle = Subbundle::full;
  Mat matrix;
  double log_scale = 0.0;
  Mat frame_start;
  Mat frame_end;
  std::vector<ScaledMatrix> exterior;

  int dim() const { return static_cast<int>(matrix.rows()); }
  /// exp(log_scale) * matrix; overflows for long orbits, test use only.
  Mat restricted_map() const;
};

/// ln-singular values and right singular vectors of a restricted cocycle.
/// Forward (k > 0): values ascending. Backward (k < 0): values descending.
struct SingularData {
  long steps = 0;
  std::vector<double> values_log;
  /// n x dim, columns in the subbundle at the base point, matching `values_log`.
  Mat right_vectors;
  /// False when the unit-scaled product can no longer separate the lower singular
  /// directions (two or more values below 1e-10 of the largest).
  bool vectors_resolved = true;
};

struct CocycleOptions {
  /// Condition number of [E | F] above which an orbit point counts as degenerate.
  double degeneracy_threshold = 1e8;
};

/// Orthonormal frame of a subbundle at y (identity for `full`).
Mat subbundle_frame(const ModelSystem& model, Subbundle sub, const Vec& y);

/// Visits the one-step restricted matrices along the orbit of x for |k| steps.
/// `visit(j, step, y_next)` gets the step index (1-based), the dim x dim matrix
/// from the frame at y_{j-1} to the frame at y_j, and y_j.
void walk_restricted(const ModelSystem& model, const Vec& x, long k, Subbundle sub,
                     const std::function<void(long, const Mat&, const Vec&)>& visit,
                     const CocycleOptions& options = {});

RestrictedCocycle restricted_cocycle(const ModelSystem& model, const Vec& x, long k, Subbundle sub,
                                     const CocycleOptions& options = {});

/// `later` over j steps at phi^k(x) composed with `earlier` over k steps at x.
RestrictedCocycle compose(const RestrictedCocycle& later, const RestrictedCocycle& earlier);

/// ln-singular values, largest first, from the exterior products.
std::vector<double> log_singular_values_desc(const RestrictedCocycle& c);

SingularData singular_data(const RestrictedCocycle& c);

/// (ln norm, ln co-norm) of Dphi^k restricted to the subbundle at x.
std::pair<double, double> norm_conorm(const ModelSystem& model, const Vec& x, long k, Subbundle sub);

/// For k = 1..k_max, ln-singular values of Dphi^(sign k) at x in the ordering
/// convention of `singular_data` (ascending forward, descending backward).
std::vector<std::vector<double>> singular_value_sequence(const ModelSystem& model, const Vec& x, long k_max,
                                                         Subbundle sub, bool forward);

/// For k = 1..k_max, ln |det Dphi^(sign k)|_sub| accumulated from one-step determinants.
std::vector<double> log_det_sequence(const ModelSystem& model, const Vec& x, long k_max, Subbundle sub,
                                     bool forward);

/// CSV table "point_id,k,i,log_s" (1-based i) for one point.
void write_singular_csv(std::ostream& out, int point_id, const std::vector<std::vector<double>>& sequence,
                        bool header);

}  // namespace splitlab
