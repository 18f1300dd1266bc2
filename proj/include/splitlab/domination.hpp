#pragma once

#include "splitlab/cocycle.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace splitlab {

/// One-step ratios at a point: ||Dphi|E|| / m(Dphi|F) and the forward and
/// backward determinant ratios |det Dphi^{+-1}|E| / |det Dphi^{+-1}|F|.
struct PointwiseRatios {
  double dyn_ratio = 1.0;
  double vol_ratio_fwd = 1.0;
  double vol_ratio_bwd = 1.0;
};

PointwiseRatios pointwise_ratios(const ModelSystem& model, const Vec& x);

/// vol_ratio_fwd < 1 and vol_ratio_bwd < 1 must not hold together.
bool volume_exclusivity_holds(const PointwiseRatios& r);

struct VolumeImplicationPoint {
  Vec point;
  PointwiseRatios ratios;
  /// |det Dphi|E * det Dphi|F - 1|.
  double det_product_deviation = 0.0;
  /// Same product corrected by the change of the E/F frame volume along the step;
  /// equals |det Dphi| - 1 up to rounding.
  double corrected_deviation = 0.0;
  bool implication_holds = true;
};

struct VolumeImplicationReport {
  std::vector<VolumeImplicationPoint> points;
  double det_tolerance = 1e-8;
  double max_det_deviation = 0.0;
  /// Indices of points where the product deviates or the implication fails.
  std::vector<int> counterexamples;
  bool holds() const { return counterexamples.empty(); }
};

/// For a volume-preserving 3-dimensional model with dim E = 2: checks that the
/// restricted determinants multiply to 1 and that dynamical domination implies
/// volume domination at every sample. Throws PreconditionError otherwise.
VolumeImplicationReport check_dynamical_implies_volume(const ModelSystem& model, const std::vector<Vec>& points,
                                                       double det_tolerance = 1e-8);

enum class Side { forward, backward, both, neither };
std::string to_string(Side s);

struct StarOptions {
  /// Verdict needs the fitted slope below -rate_floor ...
  double rate_floor = 1e-3;
  /// ... and the running minimum below this value.
  double min_threshold = -5.0;
};

/// Second-order domination sequences ln(s_{d-1} s_d / r_1) forward and
/// ln(s^-_1 s^-_2 / r^-_l) backward for k = 1..k_max. The liminf is proxied by the
/// running minimum and the least-squares slope against k.
struct StarDiagnostic {
  int k_max = 0;
  std::vector<double> fwd;
  std::vector<double> bwd;
  double fwd_min = 0.0;
  double bwd_min = 0.0;
  double fwd_slope = 0.0;
  double bwd_slope = 0.0;
  Side verdict = Side::neither;
};

StarDiagnostic star_diagnostic(const ModelSystem& model, const Vec& x, int k_max, const StarOptions& options = {});

/// Uniform exponential bound for one index triple (1-based, i < j).
struct TripleRate {
  int i = 0;
  int j = 0;
  int m = 0;
  /// Largest lambda with ln-ratio <= -lambda k for all 1 <= k <= k_max.
  double fwd_rate = 0.0;
  int fwd_worst_k = 1;
  double bwd_rate = 0.0;
  int bwd_worst_k = 1;
  Side verdict = Side::neither;
  std::vector<double> fwd_sequence;
  std::vector<double> bwd_sequence;
};

struct StarStarTable {
  int k_max = 0;
  std::vector<TripleRate> triples;
  /// If the extreme forward triple (d-1, d, 1) has rate lambda > 0, every forward
  /// sequence is bounded by -lambda k. `*_applicable` is false when the premise fails.
  bool forward_implication_applicable = false;
  bool forward_implication_holds = true;
  bool backward_implication_applicable = false;
  bool backward_implication_holds = true;
};

struct StarStarOptions {
  double rate_floor = 1e-9;
};

StarStarTable starstar_diagnostic(const ModelSystem& model, const Vec& x, int k_max,
                                  const StarStarOptions& options = {});

struct DominationReport {
  Vec point;
  int k_max = 0;
  PointwiseRatios ratios;
  StarDiagnostic star;
  StarStarTable starstar;
  /// ln(det Dphi^k|E / det Dphi^k|F) and the backward analogue, from one-step determinants.
  std::vector<double> det_ratio_fwd;
  std::vector<double> det_ratio_bwd;
};

DominationReport domination_report(const ModelSystem& model, const Vec& x, int k_max, const StarOptions& star = {},
                                   const StarStarOptions& starstar = {});

/// Gate for integrability analyses: dim >= 3, dim E >= 2 and some second-order
/// domination at x. Throws PreconditionError naming the failed hypothesis.
void require_integrability_hypotheses(const ModelSystem& model, const Vec& x, int k_max = 20);

/// "point_id,k,star_fwd,star_bwd".
void write_star_csv(std::ostream& out, int point_id, const StarDiagnostic& star, bool header);

}  // namespace splitlab
