#pragma once

#include "splitlab/cocycle.hpp"
#include "splitlab/domination.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace splitlab {

/// Lyapunov exponents along the orbit of a point from QR re-orthonormalization.
struct LyapunovEstimate {
  Vec point;
  long horizon = 0;
  Subbundle subbundle = Subbundle::full;
  /// Ascending.
  std::vector<double> exponents;
  /// Partial estimates at horizon/10, 2 horizon/10, ..., horizon.
  std::vector<long> checkpoint_steps;
  std::vector<std::vector<double>> checkpoints;
};

LyapunovEstimate lyapunov_spectrum(const ModelSystem& model, const Vec& x, long k, Subbundle sub);

struct ExponentGroup {
  double value = 0.0;
  int multiplicity = 0;
};

/// Clusters exponents closer than 10x the change between the last two checkpoints.
std::vector<ExponentGroup> group_exponents(const LyapunovEstimate& estimate);

/// |(1/k) ln s^k_l - lambda_l| over a grid of k, against exponents taken at the largest k.
struct RegularityReport {
  Subbundle subbundle = Subbundle::full;
  std::vector<long> k_grid;
  std::vector<double> exponents;
  /// deviations[g][l] for grid index g and (0-based) singular value index l.
  std::vector<std::vector<double>> rates;
  std::vector<std::vector<double>> deviations;
  double max_deviation_at_largest = 0.0;
  /// Slope of log(max deviation) against log k.
  double decay_slope = 0.0;
};

RegularityReport regularity_check(const ModelSystem& model, const Vec& x, const std::vector<long>& k_grid,
                                  Subbundle sub = Subbundle::full);

/// Min-max check of singular values on random subspaces.
struct CourantFischerRecord {
  int dim = 0;
  int trials = 0;
  long draws = 0;
  /// Ascending singular values.
  std::vector<double> singular_values;
  /// Smallest s_l - m(A|V) and ||A|W|| - s_l seen over all draws.
  double min_lower_slack = 0.0;
  double min_upper_slack = 0.0;
  /// Largest |m(A|V*) - s_l|, |  ||A|W*|| - s_l | on the singular subspaces.
  double max_equality_error = 0.0;
};

/// Throws OracleFailure with the witness subspace on any violation.
CourantFischerRecord courant_fischer_oracle(const Mat& matrix, int trials, std::uint64_t seed);

struct MarginEntry {
  int i = 0;
  int j = 0;
  int m = 0;
  /// mu_i + mu_j - lambda_m.
  double value = 0.0;
  /// Negative value predicts a forward bound, positive a backward bound.
  Side predicted = Side::neither;
};

struct MarginTable {
  std::vector<double> e_exponents;
  std::vector<double> f_exponents;
  std::vector<MarginEntry> entries;
  double min_margin = 0.0;
  int min_index = 0;
};

/// |mu_i + mu_j - lambda_m| over pairs i < j of E-exponents and all F-exponents.
MarginTable exponent_condition(const ModelSystem& model, const Vec& x, long horizon = 2000,
                               double zero_tolerance = 1e-6);

/// Per-triple agreement between the sign of the margin and the exponential-bound verdict.
std::vector<bool> margin_agreement(const MarginTable& margins, const StarStarTable& table);

/// "point_id,k,l,rate,lambda,deviation".
void write_regularity_csv(std::ostream& out, int point_id, const RegularityReport& report, bool header);

}  // namespace splitlab
