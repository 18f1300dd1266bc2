#include "splitlab/domination.hpp"

#include "splitlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

namespace splitlab {
namespace {

struct Sequences {
  std::vector<std::vector<double>> e_fwd, e_bwd, f_fwd, f_bwd;
};

Sequences compute_sequences(const ModelSystem& model, const Vec& x, int k_max) {
  Sequences s;
  s.e_fwd = singular_value_sequence(model, x, k_max, Subbundle::E, true);
  s.e_bwd = singular_value_sequence(model, x, k_max, Subbundle::E, false);
  s.f_fwd = singular_value_sequence(model, x, k_max, Subbundle::F, true);
  s.f_bwd = singular_value_sequence(model, x, k_max, Subbundle::F, false);
  return s;
}

void require_star_preconditions(const ModelSystem& model, int k_max) {
  if (model.splitting.dim_e < 2) throw PreconditionError("second-order domination needs dim E >= 2");
  if (k_max < 10) throw PreconditionError("k_max must be >= 10");
}

double running_min(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

double slope_against_k(const std::vector<double>& v) {
  std::vector<double> k(v.size());
  std::iota(k.begin(), k.end(), 1.0);
  return linalg::fit_line(k, v).slope;
}

StarDiagnostic star_from(const Sequences& s, int k_max, int d, int l, const StarOptions& options) {
  StarDiagnostic out;
  out.k_max = k_max;
  for (int k = 0; k < k_max; ++k) {
    const auto& ef = s.e_fwd[static_cast<std::size_t>(k)];
    const auto& eb = s.e_bwd[static_cast<std::size_t>(k)];
    // forward: ascending, so s_{d-1}, s_d are the last two; r_1 is the first.
    out.fwd.push_back(ef[static_cast<std::size_t>(d - 2)] + ef[static_cast<std::size_t>(d - 1)] -
                      s.f_fwd[static_cast<std::size_t>(k)].front());
    // backward: descending, so s^-_1, s^-_2 are the first two; r^-_l is the last.
    out.bwd.push_back(eb[0] + eb[1] - s.f_bwd[static_cast<std::size_t>(k)][static_cast<std::size_t>(l - 1)]);
  }
  out.fwd_min = running_min(out.fwd);
  out.bwd_min = running_min(out.bwd);
  out.fwd_slope = slope_against_k(out.fwd);
  out.bwd_slope = slope_against_k(out.bwd);
  const bool f = out.fwd_slope < -options.rate_floor && out.fwd_min < options.min_threshold;
  const bool b = out.bwd_slope < -options.rate_floor && out.bwd_min < options.min_threshold;
  out.verdict = f && b ? Side::both : f ? Side::forward : b ? Side::backward : Side::neither;
  return out;
}

std::pair<double, int> uniform_rate(const std::vector<double>& seq) {
  double rate = std::numeric_limits<double>::infinity();
  int worst = 1;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const double r = -seq[k] / static_cast<double>(k + 1);
    if (r < rate) {
      rate = r;
      worst = static_cast<int>(k + 1);
    }
  }
  return {rate, worst};
}

bool bounded_by(const std::vector<double>& seq, double rate) {
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    if (seq[k] > -rate * kk + 1e-9 * (1.0 + kk)) return false;
  }
  return true;
}

StarStarTable starstar_from(const Sequences& s, int k_max, int d, int l, const StarStarOptions& options) {
  StarStarTable table;
  table.k_max = k_max;
  for (int i = 1; i <= d; ++i) {
    for (int j = i + 1; j <= d; ++j) {
      for (int m = 1; m <= l; ++m) {
        TripleRate t;
        t.i = i;
        t.j = j;
        t.m = m;
        for (int k = 0; k < k_max; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          t.fwd_sequence.push_back(s.e_fwd[ku][static_cast<std::size_t>(i - 1)] +
                                   s.e_fwd[ku][static_cast<std::size_t>(j - 1)] -
                                   s.f_fwd[ku][static_cast<std::size_t>(m - 1)]);
          t.bwd_sequence.push_back(s.e_bwd[ku][static_cast<std::size_t>(i - 1)] +
                                   s.e_bwd[ku][static_cast<std::size_t>(j - 1)] -
                                   s.f_bwd[ku][static_cast<std::size_t>(m - 1)]);
        }
        std::tie(t.fwd_rate, t.fwd_worst_k) = uniform_rate(t.fwd_sequence);
        std::tie(t.bwd_rate, t.bwd_worst_k) = uniform_rate(t.bwd_sequence);
        const bool f = t.fwd_rate > options.rate_floor;
        const bool b = t.bwd_rate > options.rate_floor;
        t.verdict = f && b ? Side::both : f ? Side::forward : b ? Side::backward : Side::neither;
        table.triples.push_back(std::move(t));
      }
    }
  }
  auto find = [&](int i, int j, int m) -> const TripleRate& {
    for (const auto& t : table.triples)
      if (t.i == i && t.j == j && t.m == m) return t;
    throw Error("starstar: missing triple");
  };
  const auto& fwd_extreme = find(d - 1, d, 1);
  if (fwd_extreme.fwd_rate > options.rate_floor) {
    table.forward_implication_applicable = true;
    for (const auto& t : table.triples)
      table.forward_implication_holds &= bounded_by(t.fwd_sequence, fwd_extreme.fwd_rate);
  }
  const auto& bwd_extreme = find(1, 2, l);
  if (bwd_extreme.bwd_rate > options.rate_floor) {
    table.backward_implication_applicable = true;
    for (const auto& t : table.triples)
      table.backward_implication_holds &= bounded_by(t.bwd_sequence, bwd_extreme.bwd_rate);
  }
  return table;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

std::string to_string(Side s) {
  switch (s) {
    case Side::forward: return "forward";
    case Side::backward: return "backward";
    case Side::both: return "both";
    case Side::neither: return "neither";
  }
  return "?";
}

namespace {

/// Log-ratios within rounding of 0 are exact ties, so ratio-1 models compare as neither side.
double snap_tie(double log_ratio) { return std::abs(log_ratio) <= 1e-12 ? 0.0 : log_ratio; }

}  // namespace

PointwiseRatios pointwise_ratios(const ModelSystem& model, const Vec& x) {
  const auto e_fwd = log_singular_values_desc(restricted_cocycle(model, x, 1, Subbundle::E));
  const auto f_fwd = log_singular_values_desc(restricted_cocycle(model, x, 1, Subbundle::F));
  const auto e_bwd = log_singular_values_desc(restricted_cocycle(model, x, -1, Subbundle::E));
  const auto f_bwd = log_singular_values_desc(restricted_cocycle(model, x, -1, Subbundle::F));
  PointwiseRatios r;
  r.dyn_ratio = std::exp(snap_tie(e_fwd.front() - f_fwd.back()));
  r.vol_ratio_fwd = std::exp(snap_tie(sum(e_fwd) - sum(f_fwd)));
  r.vol_ratio_bwd = std::exp(snap_tie(sum(e_bwd) - sum(f_bwd)));
  return r;
}

bool volume_exclusivity_holds(const PointwiseRatios& r) { return !(r.vol_ratio_fwd < 1.0 && r.vol_ratio_bwd < 1.0); }

VolumeImplicationReport check_dynamical_implies_volume(const ModelSystem& model, const std::vector<Vec>& points,
                                                       double det_tolerance) {
  if (!model.volume_preserving) throw PreconditionError("hypothesis mismatch: model is not volume preserving");
  if (model.dim() != 3) throw PreconditionError("hypothesis mismatch: model dimension is not 3");
  if (model.splitting.dim_e != 2) throw PreconditionError("hypothesis mismatch: dim E is not 2");
  VolumeImplicationReport report;
  report.det_tolerance = det_tolerance;
  auto frame_volume = [&](const Vec& y) {
    Mat b(3, 3);
    b << subbundle_frame(model, Subbundle::E, y), subbundle_frame(model, Subbundle::F, y);
    return std::abs(b.determinant());
  };
  for (std::size_t idx = 0; idx < points.size(); ++idx) {
    const Vec x = model.space.canonicalize(points[idx]);
    VolumeImplicationPoint p;
    p.point = x;
    p.ratios = pointwise_ratios(model, x);
    const double log_e = sum(log_singular_values_desc(restricted_cocycle(model, x, 1, Subbundle::E)));
    const double log_f = sum(log_singular_values_desc(restricted_cocycle(model, x, 1, Subbundle::F)));
    const double product = std::exp(log_e + log_f);
    p.det_product_deviation = std::abs(product - 1.0);
    const Vec y = iterate(model, x, 1);
    const double corrected = product * frame_volume(y) / frame_volume(x);
    p.corrected_deviation = std::abs(corrected - std::abs(model.jacobian(x).determinant()));
    p.implication_holds = !(p.ratios.dyn_ratio < 1.0) || p.ratios.vol_ratio_fwd < 1.0;
    report.max_det_deviation = std::max(report.max_det_deviation, p.det_product_deviation);
    if (!p.implication_holds || p.det_product_deviation > det_tolerance)
      report.counterexamples.push_back(static_cast<int>(idx));
    report.points.push_back(std::move(p));
  }
  return report;
}

StarDiagnostic star_diagnostic(const ModelSystem& model, const Vec& x, int k_max, const StarOptions& options) {
  require_star_preconditions(model, k_max);
  return star_from(compute_sequences(model, x, k_max), k_max, model.splitting.dim_e, model.splitting.dim_f,
                   options);
}

StarStarTable starstar_diagnostic(const ModelSystem& model, const Vec& x, int k_max,
                                  const StarStarOptions& options) {
  require_star_preconditions(model, k_max);
  return starstar_from(compute_sequences(model, x, k_max), k_max, model.splitting.dim_e, model.splitting.dim_f,
                       options);
}

DominationReport domination_report(const ModelSystem& model, const Vec& x, int k_max, const StarOptions& star,
                                   const StarStarOptions& starstar) {
  require_star_preconditions(model, k_max);
  DominationReport r;
  r.point = model.space.canonicalize(x);
  r.k_max = k_max;
  r.ratios = pointwise_ratios(model, x);
  const auto seq = compute_sequences(model, x, k_max);
  const int d = model.splitting.dim_e;
  const int l = model.splitting.dim_f;
  r.star = star_from(seq, k_max, d, l, star);
  r.starstar = starstar_from(seq, k_max, d, l, starstar);
  const auto e_f = log_det_sequence(model, x, k_max, Subbundle::E, true);
  const auto f_f = log_det_sequence(model, x, k_max, Subbundle::F, true);
  const auto e_b = log_det_sequence(model, x, k_max, Subbundle::E, false);
  const auto f_b = log_det_sequence(model, x, k_max, Subbundle::F, false);
  for (int k = 0; k < k_max; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    r.det_ratio_fwd.push_back(e_f[ku] - f_f[ku]);
    r.det_ratio_bwd.push_back(e_b[ku] - f_b[ku]);
  }
  return r;
}

void require_integrability_hypotheses(const ModelSystem& model, const Vec& x, int k_max) {
  if (model.dim() < 3) throw PreconditionError("integrability analysis needs dim M >= 3");
  if (model.splitting.dim_e < 2) throw PreconditionError("integrability analysis needs dim E >= 2");
  const auto report = domination_report(model, x, std::max(k_max, 10));
  if (report.star.verdict != Side::neither) return;
  const bool all_triples = std::all_of(report.starstar.triples.begin(), report.starstar.triples.end(),
                                       [](const TripleRate& t) { return t.verdict != Side::neither; });
  if (all_triples) return;
  throw PreconditionError(
      "no domination: neither second-order liminf domination nor per-triple exponential bounds hold at the point");
}

void write_star_csv(std::ostream& out, int point_id, const StarDiagnostic& star, bool header) {
  if (header) out << "point_id,k,star_fwd,star_bwd\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < star.fwd.size(); ++k)
    out << point_id << ',' << (k + 1) << ',' << star.fwd[k] << ',' << star.bwd[k] << '\n';
}

}  // namespace splitlab
