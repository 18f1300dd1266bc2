#include "splitlab/lyapunov.hpp"

#include "splitlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace splitlab {

LyapunovEstimate lyapunov_spectrum(const ModelSystem& model, const Vec& x, long k, Subbundle sub) {
  if (k < 100) throw PreconditionError("lyapunov_spectrum: horizon must be >= 100");
  LyapunovEstimate est;
  est.point = model.space.canonicalize(x);
  est.horizon = k;
  est.subbundle = sub;
  const int d = static_cast<int>(subbundle_frame(model, sub, est.point).cols());
  Mat q = Mat::Identity(d, d);
  std::vector<double> sums(static_cast<std::size_t>(d), 0.0);
  std::vector<long> marks;
  for (int c = 1; c <= 10; ++c) marks.push_back(std::max(1L, (k * c) / 10));
  std::size_t next_mark = 0;
  walk_restricted(model, x, k, sub, [&](long j, const Mat& step, const Vec&) {
    Eigen::HouseholderQR<Mat> qr(step * q);
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    q = qr.householderQ() * Mat::Identity(d, d);
    for (int i = 0; i < d; ++i) {
      sums[static_cast<std::size_t>(i)] += std::log(std::abs(r(i, i)));
      if (r(i, i) < 0) q.col(i) = -q.col(i);
    }
    while (next_mark < marks.size() && marks[next_mark] == j) {
      std::vector<double> partial(sums);
      for (double& v : partial) v /= static_cast<double>(j);
      std::sort(partial.begin(), partial.end());
      est.checkpoint_steps.push_back(j);
      est.checkpoints.push_back(std::move(partial));
      ++next_mark;
    }
  });
  est.exponents = est.checkpoints.back();
  return est;
}

std::vector<ExponentGroup> group_exponents(const LyapunovEstimate& estimate) {
  const auto& last = estimate.checkpoints.back();
  const auto& prev = estimate.checkpoints.size() > 1 ? estimate.checkpoints[estimate.checkpoints.size() - 2] : last;
  double spread = 0.0;
  for (std::size_t i = 0; i < last.size(); ++i) spread = std::max(spread, std::abs(last[i] - prev[i]));
  const double tol = std::max(10.0 * spread, 1e-12);
  std::vector<ExponentGroup> groups;
  double group_sum = 0.0;
  for (std::size_t i = 0; i < estimate.exponents.size(); ++i) {
    const double v = estimate.exponents[i];
    if (!groups.empty() && v - estimate.exponents[i - 1] <= tol) {
      ++groups.back().multiplicity;
      group_sum += v;
      groups.back().value = group_sum / groups.back().multiplicity;
    } else {
      groups.push_back({v, 1});
      group_sum = v;
    }
  }
  return groups;
}

RegularityReport regularity_check(const ModelSystem& model, const Vec& x, const std::vector<long>& k_grid,
                                  Subbundle sub) {
  if (k_grid.empty()) throw PreconditionError("regularity_check: empty k grid");
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (k_grid[i] < 1 || (i > 0 && k_grid[i] <= k_grid[i - 1]))
      throw PreconditionError("regularity_check: k grid must be positive and strictly increasing");
  }
  RegularityReport rep;
  rep.subbundle = sub;
  rep.k_grid = k_grid;
  rep.exponents = lyapunov_spectrum(model, x, std::max(k_grid.back(), 100L), sub).exponents;
  std::vector<double> lk, ld;
  for (long k : k_grid) {
    auto desc = log_singular_values_desc(restricted_cocycle(model, x, k, sub));
    std::reverse(desc.begin(), desc.end());
    std::vector<double> rates, devs;
    double worst = 0.0;
    for (std::size_t l = 0; l < desc.size(); ++l) {
      rates.push_back(desc[l] / static_cast<double>(k));
      devs.push_back(std::abs(rates.back() - rep.exponents[l]));
      worst = std::max(worst, devs.back());
    }
    rep.rates.push_back(std::move(rates));
    rep.deviations.push_back(std::move(devs));
    if (worst > 0) {
      lk.push_back(std::log(static_cast<double>(k)));
      ld.push_back(std::log(worst));
    }
  }
  for (double v : rep.deviations.back()) rep.max_deviation_at_largest = std::max(rep.max_deviation_at_largest, v);
  if (lk.size() >= 2) rep.decay_slope = linalg::fit_line(lk, ld).slope;
  return rep;
}

CourantFischerRecord courant_fischer_oracle(const Mat& matrix, int trials, std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("courant_fischer_oracle: trials must be >= 1");
  if (matrix.rows() != matrix.cols()) throw PreconditionError("courant_fischer_oracle: matrix must be square");
  if (!matrix.allFinite()) throw PreconditionError("courant_fischer_oracle: matrix must be finite");
  const int n = static_cast<int>(matrix.rows());
  Eigen::JacobiSVD<Mat> svd(matrix, Eigen::ComputeFullV);
  // ascending order, matching s_1 <= ... <= s_n
  const Vec s = svd.singularValues().reverse();
  const Mat v = svd.matrixV().rowwise().reverse();
  CourantFischerRecord rec;
  rec.dim = n;
  rec.trials = trials;
  rec.singular_values.assign(s.data(), s.data() + n);
  rec.min_lower_slack = std::numeric_limits<double>::infinity();
  rec.min_upper_slack = std::numeric_limits<double>::infinity();
  const double tol = 1e-12 * std::max(1.0, s(n - 1));
  auto co_norm = [&](const Mat& basis) {
    Eigen::JacobiSVD<Mat> sv(matrix * basis);
    return sv.singularValues()(sv.singularValues().size() - 1);
  };
  auto op_norm = [&](const Mat& basis) {
    Eigen::JacobiSVD<Mat> sv(matrix * basis);
    return sv.singularValues()(0);
  };
  std::mt19937_64 rng(seed);
  for (int l = 1; l <= n; ++l) {
    const double sl = s(l - 1);
    for (int t = 0; t < trials; ++t) {
      const Mat basis_v = linalg::random_orthonormal(n, n - l + 1, rng);
      const Mat basis_w = linalg::random_orthonormal(n, l, rng);
      const double lower = co_norm(basis_v);
      const double upper = op_norm(basis_w);
      rec.min_lower_slack = std::min(rec.min_lower_slack, sl - lower);
      rec.min_upper_slack = std::min(rec.min_upper_slack, upper - sl);
      ++rec.draws;
      if (lower > sl + tol) {
        std::ostringstream msg;
        msg << "co-norm on a random " << (n - l + 1) << "-dim subspace exceeds s_" << l << ": " << lower << " > " << sl;
        throw OracleFailure(basis_v, msg.str());
      }
      if (upper < sl - tol) {
        std::ostringstream msg;
        msg << "norm on a random " << l << "-dim subspace is below s_" << l << ": " << upper << " < " << sl;
        throw OracleFailure(basis_w, msg.str());
      }
    }
    const Mat v_star = v.rightCols(n - l + 1);
    const Mat w_star = v.leftCols(l);
    const double err = std::max(std::abs(co_norm(v_star) - sl), std::abs(op_norm(w_star) - sl));
    rec.max_equality_error = std::max(rec.max_equality_error, err);
    if (err > 1e-8 * std::max(1.0, s(n - 1))) {
      std::ostringstream msg;
      msg << "min-max not attained on singular subspaces for l = " << l << " (error " << err << ")";
      throw OracleFailure(v, msg.str());
    }
  }
  return rec;
}

MarginTable exponent_condition(const ModelSystem& model, const Vec& x, long horizon, double zero_tolerance) {
  MarginTable table;
  table.e_exponents = lyapunov_spectrum(model, x, horizon, Subbundle::E).exponents;
  table.f_exponents = lyapunov_spectrum(model, x, horizon, Subbundle::F).exponents;
  const int d = static_cast<int>(table.e_exponents.size());
  const int l = static_cast<int>(table.f_exponents.size());
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= d; ++i) {
    for (int j = i + 1; j <= d; ++j) {
      for (int m = 1; m <= l; ++m) {
        MarginEntry e;
        e.i = i;
        e.j = j;
        e.m = m;
        e.value = table.e_exponents[static_cast<std::size_t>(i - 1)] +
                  table.e_exponents[static_cast<std::size_t>(j - 1)] -
                  table.f_exponents[static_cast<std::size_t>(m - 1)];
        e.predicted = e.value < -zero_tolerance ? Side::forward
                      : e.value > zero_tolerance ? Side::backward
                                                 : Side::neither;
        if (std::abs(e.value) < best) {
          best = std::abs(e.value);
          table.min_index = static_cast<int>(table.entries.size());
        }
        table.entries.push_back(e);
      }
    }
  }
  table.min_margin = table.entries.empty() ? 0.0 : best;
  return table;
}

std::vector<bool> margin_agreement(const MarginTable& margins, const StarStarTable& table) {
  std::vector<bool> out;
  for (const auto& e : margins.entries) {
    bool agree = false;
    for (const auto& t : table.triples) {
      if (t.i != e.i || t.j != e.j || t.m != e.m) continue;
      agree = t.verdict == e.predicted;
    }
    out.push_back(agree);
  }
  return out;
}

void write_regularity_csv(std::ostream& out, int point_id, const RegularityReport& report, bool header) {
  if (header) out << "point_id,k,l,rate,lambda,deviation\n";
  out << std::setprecision(17);
  for (std::size_t g = 0; g < report.k_grid.size(); ++g)
    for (std::size_t l = 0; l < report.rates[g].size(); ++l)
      out << point_id << ',' << report.k_grid[g] << ',' << (l + 1) << ',' << report.rates[g][l] << ','
          << report.exponents[l] << ',' << report.deviations[g][l] << '\n';
}

}  // namespace splitlab
