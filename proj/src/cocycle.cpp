#include "splitlab/cocycle.hpp"

#include "splitlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace splitlab {
namespace {

double top_singular_value(const Mat& m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

void fold(ScaledMatrix& acc, const Mat& step) {
  acc.unit = step * acc.unit;
  const double norm = acc.unit.norm();
  if (norm == 0.0 || !std::isfinite(norm)) throw Error("cocycle product became singular or non-finite");
  acc.unit /= norm;
  acc.log_scale += std::log(norm);
}

std::vector<ScaledMatrix> identity_exterior(int d) {
  std::vector<ScaledMatrix> ext;
  for (int j = 1; j <= d; ++j) {
    const auto size = static_cast<Eigen::Index>(linalg::subsets(d, j).size());
    ScaledMatrix s;
    s.unit = Mat::Identity(size, size);
    s.log_scale = 0.0;
    const double norm = s.unit.norm();
    s.unit /= norm;
    s.log_scale = std::log(norm);
    ext.push_back(std::move(s));
  }
  return ext;
}

std::vector<double> desc_from_exterior(const std::vector<ScaledMatrix>& ext) {
  std::vector<double> out;
  double previous = 0.0;
  for (const auto& e : ext) {
    const double top = top_singular_value(e.unit);
    const double cumulative = top > 0.0 ? e.log_scale + std::log(top) : -std::numeric_limits<double>::infinity();
    out.push_back(cumulative - previous);
    previous = cumulative;
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace

std::string to_string(Subbundle s) {
  switch (s) {
    case Subbundle::E: return "E";
    case Subbundle::F: return "F";
    case Subbundle::full: return "full";
  }
  return "?";
}

Subbundle subbundle_from_string(const std::string& s) {
  if (s == "E") return Subbundle::E;
  if (s == "F") return Subbundle::F;
  if (s == "full") return Subbundle::full;
  throw PreconditionError("unknown subbundle '" + s + "' (expected E, F or full)");
}

Mat RestrictedCocycle::restricted_map() const { return std::exp(log_scale) * matrix; }

Mat subbundle_frame(const ModelSystem& model, Subbundle sub, const Vec& y) {
  switch (sub) {
    case Subbundle::E: return linalg::orthonormal_basis(model.splitting.e_basis(y));
    case Subbundle::F: return linalg::orthonormal_basis(model.splitting.f_basis(y));
    case Subbundle::full: return Mat::Identity(model.dim(), model.dim());
  }
  return {};
}

void walk_restricted(const ModelSystem& model, const Vec& x, long k, Subbundle sub,
                     const std::function<void(long, const Mat&, const Vec&)>& visit, const CocycleOptions& options) {
  const long steps = std::labs(k);
  auto check = [&](const Vec& y, long index) {
    if (sub == Subbundle::full) return;
    const double cond = model.splitting.condition(y);
    if (!(cond <= options.degeneracy_threshold)) {
      std::ostringstream msg;
      msg << "splitting degenerate at orbit index " << index << " (condition number " << cond << ")";
      throw SplittingDegeneracyError(index, cond, msg.str());
    }
  };
  Vec y = model.space.canonicalize(x);
  check(y, 0);
  Mat frame = subbundle_frame(model, sub, y);
  for (long j = 1; j <= steps; ++j) {
    Vec next = model.space.canonicalize(k > 0 ? model.map(y) : model.inverse(y));
    if (!model.space.contains(next)) {
      std::ostringstream msg;
      msg << "orbit of " << model.name << " escaped the chart at step " << (k > 0 ? j : -j);
      throw OrbitEscapeError(k > 0 ? j : -j, msg.str());
    }
    check(next, k > 0 ? j : -j);
    const Mat jac = k > 0 ? model.jacobian(y) : Mat(model.jacobian(next).inverse());
    Mat next_frame = subbundle_frame(model, sub, next);
    const Mat step = next_frame.transpose() * (jac * frame);
    visit(j, step, next);
    y = std::move(next);
    frame = std::move(next_frame);
  }
}

RestrictedCocycle restricted_cocycle(const ModelSystem& model, const Vec& x, long k, Subbundle sub,
                                     const CocycleOptions& options) {
  if (k == 0) throw PreconditionError("restricted_cocycle: |k| must be >= 1");
  RestrictedCocycle c;
  c.base_point = model.space.canonicalize(x);
  c.steps = k;
  c.subbundle = sub;
  c.frame_start = subbundle_frame(model, sub, c.base_point);
  const int d = static_cast<int>(c.frame_start.cols());
  c.exterior = identity_exterior(d);
  Vec last = c.base_point;
  walk_restricted(
      model, x, k, sub,
      [&](long, const Mat& step, const Vec& y) {
        for (int j = 1; j <= d; ++j) fold(c.exterior[static_cast<std::size_t>(j - 1)], linalg::compound(step, j));
        last = y;
      },
      options);
  c.frame_end = subbundle_frame(model, sub, last);
  c.matrix = c.exterior.front().unit;
  c.log_scale = c.exterior.front().log_scale;
  return c;
}

RestrictedCocycle compose(const RestrictedCocycle& later, const RestrictedCocycle& earlier) {
  if (later.subbundle != earlier.subbundle || later.dim() != earlier.dim())
    throw PreconditionError("compose: cocycles over different subbundles");
  RestrictedCocycle c;
  c.base_point = earlier.base_point;
  c.steps = earlier.steps + later.steps;
  c.subbundle = earlier.subbundle;
  c.frame_start = earlier.frame_start;
  c.frame_end = later.frame_end;
  for (std::size_t j = 0; j < earlier.exterior.size(); ++j) {
    ScaledMatrix s = earlier.exterior[j];
    s.unit = later.exterior[j].unit * s.unit;
    const double norm = s.unit.norm();
    s.unit /= norm;
    s.log_scale += later.exterior[j].log_scale + std::log(norm);
    c.exterior.push_back(std::move(s));
  }
  c.matrix = c.exterior.front().unit;
  c.log_scale = c.exterior.front().log_scale;
  return c;
}

std::vector<double> log_singular_values_desc(const RestrictedCocycle& c) { return desc_from_exterior(c.exterior); }

SingularData singular_data(const RestrictedCocycle& c) {
  SingularData out;
  out.steps = c.steps;
  auto desc = log_singular_values_desc(c);
  for (double v : desc)
    if (std::isnan(v)) throw Error("singular_data: SVD produced NaN");
  Eigen::JacobiSVD<Mat> svd(c.matrix, Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw Error("singular_data: SVD failed");
  Mat v = c.frame_start * svd.matrixV();
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    Eigen::Index arg = 0;
    v.col(i).cwiseAbs().maxCoeff(&arg);
    if (v(arg, i) < 0) v.col(i) = -v.col(i);
  }
  const int d = c.dim();
  out.vectors_resolved = d <= 2 || desc[static_cast<std::size_t>(d - 2)] - desc[0] > std::log(1e-10);
  if (c.steps > 0) {
    std::reverse(desc.begin(), desc.end());
    out.right_vectors = v.rowwise().reverse();
  } else {
    out.right_vectors = v;
  }
  out.values_log = std::move(desc);
  return out;
}

std::pair<double, double> norm_conorm(const ModelSystem& model, const Vec& x, long k, Subbundle sub) {
  const auto desc = log_singular_values_desc(restricted_cocycle(model, x, k, sub));
  return {desc.front(), desc.back()};
}

std::vector<std::vector<double>> singular_value_sequence(const ModelSystem& model, const Vec& x, long k_max,
                                                         Subbundle sub, bool forward) {
  const Mat frame = subbundle_frame(model, sub, model.space.canonicalize(x));
  const int d = static_cast<int>(frame.cols());
  auto ext = identity_exterior(d);
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(k_max));
  walk_restricted(model, x, forward ? k_max : -k_max, sub, [&](long, const Mat& step, const Vec&) {
    for (int j = 1; j <= d; ++j) fold(ext[static_cast<std::size_t>(j - 1)], linalg::compound(step, j));
    auto desc = desc_from_exterior(ext);
    if (forward) std::reverse(desc.begin(), desc.end());
    out.push_back(std::move(desc));
  });
  return out;
}

std::vector<double> log_det_sequence(const ModelSystem& model, const Vec& x, long k_max, Subbundle sub,
                                     bool forward) {
  std::vector<double> out;
  double acc = 0.0;
  walk_restricted(model, x, forward ? k_max : -k_max, sub, [&](long, const Mat& step, const Vec&) {
    acc += std::log(std::abs(step.determinant()));
    out.push_back(acc);
  });
  return out;
}

void write_singular_csv(std::ostream& out, int point_id, const std::vector<std::vector<double>>& sequence,
                        bool header) {
  if (header) out << "point_id,k,i,log_s\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < sequence.size(); ++k)
    for (std::size_t i = 0; i < sequence[k].size(); ++i)
      out << point_id << ',' << (k + 1) << ',' << (i + 1) << ',' << sequence[k][i] << '\n';
}

}  // namespace splitlab
