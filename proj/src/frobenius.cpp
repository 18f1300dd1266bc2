#include "splitlab/frobenius.hpp"

#include "splitlab/cocycle.hpp"
#include "splitlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

namespace splitlab {

namespace {

constexpr double kPivotFloor = 1e-3;

void check_step(double h) {
  if (!(h >= 1e-7 && h <= 1e-2)) throw PreconditionError("finite-difference step must lie in [1e-7, 1e-2]");
}

/// Central-difference partials of a matrix field at one step size.
struct Jet {
  Mat value;
  std::vector<Mat> partial;
};

Jet jet(const MatrixField& field, const Space& space, const Vec& x, double h) {
  Jet j;
  j.value = field(x);
  const int n = static_cast<int>(x.size());
  for (int c = 0; c < n; ++c) {
    Vec plus = x, minus = x;
    plus(c) += h;
    minus(c) -= h;
    if (space.kind() == SpaceKind::chart_box && (!space.contains(plus) || !space.contains(minus))) {
      std::ostringstream msg;
      msg << "finite-difference stencil leaves the chart along axis " << c << " (h = " << h << ")";
      throw StencilEscapeError(msg.str());
    }
    j.partial.push_back((field(plus) - field(minus)) / (2.0 * h));
  }
  return j;
}

/// Bracket of columns a and b of a jet.
Vec jet_bracket(const Jet& j, int a, int b) {
  Vec out = Vec::Zero(j.value.rows());
  for (std::size_t c = 0; c < j.partial.size(); ++c)
    out += j.value(static_cast<Eigen::Index>(c), a) * j.partial[c].col(b) -
           j.value(static_cast<Eigen::Index>(c), b) * j.partial[c].col(a);
  return out;
}

double jet_c1_norm(const Jet& j) {
  double best = 0.0;
  for (Eigen::Index col = 0; col < j.value.cols(); ++col) {
    best = std::max(best, j.value.col(col).norm());
    Mat jac(j.value.rows(), static_cast<Eigen::Index>(j.partial.size()));
    for (std::size_t c = 0; c < j.partial.size(); ++c) jac.col(static_cast<Eigen::Index>(c)) = j.partial[c].col(col);
    best = std::max(best, jac.norm());
  }
  return best;
}

struct RawFrame {
  Mat vectors;
  double min_diag = 0.0;
};

RawFrame gram_schmidt_frame(const SplittingField& splitting, const Vec& y, const std::vector<int>& pivots) {
  const Mat q = linalg::orthonormal_basis(splitting.e_basis(y));
  const Mat p = q * q.transpose();
  const Eigen::Index n = p.rows();
  const Eigen::Index d = static_cast<Eigen::Index>(pivots.size());
  Mat cols(n, d);
  for (Eigen::Index i = 0; i < d; ++i) cols.col(i) = p.col(pivots[static_cast<std::size_t>(i)]);
  Eigen::HouseholderQR<Mat> qr(cols);
  RawFrame out;
  out.vectors = qr.householderQ() * Mat::Identity(n, d);
  out.min_diag = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double r = qr.matrixQR()(i, i);
    if (r < 0) out.vectors.col(i) = -out.vectors.col(i);
    out.min_diag = std::min(out.min_diag, std::abs(r));
  }
  return out;
}

std::vector<int> greedy_pivots(const SplittingField& splitting, const Vec& x) {
  const Mat q = linalg::orthonormal_basis(splitting.e_basis(x));
  Mat residual = q * q.transpose();
  std::vector<int> pivots;
  for (int step = 0; step < splitting.dim_e; ++step) {
    int best = -1;
    double best_norm = -1.0;
    for (Eigen::Index c = 0; c < residual.cols(); ++c) {
      if (std::find(pivots.begin(), pivots.end(), static_cast<int>(c)) != pivots.end()) continue;
      const double nrm = residual.col(c).norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = static_cast<int>(c);
      }
    }
    if (best_norm < kPivotFloor) throw FrameInstabilityError("projected coordinate frame has rank below dim E at the center");
    pivots.push_back(best);
    const Vec u = residual.col(best) / best_norm;
    residual -= u * (u.transpose() * residual);
  }
  return pivots;
}

}  // namespace

Mat projection_onto_F(const SplittingField& splitting, const Vec& x, double degeneracy_threshold) {
  const Mat b = splitting.combined(x);
  const double cond = linalg::condition_number(b);
  if (!(cond < degeneracy_threshold)) {
    std::ostringstream msg;
    msg << "splitting degenerate at the point (condition " << cond << ")";
    throw SplittingDegeneracyError(0, cond, msg.str());
  }
  const int n = static_cast<int>(b.rows());
  Mat mask = Mat::Zero(n, n);
  for (int i = splitting.dim_e; i < n; ++i) mask(i, i) = 1.0;
  return b * mask * b.inverse();
}

VectorField LocalFrame::field(int i) const {
  MatrixField m = matrix;
  return [m, i](const Vec& y) -> Vec { return m(y).col(i); };
}

LocalFrame orthonormal_frame(const SplittingField& splitting, const Space& space, const Vec& x, double radius) {
  if (!(radius > 0)) throw PreconditionError("orthonormal_frame: radius must be positive");
  LocalFrame frame;
  frame.center = x;
  frame.radius = radius;
  frame.pivots = greedy_pivots(splitting, x);
  frame.rotation = Mat::Identity(splitting.dim_e, splitting.dim_e);
  const int n = static_cast<int>(x.size());
  for (int c = 0; c < n; ++c) {
    for (double sign : {-1.0, 1.0}) {
      Vec probe = x;
      probe(c) += sign * radius;
      if (!space.contains(probe)) continue;
      if (gram_schmidt_frame(splitting, probe, frame.pivots).min_diag < kPivotFloor) {
        std::ostringstream msg;
        msg << "projected coordinate frame drops rank inside radius " << radius << "; use a smaller radius";
        throw FrameInstabilityError(msg.str());
      }
    }
  }
  const std::vector<int> pivots = frame.pivots;
  const Space sp = space;
  const Vec center = x;
  frame.matrix = [splitting, pivots, sp, center, radius](const Vec& y) -> Mat {
    RawFrame raw = gram_schmidt_frame(splitting, y, pivots);
    const bool inside = (y - center).norm() <= radius || sp.distance(y, center) <= radius;
    if (raw.min_diag < (inside ? kPivotFloor : 1e-12)) {
      std::ostringstream msg;
      msg << "projected coordinate frame drops rank (" << raw.min_diag << ") near the center; use a smaller radius";
      throw FrameInstabilityError(msg.str());
    }
    return raw.vectors;
  };
  const Mat y0 = frame.matrix(x);
  frame.orthonormal_at_center = (y0.transpose() * y0 - Mat::Identity(y0.cols(), y0.cols())).norm() <= 1e-10;
  return frame;
}

LocalFrame frame_with_initial_vectors(const SplittingField& splitting, const Space& space, const Vec& x,
                                      double radius, const Mat& initial) {
  LocalFrame frame = orthonormal_frame(splitting, space, x, radius);
  const Mat y0 = frame.matrix(x);
  if (initial.rows() != y0.rows() || initial.cols() != y0.cols())
    throw PreconditionError("frame_with_initial_vectors: initial vectors must be n x dim E");
  const Mat r = y0.transpose() * initial;
  const double orth = (r.transpose() * r - Mat::Identity(r.cols(), r.cols())).norm();
  const double span = (y0 * r - initial).norm();
  if (orth > 1e-8 || span > 1e-8)
    throw PreconditionError("frame_with_initial_vectors: initial vectors must be orthonormal and span E(x)");
  const MatrixField base = frame.matrix;
  frame.rotation = r;
  frame.matrix = [base, r](const Vec& y) -> Mat { return base(y) * r; };
  return frame;
}

BracketValue lie_bracket_fd(const VectorField& x_field, const VectorField& y_field, const Space& space, const Vec& x,
                            const FdOptions& options) {
  check_step(options.h);
  const MatrixField pair = [&](const Vec& y) -> Mat {
    const Vec a = x_field(y);
    Mat m(a.size(), 2);
    m.col(0) = a;
    m.col(1) = y_field(y);
    return m;
  };
  const Vec coarse = jet_bracket(jet(pair, space, x, options.h), 0, 1);
  BracketValue out;
  if (!options.richardson) {
    out.value = coarse;
    return out;
  }
  const Vec fine = jet_bracket(jet(pair, space, x, options.h / 2), 0, 1);
  out.value = (4.0 * fine - coarse) / 3.0;
  out.error_estimate = (fine - coarse).norm();
  return out;
}

std::string to_string(InvolutivityVerdict v) {
  switch (v) {
    case InvolutivityVerdict::involutive: return "involutive";
    case InvolutivityVerdict::non_involutive: return "non_involutive";
    case InvolutivityVerdict::unresolved: return "unresolved";
  }
  return "unresolved";
}

namespace {

struct PairTable {
  Mat defects;
  Mat errors;
  double c1_norm = 0.0;
};

PairTable pair_table(const LocalFrame& frame, const Mat& pi, const Space& space, const FdOptions& fd) {
  const int d = frame.dim();
  PairTable t;
  t.defects = Mat::Zero(d, d);
  t.errors = Mat::Zero(d, d);
  const Jet coarse = jet(frame.matrix, space, frame.center, fd.h);
  Jet fine;
  if (fd.richardson) fine = jet(frame.matrix, space, frame.center, fd.h / 2);
  t.c1_norm = jet_c1_norm(fd.richardson ? fine : coarse);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      Vec b = jet_bracket(coarse, i, j);
      double err = 0.0;
      if (fd.richardson) {
        const Vec bf = jet_bracket(fine, i, j);
        err = (pi * (bf - b)).norm();
        b = (4.0 * bf - b) / 3.0;
      }
      t.defects(i, j) = t.defects(j, i) = (pi * b).norm();
      t.errors(i, j) = t.errors(j, i) = err;
    }
  }
  return t;
}

}  // namespace

BracketDiagnostics frame_bracket_defect(const LocalFrame& frame, const SplittingField& splitting, const Space& space,
                                        const DefectOptions& options) {
  check_step(options.fd.h);
  const Mat pi = projection_onto_F(splitting, frame.center);
  const int d = frame.dim();
  BracketDiagnostics diag;
  diag.center = frame.center;
  diag.dim = d;
  diag.fd_step = options.fd.h;
  diag.richardson_order = options.fd.richardson ? 4 : 2;
  const PairTable t = pair_table(frame, pi, space, options.fd);
  diag.pair_defects = t.defects;
  diag.pair_errors = t.errors;
  diag.c1_norm = t.c1_norm;
  diag.max_defect = 0.0;
  bool first = true;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (first || t.defects(i, j) > diag.max_defect) {
        first = false;
        diag.max_defect = t.defects(i, j);
        diag.max_i = i + 1;
        diag.max_j = j + 1;
      }
  diag.tolerance = options.base_tolerance * std::max(1.0, diag.c1_norm);
  bool stable = true;
  if (diag.max_defect > diag.tolerance) {
    for (double factor : {10.0, 3.0, 1.0 / 3.0, 0.1}) {
      const double step = options.fd.h * factor;
      if (step < 1e-7 || step > 1e-2) continue;
      try {
        const double v = pair_table(frame, pi, space, {step, options.fd.richardson}).defects.maxCoeff();
        diag.ladder_steps.push_back(step);
        diag.ladder_defects.push_back(v);
        if (v > 2.0 * diag.max_defect || v < 0.5 * diag.max_defect) stable = false;
      } catch (const StencilEscapeError&) {
      }
    }
  }
  if (diag.max_defect <= diag.tolerance) diag.verdict = InvolutivityVerdict::involutive;
  else if (stable) diag.verdict = InvolutivityVerdict::non_involutive;
  else diag.verdict = InvolutivityVerdict::unresolved;
  diag.involutive = diag.verdict == InvolutivityVerdict::involutive;
  return diag;
}

BracketDiagnostics bracket_defect(const SplittingField& splitting, const Space& space, const Vec& x,
                                  const DefectOptions& options) {
  return frame_bracket_defect(orthonormal_frame(splitting, space, x, options.radius), splitting, space, options);
}

AprioriRecord apriori_bound_check(const SplittingField& splitting, const Space& space, const Vec& x, int trials,
                                  std::uint64_t seed, const DefectOptions& options) {
  if (trials < 1) throw PreconditionError("apriori_bound_check: trials must be >= 1");
  const LocalFrame frame = orthonormal_frame(splitting, space, x, options.radius);
  const BracketDiagnostics diag = frame_bracket_defect(frame, splitting, space, options);
  const Mat pi = projection_onto_F(splitting, x);
  const int d = frame.dim();
  const int n = static_cast<int>(x.size());
  AprioriRecord rec;
  rec.trials = trials;
  rec.dim = d;
  rec.max_pair_defect = diag.max_defect;
  rec.bound = d * (d - 1) * diag.max_defect;
  rec.min_slack = std::numeric_limits<double>::infinity();
  const double pair_error = d * (d - 1) * diag.pair_errors.maxCoeff();
  // rounding floor of central differences at the default step
  const double floor = 1e-9 * std::max(1.0, diag.c1_norm);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  struct Profile {
    Vec a, c;
    Mat g, w;
  };
  auto draw = [&]() {
    Profile p;
    p.a = Vec(d);
    p.c = Vec(d);
    p.g = Mat(d, n);
    p.w = Mat(d, n);
    for (int l = 0; l < d; ++l) {
      p.a(l) = unit(rng);
      p.c(l) = unit(rng);
      for (int c = 0; c < n; ++c) {
        p.g(l, c) = normal(rng);
        p.w(l, c) = 3.0 * normal(rng);
      }
    }
    return p;
  };
  auto combine = [&frame, x](const Profile& p) -> VectorField {
    return [frame, x, p](const Vec& y) -> Vec {
      const Vec dy = y - x;
      const Vec alpha = p.a + p.g * dy + p.c.cwiseProduct((p.w * dy).array().sin().matrix());
      return frame.matrix(y) * alpha;
    };
  };
  for (int t = 0; t < trials; ++t) {
    const Profile pz = draw();
    const Profile pw = draw();
    const BracketValue b = lie_bracket_fd(combine(pz), combine(pw), space, x, options.fd);
    const double lhs = (pi * b.value).norm();
    const double tol = pi.norm() * b.error_estimate + pair_error + floor;
    rec.max_lhs = std::max(rec.max_lhs, lhs);
    const double slack = rec.bound + tol - lhs;
    rec.min_slack = std::min(rec.min_slack, slack);
    if (slack < 0) {
      if (rec.violations == 0) {
        rec.witness = Mat(2, d);
        rec.witness.row(0) = pz.a.transpose();
        rec.witness.row(1) = pw.a.transpose();
      }
      ++rec.violations;
    }
  }
  return rec;
}

VectorField push_forward_field(const ModelSystem& model, const VectorField& field, int k) {
  if (k < 0) throw PreconditionError("push_forward_field: k must be >= 0");
  return [&model, field, k](const Vec& y) -> Vec {
    Vec z = y;
    for (int i = 0; i < k; ++i) z = model.inverse(z);
    Vec v = field(z);
    for (int i = 0; i < k; ++i) {
      v = model.jacobian(z) * v;
      z = model.map(z);
    }
    return v;
  };
}

NaturalityRecord naturality_check(const ModelSystem& model, const VectorField& x_field, const VectorField& y_field,
                                  const Vec& x, int k_small, const FdOptions& options) {
  if (k_small < 1 || k_small > 3) throw PreconditionError("naturality_check: k must be 1, 2 or 3");
  NaturalityRecord rec;
  rec.k = k_small;
  rec.h = options.h;
  const BracketValue at_x = lie_bracket_fd(x_field, y_field, model.space, x, options);
  Vec z = x;
  Vec v = at_x.value;
  for (int i = 0; i < k_small; ++i) {
    v = model.jacobian(z) * v;
    z = model.map(z);
  }
  rec.lhs = v;
  rec.rhs = lie_bracket_fd(push_forward_field(model, x_field, k_small), push_forward_field(model, y_field, k_small),
                           model.space, z, options)
                .value;
  rec.residual = (rec.lhs - rec.rhs).norm();
  return rec;
}

double naturality_slope(const ModelSystem& model, const VectorField& x_field, const VectorField& y_field,
                        const Vec& x, int k_small, const std::vector<double>& h_list) {
  if (h_list.size() < 2) throw PreconditionError("naturality_slope: need at least two step sizes");
  std::vector<double> lh, lr;
  for (double h : h_list) {
    const double r = naturality_check(model, x_field, y_field, x, k_small, {h, false}).residual;
    lh.push_back(std::log(h));
    lr.push_back(std::log(std::max(r, std::numeric_limits<double>::min())));
  }
  return linalg::fit_line(lh, lr).slope;
}

AnnihilatorForm annihilating_form(const SplittingField& splitting, const Vec& center, Vec reference) {
  const int n = static_cast<int>(center.size());
  const Mat q0 = linalg::orthonormal_basis(splitting.e_basis(center));
  const Mat perp0 = Mat::Identity(n, n) - q0 * q0.transpose();
  if (reference.size() == 0) {
    int best = 0;
    for (int c = 1; c < n; ++c)
      if (perp0.col(c).norm() > perp0.col(best).norm()) best = c;
    reference = Vec::Unit(n, best);
  }
  if ((perp0 * reference).norm() < 1e-6)
    throw PreconditionError("annihilating_form: reference vector lies in E at the center");
  AnnihilatorForm form;
  form.reference = reference;
  form.eta = [splitting, reference](const Vec& y) -> Vec {
    const Mat q = linalg::orthonormal_basis(splitting.e_basis(y));
    const Vec v = reference - q * (q.transpose() * reference);
    return v / v.norm();
  };
  return form;
}

CartanRecord cartan_check(const CovectorField& eta, const VectorField& z_field, const VectorField& w_field,
                          const Space& space, const Vec& x, const FdOptions& options) {
  check_step(options.h);
  const MatrixField triple = [&](const Vec& y) -> Mat {
    const Vec z = z_field(y);
    Mat m(z.size(), 3);
    m.col(0) = z;
    m.col(1) = w_field(y);
    m.col(2) = eta(y);
    return m;
  };
  auto terms = [](const Jet& j) {
    const Vec z = j.value.col(0), w = j.value.col(1), e = j.value.col(2);
    const Eigen::Index n = z.size();
    Vec t(4);
    t(0) = e.dot(jet_bracket(j, 0, 1));
    double zw = 0.0, wz = 0.0, de = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      const Mat& p = j.partial[static_cast<std::size_t>(c)];
      zw += z(c) * (p.col(2).dot(w) + e.dot(p.col(1)));
      wz += w(c) * (p.col(2).dot(z) + e.dot(p.col(0)));
    }
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        const double da_eb = j.partial[static_cast<std::size_t>(a)](b, 2);
        const double db_ea = j.partial[static_cast<std::size_t>(b)](a, 2);
        de += (da_eb - db_ea) * z(a) * w(b);
      }
    t(1) = zw;
    t(2) = wz;
    t(3) = de;
    return t;
  };
  Vec t = terms(jet(triple, space, x, options.h));
  if (options.richardson) t = (4.0 * terms(jet(triple, space, x, options.h / 2)) - t) / 3.0;
  CartanRecord rec;
  rec.eta_bracket = t(0);
  rec.z_eta_w = t(1);
  rec.w_eta_z = t(2);
  rec.d_eta = t(3);
  rec.residual = std::abs(t(0) - (t(1) - t(2) - t(3)));
  return rec;
}

double annihilation_residual(const CovectorField& eta, const SplittingField& splitting, const Vec& x) {
  const Mat e = splitting.e_basis(x);
  return (eta(x).transpose() * e).cwiseAbs().maxCoeff();
}

BoundProbe dynamical_bound_probe(const ModelSystem& model, const Vec& x, const std::vector<long>& k_list,
                                 const BoundProbeOptions& options) {
  for (std::size_t i = 0; i < k_list.size(); ++i)
    if (k_list[i] < 1 || (i > 0 && k_list[i] <= k_list[i - 1]))
      throw PreconditionError("dynamical_bound_probe: k list must be positive and increasing");
  if (model.splitting.dim_e < 2) throw PreconditionError("dynamical_bound_probe: needs dim E >= 2");
  BoundProbe probe;
  probe.point = model.space.canonicalize(x);
  probe.bound = options.bound;
  const int d = model.splitting.dim_e;
  for (long k : k_list) {
    const SingularData sd = singular_data(restricted_cocycle(model, probe.point, k, Subbundle::E));
    const auto f_desc = log_singular_values_desc(restricted_cocycle(model, probe.point, k, Subbundle::F));
    const LocalFrame frame =
        frame_with_initial_vectors(model.splitting, model.space, probe.point, options.defect.radius, sd.right_vectors);
    const BracketDiagnostics diag = frame_bracket_defect(frame, model.splitting, model.space, options.defect);
    BoundProbeEntry e;
    e.k = k;
    e.defect = diag.max_defect;
    e.defect_error = diag.pair_errors(diag.max_i - 1, diag.max_j - 1);
    e.max_i = diag.max_i;
    e.max_j = diag.max_j;
    e.log_ratio = sd.values_log[static_cast<std::size_t>(d - 1)] + sd.values_log[static_cast<std::size_t>(d - 2)] -
                  f_desc.back();
    e.constant = e.defect > 0 ? std::exp(std::log(e.defect) - e.log_ratio) : 0.0;
    probe.max_constant = std::max(probe.max_constant, e.constant);
    probe.entries.push_back(e);
  }
  probe.bounded = probe.max_constant <= probe.bound;
  return probe;
}

void write_bound_csv(std::ostream& out, int point_id, const BoundProbe& probe, bool header) {
  if (header) out << "point_id,k,D_k,log_R_k,K_k\n";
  out << std::setprecision(17);
  for (const auto& e : probe.entries)
    out << point_id << ',' << e.k << ',' << e.defect << ',' << e.log_ratio << ',' << e.constant << '\n';
}

}  // namespace splitlab
