#include "splitlab/zoo.hpp"

#include "splitlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

namespace splitlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat to_matrix(const IntMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Mat out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = m[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != n) throw PreconditionError("matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = static_cast<double>(row[static_cast<std::size_t>(c)]);
  }
  return out;
}

/// Integer inverse of a unimodular matrix.
Mat unimodular_inverse(const Mat& a) {
  const double det = a.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "toral automorphism needs |det| = 1, got det = " << det;
    throw PreconditionError(msg.str());
  }
  Mat inv = a.inverse();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = std::round(inv(i));
  if (!(a * inv).isIdentity(1e-12)) throw PreconditionError("integer inverse check failed");
  return inv;
}

struct Profile {
  std::function<double(double)> value;
  std::function<double(double)> slope;
};

Profile shear_profile(const std::string& name) {
  if (name == "sin") {
    return {[](double u) { return std::sin(kTwoPi * u); },
            [](double u) { return kTwoPi * std::cos(kTwoPi * u); }};
  }
  if (name == "sin_cos") {
    return {[](double u) { return std::sin(kTwoPi * u) + 0.5 * std::cos(2.0 * kTwoPi * u); },
            [](double u) { return kTwoPi * std::cos(kTwoPi * u) - kTwoPi * std::sin(2.0 * kTwoPi * u); }};
  }
  throw PreconditionError("unknown shear profile '" + name + "' (expected sin or sin_cos)");
}

std::vector<int> default_selection(int n, int dim_e) {
  std::vector<int> sel(static_cast<std::size_t>(dim_e));
  for (int i = 0; i < dim_e; ++i) sel[static_cast<std::size_t>(i)] = i;
  (void)n;
  return sel;
}

int resolve_dim_e(const ModelParams& p, int n) {
  if (!p.e_eigen_indices.empty()) return static_cast<int>(p.e_eigen_indices.size());
  const int d = p.dim_e < 0 ? n - 1 : p.dim_e;
  if (d < 1 || d >= n) throw PreconditionError("dim_e must lie in [1, n-1]");
  return d;
}

MatrixField constant(Mat m) {
  return [m = std::move(m)](const Vec&) { return m; };
}

void attach_splitting(ModelSystem& model, SplittingField split) {
  model.splitting = split;
  model.seed = std::move(split);
}

ModelSystem make_linear(std::string name, const Mat& a, const std::vector<int>& selection) {
  const int n = static_cast<int>(a.rows());
  const Mat inv = unimodular_inverse(a);
  ModelSystem m;
  m.name = std::move(name);
  m.space = Space::torus(n);
  m.map = [a](const Vec& x) -> Vec { return a * x; };
  m.inverse = [inv](const Vec& x) -> Vec { return inv * x; };
  m.jacobian = [a](const Vec&) -> Mat { return a; };
  m.linear_part = a;
  m.volume_preserving = std::abs(std::abs(a.determinant()) - 1.0) < 1e-12;
  const auto eig = eigen_splitting(a, selection);
  attach_splitting(m, SplittingField{static_cast<int>(eig.e_basis.cols()), static_cast<int>(eig.f_basis.cols()),
                                     constant(eig.e_basis), constant(eig.f_basis)});
  return m;
}

ModelSystem make_identity(const ModelParams& p) {
  const int n = p.dim;
  if (n < 2) throw PreconditionError("identity: dim must be >= 2");
  const int d = p.dim_e < 0 ? n - 1 : p.dim_e;
  if (d < 1 || d >= n) throw PreconditionError("identity: dim_e must lie in [1, n-1]");
  ModelSystem m;
  m.name = "identity";
  m.space = Space::torus(n);
  m.map = [](const Vec& x) -> Vec { return x; };
  m.inverse = [](const Vec& x) -> Vec { return x; };
  m.jacobian = [n](const Vec&) -> Mat { return Mat::Identity(n, n); };
  m.linear_part = Mat::Identity(n, n);
  m.volume_preserving = true;
  const Mat id = Mat::Identity(n, n);
  attach_splitting(m, SplittingField{d, n - d, constant(id.leftCols(d)), constant(id.rightCols(n - d))});
  return m;
}

ModelSystem make_contact_chart() {
  ModelSystem m;
  m.name = "contact_chart";
  m.space = Space::box({{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}});
  m.map = [](const Vec& x) -> Vec { return x; };
  m.inverse = [](const Vec& x) -> Vec { return x; };
  m.jacobian = [](const Vec&) -> Mat { return Mat::Identity(3, 3); };
  m.linear_part = Mat::Identity(3, 3);
  m.volume_preserving = true;
  SplittingField split;
  split.dim_e = 2;
  split.dim_f = 1;
  split.e_basis = [](const Vec& x) -> Mat {
    Mat e(3, 2);
    e << 1.0, 0.0, 0.0, 1.0, x(1), 0.0;
    return e;
  };
  split.f_basis = [](const Vec&) -> Mat { return Vec::Unit(3, 2); };
  attach_splitting(m, std::move(split));
  return m;
}

/// Replaces the splitting of `m` by graph-transform refinement of its seed.
void refine_on_demand(ModelSystem& m, bool refine_e, bool refine_f, int iterations) {
  auto base = std::make_shared<const ModelSystem>(m);
  const Space space = m.space;
  if (refine_e) {
    m.splitting.e_basis = [base, space, iterations](const Vec& x) {
      return pull_back_bundle(*base, base->seed.e_basis, space.canonicalize(x), iterations);
    };
  }
  if (refine_f) {
    m.splitting.f_basis = [base, space, iterations](const Vec& x) {
      return push_forward_bundle(*base, base->seed.f_basis, space.canonicalize(x), iterations);
    };
  }
  m.smoothness = Smoothness::numeric_splitting;
  m.refine_iterations = iterations;
}

ModelSystem make_perturbed(const ModelParams& p) {
  const Mat a = to_matrix(p.matrix.empty() ? cat3_matrix() : p.matrix);
  const int n = static_cast<int>(a.rows());
  const int d = resolve_dim_e(p, n);
  const auto selection = p.e_eigen_indices.empty() ? default_selection(n, d) : p.e_eigen_indices;
  ModelSystem m = make_linear("perturbed_auto", a, selection);
  const int src = p.shear_source;
  const int dst = p.shear_target;
  if (src < 0 || dst < 0 || src >= n || dst >= n || src == dst)
    throw PreconditionError("perturbed_auto: shear_source and shear_target must be distinct coordinates");
  const Profile prof = shear_profile(p.profile);
  const double eps = p.epsilon;
  const Mat inv = unimodular_inverse(a);
  // phi = S o A with S(y) = y + eps * s(y_src) e_dst, det DS = 1.
  m.map = [a, prof, eps, src, dst](const Vec& x) -> Vec {
    Vec y = a * x;
    y(dst) += eps * prof.value(y(src));
    return y;
  };
  m.inverse = [inv, prof, eps, src, dst](const Vec& z) -> Vec {
    Vec y = z;
    y(dst) -= eps * prof.value(z(src));
    return inv * y;
  };
  m.jacobian = [a, prof, eps, src, dst, n](const Vec& x) -> Mat {
    const Vec y = a * x;
    Mat shear = Mat::Identity(n, n);
    shear(dst, src) += eps * prof.slope(y(src));
    return shear * a;
  };
  m.linear_part.reset();
  refine_on_demand(m, true, true, p.refine_iterations);
  return m;
}

ModelSystem make_skew_shear(const ModelParams& p) {
  const IntMatrix base_matrix = p.matrix.empty() ? IntMatrix{{2, 1}, {1, 1}} : p.matrix;
  const Mat a = to_matrix(base_matrix);
  if (a.rows() != 2) throw PreconditionError("skew_shear: base matrix must be 2x2");
  const Mat inv = unimodular_inverse(a);
  const auto eig = eigen_splitting(a, {0});
  if (std::abs(eig.eigenvalues[0]) >= 1.0 - 1e-12)
    throw PreconditionError("skew_shear: base matrix must be hyperbolic");
  const Profile prof = shear_profile(p.profile);
  const double eps = p.epsilon;
  const double tau = p.tau;
  ModelSystem m;
  m.name = "skew_shear";
  m.space = Space::torus(3);
  // (u, z) -> (A u, z + tau + eps * s(u_0)).
  m.map = [a, prof, eps, tau](const Vec& x) -> Vec {
    Vec y(3);
    y.head(2) = a * x.head(2);
    y(2) = x(2) + tau + eps * prof.value(x(0));
    return y;
  };
  m.inverse = [inv, prof, eps, tau](const Vec& y) -> Vec {
    Vec x(3);
    x.head(2) = inv * y.head(2);
    x(2) = y(2) - tau - eps * prof.value(x(0));
    return x;
  };
  m.jacobian = [a, prof, eps](const Vec& x) -> Mat {
    Mat j = Mat::Zero(3, 3);
    j.topLeftCorner(2, 2) = a;
    j(2, 0) = eps * prof.slope(x(0));
    j(2, 2) = 1.0;
    return j;
  };
  m.volume_preserving = true;
  Mat e = Mat::Zero(3, 2);
  e.block(0, 0, 2, 1) = eig.e_basis;
  e(2, 1) = 1.0;
  Mat f = Mat::Zero(3, 1);
  f.block(0, 0, 2, 1) = eig.f_basis;
  attach_splitting(m, SplittingField{2, 1, constant(e), constant(f)});
  // E = (stable line) x fiber is exactly invariant; F is the unstable graph.
  refine_on_demand(m, false, true, p.refine_iterations);
  return m;
}

}  // namespace

IntMatrix cat3_matrix() { return {{0, 1, 0}, {0, 0, 1}, {1, 1, 1}}; }

EigenSplitting eigen_splitting(const Mat& a, const std::vector<int>& e_indices) {
  const int n = static_cast<int>(a.rows());
  Eigen::EigenSolver<Mat> solver(a);
  std::vector<std::complex<double>> vals(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  std::sort(vals.begin(), vals.end(), [](const auto& l, const auto& r) {
    const double ml = std::abs(l), mr = std::abs(r);
    if (std::abs(ml - mr) > 1e-12 * std::max(1.0, ml)) return ml < mr;
    return std::arg(l) < std::arg(r);
  });
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  for (int i : e_indices) {
    if (i < 0 || i >= n) throw PreconditionError("eigenvalue index out of range");
    chosen[static_cast<std::size_t>(i)] = true;
  }
  const int d = static_cast<int>(std::count(chosen.begin(), chosen.end(), true));
  if (d == 0 || d == n) throw PreconditionError("E selection must be a proper nonempty subset");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (chosen[static_cast<std::size_t>(i)] == chosen[static_cast<std::size_t>(j)]) continue;
      if (std::abs(vals[static_cast<std::size_t>(i)] - std::conj(vals[static_cast<std::size_t>(j)])) < 1e-9)
        throw PreconditionError("E selection splits a conjugate pair or a repeated eigenvalue");
    }
  }
  auto span_of = [&](bool side) {
    // range of prod_{lambda not on `side`} (A - lambda I) is the invariant subspace of `side`.
    Eigen::MatrixXcd prod = Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd ac = a.cast<std::complex<double>>();
    for (int i = 0; i < n; ++i) {
      if (chosen[static_cast<std::size_t>(i)] == side) continue;
      prod = (ac - vals[static_cast<std::size_t>(i)] * Eigen::MatrixXcd::Identity(n, n)) * prod;
    }
    const Mat real = prod.real();
    Eigen::JacobiSVD<Mat> svd(real, Eigen::ComputeFullU);
    const int dim = side ? d : n - d;
    return linalg::orthonormal_basis(svd.matrixU().leftCols(dim));
  };
  EigenSplitting out;
  out.e_basis = span_of(true);
  out.f_basis = span_of(false);
  out.eigenvalues = std::move(vals);
  return out;
}

ModelSystem model_zoo(const ModelParams& p) {
  if (p.name == "identity") return make_identity(p);
  if (p.name == "cat3") {
    ModelSystem m = make_linear("cat3", to_matrix(cat3_matrix()), {0, 1});
    return m;
  }
  if (p.name == "torus_auto") {
    if (p.matrix.empty()) throw PreconditionError("torus_auto: 'matrix' is required");
    const Mat a = to_matrix(p.matrix);
    const int n = static_cast<int>(a.rows());
    const int d = resolve_dim_e(p, n);
    return make_linear("torus_auto", a, p.e_eigen_indices.empty() ? default_selection(n, d) : p.e_eigen_indices);
  }
  if (p.name == "perturbed_auto") return make_perturbed(p);
  if (p.name == "skew_shear") return make_skew_shear(p);
  if (p.name == "contact_chart") return make_contact_chart();
  throw PreconditionError("unknown model '" + p.name +
                          "' (known: identity, torus_auto, cat3, skew_shear, perturbed_auto, contact_chart)");
}

ModelTags model_tags(const ModelSystem& model) {
  ModelTags t;
  t.dim_e = model.splitting.dim_e;
  t.dim_f = model.splitting.dim_f;
  t.analytic_splitting = model.smoothness == Smoothness::analytic;
  t.chart_only = model.space.kind() == SpaceKind::chart_box;
  t.volume_preserving = model.volume_preserving;
  return t;
}

std::vector<ZooEntry> zoo_catalog() {
  std::vector<ZooEntry> out;
  auto add = [&](std::string name, std::string summary, std::string schema, ModelParams example,
                 std::vector<std::string> results) {
    example.name = name;
    ModelTags tags = model_tags(model_zoo(example));
    tags.applicable_results = std::move(results);
    out.push_back({std::move(name), std::move(summary), std::move(schema), std::move(example), std::move(tags)});
  };
  add("identity", "identity map on T^n, E = first dim_e coordinates", "dim: int >= 2; dim_e: int in [1, dim-1]", {},
      {});
  ModelParams block;
  block.matrix = {{2, 1, 0}, {1, 1, 0}, {0, 0, 1}};
  block.e_eigen_indices = {0, 2};
  add("torus_auto", "linear automorphism of T^n with an eigen-splitting",
      "matrix: integer n x n, |det| = 1; dim_e: int (E = dim_e smallest moduli) | e_eigen_indices: [int]", block, {});
  add("cat3", "tribonacci automorphism of T^3, E = contracting eigenplane, F = expanding line", "(none)", {},
      {"volume_preserving_dominated_3d", "volume_dominated_3d", "second_order_liminf", "exponential_triple_bounds"});
  ModelParams skew;
  skew.epsilon = 0.05;
  skew.tau = 0.1;
  add("skew_shear", "circle extension of a 2D cat map, E = stable x fiber, F = unstable graph",
      "matrix: integer 2x2 hyperbolic (default [[2,1],[1,1]]); tau: real; epsilon: real; profile: sin | sin_cos",
      skew, {"volume_dominated_3d", "second_order_liminf", "exponential_triple_bounds"});
  ModelParams pert;
  pert.epsilon = 0.01;
  add("perturbed_auto", "toral automorphism composed with a volume-preserving coordinate shear",
      "matrix: integer n x n (default cat3); epsilon: real; profile: sin | sin_cos; shear_source, shear_target: "
      "coordinate indices; dim_e | e_eigen_indices; refine_iterations: int",
      pert, {"volume_preserving_dominated_3d", "volume_dominated_3d", "second_order_liminf", "exponential_triple_bounds"});
  add("contact_chart", "chart box [-1,1]^3 with E = span{d/dx + y d/dz, d/dy}, identity dynamics (Frobenius tests)",
      "(none)", {}, {});
  return out;
}

}  // namespace splitlab
