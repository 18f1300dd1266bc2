#include "splitlab/manifold.hpp"

#include "splitlab/linalg.hpp"

#include <cmath>
#include <sstream>

namespace splitlab {

Space Space::torus(int dim) {
  if (dim < 2) throw PreconditionError("torus dimension must be at least 2");
  Space s;
  s.kind_ = SpaceKind::torus;
  s.dim_ = dim;
  return s;
}

Space Space::box(std::vector<std::pair<double, double>> bounds) {
  if (bounds.size() < 2) throw PreconditionError("chart box dimension must be at least 2");
  for (const auto& [lo, hi] : bounds)
    if (!(lo < hi)) throw PreconditionError("chart box bounds must satisfy lo < hi");
  Space s;
  s.kind_ = SpaceKind::chart_box;
  s.dim_ = static_cast<int>(bounds.size());
  s.bounds_ = std::move(bounds);
  return s;
}

Vec Space::canonicalize(const Vec& x) const {
  if (kind_ == SpaceKind::chart_box) return x;
  Vec y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double v = x(i) - std::floor(x(i));
    if (v >= 1.0) v = 0.0;  // floor rounding for tiny negative inputs
    y(i) = v;
  }
  return y;
}

bool Space::contains(const Vec& x) const {
  if (kind_ == SpaceKind::torus) return true;
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const double v = x(static_cast<Eigen::Index>(i));
    if (!(v > bounds_[i].first && v < bounds_[i].second)) return false;
  }
  return true;
}

Vec Space::displacement(const Vec& a, const Vec& b) const {
  Vec d = b - a;
  if (kind_ == SpaceKind::torus) {
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) -= std::round(d(i));
  }
  return d;
}

Mat SplittingField::combined(const Vec& x) const {
  const Mat e = e_basis(x);
  const Mat f = f_basis(x);
  Mat b(e.rows(), e.cols() + f.cols());
  b << e, f;
  return b;
}

double SplittingField::condition(const Vec& x) const {
  return linalg::condition_number(combined(x));
}

Mat ModelSystem::inverse_jacobian(const Vec& y) const {
  return jacobian(inverse(y)).inverse();
}

Vec iterate(const ModelSystem& model, const Vec& x, long k, long max_steps) {
  if (std::labs(k) > max_steps) {
    std::ostringstream msg;
    msg << "iterate: |k| = " << std::labs(k) << " exceeds the configured maximum " << max_steps;
    throw PreconditionError(msg.str());
  }
  Vec y = model.space.canonicalize(x);
  const long steps = std::labs(k);
  for (long i = 1; i <= steps; ++i) {
    y = model.space.canonicalize(k > 0 ? model.map(y) : model.inverse(y));
    if (!model.space.contains(y)) {
      std::ostringstream msg;
      msg << "orbit of " << model.name << " escaped the chart at step " << (k > 0 ? i : -i);
      throw OrbitEscapeError(k > 0 ? i : -i, msg.str());
    }
  }
  return y;
}

std::vector<Vec> orbit(const ModelSystem& model, const Vec& x, long k) {
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(std::labs(k)) + 1);
  Vec y = model.space.canonicalize(x);
  pts.push_back(y);
  const long steps = std::labs(k);
  for (long i = 1; i <= steps; ++i) {
    y = model.space.canonicalize(k > 0 ? model.map(y) : model.inverse(y));
    if (!model.space.contains(y)) {
      std::ostringstream msg;
      msg << "orbit of " << model.name << " escaped the chart at step " << (k > 0 ? i : -i);
      throw OrbitEscapeError(k > 0 ? i : -i, msg.str());
    }
    pts.push_back(y);
  }
  return pts;
}

Mat push_forward_bundle(const ModelSystem& model, const MatrixField& seed, const Vec& x, int iterations) {
  // Backward orbit from x, then transport the seed forward along it.
  const auto pts = orbit(model, x, -iterations);
  Mat b = linalg::orthonormal_basis(seed(pts.back()));
  for (auto it = pts.rbegin(); it + 1 != pts.rend(); ++it) {
    b = linalg::orthonormal_basis(model.jacobian(*it) * b);
  }
  return b;
}

Mat pull_back_bundle(const ModelSystem& model, const MatrixField& seed, const Vec& x, int iterations) {
  const auto pts = orbit(model, x, iterations);
  Mat b = linalg::orthonormal_basis(seed(pts.back()));
  for (int j = iterations - 1; j >= 0; --j) {
    const Mat jac = model.jacobian(pts[static_cast<std::size_t>(j)]);
    b = linalg::orthonormal_basis(jac.partialPivLu().solve(b));
  }
  return b;
}

RefinedSplitting refine_splitting(const ModelSystem& model, const Vec& x, int iterations, double tolerance) {
  if (iterations < 1) throw PreconditionError("refine_splitting: iterations must be >= 1");
  RefinedSplitting out;
  out.iterations = iterations;
  out.e_basis = pull_back_bundle(model, model.seed.e_basis, x, iterations);
  out.f_basis = push_forward_bundle(model, model.seed.f_basis, x, iterations);
  const Mat e_prev = pull_back_bundle(model, model.seed.e_basis, x, iterations - 1);
  const Mat f_prev = push_forward_bundle(model, model.seed.f_basis, x, iterations - 1);
  out.e_angle_change = linalg::max_principal_sine(out.e_basis, e_prev);
  out.f_angle_change = linalg::max_principal_sine(out.f_basis, f_prev);
  const double change = std::max(out.e_angle_change, out.f_angle_change);
  if (change > tolerance) {
    std::vector<double> history;
    Mat e_last = linalg::orthonormal_basis(model.seed.e_basis(x));
    Mat f_last = linalg::orthonormal_basis(model.seed.f_basis(x));
    for (int j = 1; j <= iterations; ++j) {
      const Mat e = pull_back_bundle(model, model.seed.e_basis, x, j);
      const Mat f = push_forward_bundle(model, model.seed.f_basis, x, j);
      history.push_back(std::max(linalg::max_principal_sine(e, e_last), linalg::max_principal_sine(f, f_last)));
      e_last = e;
      f_last = f;
    }
    std::ostringstream msg;
    msg << "refine_splitting: angle change " << change << " above tolerance " << tolerance << " after "
        << iterations << " iterations";
    throw ConvergenceError(std::move(history), msg.str());
  }
  return out;
}

double invariance_residual(const ModelSystem& model, const Vec& x) {
  const Vec y = iterate(model, x, 1);
  const Mat jac = model.jacobian(model.space.canonicalize(x));
  auto residual = [&](const Mat& here, const Mat& there) {
    const Mat image = jac * linalg::orthonormal_basis(here);
    const Mat q = linalg::orthonormal_basis(there);
    return (image - q * (q.transpose() * image)).norm() / image.norm();
  };
  return std::max(residual(model.splitting.e_basis(x), model.splitting.e_basis(y)),
                  residual(model.splitting.f_basis(x), model.splitting.f_basis(y)));
}

double jacobian_fd_error(const ModelSystem& model, const Vec& x, double h) {
  const Vec fx = model.map(x);
  const Mat jac = model.jacobian(x);
  double worst = 0.0;
  for (int i = 0; i < model.dim(); ++i) {
    Vec xp = x;
    xp(i) += h;
    const Vec diff = (model.map(xp) - fx) / h;
    worst = std::max(worst, (diff - jac.col(i)).norm());
  }
  return worst;
}

Vec random_point(const Space& space, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec x(space.dim());
  for (int i = 0; i < space.dim(); ++i) {
    if (space.kind() == SpaceKind::torus) {
      x(i) = unit(rng);
    } else {
      const auto [lo, hi] = space.bounds()[static_cast<std::size_t>(i)];
      const double mid = 0.5 * (lo + hi);
      const double half = 0.4 * (hi - lo);
      x(i) = mid + half * (2.0 * unit(rng) - 1.0);
    }
  }
  return x;
}

}  // namespace splitlab
