#include "splitlab/surface.hpp"

#include "splitlab/linalg.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <utility>

namespace splitlab {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

Vec to_vec(const State& s) { return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size())); }

/// Flows `field` (scaled by the sign of t) for time |t| from y.
Vec flow(const VectorField& field, const Space& space, const Vec& y, double t, const FlowOptions& options,
         long& steps) {
  if (t == 0.0) return y;
  const double sign = t > 0 ? 1.0 : -1.0;
  State s(y.data(), y.data() + y.size());
  auto rhs = [&](const State& state, State& out, double) {
    const Vec p = to_vec(state);
    if (space.kind() == SpaceKind::chart_box && !space.contains(p))
      throw StencilEscapeError("flow left the chart");
    const Vec v = sign * field(p);
    out.assign(v.data(), v.data() + v.size());
  };
  auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<State>());
  steps += static_cast<long>(
      odeint::integrate_adaptive(stepper, rhs, s, 0.0, std::abs(t), std::min(std::abs(t), 1e-3)));
  const Vec end = to_vec(s);
  if (space.kind() == SpaceKind::chart_box && !space.contains(end)) throw StencilEscapeError("flow left the chart");
  return end;
}

/// Flows y along `field` for time t together with the pushforward of the tangent w,
/// using the variational equation w' = DY(p) w with a central directional difference.
std::pair<Vec, Vec> flow_with_tangent(const VectorField& field, const Space& space, const Vec& y, const Vec& w,
                                      double t, const FlowOptions& options, long& steps) {
  if (t == 0.0) return {y, w};
  const double sign = t > 0 ? 1.0 : -1.0;
  const Eigen::Index n = y.size();
  const double eps = 1e-6;
  State s(static_cast<std::size_t>(2 * n));
  std::copy(y.data(), y.data() + n, s.begin());
  std::copy(w.data(), w.data() + n, s.begin() + n);
  auto rhs = [&](const State& state, State& out, double) {
    const Vec all = to_vec(state);
    const Vec p = all.head(n);
    const Vec q = all.tail(n);
    if (space.kind() == SpaceKind::chart_box && !space.contains(p))
      throw StencilEscapeError("flow left the chart");
    Vec dq = Vec::Zero(n);
    const double norm = q.norm();
    if (norm > 0) {
      const Vec dir = q / norm;
      dq = (field(p + eps * dir) - field(p - eps * dir)) * (sign * norm / (2 * eps));
    }
    const Vec v = sign * field(p);
    out.resize(static_cast<std::size_t>(2 * n));
    std::copy(v.data(), v.data() + n, out.begin());
    std::copy(dq.data(), dq.data() + n, out.begin() + n);
  };
  auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<State>());
  steps += static_cast<long>(
      odeint::integrate_adaptive(stepper, rhs, s, 0.0, std::abs(t), std::min(std::abs(t), 1e-3)));
  const Vec all = to_vec(s);
  const Vec end = all.head(n);
  if (space.kind() == SpaceKind::chart_box && !space.contains(end)) throw StencilEscapeError("flow left the chart");
  return {end, all.tail(n)};
}

}  // namespace

std::string to_string(HolonomyVerdict v) {
  switch (v) {
    case HolonomyVerdict::involutive: return "involutive";
    case HolonomyVerdict::non_involutive: return "non_involutive";
    case HolonomyVerdict::involutive_at_resolution: return "involutive_at_resolution";
    case HolonomyVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

HolonomyRecord holonomy_defect(const SplittingField& splitting, const Space& space, const Vec& x, double h, int i,
                               int j, const FlowOptions& options) {
  if (!(h > 0)) throw PreconditionError("holonomy_defect: h must be positive");
  const int d = splitting.dim_e;
  if (i < 1 || j < 1 || i > d || j > d || i == j) throw PreconditionError("holonomy_defect: invalid frame pair");
  const LocalFrame frame = orthonormal_frame(splitting, space, x, std::max(options.frame_radius, 4.0 * h));
  const VectorField yi = frame.field(i - 1);
  const VectorField yj = frame.field(j - 1);
  HolonomyRecord rec;
  rec.center = x;
  rec.h = h;
  rec.i = i;
  rec.j = j;
  Vec p = flow(yi, space, x, h, options, rec.integrator_steps);
  p = flow(yj, space, p, h, options, rec.integrator_steps);
  p = flow(yi, space, p, -h, options, rec.integrator_steps);
  p = flow(yj, space, p, -h, options, rec.integrator_steps);
  rec.defect_vector = p - x;
  rec.defect_norm = rec.defect_vector.norm();
  rec.transverse = (projection_onto_F(splitting, x) * rec.defect_vector).norm();
  rec.normalized = rec.transverse / (h * h);
  return rec;
}

ScalingFit defect_scaling(const SplittingField& splitting, const Space& space, const Vec& x,
                          const std::vector<double>& h_list, int i, int j, const FlowOptions& options) {
  if (h_list.size() < 4) throw PreconditionError("defect_scaling: need at least 4 loop sizes");
  const double ratio = h_list[1] / h_list[0];
  for (std::size_t a = 1; a < h_list.size(); ++a) {
    if (!(h_list[a] > 0) || std::abs(h_list[a] / h_list[a - 1] - ratio) > 1e-6 * std::abs(ratio) || ratio == 1.0)
      throw PreconditionError("defect_scaling: h list must be geometric");
  }
  ScalingFit fit;
  std::vector<double> lh, ld;
  for (double h : h_list) {
    fit.records.push_back(holonomy_defect(splitting, space, x, h, i, j, options));
    const double t = fit.records.back().transverse;
    if (t > options.floor) {
      lh.push_back(std::log(h));
      ld.push_back(std::log(t));
    }
  }
  if (lh.empty()) {
    fit.verdict = HolonomyVerdict::involutive_at_resolution;
    return fit;
  }
  if (lh.size() >= 2) {
    const auto line = linalg::fit_line(lh, ld);
    fit.exponent = line.slope;
    fit.coefficient = std::exp(line.intercept);
    fit.exponent_defined = true;
    if (fit.exponent >= 2.5) fit.verdict = HolonomyVerdict::involutive;
    else if (std::abs(fit.exponent - 2.0) <= 0.25) fit.verdict = HolonomyVerdict::non_involutive;
  }
  return fit;
}

double SurfaceMesh::max_residual() const {
  double m = 0.0;
  for (double r : tangency_residual) m = std::max(m, r);
  return m;
}

SurfaceMesh grow_surface(const SplittingField& splitting, const Space& space, const Vec& x, double extent,
                         int resolution, const FlowOptions& options) {
  if (splitting.dim_e != 2) throw PreconditionError("grow_surface: dim E must be 2");
  if (!(extent > 0) || resolution < 2) throw PreconditionError("grow_surface: need extent > 0 and resolution >= 2");
  const LocalFrame frame = orthonormal_frame(splitting, space, x, std::max(options.frame_radius, extent));
  const VectorField y1 = frame.field(0);
  const VectorField y2 = frame.field(1);
  SurfaceMesh mesh;
  mesh.center = x;
  mesh.extent = extent;
  mesh.resolution = resolution;
  long steps = 0;
  for (int a = 0; a < resolution && !mesh.truncated; ++a) {
    const double u = -extent + 2.0 * extent * a / (resolution - 1);
    std::vector<Vec> row;
    std::vector<double> residual;
    try {
      const Vec q = flow(y1, space, x, u, options, steps);
      for (int b = 0; b < resolution; ++b) {
        const double v = -extent + 2.0 * extent * b / (resolution - 1);
        // d/du of flow_{Y2,v}(flow_{Y1,u}(x)) is the Y2-pushforward of Y1(q).
        const auto [p, tu] = flow_with_tangent(y2, space, q, y1(q), v, options, steps);
        const Vec tv = y2(p);
        const double fold = std::sqrt(std::max(0.0, 1.0 - std::pow(tu.dot(tv) / (tu.norm() * tv.norm()), 2)));
        if (!(fold > 1e-6)) {
          std::ostringstream msg;
          msg << "parameterization folds at (u, v) = (" << u << ", " << v << ")";
          mesh.truncated = true;
          mesh.truncation_reason = msg.str();
          break;
        }
        Mat t(p.size(), 2);
        t.col(0) = tu;
        t.col(1) = tv;
        const Mat e = linalg::orthonormal_basis(splitting.e_basis(p));
        residual.push_back(std::asin(linalg::max_principal_sine(e, linalg::orthonormal_basis(t))));
        row.push_back(p);
      }
    } catch (const StencilEscapeError& err) {
      mesh.truncated = true;
      mesh.truncation_reason = err.what();
    }
    if (mesh.truncated) break;
    mesh.vertices.insert(mesh.vertices.end(), row.begin(), row.end());
    mesh.tangency_residual.insert(mesh.tangency_residual.end(), residual.begin(), residual.end());
    ++mesh.rows;
  }
  for (int a = 0; a + 1 < mesh.rows; ++a)
    for (int b = 0; b + 1 < resolution; ++b) {
      const int i0 = a * resolution + b;
      mesh.quads.push_back({i0, i0 + resolution, i0 + resolution + 1, i0 + 1});
    }
  return mesh;
}

void write_mesh(std::ostream& out, const SurfaceMesh& mesh) {
  out << std::setprecision(17);
  out << "# vertices " << mesh.vertices.size() << " faces " << mesh.quads.size() << " resolution " << mesh.resolution
      << " rows " << mesh.rows << " truncated " << (mesh.truncated ? 1 : 0) << '\n';
  for (const Vec& v : mesh.vertices) {
    out << 'v';
    for (Eigen::Index c = 0; c < v.size(); ++c) out << ' ' << v(c);
    out << '\n';
  }
  for (std::size_t i = 0; i < mesh.tangency_residual.size(); ++i)
    out << "# t " << (i + 1) << ' ' << mesh.tangency_residual[i] << '\n';
  for (const auto& q : mesh.quads) out << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
}

void write_holonomy_csv(std::ostream& out, int point_id, const ScalingFit& fit, bool header) {
  if (header) out << "point_id,h,defect,transverse,normalized\n";
  out << std::setprecision(17);
  for (const auto& r : fit.records)
    out << point_id << ',' << r.h << ',' << r.defect_norm << ',' << r.transverse << ',' << r.normalized << '\n';
}

}  // namespace splitlab
