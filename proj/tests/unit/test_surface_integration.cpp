#include "oracles.hpp"
#include "splitlab/frobenius.hpp"
#include "splitlab/linalg.hpp"
#include "splitlab/surface.hpp"
#include "splitlab/zoo.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace splitlab;

namespace {

ModelSystem make(const std::string& name) {
  for (const auto& e : zoo_catalog())
    if (e.name == name) return model_zoo(e.example);
  throw std::runtime_error("missing zoo entry " + name);
}

Vec v3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}

SplittingField constant_plane() {
  SplittingField s;
  s.dim_e = 2;
  s.dim_f = 1;
  s.e_basis = [](const Vec&) { return Mat(Mat::Identity(3, 3).leftCols(2)); };
  s.f_basis = [](const Vec&) { return Mat(Mat::Identity(3, 3).rightCols(1)); };
  return s;
}

const Space kBox = Space::box({{-1, 1}, {-1, 1}, {-1, 1}});

std::vector<double> decade(double top) {
  return {top, top * std::pow(10.0, -1.0 / 3), top * std::pow(10.0, -2.0 / 3), top / 10};
}

}  // namespace

TEST_CASE("holonomy loops of a constant plane close") {
  for (double h : {1e-2, 1e-3}) {
    const HolonomyRecord r = holonomy_defect(constant_plane(), kBox, v3(0.1, 0.2, 0.3), h, 1, 2);
    CHECK(r.defect_norm <= 1e-10);
  }
  const ScalingFit fit = defect_scaling(constant_plane(), kBox, v3(0, 0, 0), decade(1e-2));
  CHECK(fit.verdict == HolonomyVerdict::involutive_at_resolution);
}

TEST_CASE("contact chart holonomy grows like h^2 with the bracket as coefficient") {
  const ModelSystem m = make("contact_chart");
  const HolonomyRecord r = holonomy_defect(m.splitting, m.space, v3(0, 0, 0), 1e-2, 1, 2);
  CHECK(r.normalized == doctest::Approx(1.0).epsilon(1e-3));
  const ScalingFit fit = defect_scaling(m.splitting, m.space, v3(0, 0, 0), decade(1e-2));
  CHECK(std::abs(fit.exponent - 2.0) <= 0.05);
  CHECK(std::abs(fit.coefficient - 1.0) <= 0.05);
  CHECK(fit.verdict == HolonomyVerdict::non_involutive);
  const BracketDiagnostics b = bracket_defect(m.splitting, m.space, v3(0, 0, 0));
  CHECK(std::abs(fit.coefficient - b.max_defect) <= 0.1 * b.max_defect);
}

TEST_CASE("holonomy coefficient agrees with the bracket defect away from the origin") {
  const ModelSystem m = make("contact_chart");
  const Vec x = v3(0.2, 0.5, -0.1);
  const ScalingFit fit = defect_scaling(m.splitting, m.space, x, decade(1e-2));
  const BracketDiagnostics b = bracket_defect(m.splitting, m.space, x);
  CHECK(std::abs(fit.coefficient - b.max_defect) <= 0.1 * b.max_defect);
}

TEST_CASE("orientation antisymmetry") {
  const ModelSystem m = make("contact_chart");
  const HolonomyRecord a = holonomy_defect(m.splitting, m.space, v3(0.1, 0.1, 0.1), 1e-2, 1, 2);
  const HolonomyRecord b = holonomy_defect(m.splitting, m.space, v3(0.1, 0.1, 0.1), 1e-2, 2, 1);
  CHECK((a.defect_vector + b.defect_vector).norm() <= 1e-10);
  CHECK_THROWS_AS(holonomy_defect(m.splitting, m.space, v3(0, 0, 0), 1e-2, 1, 1), PreconditionError);
}

TEST_CASE("cat3 eigenplane loops close at the integrator floor") {
  const ModelSystem m = make("cat3");
  for (double h : decade(1e-2)) {
    const HolonomyRecord r = holonomy_defect(m.splitting, m.space, v3(0.1, 0.2, 0.3), h, 1, 2);
    CHECK(r.transverse <= 1e-11);
  }
  const ScalingFit fit = defect_scaling(m.splitting, m.space, v3(0.1, 0.2, 0.3), decade(1e-2));
  CHECK((fit.verdict == HolonomyVerdict::involutive || fit.verdict == HolonomyVerdict::involutive_at_resolution));
}

TEST_CASE("perturbed_auto holonomy is at the floor or steeper than h^2") {
  const ModelSystem m = make("perturbed_auto");
  const ScalingFit fit = defect_scaling(m.splitting, m.space, v3(0.1, 0.2, 0.3), decade(1e-2));
  CHECK((fit.verdict == HolonomyVerdict::involutive || fit.verdict == HolonomyVerdict::involutive_at_resolution));
}

TEST_CASE("defect scaling input checks") {
  CHECK_THROWS_AS(defect_scaling(constant_plane(), kBox, v3(0, 0, 0), {1e-2, 1e-3}), PreconditionError);
  CHECK_THROWS_AS(defect_scaling(constant_plane(), kBox, v3(0, 0, 0), {1e-2, 5e-3, 1e-3, 9e-4}), PreconditionError);
}

TEST_CASE("surface growth") {
  SUBCASE("constant plane gives a flat mesh") {
    const SurfaceMesh s = grow_surface(constant_plane(), kBox, v3(0.1, 0.1, 0.1), 0.3, 7);
    CHECK_FALSE(s.truncated);
    CHECK(s.max_residual() <= 1e-8);
    for (const Vec& v : s.vertices) CHECK(std::abs(v(2) - 0.1) <= 1e-10);
  }
  SUBCASE("cat3 leaf lies in the eigenplane through the center") {
    const ModelSystem m = make("cat3");
    const Vec c = v3(0.5, 0.5, 0.5);
    const SurfaceMesh s = grow_surface(m.splitting, m.space, c, 0.3, 7);
    const oracle::Cat3Eigen e = oracle::cat3_eigen();
    const Vec normal = e.plane.col(0).cross(e.plane.col(1)).normalized();
    for (const Vec& v : s.vertices) CHECK(std::abs(m.space.displacement(c, v).dot(normal)) <= 1e-9);
    CHECK(s.max_residual() <= 10 * 1e-12 * 0.3 + 1e-12);
  }
  SUBCASE("contact chart has no tangent surface") {
    const ModelSystem m = make("contact_chart");
    const SurfaceMesh small = grow_surface(m.splitting, m.space, v3(0, 0, 0), 0.1, 9);
    const SurfaceMesh large = grow_surface(m.splitting, m.space, v3(0, 0, 0), 0.5, 9);
    CHECK(large.max_residual() > 0.01);
    CHECK(large.max_residual() > small.max_residual());
  }
  SUBCASE("mesh text") {
    const SurfaceMesh s = grow_surface(constant_plane(), kBox, v3(0, 0, 0), 0.2, 3);
    std::ostringstream out;
    write_mesh(out, s);
    const std::string text = out.str();
    CHECK(text.find("\nv ") != std::string::npos);
    CHECK(text.find("\nf ") != std::string::npos);
  }
  CHECK_THROWS_AS(grow_surface(constant_plane(), kBox, v3(0, 0, 0), 0.0, 5), PreconditionError);
}

TEST_CASE("holonomy table output") {
  const ScalingFit fit = defect_scaling(constant_plane(), kBox, v3(0, 0, 0), decade(1e-2));
  std::ostringstream out;
  write_holonomy_csv(out, 2, fit, true);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "point_id,h,defect,transverse,normalized");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}
