#include "oracles.hpp"
#include "splitlab/linalg.hpp"
#include "splitlab/zoo.hpp"

#include <doctest.h>

#include <random>

using namespace splitlab;

namespace {

ModelSystem make(const std::string& name, double epsilon = 0.0) {
  for (const auto& e : zoo_catalog())
    if (e.name == name) {
      ModelParams p = e.example;
      if (epsilon != 0.0) p.epsilon = epsilon;
      return model_zoo(p);
    }
  ModelParams p;
  p.name = name;
  return model_zoo(p);
}

Vec v3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}

/// Forward difference through the chart displacement, so torus wrap-around is harmless.
double fd_jacobian_error(const ModelSystem& m, const Vec& x, double h) {
  const Vec fx = m.map(x);
  const Mat jac = m.jacobian(x);
  double worst = 0.0;
  for (int i = 0; i < m.dim(); ++i) {
    Vec xp = x;
    xp(i) += h;
    const Vec diff = m.space.displacement(fx, m.map(m.space.canonicalize(xp))) / h;
    worst = std::max(worst, (diff - jac.col(i)).norm());
  }
  return worst;
}

double span_residual(const Mat& vectors, const Mat& basis) {
  const Mat q = linalg::orthonormal_basis(basis);
  return (vectors - q * (q.transpose() * vectors)).norm() / vectors.norm();
}

const std::vector<std::string> kModels = {"identity", "torus_auto", "cat3", "skew_shear", "perturbed_auto",
                                          "contact_chart"};

}  // namespace

TEST_CASE("cat3 iterate matches direct arithmetic mod 1") {
  const ModelSystem m = make("cat3");
  const Vec y = iterate(m, v3(0.1, 0.2, 0.3), 1);
  CHECK(y(0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(y(2) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("identity iterate is the identity") {
  const ModelSystem m = make("identity");
  const Vec x = v3(0.31, 0.72, 0.05);
  CHECK((iterate(m, x, 5) - x).norm() == 0.0);
}

TEST_CASE("forward then backward iteration returns to the start") {
  std::mt19937_64 rng(11);
  for (const auto& name : kModels) {
    const ModelSystem m = make(name);
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_point(m.space, rng);
      const Vec back = iterate(m, iterate(m, x, 3), -3);
      CHECK_MESSAGE(m.space.distance(back, x) <= 1e-9, name);
      CHECK(m.space.distance(m.inverse(m.map(x)), x) <= 1e-12);
    }
  }
}

TEST_CASE("jacobians agree with forward differences at 100 points") {
  const double h = 1e-5;
  std::mt19937_64 rng(12);
  for (const auto& name : kModels) {
    const ModelSystem m = make(name);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) worst = std::max(worst, fd_jacobian_error(m, random_point(m.space, rng), h));
    CHECK_MESSAGE(worst <= 10 * h, name << " fd error " << worst);
  }
}

TEST_CASE("volume-preserving models have unit Jacobian determinant") {
  std::mt19937_64 rng(13);
  for (const auto& name : kModels) {
    const ModelSystem m = make(name);
    REQUIRE(m.volume_preserving);
    for (int i = 0; i < 100; ++i) {
      const double det = m.jacobian(random_point(m.space, rng)).determinant();
      CHECK_MESSAGE(std::abs(det - 1.0) <= 1e-10, name);
    }
  }
}

TEST_CASE("splittings are invariant and transverse") {
  std::mt19937_64 rng(14);
  for (const auto& name : kModels) {
    const ModelSystem m = make(name);
    const bool analytic = m.smoothness == Smoothness::analytic;
    const int samples = analytic ? 100 : 10;
    double worst = 0.0, worst_cond = 0.0;
    for (int i = 0; i < samples; ++i) {
      const Vec x = random_point(m.space, rng);
      worst = std::max(worst, invariance_residual(m, x));
      worst_cond = std::max(worst_cond, m.splitting.condition(x));
    }
    CHECK_MESSAGE(worst <= (analytic ? 1e-8 : 1e-6), name << " invariance " << worst);
    CHECK(std::isfinite(worst_cond));
    CHECK(worst_cond < 1e8);
  }
}

TEST_CASE("cat3 has unit determinant and eigenvalue moduli t, t^-1/2, t^-1/2") {
  const double t = oracle::tribonacci_root();
  const ModelSystem m = make("cat3");
  const Mat a = m.jacobian(v3(0.4, 0.1, 0.9));
  CHECK((a - Mat(oracle::cat3_matrix())).norm() == 0.0);
  CHECK(a.determinant() == doctest::Approx(1.0).epsilon(1e-14));
  Eigen::EigenSolver<Mat> es(a);
  std::vector<double> mod;
  for (int i = 0; i < 3; ++i) mod.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(mod.begin(), mod.end());
  CHECK(mod[0] == doctest::Approx(1.0 / std::sqrt(t)).epsilon(1e-12));
  CHECK(mod[1] == doctest::Approx(1.0 / std::sqrt(t)).epsilon(1e-12));
  CHECK(mod[2] == doctest::Approx(t).epsilon(1e-12));
  const oracle::Cat3Eigen e = oracle::cat3_eigen();
  const Vec x = v3(0.5, 0.5, 0.5);
  CHECK(linalg::max_principal_sine(linalg::orthonormal_basis(m.splitting.e_basis(x)), Mat(e.plane)) <= 1e-12);
  CHECK(span_residual(Mat(e.line), m.splitting.f_basis(x)) <= 1e-12);
}

TEST_CASE("contact chart frame is (1,0,y), (0,1,0) with F = (0,0,1)") {
  const ModelSystem m = make("contact_chart");
  CHECK(m.space.kind() == SpaceKind::chart_box);
  const Vec x = v3(0.3, -0.7, 0.2);
  const Mat e = m.splitting.e_basis(x);
  Mat expected(3, 2);
  expected << 1, 0, 0, 1, -0.7, 0;
  CHECK(linalg::max_principal_sine(linalg::orthonormal_basis(e), linalg::orthonormal_basis(expected)) <= 1e-14);
  CHECK(span_residual(Mat(v3(0, 0, 1)), m.splitting.f_basis(x)) <= 1e-14);
}

TEST_CASE("block torus automorphism is accepted with a neutral F") {
  const ModelSystem m = make("torus_auto");
  const Vec x = v3(0.2, 0.4, 0.6);
  const Mat f = m.splitting.f_basis(x);
  REQUIRE(f.cols() == 1);
  CHECK((m.jacobian(x) * f - f).norm() <= 1e-14);
}

TEST_CASE("graph transform refinement") {
  SUBCASE("exact seed of a linear model is a fixed point") {
    const ModelSystem m = make("torus_auto");
    const RefinedSplitting r = refine_splitting(m, v3(0.1, 0.2, 0.3), 10);
    CHECK(r.e_angle_change <= 1e-12);
    CHECK(r.f_angle_change <= 1e-12);
  }
  SUBCASE("perturbed model reaches an invariant splitting") {
    ModelParams p;
    p.name = "perturbed_auto";
    p.epsilon = 0.01;
    p.refine_iterations = 30;
    const ModelSystem m = model_zoo(p);
    std::mt19937_64 rng(15);
    for (int i = 0; i < 5; ++i) CHECK(invariance_residual(m, random_point(m.space, rng)) <= 1e-6);
  }
  SUBCASE("epsilon = 0 reduces to the linear eigen-splitting") {
    ModelParams p;
    p.name = "perturbed_auto";
    p.epsilon = 0.0;
    const ModelSystem m = model_zoo(p);
    const oracle::Cat3Eigen e = oracle::cat3_eigen();
    const Vec x = v3(0.7, 0.1, 0.45);
    CHECK(linalg::max_principal_sine(linalg::orthonormal_basis(m.splitting.e_basis(x)), Mat(e.plane)) <= 1e-10);
    CHECK(span_residual(Mat(e.line), m.splitting.f_basis(x)) <= 1e-10);
  }
}

TEST_CASE("space canonicalization and containment") {
  const Space torus = Space::torus(3);
  const Vec y = torus.canonicalize(v3(1.25, -0.25, 3.0));
  CHECK(y(0) == doctest::Approx(0.25));
  CHECK(y(1) == doctest::Approx(0.75));
  CHECK(y(2) == doctest::Approx(0.0));
  CHECK(torus.distance(v3(0.95, 0, 0), v3(0.05, 0, 0)) == doctest::Approx(0.1));
  const Space box = Space::box({{-1, 1}, {-1, 1}, {-1, 1}});
  CHECK(box.contains(v3(0.5, 0.5, -0.99)));
  CHECK_FALSE(box.contains(v3(1.0, 0.0, 0.0)));
  CHECK_THROWS_AS(Space::box({{1, 0}, {0, 1}}), PreconditionError);
}

TEST_CASE("zoo catalog instantiates every entry and rejects unknown names") {
  const auto catalog = zoo_catalog();
  CHECK(catalog.size() >= 6);
  for (const auto& e : catalog) {
    const ModelSystem m = model_zoo(e.example);
    CHECK(m.name == e.name);
    CHECK(m.dim() >= 3);
    CHECK(m.splitting.dim_e + m.splitting.dim_f == m.dim());
  }
  ModelParams bad;
  bad.name = "no_such_model";
  CHECK_THROWS_AS(model_zoo(bad), PreconditionError);
  ModelParams singular;
  singular.name = "torus_auto";
  singular.matrix = {{2, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK_THROWS_AS(model_zoo(singular), PreconditionError);
}

TEST_CASE("linalg helpers") {
  Mat m(3, 3);
  m << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  CHECK(linalg::compound(m, 3)(0, 0) == doctest::Approx(m.determinant()));
  CHECK(linalg::compound(m, 1).isApprox(m));
  CHECK(linalg::subsets(4, 2).size() == 6);
  const Mat q = linalg::orthonormal_basis(m.leftCols(2));
  CHECK((q.transpose() * q - Mat::Identity(2, 2)).norm() <= 1e-14);
  const Mat p = linalg::orthogonal_projector(q);
  CHECK((p * p - p).norm() <= 1e-14);
  const auto fit = linalg::fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  std::mt19937_64 rng(1);
  const Mat r = linalg::random_orthonormal(5, 3, rng);
  CHECK((r.transpose() * r - Mat::Identity(3, 3)).norm() <= 1e-13);
}
