#include "oracles.hpp"
#include "splitlab/frobenius.hpp"
#include "splitlab/linalg.hpp"
#include "splitlab/zoo.hpp"

#include <doctest.h>

#include <random>
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

}  // namespace

TEST_CASE("projection onto F along E") {
  SUBCASE("orthogonal splitting") {
    const Mat p = projection_onto_F(constant_plane(), v3(0, 0, 0));
    Mat expected = Mat::Zero(3, 3);
    expected(2, 2) = 1;
    CHECK((p - expected).norm() <= 1e-15);
  }
  SUBCASE("contact chart at the origin") {
    const ModelSystem m = make("contact_chart");
    const Mat p = projection_onto_F(m.splitting, v3(0, 0, 0));
    CHECK((p * v3(1, 0, 0)).norm() <= 1e-15);
    CHECK((p * v3(0, 1, 0)).norm() <= 1e-15);
    CHECK((p * v3(0, 0, 1) - v3(0, 0, 1)).norm() <= 1e-15);
  }
  SUBCASE("oblique splitting in the plane") {
    SplittingField s;
    s.dim_e = 1;
    s.dim_f = 1;
    s.e_basis = [](const Vec&) { return Mat(Eigen::Vector2d(1, 0)); };
    s.f_basis = [](const Vec&) { return Mat(Eigen::Vector2d(1, 1)); };
    const Mat p = projection_onto_F(s, Eigen::Vector2d(0, 0));
    // e2 = -e1 + (e1 + e2): the F component is e1 + e2.
    CHECK((p * Eigen::Vector2d(0, 1) - Eigen::Vector2d(1, 1)).norm() <= 1e-14);
    CHECK((p * Eigen::Vector2d(1, 0)).norm() <= 1e-14);
  }
  SUBCASE("idempotent with E in the kernel at random points") {
    std::mt19937_64 rng(51);
    for (const std::string name : {"cat3", "skew_shear", "perturbed_auto", "contact_chart"}) {
      const ModelSystem m = make(name);
      for (int i = 0; i < 5; ++i) {
        const Vec x = random_point(m.space, rng);
        const Mat p = projection_onto_F(m.splitting, x);
        CHECK((p * p - p).norm() <= 1e-10);
        CHECK((p * m.splitting.e_basis(x)).norm() <= 1e-10);
      }
    }
  }
}

TEST_CASE("orthonormal frames") {
  SUBCASE("constant plane gives e1, e2 everywhere") {
    const LocalFrame f = orthonormal_frame(constant_plane(), kBox, v3(0.1, 0.2, 0.3), 0.1);
    CHECK((f.matrix(v3(0.15, 0.2, 0.3)) - Mat(Mat::Identity(3, 3).leftCols(2))).norm() <= 1e-15);
  }
  SUBCASE("contact frame is the normalized Gram-Schmidt of (1,0,y), (0,1,0)") {
    const ModelSystem m = make("contact_chart");
    const LocalFrame f = orthonormal_frame(m.splitting, m.space, v3(0, 0, 0), 0.2);
    const Mat c = f.matrix(v3(0, 0, 0));
    CHECK(std::abs(std::abs(c.col(0).dot(v3(1, 0, 0))) - 1) <= 1e-12);
    CHECK(std::abs(std::abs(c.col(1).dot(v3(0, 1, 0))) - 1) <= 1e-12);
    const Vec y = v3(0.05, -0.1, 0.02);
    const Mat e = f.matrix(y);
    CHECK((e.transpose() * e - Mat::Identity(2, 2)).norm() <= 1e-10);
    Mat exact(3, 2);
    exact << 1, 0, 0, 1, -0.1, 0;
    CHECK(linalg::max_principal_sine(e, linalg::orthonormal_basis(exact)) <= 1e-10);
  }
  SUBCASE("frame spans E inside the ball") {
    const ModelSystem m = make("perturbed_auto");
    const Vec x = v3(0.3, 0.4, 0.5);
    const LocalFrame f = orthonormal_frame(m.splitting, m.space, x, 1e-2);
    const Mat c = f.matrix(x);
    CHECK((c.transpose() * c - Mat::Identity(2, 2)).norm() <= 1e-10);
    const Vec y = x + v3(0.004, -0.003, 0.005);
    const Mat q = linalg::orthonormal_basis(m.splitting.e_basis(y));
    const Mat fy = f.matrix(y);
    CHECK((fy - q * (q.transpose() * fy)).norm() <= 1e-6);
  }
  SUBCASE("prescribed initial vectors") {
    const ModelSystem m = make("cat3");
    const Vec x = v3(0.2, 0.2, 0.2);
    const Mat e = linalg::orthonormal_basis(m.splitting.e_basis(x));
    Eigen::Matrix2d rot;
    const double a = 0.7;
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    const Mat init = e * rot;
    const LocalFrame f = frame_with_initial_vectors(m.splitting, m.space, x, 1e-2, init);
    CHECK((f.matrix(x) - init).norm() <= 1e-12);
    CHECK_THROWS_AS(frame_with_initial_vectors(m.splitting, m.space, x, 1e-2, Mat(Mat::Identity(3, 3).leftCols(2))),
                    PreconditionError);
  }
}

TEST_CASE("finite-difference Lie brackets") {
  const VectorField cx = [](const Vec& y) { return v3(1, 0, y(1)); };
  const VectorField cy = [](const Vec&) { return v3(0, 1, 0); };
  const BracketValue b = lie_bracket_fd(cx, cy, kBox, v3(0.1, 0.2, 0.3));
  CHECK((b.value - v3(0, 0, -1)).norm() <= 1e-9);
  const VectorField k1 = [](const Vec&) { return v3(1, 2, 3); };
  const VectorField k2 = [](const Vec&) { return v3(-1, 0, 4); };
  CHECK(lie_bracket_fd(k1, k2, kBox, v3(0, 0, 0)).value.norm() <= 1e-10);
  // Analytic bracket of X = (y^2, 0, x) and Y = (0, z, 1): [X,Y] = DY X - DX Y = (0, x, 0) - (2yz, 0, 0).
  const VectorField px = [](const Vec& y) { return v3(y(1) * y(1), 0, y(0)); };
  const VectorField py = [](const Vec& y) { return v3(0, y(2), 1); };
  const Vec at = v3(0.3, -0.2, 0.5);
  CHECK((lie_bracket_fd(px, py, kBox, at).value - v3(-2 * at(1) * at(2), at(0), 0)).norm() <= 1e-9);
  FdOptions bad;
  bad.h = 1.0;
  CHECK_THROWS_AS(lie_bracket_fd(px, py, kBox, at, bad), PreconditionError);
}

TEST_CASE("bracket defects") {
  SUBCASE("cat3 eigenplane is involutive") {
    const ModelSystem m = make("cat3");
    const BracketDiagnostics d = bracket_defect(m.splitting, m.space, v3(0.1, 0.2, 0.3));
    CHECK(d.max_defect <= 1e-9);
    CHECK(d.verdict == InvolutivityVerdict::involutive);
    CHECK(d.involutive);
  }
  SUBCASE("contact chart has unit defect at the origin") {
    const ModelSystem m = make("contact_chart");
    const BracketDiagnostics d = bracket_defect(m.splitting, m.space, v3(0, 0, 0));
    CHECK(std::abs(d.max_defect - 1.0) <= 1e-6);
    CHECK(d.verdict == InvolutivityVerdict::non_involutive);
    CHECK(d.max_i == 1);
    CHECK(d.max_j == 2);
  }
  SUBCASE("contact chart at general points matches the oblique projection oracle") {
    // Orthonormal frame Y1 = (1,0,y)/r, Y2 = e2 with r = sqrt(1+y^2): [Y1,Y2] = -d/dy(Y1) and its
    // F-component along E = span{(1,0,y), e2} is the z-coefficient after removing the E part: 1/r.
    const ModelSystem m = make("contact_chart");
    for (const Vec& x : {v3(0.3, 0.4, -0.2), v3(-0.5, -0.6, 0.1)}) {
      const BracketDiagnostics d = bracket_defect(m.splitting, m.space, x);
      CHECK(d.max_defect == doctest::Approx(1.0 / std::sqrt(1 + x(1) * x(1))).epsilon(1e-6));
    }
  }
  SUBCASE("constant plane has zero defect with symmetric, zero-diagonal tables") {
    const BracketDiagnostics d = bracket_defect(constant_plane(), kBox, v3(0.1, 0.1, 0.1));
    CHECK(d.max_defect == 0.0);
    CHECK((d.pair_defects - d.pair_defects.transpose()).norm() == 0.0);
    CHECK(d.pair_defects.diagonal().norm() == 0.0);
  }
  SUBCASE("defect tables are symmetric for a numeric splitting") {
    const ModelSystem m = make("perturbed_auto");
    const BracketDiagnostics d = bracket_defect(m.splitting, m.space, v3(0.4, 0.5, 0.6));
    CHECK((d.pair_defects - d.pair_defects.transpose()).norm() <= 1e-15);
    CHECK(d.pair_defects.diagonal().norm() == 0.0);
    CHECK(d.verdict != InvolutivityVerdict::non_involutive);
  }
}

TEST_CASE("a priori bound for general combinations") {
  SUBCASE("contact chart") {
    const ModelSystem m = make("contact_chart");
    const AprioriRecord r = apriori_bound_check(m.splitting, m.space, v3(0.1, -0.2, 0.3), 100, 5);
    CHECK(r.violations == 0);
    CHECK(r.max_lhs <= r.bound);
    CHECK(r.min_slack >= 0.0);
  }
  SUBCASE("constant plane has both sides zero") {
    const AprioriRecord r = apriori_bound_check(constant_plane(), kBox, v3(0, 0, 0), 20, 6);
    CHECK(r.max_lhs <= 1e-9);
    CHECK(r.max_pair_defect == 0.0);
    CHECK(r.violations == 0);
  }
  CHECK_THROWS_AS(apriori_bound_check(constant_plane(), kBox, v3(0, 0, 0), 0, 6), PreconditionError);
}

TEST_CASE("naturality of the bracket under the dynamics") {
  const ModelSystem m = make("cat3");
  const Vec x = v3(0.1, 0.2, 0.3);
  SUBCASE("linear fields give an exact identity") {
    const VectorField lx = [](const Vec& y) { return v3(y(1), 2 * y(2), -y(0)); };
    const VectorField ly = [](const Vec& y) { return v3(1 + y(2), y(0), 0.5 * y(1)); };
    for (int k : {1, 2, 3}) CHECK(naturality_check(m, lx, ly, x, k).residual <= 1e-8);
  }
  SUBCASE("polynomial fields converge at second order") {
    const VectorField px = [](const Vec& y) { return v3(1 + y(1) * y(1) * y(2), y(0) * y(0) * y(0), y(1)); };
    const VectorField py = [](const Vec& y) { return v3(y(2) * y(2), 1, y(0) * y(1) * y(1)); };
    for (int k : {1, 2, 3}) {
      CHECK(naturality_check(m, px, py, x, k).residual <= 1e-5);
      CHECK(naturality_slope(m, px, py, x, k, {1e-3, 1e-4}) >= 1.8);
    }
  }
  SUBCASE("identity map gives zero residual") {
    const ModelSystem id = make("identity");
    const VectorField px = [](const Vec& y) { return v3(y(1) * y(1), 0, y(0)); };
    const VectorField py = [](const Vec& y) { return v3(0, y(2), 1); };
    CHECK(naturality_check(id, px, py, x, 2).residual <= 1e-12);
  }
  CHECK_THROWS_AS(naturality_check(m, [](const Vec& y) { return y; }, [](const Vec& y) { return y; }, x, 4),
                  PreconditionError);
}

TEST_CASE("Cartan identity for annihilating forms") {
  const ModelSystem m = make("contact_chart");
  SUBCASE("contact form on the contact frame") {
    const CovectorField eta = [](const Vec& y) { return v3(-y(1), 0, 1); };
    const VectorField z = [](const Vec& y) { return v3(1, 0, y(1)); };
    const VectorField w = [](const Vec&) { return v3(0, 1, 0); };
    const CartanRecord r = cartan_check(eta, z, w, m.space, v3(0.2, 0.3, -0.1));
    CHECK(r.eta_bracket == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(std::abs(r.z_eta_w) <= 1e-8);
    CHECK(std::abs(r.w_eta_z) <= 1e-8);
    CHECK(r.d_eta == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.residual <= 1e-8);
    CHECK(annihilation_residual(eta, m.splitting, v3(0.2, 0.3, -0.1)) <= 1e-12);
  }
  SUBCASE("constant data gives zero terms") {
    const CovectorField eta = [](const Vec&) { return v3(0, 0, 1); };
    const VectorField z = [](const Vec&) { return v3(1, 0, 0); };
    const VectorField w = [](const Vec&) { return v3(0, 1, 0); };
    const CartanRecord r = cartan_check(eta, z, w, kBox, v3(0, 0, 0));
    CHECK(std::abs(r.eta_bracket) <= 1e-12);
    CHECK(std::abs(r.d_eta) <= 1e-12);
  }
  SUBCASE("random polynomial data") {
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int seed = 0; seed < 50; ++seed) {
      Eigen::Matrix3d a, b, c;
      for (int i = 0; i < 9; ++i) {
        a(i) = u(rng);
        b(i) = u(rng);
        c(i) = u(rng);
      }
      const CovectorField eta = [a](const Vec& y) { return Vec(a * y.cwiseProduct(y) + Vec::Ones(3)); };
      const VectorField z = [b](const Vec& y) { return Vec(b * y + y(0) * y(1) * Vec::Ones(3)); };
      const VectorField w = [c](const Vec& y) { return Vec(c * y.array().sin().matrix()); };
      const Vec x = v3(u(rng), u(rng), u(rng)) * 0.5;
      CHECK(cartan_check(eta, z, w, kBox, x).residual <= 1e-6);
    }
  }
  SUBCASE("annihilating form of the splitting") {
    const AnnihilatorForm f = annihilating_form(m.splitting, v3(0, 0, 0));
    CHECK(annihilation_residual(f.eta, m.splitting, v3(0.1, 0.2, 0.1)) <= 1e-10);
    CHECK(f.reference.size() == 3);
    CHECK_THROWS_AS(annihilating_form(m.splitting, v3(0, 0, 0), v3(1, 0, 0)), PreconditionError);
  }
}

TEST_CASE("dynamical bound probe") {
  std::vector<long> ks;
  for (long k = 1; k <= 8; ++k) ks.push_back(k);
  SUBCASE("cat3 defects vanish") {
    const BoundProbe p = dynamical_bound_probe(make("cat3"), v3(0.1, 0.2, 0.3), ks);
    REQUIRE(p.entries.size() == ks.size());
    for (const auto& e : p.entries) {
      CHECK(e.defect <= 1e-8);
      CHECK(std::isfinite(e.constant));
    }
    CHECK(p.bounded);
  }
  SUBCASE("identity has constant ratios") {
    const BoundProbe p = dynamical_bound_probe(make("identity"), v3(0.1, 0.2, 0.3), ks);
    for (const auto& e : p.entries) CHECK(std::abs(e.log_ratio) <= 1e-12);
  }
  SUBCASE("table output") {
    const BoundProbe p = dynamical_bound_probe(make("cat3"), v3(0.1, 0.2, 0.3), {1, 2});
    std::ostringstream out;
    write_bound_csv(out, 0, p, true);
    CHECK(out.str().rfind("point_id,k,D_k,log_R_k,K_k\n", 0) == 0);
  }
  CHECK_THROWS_AS(dynamical_bound_probe(make("cat3"), v3(0.1, 0.2, 0.3), {3, 2}), PreconditionError);
}
