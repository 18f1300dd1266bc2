#include "oracles.hpp"
#include "splitlab/lyapunov.hpp"
#include "splitlab/zoo.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
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

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("cat3 spectrum") {
  const double lt = std::log(oracle::tribonacci_root());
  const ModelSystem m = make("cat3");
  const LyapunovEstimate full = lyapunov_spectrum(m, v3(0.1, 0.2, 0.3), 10000, Subbundle::full);
  REQUIRE(full.exponents.size() == 3);
  CHECK(std::is_sorted(full.exponents.begin(), full.exponents.end()));
  CHECK(full.exponents[0] == doctest::Approx(-lt / 2).epsilon(1e-3));
  CHECK(full.exponents[1] == doctest::Approx(-lt / 2).epsilon(1e-3));
  CHECK(full.exponents[2] == doctest::Approx(lt).epsilon(1e-3));
  CHECK(std::abs(sum(full.exponents)) <= 1e-6);
  CHECK(full.checkpoints.size() == full.checkpoint_steps.size());
  const LyapunovEstimate f = lyapunov_spectrum(m, v3(0.1, 0.2, 0.3), 1000, Subbundle::F);
  REQUIRE(f.exponents.size() == 1);
  CHECK(std::abs(f.exponents[0] - lt) <= 1e-6);
  const auto groups = group_exponents(full);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].multiplicity == 2);
  CHECK(groups[1].multiplicity == 1);
}

TEST_CASE("identity exponents vanish") {
  const LyapunovEstimate e = lyapunov_spectrum(make("identity"), v3(0.2, 0.2, 0.2), 200, Subbundle::full);
  for (double v : e.exponents) CHECK(std::abs(v) <= 1e-14);
  CHECK_THROWS_AS(lyapunov_spectrum(make("identity"), v3(0.2, 0.2, 0.2), 50, Subbundle::full), PreconditionError);
}

TEST_CASE("E and F spectra partition the full spectrum and sum to zero") {
  std::mt19937_64 rng(41);
  for (const std::string name : {"cat3", "skew_shear"}) {
    const ModelSystem m = make(name);
    const Vec x = random_point(m.space, rng);
    auto full = lyapunov_spectrum(m, x, 5000, Subbundle::full).exponents;
    auto parts = lyapunov_spectrum(m, x, 5000, Subbundle::E).exponents;
    const auto f = lyapunov_spectrum(m, x, 5000, Subbundle::F).exponents;
    parts.insert(parts.end(), f.begin(), f.end());
    std::sort(parts.begin(), parts.end());
    REQUIRE(parts.size() == full.size());
    for (std::size_t i = 0; i < full.size(); ++i) CHECK_MESSAGE(std::abs(parts[i] - full[i]) <= 1e-3, name);
    CHECK_MESSAGE(std::abs(sum(full)) <= 1e-6, name);
  }
}

TEST_CASE("regularity of cat3 improves with k") {
  const RegularityReport r = regularity_check(make("cat3"), v3(0.1, 0.2, 0.3), {10, 100, 1000});
  REQUIRE(r.deviations.size() == 3);
  std::vector<double> worst;
  for (const auto& row : r.deviations) worst.push_back(*std::max_element(row.begin(), row.end()));
  CHECK(worst[0] > worst[1]);
  CHECK(worst[1] > worst[2]);
  CHECK(worst[2] <= 5e-3);
  CHECK(r.max_deviation_at_largest == doctest::Approx(worst[2]));
  const RegularityReport id = regularity_check(make("identity"), v3(0.1, 0.2, 0.3), {10, 100});
  for (const auto& row : id.deviations)
    for (double v : row) CHECK(std::abs(v) <= 1e-14);
  CHECK_THROWS_AS(regularity_check(make("cat3"), v3(0.1, 0.2, 0.3), {100, 10}), PreconditionError);
}

TEST_CASE("regularity of perturbed_auto stays within the recorded baseline") {
  const RegularityReport r = regularity_check(make("perturbed_auto"), v3(0.1, 0.2, 0.3), {10, 100, 1000});
  CHECK(r.max_deviation_at_largest <= 5e-2);
}

TEST_CASE("singular values are sandwiched by filtration norms for a linear model") {
  // Min-max with the invariant subspaces of cat3: s_max >= ||A^k|F||, s_min <= m(A^k|E), m(A^k|E) <= s_mid <= ||A^k|E||.
  const ModelSystem m = make("cat3");
  const Vec x = v3(0.3, 0.6, 0.9);
  for (long k : {1L, 10L, 100L}) {
    const auto full = log_singular_values_desc(restricted_cocycle(m, x, k, Subbundle::full));
    const auto [e_norm, e_conorm] = norm_conorm(m, x, k, Subbundle::E);
    const auto [f_norm, f_conorm] = norm_conorm(m, x, k, Subbundle::F);
    CHECK(f_norm == doctest::Approx(f_conorm));
    CHECK(full[0] >= f_norm - 1e-9);
    CHECK(full[2] <= e_conorm + 1e-9);
    CHECK(full[1] <= e_norm + 1e-9);
    CHECK(full[1] >= e_conorm - 1e-9);
  }
}

TEST_CASE("Courant-Fischer oracle") {
  SUBCASE("diagonal matrix") {
    Mat d = Mat::Zero(3, 3);
    d.diagonal() << 1, 2, 3;
    const CourantFischerRecord r = courant_fischer_oracle(d, 50, 1);
    REQUIRE(r.singular_values.size() == 3);
    CHECK(r.singular_values[1] == doctest::Approx(2.0));
    CHECK(r.min_lower_slack >= -1e-12);
    CHECK(r.min_upper_slack >= -1e-12);
    CHECK(r.max_equality_error <= 1e-12);
  }
  SUBCASE("identity gives equal bounds") {
    const CourantFischerRecord r = courant_fischer_oracle(Mat::Identity(4, 4), 50, 2);
    CHECK(std::abs(r.min_lower_slack) <= 1e-12);
    CHECK(std::abs(r.min_upper_slack) <= 1e-12);
  }
  SUBCASE("random 4x4 matrices") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
      Mat a(4, 4);
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = g(rng);
      CourantFischerRecord r;
      CHECK_NOTHROW(r = courant_fischer_oracle(a, 200, static_cast<std::uint64_t>(trial)));
      CHECK(r.max_equality_error <= 1e-8);
    }
  }
  CHECK_THROWS_AS(courant_fischer_oracle(Mat::Zero(2, 3), 10, 1), PreconditionError);
}

TEST_CASE("exponent condition margins") {
  const double lt = std::log(oracle::tribonacci_root());
  const ModelSystem m = make("cat3");
  const Vec x = v3(0.1, 0.2, 0.3);
  const MarginTable t = exponent_condition(m, x);
  REQUIRE(t.entries.size() == 1);
  CHECK(t.entries[0].value == doctest::Approx(-2 * lt).epsilon(1e-2));
  CHECK(t.min_margin == doctest::Approx(2 * lt).epsilon(1e-2));
  CHECK(t.entries[0].predicted == Side::forward);
  const auto agree = margin_agreement(t, starstar_diagnostic(m, x, 50));
  REQUIRE(agree.size() == 1);
  CHECK(agree[0]);
  const MarginTable id = exponent_condition(make("identity"), x, 500);
  CHECK(std::abs(id.min_margin) <= 1e-6);
  CHECK(id.entries[0].predicted == Side::neither);
}

TEST_CASE("regularity table output") {
  const RegularityReport r = regularity_check(make("cat3"), v3(0.1, 0.2, 0.3), {10, 100});
  std::ostringstream out;
  write_regularity_csv(out, 0, r, true);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "point_id,k,l,rate,lambda,deviation");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 6);
}
