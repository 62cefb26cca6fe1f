#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gw/errors.hpp"
#include "gw/tilt.hpp"

using gw::TiltVector;
using gw::Vector;

TEST_CASE("extinction vectors") {
  CHECK(gw::extinction_vector(fx::model_b()).q == Vector{1.0});
  CHECK(gw::extinction_vector(fx::model_c()).q == Vector{1.0, 1.0});
  const auto a = gw::extinction_vector(fx::model_a());
  CHECK(std::abs(a.q[0] - 1.0 / 3.0) < 1e-13);
  CHECK(a.residual <= 1e-12);
  CHECK(std::abs(gw::extinction_vector(fx::model_d()).q[0] - 0.4) < 1e-13);
}

TEST_CASE("models that cannot die out violate q > 0") {
  const gw::BranchingModel immortal({{{{{1}, 0.5}, {{2}, 0.5}}}});
  CHECK_THROWS_AS(gw::extinction_vector(immortal), gw::ValidationError);
}

TEST_CASE("association") {
  CHECK(gw::associate(fx::model_c(), TiltVector::uniform(2, 1.0)) == fx::model_c());
  const auto a = gw::associate(fx::model_a(), TiltVector::uniform(1, 1.0 / 3.0));
  CHECK(a.law(0).atoms[0].p == doctest::Approx(0.75));
  CHECK(a.law(0).atoms[1].p == doctest::Approx(0.25));
  const auto d = gw::associate(fx::model_d(), TiltVector::uniform(1, std::sqrt(0.4)));
  CHECK(gw::mean_matrix(d)(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(TiltVector(Vector{0.0}), gw::DomainError);
  CHECK_THROWS_AS(gw::associate(fx::model_c(), TiltVector::uniform(1, 0.5)), gw::DomainError);
}

TEST_CASE("critical tilts") {
  CHECK(gw::critical_tilt(fx::model_b())[0] == 1.0);
  CHECK(std::abs(gw::critical_tilt(fx::model_d())[0] - std::sqrt(0.4)) < 1e-9);
  CHECK(std::abs(gw::critical_tilt(fx::model_a())[0] - 1.0 / std::sqrt(3.0)) < 1e-9);
  const auto c = gw::critical_tilt(fx::model_c());
  CHECK(std::abs(gw::tilted_perron_root(fx::model_c(), c) - 1.0) <= 1e-10);
  CHECK(c[0] > 1.0);
}

TEST_CASE("critical tilt fails without a sign change") {
  // Only one offspring at a time: the tilted mean never exceeds 1.
  const gw::BranchingModel m({{{{{0}, 0.5}, {{1}, 0.5}}}});
  CHECK_THROWS_AS(gw::critical_tilt(m), gw::DomainError);
}

TEST_CASE("subcriticality of the q-associated process") {
  const auto a = gw::subcriticality_check(fx::model_a());
  CHECK_FALSE(a.skipped);
  CHECK(a.rho_bar == doctest::Approx(0.5));
  CHECK(gw::subcriticality_check(fx::model_d()).rho_bar < 1.0);
  const auto b = gw::subcriticality_check(fx::model_b());
  CHECK(b.skipped);
  CHECK_FALSE(b.note.empty());
}

TEST_CASE("property: tilt composition, supports, q-tilt dies out") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.3, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 1 + trial % 3;
    const auto m = fx::random_model(rng, d, 3);
    Vector a(d), b(d), ab(d);
    for (std::size_t i = 0; i < d; ++i) {
      a[i] = unif(rng);
      b[i] = unif(rng);
      ab[i] = a[i] * b[i];
    }
    const auto twice = gw::associate(gw::associate(m, TiltVector(a)), TiltVector(b));
    const auto once = gw::associate(m, TiltVector(ab));
    for (std::size_t i = 0; i < d; ++i) {
      REQUIRE(twice.law(i).atoms.size() == m.law(i).atoms.size());
      for (std::size_t k = 0; k < m.law(i).atoms.size(); ++k) {
        CHECK(twice.law(i).atoms[k].k == m.law(i).atoms[k].k);
        CHECK(std::abs(twice.law(i).atoms[k].p - once.law(i).atoms[k].p) <= 1e-14);
      }
    }
    const auto ext = gw::extinction_vector(m);
    CHECK(ext.residual <= 1e-12);
    if (gw::perron(m).rho > 1.0 + 1e-6) {
      const auto tilted = gw::associate(m, TiltVector(ext.q));
      for (double q : gw::extinction_vector(tilted).q) CHECK(q == 1.0);
      CHECK(gw::perron(tilted).rho < 1.0);
    }
  }
}
