#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gw/errors.hpp"
#include "gw/spectral.hpp"

TEST_CASE("symmetric rank-one matrix") {
  const gw::Matrix m{{0.5, 0.5}, {0.5, 0.5}};
  const auto sp = gw::perron(m);
  CHECK(sp.rho == doctest::Approx(1.0));
  CHECK(sp.u[0] == doctest::Approx(0.5));
  CHECK(sp.u[1] == doctest::Approx(0.5));
  CHECK(sp.v[0] == doctest::Approx(1.0));
  CHECK(sp.v[1] == doctest::Approx(1.0));
  for (double g : gw::mean_power_diagnostic(m, 10)) CHECK(g < 1e-12);
}

TEST_CASE("Perron root of MODEL C") {
  const auto sp = gw::perron(fx::model_c());
  CHECK(std::abs(sp.rho - (1.2 + std::sqrt(0.48)) / 2.0) < 1e-12);
  CHECK(gw::mean_power_diagnostic(fx::model_c(), 40).back() < 1e-6);
}

TEST_CASE("scalar Perron data") {
  const auto sp = gw::perron(fx::model_a());
  CHECK(sp.rho == doctest::Approx(1.5));
  CHECK(sp.u[0] == doctest::Approx(1.0));
  CHECK(sp.v[0] == doctest::Approx(1.0));
  for (double g : gw::mean_power_diagnostic(fx::model_a(), 5)) CHECK(g < 1e-14);
}

TEST_CASE("non-primitive input is rejected") {
  CHECK_THROWS_AS(gw::perron(gw::Matrix{{0.0, 1.0}, {1.0, 0.0}}), gw::SpectralError);
  CHECK_THROWS_AS(gw::perron(gw::Matrix{{1.0, -0.1}, {0.2, 0.3}}), gw::SpectralError);
  CHECK_THROWS_AS(gw::perron(gw::Matrix(2, 3, 1.0)), gw::SpectralError);
}

TEST_CASE("second moments") {
  const auto c0 = gw::second_moments(fx::model_c(), gw::State{2, 1}, 0);
  CHECK(c0(0, 0) == doctest::Approx(4.0));
  CHECK(c0(0, 1) == doctest::Approx(2.0));
  CHECK(c0(1, 0) == doctest::Approx(2.0));
  CHECK(c0(1, 1) == doctest::Approx(1.0));
  CHECK(gw::second_moments(fx::model_b(), gw::State{1}, 1)(0, 0) == doctest::Approx(1.6));
}

TEST_CASE("second moments agree with the one-step law") {
  // E[X_1 X_1^T] from x = (1,1) computed directly from the two offspring laws.
  const auto m = fx::model_c();
  const auto c = gw::second_moments(m, gw::State{1, 1}, 1);
  const auto mean = gw::mean_matrix(m);
  const auto cov = gw::covariance_matrices(m);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const double mi = mean(0, i) + mean(1, i), mj = mean(0, j) + mean(1, j);
      CHECK(c(i, j) == doctest::Approx(cov[0](i, j) + cov[1](i, j) + mi * mj));
    }
}

TEST_CASE("subcritical second moments stay bounded after scaling") {
  const auto m = fx::model_c();
  const auto sp = gw::perron(m);
  for (std::size_t j = 0; j < 2; ++j) {
    gw::State e(2, 0);
    e[j] = 1;
    double prev = std::numeric_limits<double>::infinity();
    for (unsigned k = 20; k <= 60; ++k) {
      const double t = gw::second_moments(m, e, k).trace() / std::pow(sp.rho, k);
      CHECK(t <= prev * 1.05);
      prev = t;
    }
  }
}

TEST_CASE("property: eigen-relations, scaling and normalisation") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 1 + trial % 4;
    const auto m = gw::mean_matrix(fx::random_model(rng, d, 3));
    const auto sp = gw::perron(m);
    const auto mu = m.apply(sp.u);
    const auto vm = m.apply_left(sp.v);
    double su = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(std::abs(mu[i] - sp.rho * sp.u[i]) < 1e-10);
      CHECK(std::abs(vm[i] - sp.rho * sp.v[i]) < 1e-10);
      CHECK(sp.u[i] > 0.0);
      CHECK(sp.v[i] > 0.0);
      su += sp.u[i];
      uv += sp.u[i] * sp.v[i];
    }
    CHECK(std::abs(su - 1.0) < 1e-12);
    CHECK(std::abs(uv - 1.0) < 1e-12);

    const auto scaled = gw::perron(m * 2.5);
    CHECK(std::abs(scaled.rho - 2.5 * sp.rho) < 1e-10);
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(std::abs(scaled.u[i] - sp.u[i]) < 1e-8);
      CHECK(std::abs(scaled.v[i] - sp.v[i]) < 1e-8);
    }
  }
}
