#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gw/conditioning.hpp"
#include "gw/errors.hpp"
#include "gw/montecarlo.hpp"
#include "gw/progeny.hpp"

using gw::Box;
using gw::McCondition;
using gw::PathEvent;
using gw::State;

TEST_CASE("deterministic offspring law") {
  const gw::BranchingModel one({{{{{1}, 1.0}}}});
  gw::SimConfig cfg;
  cfg.replicates = 50;
  cfg.horizon = 20;
  for (const auto& t : gw::simulate(one, State{1}, cfg)) {
    CHECK(t.states.size() == 21);
    for (const auto& s : t.states) CHECK(s == State{1});
    CHECK_FALSE(t.censored);
  }
}

TEST_CASE("extinct fraction of a supercritical model") {
  gw::SimConfig cfg;
  cfg.horizon = 200;
  const auto runs = gw::simulate(fx::model_a(), State{1}, cfg);
  std::size_t dead = 0, cens = 0;
  for (const auto& t : runs) {
    if (t.states.back() == State{0}) ++dead;
    if (t.censored) ++cens;
  }
  const double p = static_cast<double>(dead) / runs.size();
  const double se = std::sqrt(p * (1 - p) / runs.size());
  CHECK(std::abs(p - 1.0 / 3.0) < 3 * se + 1e-6);
  CHECK(dead + cens == runs.size());
}

TEST_CASE("sample mean and second moments") {
  gw::SimConfig cfg;
  cfg.horizon = 3;
  cfg.replicates = 100'000;
  const auto runs = gw::simulate(fx::model_c(), State{1, 0}, cfg);
  double s[2] = {0, 0}, s2[2][2] = {{0, 0}, {0, 0}};
  for (const auto& t : runs) {
    const State x = t.states.size() > 3 ? t.states[3] : State{0, 0};
    for (int i = 0; i < 2; ++i) {
      s[i] += x[i];
      for (int j = 0; j < 2; ++j) s2[i][j] += double(x[i]) * x[j];
    }
  }
  const double n = runs.size();
  const auto mm = gw::mean_matrix(fx::model_c());
  const double mean3[2] = {
      mm(0, 0) * (mm(0, 0) * mm(0, 0) + mm(0, 1) * mm(1, 0)) + mm(0, 1) * (mm(1, 0) * mm(0, 0) + mm(1, 1) * mm(1, 0)),
      mm(0, 0) * (mm(0, 0) * mm(0, 1) + mm(0, 1) * mm(1, 1)) + mm(0, 1) * (mm(1, 0) * mm(0, 1) + mm(1, 1) * mm(1, 1))};
  const auto c3 = gw::second_moments(fx::model_c(), State{1, 0}, 3);
  for (int i = 0; i < 2; ++i) {
    const double m = s[i] / n;
    const double var = s2[i][i] / n - m * m;
    CHECK(std::abs(m - mean3[i]) < 3 * std::sqrt(var / n));
    for (int j = 0; j < 2; ++j) {
      // Standard error of the mean of X_i X_j from a fourth-moment bound.
      const double e = s2[i][j] / n;
      double fourth = 0.0;
      for (const auto& t : runs) {
        const State x = t.states.size() > 3 ? t.states[3] : State{0, 0};
        fourth += std::pow(double(x[i]) * x[j] - e, 2);
      }
      CHECK(std::abs(e - c3(i, j)) < 3 * std::sqrt(fourth / n / n));
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  const PathEvent ev{State{1}, {{1, State{2}}}};
  gw::SimConfig cfg;
  cfg.replicates = 20'000;
  cfg.horizon = 60;
  cfg.threads = 1;
  const auto one = gw::conditioned_estimate(fx::model_a(), ev, McCondition::in_set(gw::ConditioningSet::non_extinct(), 5), cfg);
  cfg.threads = 4;
  const auto four = gw::conditioned_estimate(fx::model_a(), ev, McCondition::in_set(gw::ConditioningSet::non_extinct(), 5), cfg);
  CHECK(one.estimate == four.estimate);
  CHECK(one.std_error == four.std_error);
  CHECK(one.effective == four.effective);
  CHECK(one.censored == four.censored);
  cfg.seed += 1;
  const auto other = gw::conditioned_estimate(fx::model_a(), ev, McCondition::in_set(gw::ConditioningSet::non_extinct(), 5), cfg);
  CHECK(other.effective != one.effective);
}

TEST_CASE("unconditioned path frequency") {
  const PathEvent ev{State{1}, {{1, State{2}}}};
  gw::SimConfig cfg;
  cfg.horizon = 2;
  const auto r = gw::conditioned_estimate(fx::model_a(), ev, McCondition::always(), cfg);
  CHECK(r.effective == cfg.replicates);
  CHECK(std::abs(r.estimate - 0.75) < 3 * r.std_error);
}

TEST_CASE("progeny-conditioned estimate") {
  const PathEvent ev{State{1}, {{1, State{2}}}};
  gw::SimConfig cfg;
  cfg.horizon = 10;
  const auto r = gw::conditioned_estimate(fx::model_b(), ev, McCondition::total_progeny(State{7}), cfg);
  const double exact = gw::path_and_progeny(fx::model_b(), ev, State{7}) /
                       gw::progeny_pmf_formula(fx::model_b(), State{1}, State{7});
  CHECK(r.effective > 1000);
  CHECK(std::abs(r.estimate - exact) < 3 * r.std_error);
}

TEST_CASE("set-conditioned estimate") {
  const PathEvent ev{State{1}, {{1, State{2}}}};
  const auto s = gw::ConditioningSet::norm_at_least(2);
  gw::SimConfig cfg;
  cfg.horizon = 20;
  const auto r = gw::conditioned_estimate(fx::model_b(), ev, McCondition::in_set(s, 4), cfg);
  const double exact = gw::conditional_path_law(fx::model_b(), ev, s, 4, Box::cube(1, 60)).probability;
  CHECK(std::abs(r.estimate - exact) < 3 * r.std_error);
}

TEST_CASE("no acceptance") {
  const PathEvent ev{State{2}, {{1, State{2}}}};
  gw::SimConfig cfg;
  cfg.replicates = 100;
  cfg.horizon = 10;
  CHECK_THROWS_AS(gw::conditioned_estimate(fx::model_a(), ev, McCondition::in_set(gw::ConditioningSet::finite({{1}}), 3), cfg),
                  gw::DegenerateConditionError);
}
