#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gw/conditioning.hpp"
#include "gw/lattice.hpp"
#include "gw/model.hpp"

namespace gw {

struct SimConfig {
  std::uint64_t seed = 20240611;
  std::size_t replicates = 100'000;
  int horizon = 100;
  /// Populations above this size stop the replicate: it is censored, or, for
  /// a supercritical model deciding T < inf, declared to survive forever
  /// (the error is at most max_i q_i^cap).
  long population_cap = 200;
  /// 0: GW_THREADS, else the hardware concurrency.
  unsigned threads = 0;
};

struct Trajectory {
  std::vector<State> states;  ///< X_0, X_1, ... up to extinction or the horizon
  bool censored = false;
};

/// Independent trajectories; replicate r uses a generator seeded from (seed, r).
std::vector<Trajectory> simulate(const BranchingModel& model, std::span<const int> x0, const SimConfig& cfg);

struct EstimateWithError {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t effective = 0;  ///< replicates satisfying the condition
  std::size_t replicates = 0;
  std::size_t censored = 0;   ///< excluded because the population cap was hit
  std::size_t capped_survivals = 0;  ///< supercritical replicates declared non-extinct at the cap
};

struct McCondition {
  enum class Kind { Always, Set, Progeny };
  Kind kind = Kind::Always;
  std::optional<ConditioningSet> set;  ///< X_{k_j + lag} in S and T < inf
  int lag = 0;
  State progeny;  ///< N = progeny

  static McCondition always() { return {}; }
  static McCondition in_set(ConditioningSet s, int lag) { return {Kind::Set, std::move(s), lag, {}}; }
  static McCondition total_progeny(State n) { return {Kind::Progeny, std::nullopt, 0, std::move(n)}; }
};

/// Rejection estimate of P_{x0}(path | condition). Throws
/// DegenerateConditionError when no replicate satisfies the condition.
EstimateWithError conditioned_estimate(const BranchingModel& model, const PathEvent& ev,
                                       const McCondition& cond, const SimConfig& cfg);

/// Worker count used for cfg (>= 1).
unsigned resolve_threads(const SimConfig& cfg);

}  // namespace gw
