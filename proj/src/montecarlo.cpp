#include "gw/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "gw/errors.hpp"
#include "gw/spectral.hpp"
#include "gw/tilt.hpp"

namespace gw {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t rep) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(rep + 0x632be59bd9b4e019ULL)));
}

class Sampler {
 public:
  explicit Sampler(const BranchingModel& model) : model_(model) {
    for (const auto& law : model.laws()) {
      std::vector<double> w;
      for (const Atom& a : law.atoms) w.push_back(a.p);
      dists_.emplace_back(w.begin(), w.end());
    }
  }

  /// Next generation from x; adds children into next.
  void step(const State& x, State& next, std::mt19937_64& rng) {
    std::fill(next.begin(), next.end(), 0);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (int c = 0; c < x[i]; ++c) {
        const Atom& a = model_.law(i).atoms[static_cast<std::size_t>(dists_[i](rng))];
        for (std::size_t j = 0; j < next.size(); ++j) next[j] += a.k[j];
      }
  }

 private:
  const BranchingModel& model_;
  std::vector<std::discrete_distribution<int>> dists_;
};

long total(const State& x) { return std::accumulate(x.begin(), x.end(), 0L); }

// Runs fn(rep) for rep in [0, n) over `threads` workers; fn must only touch
// per-replicate or per-worker state.
template <class Worker>
void parallel_for(std::size_t n, unsigned threads, Worker&& make_worker) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = n * t / threads, hi = n * (t + 1) / threads;
    pool.emplace_back([&make_worker, lo, hi, t] { make_worker(t, lo, hi); });
  }
  for (auto& th : pool) th.join();
}

struct Tally {
  std::size_t accepted = 0, hits = 0, censored = 0, capped = 0;
};

}  // namespace

unsigned resolve_threads(const SimConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("GW_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Trajectory> simulate(const BranchingModel& model, std::span<const int> x0, const SimConfig& cfg) {
  if (cfg.replicates < 1) throw DomainError("replicates must be at least 1");
  if (cfg.horizon < 1) throw DomainError("horizon must be at least 1");
  if (x0.size() != model.d()) throw DomainError("x0 has the wrong dimension");
  std::vector<Trajectory> out(cfg.replicates);
  parallel_for(cfg.replicates, resolve_threads(cfg), [&](unsigned, std::size_t lo, std::size_t hi) {
    Sampler sampler(model);
    State next(model.d());
    for (std::size_t r = lo; r < hi; ++r) {
      auto rng = replicate_rng(cfg.seed, r);
      Trajectory& tr = out[r];
      tr.states.emplace_back(x0.begin(), x0.end());
      for (int t = 0; t < cfg.horizon; ++t) {
        const State& cur = tr.states.back();
        if (total(cur) == 0) break;
        if (total(cur) > cfg.population_cap) {
          tr.censored = true;
          break;
        }
        sampler.step(cur, next, rng);
        tr.states.push_back(next);
      }
    }
  });
  return out;
}

EstimateWithError conditioned_estimate(const BranchingModel& model, const PathEvent& ev,
                                       const McCondition& cond, const SimConfig& cfg) {
  const std::size_t d = model.d();
  ev.check(d);
  if (cfg.replicates < 1) throw DomainError("replicates must be at least 1");
  if (cond.kind == McCondition::Kind::Set && !cond.set) throw DomainError("set condition without a set");
  if (cond.kind == McCondition::Kind::Set && cond.lag < 0) throw DomainError("lag must be nonnegative");
  if (cond.kind == McCondition::Kind::Progeny && cond.progeny.size() != d)
    throw DomainError("progeny target has the wrong dimension");
  const bool supercritical = perron(model).rho > 1.0 + kCriticalityTolerance;
  const int last = ev.last_time();
  const int t_cond = cond.kind == McCondition::Kind::Set ? last + cond.lag : last;

  const unsigned threads = resolve_threads(cfg);
  std::vector<Tally> tallies(threads);
  parallel_for(cfg.replicates, threads, [&](unsigned w, std::size_t lo, std::size_t hi) {
    Sampler sampler(model);
    State cur(d), next(d), n_acc(d);
    Tally& tally = tallies[w];
    for (std::size_t r = lo; r < hi; ++r) {
      auto rng = replicate_rng(cfg.seed, r);
      cur = ev.x0;
      n_acc = ev.x0;
      bool path_ok = true;
      bool censored = false;
      std::size_t mark = 0;
      auto check_marks = [&](int t) {
        while (mark < ev.marks.size() && ev.marks[mark].time == t) {
          if (ev.marks[mark].state != cur) path_ok = false;
          ++mark;
        }
      };
      bool progeny_exceeded = false;
      auto add_progeny = [&] {
        for (std::size_t j = 0; j < d; ++j) {
          n_acc[j] += cur[j];
          if (n_acc[j] > cond.progeny[j]) progeny_exceeded = true;
        }
      };
      check_marks(0);
      const int horizon = cond.kind == McCondition::Kind::Progeny ? std::numeric_limits<int>::max() : t_cond;
      for (int t = 1; t <= horizon; ++t) {
        if (cond.kind == McCondition::Kind::Progeny && (total(cur) == 0 || progeny_exceeded)) break;
        if (total(cur) > cfg.population_cap) {
          censored = true;
          break;
        }
        sampler.step(cur, next, rng);
        std::swap(cur, next);
        if (cond.kind == McCondition::Kind::Progeny) add_progeny();
        check_marks(t);
      }

      bool accepted = false;
      switch (cond.kind) {
        case McCondition::Kind::Always:
          accepted = !censored;
          break;
        case McCondition::Kind::Progeny:
          if (censored && !progeny_exceeded) break;
          // Progeny overshoot or extinction decide the event; marks past
          // extinction read state 0.
          while (mark < ev.marks.size()) {
            if (total(cur) != 0 || ev.marks[mark].state != cur) path_ok = false;
            ++mark;
          }
          censored = false;
          accepted = !progeny_exceeded && total(cur) == 0 && n_acc == cond.progeny;
          break;
        case McCondition::Kind::Set: {
          if (censored) {
            // Above the cap a supercritical process survives with
            // probability >= 1 - q^cap, so the T < inf event fails.
            if (supercritical) {
              censored = false;
              ++tally.capped;
            }
            break;
          }
          if (!cond.set->contains(cur)) break;
          if (!supercritical) {
            accepted = true;
            break;
          }
          bool extinct = total(cur) == 0;
          while (!extinct) {
            if (total(cur) > cfg.population_cap) {
              ++tally.capped;
              break;
            }
            sampler.step(cur, next, rng);
            std::swap(cur, next);
            extinct = total(cur) == 0;
          }
          accepted = extinct;
          break;
        }
      }
      if (censored) {
        ++tally.censored;
        continue;
      }
      if (!accepted) continue;
      ++tally.accepted;
      if (path_ok) ++tally.hits;
    }
  });

  Tally sum;
  for (const Tally& t : tallies) {
    sum.accepted += t.accepted;
    sum.hits += t.hits;
    sum.censored += t.censored;
    sum.capped += t.capped;
  }
  if (sum.accepted == 0)
    throw DegenerateConditionError(fmt::format(
        "no replicate out of {} satisfied the condition; increase the replicate count or shorten the lag",
        cfg.replicates));
  EstimateWithError out;
  out.replicates = cfg.replicates;
  out.effective = sum.accepted;
  out.censored = sum.censored;
  out.capped_survivals = sum.capped;
  const double m = static_cast<double>(sum.accepted);
  out.estimate = static_cast<double>(sum.hits) / m;
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / m);
  return out;
}

}  // namespace gw
