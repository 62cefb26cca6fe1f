#include "gw/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gw/errors.hpp"

namespace gw {
namespace {

bool is_zero(std::span<const int> x) {
  return std::all_of(x.begin(), x.end(), [](int c) { return c == 0; });
}

int norm1(std::span<const int> x) { return std::accumulate(x.begin(), x.end(), 0); }

double dot_state(std::span<const int> x, const Vector& u) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * u[j];
  return s;
}

State unit(std::size_t d, std::size_t i = 0) {
  State e(d, 0);
  e[i] = 1;
  return e;
}

// Every y in N^d with ||y||_1 = m.
void compositions(std::size_t d, int m, State& cur, std::size_t j, std::vector<State>& out) {
  if (j + 1 == d) {
    cur[j] = m;
    out.push_back(cur);
    return;
  }
  for (int c = m; c >= 0; --c) {
    cur[j] = c;
    compositions(d, m - c, cur, j + 1, out);
  }
}

std::vector<State> norm_shell(std::size_t d, int m) {
  std::vector<State> out;
  State cur(d, 0);
  compositions(d, m, cur, 0, out);
  return out;
}

// Model whose law given T < inf is the original one: the q-associated
// process when q != 1, the model itself otherwise.
struct Associated {
  BranchingModel model;
  Vector q;
  bool tilted = false;
};

Associated q_associated(const BranchingModel& model) {
  ExtinctionData ext = extinction_vector(model);
  const bool all_one = std::all_of(ext.q.begin(), ext.q.end(), [](double v) { return v == 1.0; });
  if (all_one) return {model, ext.q, false};
  return {associate(model, TiltVector(ext.q)), ext.q, true};
}

// Forward n steps with the state 0 kept; overflow collects escaped mass.
LatticeDistribution evolve(const TransitionKernel& kernel, std::span<const int> x, int n) {
  return n_step(kernel, x, n, std::numeric_limits<double>::infinity());
}

void require_in_box(const Box& box, std::span<const int> x, const char* what) {
  if (x.size() != box.dim()) throw DomainError(fmt::format("{} has the wrong dimension", what));
  if (!box.contains(x))
    throw DomainError(fmt::format("{} ({}) lies outside the box (caps {})", what, fmt::join(x, ","),
                                  fmt::join(box.caps(), ",")));
}

void require_leak(double overflow, double leak_tol, const Box& box) {
  if (overflow > leak_tol)
    throw TruncationError(fmt::format("{:.3g} of the mass left the box (caps {}); enlarge the box",
                                      overflow, fmt::join(box.caps(), ",")));
}

double tv_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

constexpr int kLeakCheckStep = 200;

void require_noncritical(double rho, const char* op) {
  if (std::abs(rho - 1.0) <= kCriticalityTolerance)
    throw DomainError(fmt::format(
        "{}: the model is critical (rho = {:.17g}); the limit is degenerate there", op, rho));
}

}  // namespace

// ---------------------------------------------------------------- sets

ConditioningSet ConditioningSet::finite(std::vector<State> states) {
  if (states.empty()) throw ValidationError("finite conditioning set is empty");
  std::set<State> uniq;
  for (const State& s : states) {
    if (s.empty()) throw ValidationError("conditioning state has no coordinates");
    if (std::any_of(s.begin(), s.end(), [](int c) { return c < 0; }))
      throw ValidationError("conditioning states must be nonnegative");
    if (is_zero(s)) throw ValidationError("the zero state cannot belong to a conditioning set");
    if (s.size() != states.front().size()) throw ValidationError("conditioning states differ in dimension");
    uniq.insert(s);
  }
  return {Kind::Finite, std::vector<State>(uniq.begin(), uniq.end()), 0};
}

ConditioningSet ConditioningSet::cofinite(std::vector<State> complement) {
  std::set<State> uniq;
  for (const State& s : complement) {
    if (std::any_of(s.begin(), s.end(), [](int c) { return c < 0; }))
      throw ValidationError("conditioning states must be nonnegative");
    if (!complement.empty() && s.size() != complement.front().size())
      throw ValidationError("conditioning states differ in dimension");
    if (!is_zero(s)) uniq.insert(s);  // 0 is excluded from S anyway
  }
  return {Kind::Cofinite, std::vector<State>(uniq.begin(), uniq.end()), 0};
}

ConditioningSet ConditioningSet::norm_equals(int m) {
  if (m <= 0) throw ValidationError("norm level must be positive");
  return {Kind::NormEquals, {}, m};
}

ConditioningSet ConditioningSet::norm_at_least(int m) {
  if (m <= 0) throw ValidationError("norm level must be positive");
  return {Kind::NormAtLeast, {}, m};
}

ConditioningSet ConditioningSet::non_extinct() { return {Kind::NonExtinct, {}, 0}; }

bool ConditioningSet::contains(std::span<const int> x) const {
  if (is_zero(x)) return false;
  switch (kind_) {
    case Kind::Finite:
      return std::find_if(listed_.begin(), listed_.end(), [&](const State& s) {
               return std::equal(s.begin(), s.end(), x.begin(), x.end());
             }) != listed_.end();
    case Kind::Cofinite:
      return std::find_if(listed_.begin(), listed_.end(), [&](const State& s) {
               return std::equal(s.begin(), s.end(), x.begin(), x.end());
             }) == listed_.end();
    case Kind::NormEquals:
      return norm1(x) == level_;
    case Kind::NormAtLeast:
      return norm1(x) >= level_;
    case Kind::NonExtinct:
      return true;
  }
  return false;
}

std::vector<State> ConditioningSet::finite_part(std::size_t d) const {
  switch (kind_) {
    case Kind::Finite:
    case Kind::Cofinite:
      for (const State& s : listed_)
        if (s.size() != d) throw DomainError("conditioning state has the wrong dimension");
      return listed_;
    case Kind::NormEquals:
      return norm_shell(d, level_);
    case Kind::NormAtLeast: {
      std::vector<State> out;
      for (int m = 1; m < level_; ++m) {
        auto shell = norm_shell(d, m);
        out.insert(out.end(), shell.begin(), shell.end());
      }
      return out;
    }
    case Kind::NonExtinct:
      return {};
  }
  return {};
}

std::string ConditioningSet::describe() const {
  auto list = [&] {
    std::vector<std::string> parts;
    for (const State& s : listed_) parts.push_back(fmt::format("({})", fmt::join(s, ",")));
    return fmt::format("[{}]", fmt::join(parts, ","));
  };
  switch (kind_) {
    case Kind::Finite:
      return "finite:" + list();
    case Kind::Cofinite:
      return "cofinite:" + list();
    case Kind::NormEquals:
      return fmt::format("norm={}", level_);
    case Kind::NormAtLeast:
      return fmt::format("norm>={}", level_);
    case Kind::NonExtinct:
      return "nonextinct";
  }
  return {};
}

// ---------------------------------------------------------------- Q kernel

double QKernel::at(std::span<const int> x, std::span<const int> y) const {
  if (!box.contains(x) || !box.contains(y)) return 0.0;
  const auto to = static_cast<std::uint32_t>(box.index(y));
  for (const auto& e : row(box.index(x)))
    if (e.to == to) return e.p;
  return 0.0;
}

void QKernel::forward(std::span<const double> in, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t from = 0; from < in.size(); ++from) {
    if (in[from] == 0.0) continue;
    for (const auto& e : row(from)) out[e.to] += in[from] * e.p;
  }
}

QKernel q_kernel(const BranchingModel& model, const TiltVector& a, const Box& box, double row_tolerance) {
  QKernel q{associate(model, a), 0.0, {}, box, {}, {}, {}, {}};
  const SpectralData sp = perron(q.base);
  q.rho_bar = sp.rho;
  q.u_bar = sp.u;
  const TransitionKernel kernel(q.base, box);
  const std::size_t n = box.size();
  const auto coords = box.coordinates();
  const std::size_t d = box.dim();
  auto weight = [&](std::size_t idx) {
    return dot_state(std::span<const int>(coords.data() + idx * d, d), q.u_bar);
  };
  q.offsets.assign(n + 1, 0);
  q.row_sum.assign(n, 0.0);
  q.raw_overflow.assign(n, 0.0);
  for (std::size_t from = 0; from < n; ++from) {
    if (from != 0) {
      const double wx = weight(from);
      q.raw_overflow[from] = kernel.row_overflow(from);
      for (const auto& e : kernel.row(from)) {
        if (e.to == 0) continue;
        const double v = e.p * weight(e.to) / (q.rho_bar * wx);
        q.entries.push_back({e.to, v});
        q.row_sum[from] += v;
      }
      const double dev = q.row_sum[from] - 1.0;
      const bool exact_row = q.raw_overflow[from] == 0.0;
      if ((exact_row && std::abs(dev) > row_tolerance) || (!exact_row && dev > row_tolerance))
        throw TruncationError(fmt::format("Q-kernel row ({}) sums to {:.17g}",
                                          fmt::join(box.state(from), ","), q.row_sum[from]));
    }
    q.offsets[from + 1] = q.entries.size();
  }
  return q;
}

// ---------------------------------------------------------------- Yaglom

YaglomData yaglom(const BranchingModel& model, const Box& box, const YaglomOptions& opts) {
  const std::size_t d = model.d();
  const SpectralData sp = perron(model);
  if (!(sp.rho < 1.0 - kCriticalityTolerance))
    throw DomainError(fmt::format("Yaglom limit needs a subcritical model (rho = {:.17g})", sp.rho));
  const State x0 = opts.x0.value_or(unit(d));
  require_in_box(box, x0, "initial state");
  if (is_zero(x0)) throw DomainError("initial state must be nonzero");

  const TransitionKernel kernel(model, box);
  const std::size_t n = box.size();
  YaglomData out;
  out.rho = sp.rho;
  out.u = sp.u;
  out.v = sp.v;
  const double x0u = dot_state(x0, sp.u);

  // Route (i): conditional laws from x0. w holds P(X_k = .) on nonzero states
  // rescaled to unit mass; log_scale tracks the discarded normaliser.
  std::vector<double> w(n, 0.0), next(n, 0.0), nu(n, 0.0), prev(n, 0.0);
  w[box.index(x0)] = 1.0;
  double log_scale = 0.0;
  Vector s(d, 1.0);
  double gamma = 0.0;
  bool nu_done = false, gamma_done = false;
  int k = 0;
  for (k = 1; k <= opts.max_iterations && !(nu_done && gamma_done); ++k) {
    const double escaped = kernel.forward(w, next);
    // Once transients have died out, a per-step leak above the tolerance
    // keeps the conditional law drifting forever.
    if (k >= kLeakCheckStep && !nu_done && escaped > 10.0 * opts.tv_tolerance)
      throw TruncationError(fmt::format(
          "the box (caps {}) loses {:.3g} of the surviving mass per step; the Yaglom iteration cannot "
          "reach its tolerance, enlarge the box",
          fmt::join(box.caps(), ","), escaped));
    next[0] = 0.0;
    const double norm = std::accumulate(next.begin(), next.end(), 0.0);
    if (!(norm > 0.0)) throw TruncationError("all surviving mass left the box");
    for (double& m : next) m /= norm;
    log_scale += std::log(norm);
    w.swap(next);

    s = model.pgf_complement(s);
    const double surv = survival_probability(s, x0);
    if (!(surv > 0.0)) throw ConvergenceError("survival probability underflowed before convergence");
    const double log_surv = std::log(surv);

    const double factor = std::exp(log_scale - log_surv);
    if (1.0 - factor > 0.5)
      throw TruncationError(fmt::format("over half of the surviving mass left the box (caps {}) within {} steps",
                                        fmt::join(box.caps(), ","), k));
    for (std::size_t i = 0; i < n; ++i) nu[i] = w[i] * factor;
    if (!nu_done) {
      nu_done = k > 1 && tv_distance(nu, prev) < opts.tv_tolerance;
      prev = nu;
    }
    const double g = std::exp(log_surv - k * std::log(sp.rho)) / x0u;
    gamma_done = k > 1 && std::abs(g - gamma) <= 1e-13 * g;
    gamma = g;
  }
  if (!(nu_done && gamma_done)) throw ConvergenceError("Yaglom iteration did not stabilise");
  out.iterations = k - 1;
  out.gamma = gamma;
  out.nu = {box, prev, 0.0};
  out.nu.overflow = std::max(0.0, 1.0 - out.nu.retained());

  // Route (ii): left Perron vector of the kernel killed at 0, from a uniform start.
  std::vector<double> pi(n, n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0);
  pi[0] = 0.0;
  bool eig_done = false;
  for (int it = 0; it < opts.max_iterations && !eig_done; ++it) {
    kernel.forward(pi, next);
    next[0] = 0.0;
    const double lambda = std::accumulate(next.begin(), next.end(), 0.0);
    if (!(lambda > 0.0)) throw TruncationError("killed kernel has no mass left on the box");
    for (double& m : next) m /= lambda;
    eig_done = tv_distance(next, pi) < opts.tv_tolerance;
    out.eigen_value = lambda;
    pi.swap(next);
  }
  if (!eig_done) throw ConvergenceError("killed-kernel power iteration did not converge");
  out.nu_eigen = {box, pi, 0.0};
  out.route_gap_tv = tv_distance(out.nu.mass, pi);
  if (out.route_gap_tv > opts.route_tolerance)
    throw TruncationError(fmt::format(
        "Yaglom routes disagree by {:.3g} in total variation; the box is too small", out.route_gap_tv));

  const auto coords = box.coordinates();
  auto g_at = [&](const Vector& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (out.nu.mass[i] != 0.0)
        acc += out.nu.mass[i] * monomial(r, std::span<const int>(coords.data() + i * d, d));
    return acc;
  };
  out.g_grad_at_1.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    Vector up(d, 1.0), dn(d, 1.0);
    up[i] += opts.fd_step;
    dn[i] -= opts.fd_step;
    out.g_grad_at_1[i] = (g_at(up) - g_at(dn)) / (2.0 * opts.fd_step);
  }

  out.mu_bar = {box, std::vector<double>(n, 0.0), 0.0};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.mu_bar.mass[i] = dot_state(std::span<const int>(coords.data() + i * d, d), sp.u) * out.nu.mass[i];
    total += out.mu_bar.mass[i];
  }
  for (double& m : out.mu_bar.mass) m /= total;

  out.pi.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.pi[i] = out.nu.mass[i] / (1.0 - sp.rho);
  return out;
}

LatticeDistribution yaglom_type(const BranchingModel& model, int n, const Box& box, const YaglomOptions& opts) {
  if (n < 0) throw DomainError("lag n must be nonnegative");
  const std::size_t d = model.d();
  require_noncritical(perron(model).rho, "Yaglom-type limit");
  const Associated assoc = q_associated(model);
  const BranchingModel& m = assoc.model;
  const State x0 = opts.x0.value_or(unit(d));
  require_in_box(box, x0, "initial state");
  if (is_zero(x0)) throw DomainError("initial state must be nonzero");

  const TransitionKernel kernel(m, box);
  const std::size_t size = box.size();
  const auto coords = box.coordinates();
  const Vector sn = survival_iterate(m, static_cast<unsigned>(n));
  std::vector<double> h(size, 0.0);
  for (std::size_t i = 1; i < size; ++i)
    h[i] = survival_probability(sn, std::span<const int>(coords.data() + i * d, d));

  std::vector<double> w(size, 0.0), next(size, 0.0), nu(size, 0.0), prev(size, 0.0);
  w[box.index(x0)] = 1.0;
  double log_scale = 0.0;
  Vector s = sn;  // 1 - f_{k+n}(0)
  int calm = 0;
  for (int k = 0; k <= opts.max_iterations; ++k) {
    if (k > 0) {
      const double escaped = kernel.forward(w, next);
      if (k >= kLeakCheckStep && calm == 0 && escaped > 10.0 * opts.tv_tolerance)
        throw TruncationError(fmt::format(
            "the box (caps {}) loses {:.3g} of the surviving mass per step; enlarge the box",
            fmt::join(box.caps(), ","), escaped));
      next[0] = 0.0;
      const double norm = std::accumulate(next.begin(), next.end(), 0.0);
      if (!(norm > 0.0)) throw TruncationError("all surviving mass left the box");
      for (double& v : next) v /= norm;
      log_scale += std::log(norm);
      w.swap(next);
      s = m.pgf_complement(s);
    }
    const double surv = survival_probability(s, x0);
    if (!(surv > 0.0)) throw ConvergenceError("survival probability underflowed before convergence");
    const double factor = std::exp(log_scale - std::log(surv));
    for (std::size_t i = 0; i < size; ++i) nu[i] = w[i] * h[i] * factor;
    const double deficit = 1.0 - std::accumulate(nu.begin(), nu.end(), 0.0);
    if (deficit > 0.5)
      throw TruncationError(fmt::format("over half of the conditioned mass left the box (caps {}) within {} steps",
                                        fmt::join(box.caps(), ","), k));
    if (k > 0 && tv_distance(nu, prev) < opts.tv_tolerance) {
      if (++calm >= 5) {
        if (deficit > opts.route_tolerance)
          throw TruncationError(fmt::format("{:.3g} of the limit law lies outside the box; enlarge it", deficit));
        LatticeDistribution out{box, nu, 0.0};
        out.overflow = std::max(0.0, deficit);
        return out;
      }
    } else {
      calm = 0;
    }
    prev = nu;
  }
  throw ConvergenceError("Yaglom-type iteration did not stabilise");
}

// ---------------------------------------------------------------- conditional laws

Accessibility accessibility(const TransitionKernel& kernel, const ConditioningSet& s) {
  const Box& box = kernel.box();
  const std::size_t n = box.size();
  const std::size_t d = box.dim();
  const auto coords = box.coordinates();
  std::vector<char> reach(n, 0);
  for (std::size_t i = 1; i < n; ++i)
    reach[i] = s.contains(std::span<const int>(coords.data() + i * d, d)) ? 1 : 0;
  const int limit = 2 * std::accumulate(box.caps().begin(), box.caps().end(), 0) + 2;
  Accessibility out;
  for (out.steps = 0; out.steps < limit; ++out.steps) {
    bool changed = false;
    for (std::size_t i = 1; i < n; ++i) {
      if (reach[i]) continue;
      for (const auto& e : kernel.row(i))
        if (reach[e.to]) {
          reach[i] = 1;
          changed = true;
          break;
        }
    }
    if (!changed) break;
  }
  for (std::size_t i = 1; i < n; ++i)
    if (!reach[i]) ++out.unreachable;
  out.accessible = out.unreachable == 0;
  return out;
}

double set_hitting_probability(const BranchingModel& model, const TransitionKernel& kernel,
                               std::span<const int> x, int n, const ConditioningSet& s,
                               double& overflow) {
  overflow = 0.0;
  if (is_zero(x)) return 0.0;
  const Box& box = kernel.box();
  const std::size_t d = box.dim();
  const std::vector<State> part = s.finite_part(d);
  for (const State& y : part) require_in_box(box, y, s.is_finite() ? "conditioning state" : "complement state");
  const LatticeDistribution dist = evolve(kernel, x, n);
  overflow = dist.overflow;
  double listed = 0.0;
  for (const State& y : part) listed += dist.at(y);
  if (s.is_finite()) return listed;
  const double surv = survival_probability(survival_iterate(model, static_cast<unsigned>(n)), x);
  return std::max(0.0, surv - listed);
}

ConditionalPathLaw conditional_path_law(const BranchingModel& model, const PathEvent& ev,
                                        const ConditioningSet& s, int n, const Box& box,
                                        double leak_tol) {
  const std::size_t d = model.d();
  ev.check(d);
  if (n < 0) throw DomainError("lag n must be nonnegative");
  if (box.dim() != d) throw DomainError("box dimension does not match the model");
  require_in_box(box, ev.x0, "initial state");
  for (const auto& mark : ev.marks) require_in_box(box, mark.state, "path state");

  ConditionalPathLaw out;
  const double rho = perron(model).rho;
  const Associated assoc = q_associated(model);
  const TransitionKernel kernel(assoc.model, box);

  if (rho > 1.0 + kCriticalityTolerance) {
    out.hypothesis = "supercritical: T < inf priced through the q-associated process";
  } else if (rho < 1.0 - kCriticalityTolerance) {
    out.hypothesis = "subcritical";
  } else if (!s.is_finite()) {
    out.hypothesis = "critical, cofinite S";
  } else {
    const Accessibility acc = accessibility(kernel, s);
    if (acc.accessible) {
      out.hypothesis = "critical, finite accessible S";
    } else {
      out.hypothesis = "none";
      out.warnings.push_back(fmt::format(
          "S is not accessible from {} nonzero box states; the limit may fail", acc.unreachable));
    }
  }

  const TransitionKernel& k = kernel;
  // Path under the associated process.
  {
    double prob = 1.0;
    State cur = ev.x0;
    int t = 0;
    for (const auto& mark : ev.marks) {
      const int dt = mark.time - t;
      if (dt == 0) {
        if (mark.state != cur) prob = 0.0;
      } else {
        const LatticeDistribution dist = evolve(k, cur, dt);
        out.overflow = std::max(out.overflow, dist.overflow);
        prob *= dist.at(mark.state);
      }
      if (prob == 0.0) break;
      cur = mark.state;
      t = mark.time;
    }
    out.path_probability = prob;
  }

  double ov = 0.0;
  out.denominator = set_hitting_probability(assoc.model, k, ev.x0, ev.last_time() + n, s, ov);
  out.overflow = std::max(out.overflow, ov);
  out.numerator = set_hitting_probability(assoc.model, k, ev.last_state(), n, s, ov);
  out.overflow = std::max(out.overflow, ov);
  require_leak(out.overflow, leak_tol, box);

  if (!(out.denominator > 0.0))
    throw DegenerateConditionError(fmt::format(
        "P(X_{} in {}) is zero from ({}); the conditioning event is null", ev.last_time() + n,
        s.describe(), fmt::join(ev.x0, ",")));
  out.probability = out.path_probability * out.numerator / out.denominator;
  return out;
}

double q_process_rhs(const BranchingModel& model, const TiltVector& a, const PathEvent& ev,
                     const Box& box, double leak_tol) {
  ev.check(model.d());
  const BranchingModel tilted = associate(model, a);
  const SpectralData sp = perron(tilted);
  const double pbar = path_probability(TransitionKernel(tilted, box), ev, leak_tol);
  return std::pow(sp.rho, -ev.last_time()) * dot_state(ev.last_state(), sp.u) /
         dot_state(ev.x0, sp.u) * pbar;
}

// ---------------------------------------------------------------- double limit

std::vector<ScheduleEntry> default_double_limit_schedule(int m_max, const std::vector<double>& ts) {
  std::vector<ScheduleEntry> out;
  for (int m = 1; m <= m_max; ++m) out.push_back({"diagonal", m, m, m});
  for (double t : ts) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("schedule fraction t must lie in (0,1)");
    const std::string label = fmt::format("t={}", t);
    for (int m = 1; m <= m_max; ++m) {
      const int k = static_cast<int>(std::floor(m * t));
      out.push_back({label, m, k, m - k});
    }
  }
  return out;
}

std::vector<DoubleLimitRow> double_limit_scan(const BranchingModel& model, std::span<const int> z,
                                              std::span<const ScheduleEntry> schedule, const Box& box,
                                              std::optional<State> x0_opt) {
  const std::size_t d = model.d();
  require_noncritical(perron(model).rho, "double limit");
  require_in_box(box, z, "target state");
  const State x0 = x0_opt.value_or(unit(d));
  require_in_box(box, x0, "initial state");
  if (is_zero(x0)) throw DomainError("initial state must be nonzero");

  const Associated assoc = q_associated(model);
  const BranchingModel& m = assoc.model;
  YaglomOptions yopts;
  yopts.x0 = x0;
  const YaglomData yd = yaglom(m, box, yopts);
  const double mu_z = yd.mu_bar.at(z);

  int k_max = 0, total_max = 0;
  for (const auto& e : schedule) {
    if (e.k < 0 || e.n < 0) throw DomainError("schedule entries must be nonnegative");
    k_max = std::max(k_max, e.k);
    total_max = std::max(total_max, e.k + e.n);
  }
  const TransitionKernel kernel(m, box);
  const std::size_t size = box.size();
  const auto coords = box.coordinates();

  std::vector<std::vector<double>> laws;  // Pbar_{x0}(X_k = .)
  laws.reserve(static_cast<std::size_t>(k_max) + 1);
  LatticeDistribution dist = LatticeDistribution::point(box, x0);
  laws.push_back(dist.mass);
  std::vector<double> next(size);
  for (int k = 1; k <= k_max; ++k) {
    dist.overflow += kernel.forward(dist.mass, next);
    dist.mass.swap(next);
    laws.push_back(dist.mass);
  }
  require_leak(dist.overflow, kDefaultLeakTolerance, box);

  std::vector<Vector> s(static_cast<std::size_t>(total_max) + 1);  // 1 - f_t(0)
  s[0] = Vector(d, 1.0);
  for (int t = 1; t <= total_max; ++t) s[t] = m.pgf_complement(s[t - 1]);

  std::vector<DoubleLimitRow> rows;
  std::vector<double> law(size);
  for (const auto& e : schedule) {
    const double surv = survival_probability(s[e.k + e.n], x0);
    if (!(surv > 0.0)) throw DegenerateConditionError("survival probability vanished");
    const auto& pk = laws[e.k];
    for (std::size_t i = 0; i < size; ++i)
      law[i] = i == 0 ? 0.0
                      : pk[i] * survival_probability(s[e.n], std::span<const int>(coords.data() + i * d, d)) /
                            surv;
    DoubleLimitRow row;
    row.schedule = e.schedule;
    row.m = e.m;
    row.k = e.k;
    row.n = e.n;
    row.probability = law[box.index(z)];
    row.mu_bar = mu_z;
    row.gap = std::abs(row.probability - mu_z);
    row.tv = tv_distance(law, yd.mu_bar.mass);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------- ratio diagnostics

NakaokaTable nakaoka_diagnostics(const BranchingModel& model, int n_max, const Box& box,
                                 const NakaokaOptions& opts) {
  const std::size_t d = model.d();
  if (n_max < 0) throw DomainError("n_max must be nonnegative");
  const SpectralData sp = perron(model);
  if (sp.rho > 1.0 + kCriticalityTolerance)
    throw DomainError(fmt::format("ratio diagnostics need rho <= 1 (rho = {:.17g})", sp.rho));
  const State x = opts.x.value_or(unit(d));
  require_in_box(box, x, "initial state");
  if (is_zero(x)) throw DomainError("initial state must be nonzero");
  const Vector b = opts.b.value_or(Vector(d, 0.0));
  const Vector c = opts.c.value_or(Vector(d, 1.0));
  if (b.size() != d || c.size() != d) throw DomainError("b and c must have d entries");
  for (std::size_t i = 0; i < d; ++i)
    if (!(b[i] >= 0.0 && b[i] <= 1.0 && c[i] >= 0.0 && c[i] <= 1.0))
      throw DomainError("b and c must lie in [0,1]^d");

  NakaokaTable table;
  table.rho = sp.rho;
  table.u = sp.u;
  table.v = sp.v;
  table.x_dot_u = dot_state(x, sp.u);
  table.report_states = opts.report_states.empty() ? std::vector<State>{unit(d)} : opts.report_states;
  for (const State& y : table.report_states) require_in_box(box, y, "reported state");

  std::optional<YaglomData> yd;
  if (sp.rho < 1.0 - kCriticalityTolerance) {
    try {
      yd = yaglom(model, box);
      for (const State& y : table.report_states) table.pi_limit.push_back(yd->nu.at(y) / (1.0 - sp.rho));
    } catch (const TruncationError& e) {
      table.note = fmt::format("pi comparison skipped: {}", e.what());
    }
  } else {
    table.note = "critical model: no pi comparison";
  }

  auto vdot = [&](const Vector& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += sp.v[i] * a[i];
    return acc;
  };
  auto diff = [&](const Vector& a, const Vector& b2) {
    Vector r(d);
    for (std::size_t i = 0; i < d; ++i) r[i] = a[i] - b2[i];
    return r;
  };

  // s_t = 1 - f_t(0); tb, tc = 1 - f_n(b), 1 - f_n(c).
  Vector s0(d, 1.0);
  Vector s1 = model.pgf_complement(s0);
  Vector s2 = model.pgf_complement(s1);
  Vector tb(d), tc(d);
  for (std::size_t i = 0; i < d; ++i) {
    tb[i] = 1.0 - b[i];
    tc[i] = 1.0 - c[i];
  }
  const TransitionKernel kernel(model, box);
  LatticeDistribution dist = LatticeDistribution::point(box, x);
  std::vector<double> next(box.size());

  for (int n = 0; n <= n_max; ++n) {
    NakaokaRow row;
    row.n = n;
    row.nak1 = vdot(diff(s1, s2)) / vdot(diff(s0, s1));
    row.nak2 = (survival_probability(tb, x) - survival_probability(tc, x)) / vdot(diff(tb, tc));
    const double a0 = survival_probability(s0, x);
    const double a1 = survival_probability(s1, x);
    row.nak3 = a1 / a0;
    const double inc = a0 - a1;
    for (const State& y : table.report_states) row.pi_at.push_back(dist.at(y) / inc);
    if (!yd) row.pi_gap = std::numeric_limits<double>::quiet_NaN();
    if (yd)
      for (std::size_t i = 1; i < box.size(); ++i)
        row.pi_gap = std::max(row.pi_gap, std::abs(dist.mass[i] / inc - yd->pi[i]));
    row.overflow = dist.overflow;
    table.rows.push_back(std::move(row));

    s0 = s1;
    s1 = s2;
    s2 = model.pgf_complement(s1);
    tb = model.pgf_complement(tb);
    tc = model.pgf_complement(tc);
    dist.overflow += kernel.forward(dist.mass, next);
    dist.mass.swap(next);
  }
  return table;
}

}  // namespace gw
