#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gw/lattice.hpp"
#include "gw/model.hpp"
#include "gw/spectral.hpp"
#include "gw/tilt.hpp"

namespace gw {

/// A subset S of N^d \ {0} on which the process is conditioned to sit at a
/// distant time.
class ConditioningSet {
 public:
  enum class Kind { Finite, Cofinite, NormEquals, NormAtLeast, NonExtinct };

  static ConditioningSet finite(std::vector<State> states);
  /// S = N^d \ ({0} u complement).
  static ConditioningSet cofinite(std::vector<State> complement);
  static ConditioningSet norm_equals(int m);
  static ConditioningSet norm_at_least(int m);
  static ConditioningSet non_extinct();

  Kind kind() const { return kind_; }
  int level() const { return level_; }
  const std::vector<State>& listed() const { return listed_; }

  bool contains(std::span<const int> x) const;
  /// True when S itself is finite (Finite, NormEquals).
  bool is_finite() const { return kind_ == Kind::Finite || kind_ == Kind::NormEquals; }
  /// For finite S: S. Otherwise: S^c = N^d \ ({0} u S). Always finite.
  std::vector<State> finite_part(std::size_t d) const;
  std::string describe() const;

 private:
  ConditioningSet(Kind kind, std::vector<State> listed, int level)
      : kind_(kind), listed_(std::move(listed)), level_(level) {}
  Kind kind_;
  std::vector<State> listed_;
  int level_ = 0;
};

/// h-transformed kernel Q_1(x,y) = (y.u_bar)/(rho_bar x.u_bar) Pbar_1(x,y)
/// of the process associated with a, on box \ {0}.
struct QKernel {
  BranchingModel base;  ///< the associated (tilted) model
  double rho_bar = 0.0;
  Vector u_bar;
  Box box;
  std::vector<std::size_t> offsets;
  std::vector<TransitionKernel::Entry> entries;
  std::vector<double> row_sum;
  /// Mass of Pbar_1(x,.) that left the box.
  std::vector<double> raw_overflow;

  std::span<const TransitionKernel::Entry> row(std::size_t from) const {
    return {entries.data() + offsets[from], entries.data() + offsets[from + 1]};
  }
  double at(std::span<const int> x, std::span<const int> y) const;
  /// out = in * Q.
  void forward(std::span<const double> in, std::span<double> out) const;
};

/// Rows whose Pbar_1 support fits in the box must sum to 1 within
/// row_tolerance; otherwise TruncationError.
QKernel q_kernel(const BranchingModel& model, const TiltVector& a, const Box& box,
                 double row_tolerance = 1e-8);

struct YaglomOptions {
  std::optional<State> x0;  ///< start of the conditional-law route (default e_1)
  double tv_tolerance = 1e-12;
  int max_iterations = 200'000;
  double route_tolerance = 1e-6;
  double fd_step = 1e-5;
};

struct YaglomData {
  double rho = 0.0;
  Vector u, v;
  /// lim_k P_{x0}(X_k = . | X_k != 0); overflow = 1 - sum.
  LatticeDistribution nu;
  /// Normalised left eigenvector of the kernel killed at 0 (second route).
  LatticeDistribution nu_eigen;
  double eigen_value = 0.0;
  double route_gap_tv = 0.0;
  double gamma = 0.0;
  Vector g_grad_at_1;
  /// Size-biased law (z.u) nu(z), renormalised.
  LatticeDistribution mu_bar;
  /// pi = nu / (1 - rho), the rho-invariant measure of the killed kernel.
  std::vector<double> pi;
  int iterations = 0;
};

/// Yaglom limit of a subcritical model, computed by two independent routes
/// that must agree within route_tolerance in total variation.
YaglomData yaglom(const BranchingModel& model, const Box& box, const YaglomOptions& opts = {});

/// nu^(n) = lim_k P_{x0}(X_k = . | X_{k+n} != 0, T < inf) for a noncritical model.
LatticeDistribution yaglom_type(const BranchingModel& model, int n, const Box& box,
                                const YaglomOptions& opts = {});

struct Accessibility {
  bool accessible = false;
  std::size_t unreachable = 0;  ///< nonzero box states that never reach S
  int steps = 0;
};

/// Backward reachability of S on the truncated kernel, up to twice the box
/// diameter.
Accessibility accessibility(const TransitionKernel& kernel, const ConditioningSet& s);

struct ConditionalPathLaw {
  double probability = 0.0;
  double path_probability = 0.0;  ///< Pbar_{x0}(path) under the q-associated model
  double numerator = 0.0;         ///< Pbar_{x_j}(X_n in S)
  double denominator = 0.0;       ///< Pbar_{x0}(X_{k_j+n} in S)
  double overflow = 0.0;          ///< largest escaped mass among the lattice runs
  std::string hypothesis;
  std::vector<std::string> warnings;
};

/// P_{x0}(path | X_{k_j+n} in S, T < inf).
ConditionalPathLaw conditional_path_law(const BranchingModel& model, const PathEvent& ev,
                                        const ConditioningSet& s, int n, const Box& box,
                                        double leak_tol = kDefaultLeakTolerance);

/// (1/rho_bar^{k_j}) (x_j.u_bar / x0.u_bar) Pbar_{x0}(path) for the model associated with a.
double q_process_rhs(const BranchingModel& model, const TiltVector& a, const PathEvent& ev,
                     const Box& box, double leak_tol = kDefaultLeakTolerance);

struct DoubleLimitRow {
  std::string schedule;
  int m = 0;  ///< schedule parameter (horizon)
  int k = 0;
  int n = 0;
  double probability = 0.0;  ///< P_{x0}(X_k = z | X_{k+n} != 0, T < inf)
  double mu_bar = 0.0;
  double gap = 0.0;
  double tv = 0.0;
};

struct ScheduleEntry {
  std::string schedule;
  int m = 0;
  int k = 0;
  int n = 0;
};

/// Diagonal k = n = m and, for each t, k = floor(m t), n = m - k; m = 1..m_max.
std::vector<ScheduleEntry> default_double_limit_schedule(int m_max,
                                                         const std::vector<double>& ts = {0.25, 0.5, 0.75});

std::vector<DoubleLimitRow> double_limit_scan(const BranchingModel& model, std::span<const int> z,
                                              std::span<const ScheduleEntry> schedule,
                                              const Box& box, std::optional<State> x0 = std::nullopt);

struct NakaokaRow {
  int n = 0;
  double nak1 = 0.0;  ///< v.(f_{n+2}(0)-f_{n+1}(0)) / v.(f_{n+1}(0)-f_n(0))
  double nak2 = 0.0;  ///< (f_n(c)^x - f_n(b)^x) / v.(f_n(c)-f_n(b))
  double nak3 = 0.0;  ///< (1-f_{n+1}(0)^x) / (1-f_n(0)^x)
  std::vector<double> pi_at;  ///< P_n(x,y)/(f_{n+1}(0)^x - f_n(0)^x) at the reported states
  double pi_gap = 0.0;        ///< max_y |pi_n(y) - nu(y)/(1-rho)|; NaN without a Yaglom law
  double overflow = 0.0;
};

struct NakaokaOptions {
  std::optional<State> x;       ///< default e_1
  std::optional<Vector> b, c;   ///< defaults 0 and 1
  std::vector<State> report_states;  ///< default {e_1}
};

struct NakaokaTable {
  double rho = 0.0;
  Vector u, v;
  double x_dot_u = 0.0;
  std::vector<State> report_states;
  std::vector<double> pi_limit;  ///< nu/(1-rho) at report_states (rho < 1)
  std::string note;              ///< why the pi comparison is missing, if it is
  std::vector<NakaokaRow> rows;
};

NakaokaTable nakaoka_diagnostics(const BranchingModel& model, int n_max, const Box& box,
                                 const NakaokaOptions& opts = {});

/// P_x(X_n in S) on a kernel, with the cofinite kinds priced as
/// survival minus the finite complement. Sets `overflow` to the escaped mass.
double set_hitting_probability(const BranchingModel& model, const TransitionKernel& kernel,
                               std::span<const int> x, int n, const ConditioningSet& s,
                               double& overflow);

}  // namespace gw
