#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gw/model.hpp"

namespace gw {

inline constexpr double kDefaultLeakTolerance = 1e-9;

/// The truncated lattice {x in N^d : x <= caps}, indexed row-major (last
/// coordinate fastest).
class Box {
 public:
  Box() = default;
  explicit Box(State caps);
  static Box cube(std::size_t d, int cap) { return Box(State(d, cap)); }

  std::size_t dim() const { return caps_.size(); }
  const State& caps() const { return caps_; }
  std::size_t size() const { return size_; }
  std::size_t stride(std::size_t j) const { return strides_[j]; }

  bool contains(std::span<const int> x) const;
  std::size_t index(std::span<const int> x) const;
  State state(std::size_t idx) const;
  /// Coordinates of every lattice point, flattened (size() * dim() ints).
  std::vector<int> coordinates() const;

  bool operator==(const Box& o) const { return caps_ == o.caps_; }

 private:
  State caps_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Probability mass on a box plus the mass that escaped above it.
struct LatticeDistribution {
  Box box;
  std::vector<double> mass;
  double overflow = 0.0;

  static LatticeDistribution point(const Box& box, std::span<const int> x);

  double at(std::span<const int> x) const;
  double retained() const;
  /// Throws ValidationError unless masses are nonnegative and
  /// retained + overflow = 1 within `tol`.
  void check(double tol = 1e-12) const;
};

/// Signed measure on a box, used by the total-progeny determinant expansion.
struct SignedLatticeMeasure {
  Box box;
  std::vector<double> values;
  /// Total absolute value dropped outside the box.
  double overflow_abs = 0.0;
};

/// (a * b) restricted to the common box; dropped mass is accumulated in
/// the result's overflow_abs.
SignedLatticeMeasure convolve(const SignedLatticeMeasure& a, const SignedLatticeMeasure& b);
/// (a * b)(target) without materialising the full convolution.
double convolve_at(const SignedLatticeMeasure& a, const SignedLatticeMeasure& b,
                   std::span<const int> target);

/// The observed states of a trajectory: X_{k_i} = x_i for i = 1..j, started at x0.
struct PathEvent {
  struct Mark {
    int time = 0;
    State state;
  };
  State x0;
  std::vector<Mark> marks;

  /// Throws ValidationError unless j >= 1, times are nondecreasing and
  /// nonnegative, x0 != 0 and every state has dimension d.
  void check(std::size_t d) const;
  int last_time() const { return marks.back().time; }
  const State& last_state() const { return marks.back().state; }
};

/// One-step transition law P_1(x, .) for every x of a box, stored sparsely.
/// Mass leaving the box is tracked per row; it never returns because
/// offspring counts are nonnegative.
class TransitionKernel {
 public:
  struct Entry {
    std::uint32_t to;
    double p;
  };

  TransitionKernel(const BranchingModel& model, Box box);

  const Box& box() const { return box_; }
  std::span<const Entry> row(std::size_t from) const {
    return {entries_.data() + offsets_[from], entries_.data() + offsets_[from + 1]};
  }
  double row_overflow(std::size_t from) const { return row_overflow_[from]; }

  /// out = in * P on the box; returns the mass that escaped.
  double forward(std::span<const double> in, std::span<double> out) const;
  /// out(x) = sum_y P(x,y) h(y) over retained y.
  void backward(std::span<const double> h, std::span<double> out) const;

 private:
  Box box_;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
  std::vector<double> row_overflow_;
};

/// Law of X_1 from x: the convolution of x_i copies of each p_i.
LatticeDistribution one_step(const BranchingModel& model, std::span<const int> x, const Box& box);

/// Law of X_n from x with escaped mass absorbed in overflow. Throws
/// TruncationError when the overflow exceeds leak_tol.
LatticeDistribution n_step(const BranchingModel& model, std::span<const int> x, int n,
                           const Box& box, double leak_tol = kDefaultLeakTolerance);
LatticeDistribution n_step(const TransitionKernel& kernel, std::span<const int> x, int n,
                           double leak_tol = kDefaultLeakTolerance);

/// P_{x0}(X_{k_1} = x_1, ..., X_{k_j} = x_j) as a product of n-step transitions.
double path_probability(const BranchingModel& model, const PathEvent& ev, const Box& box,
                        double leak_tol = kDefaultLeakTolerance);
double path_probability(const TransitionKernel& kernel, const PathEvent& ev,
                        double leak_tol = kDefaultLeakTolerance);

/// Joint law of (X_k, N_k) with N_k = X_0 + ... + X_k.
struct JointStateProgeny {
  Box state_box;
  Box progeny_box;
  std::vector<double> mass;  ///< index = state_index * progeny_box.size() + progeny_index
  double overflow_state = 0.0;
  double overflow_progeny = 0.0;

  double at(std::span<const int> state, std::span<const int> progeny) const;
  /// Law of X_k; both overflows are reported as its overflow.
  LatticeDistribution state_marginal() const;
  /// Law of N_k.
  LatticeDistribution progeny_marginal() const;
  /// Masses with X_k = x, as a law over N_k (overflow left at zero).
  std::vector<double> progeny_slice(std::span<const int> state) const;
};

/// Forward dynamic programme over (state, accumulated progeny) pairs,
/// starting at (x0, x0). When `constraint` is given, mass inconsistent with
/// its marks is discarded as the corresponding times are reached. Throws
/// TruncationError if the total overflow exceeds leak_tol.
JointStateProgeny joint_state_progeny(const TransitionKernel& kernel, std::span<const int> x0, int k,
                                      const Box& progeny_box,
                                      double leak_tol = kDefaultLeakTolerance,
                                      const PathEvent* constraint = nullptr);
JointStateProgeny joint_state_progeny(const BranchingModel& model, std::span<const int> x0, int k,
                                      const Box& state_box, const Box& progeny_box,
                                      double leak_tol = kDefaultLeakTolerance,
                                      const PathEvent* constraint = nullptr);

}  // namespace gw
