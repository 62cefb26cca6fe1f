#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gw/lattice.hpp"
#include "gw/matrix.hpp"
#include "gw/model.hpp"
#include "gw/tilt.hpp"

namespace gw {

/// Largest number of types with a positive target the determinant
/// expansion accepts (d! signed convolution chains).
inline constexpr std::size_t kMaxFormulaTypes = 4;

/// P_{x0}(N = n) from the determinant formula, expanded over permutations.
/// Types with n_i = 0 are removed first (they must have x0_i = 0 and their
/// appearance anywhere in the tree is excluded), so n only needs n >= x0,
/// n != 0.
double progeny_pmf_formula(const BranchingModel& model, std::span<const int> x0, std::span<const int> n);

/// Table of P_{x0}(N = n) for every n <= n_cap from the (state, progeny)
/// dynamic programme; overflow = 1 - sum of the table.
LatticeDistribution progeny_pmf_dp(const BranchingModel& model, std::span<const int> x0, const State& n_cap);

struct Lemma1Result {
  double max_discrepancy = 0.0;
  std::vector<double> original;  ///< P_{x0}(path | N = n) per path
  std::vector<double> tilted;    ///< Pbar_{x0}(path | N = n) per path
};

/// P_{x0}(path, N = n) by the constrained dynamic programme.
double path_and_progeny(const BranchingModel& model, const PathEvent& ev, std::span<const int> n);

/// Compares the progeny-conditioned path laws of the model and of its
/// associated process for every path (all must start at x0).
Lemma1Result lemma1_check(const BranchingModel& model, const TiltVector& a, std::span<const int> x0,
                          const std::vector<PathEvent>& paths, std::span<const int> n);

struct ScalingRow {
  int n = 0;
  State target;  ///< floor(n w)
  double probability = 0.0;
  double scaled = 0.0;  ///< n^{d/2+1} P_{x0}(N = target)
};

struct ProgenyScalingReport {
  Vector w;
  Matrix sigma;
  std::vector<ScalingRow> rows;
  std::vector<std::string> notes;
  /// Intercept of a least-squares fit of `scaled` against 1/n.
  double plateau = 0.0;
  /// x0.D / (v_d (2 pi)^{d/2} sqrt(det Sigma)), D the (d,i) cofactors of I - M.
  double formula_constant = 0.0;
};

/// Requires a critical model satisfying A5 (aperiodicity) and A6 (Sigma
/// positive definite).
ProgenyScalingReport proposition_scaling(const BranchingModel& model, std::span<const int> x0,
                                         const std::vector<int>& n_values);

/// floor(n w) componentwise, guarded against w_i n landing just below an integer.
State lattice_floor(int n, const Vector& w);

struct Theorem2Row {
  int n = 0;
  State target;
  double probability = 0.0;  ///< P_{x0}(path | N = target)
  double limit = 0.0;        ///< (x_j.u_bar / x0.u_bar) Pbar_{x0}(path)
  double gap = 0.0;
};

struct Theorem2Report {
  Vector tilt;
  double rho_bar = 0.0;
  Vector u_bar, v_bar;
  double limit = 0.0;
  std::vector<Theorem2Row> rows;
  std::vector<std::string> notes;  ///< skipped n values
};

/// Gap table for the progeny-conditioned path law against its limit. The
/// tilt defaults to critical_tilt(model); `box` is used for the associated
/// path probability.
Theorem2Report theorem2_verify(const BranchingModel& model, const PathEvent& ev,
                               const std::vector<int>& n_values, const Box& box,
                               std::optional<TiltVector> tilt = std::nullopt,
                               double leak_tol = kDefaultLeakTolerance);

}  // namespace gw
