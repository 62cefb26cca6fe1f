#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gw/matrix.hpp"

namespace gw {

/// A point of the lattice N^d (an offspring vector or a population state).
using State = std::vector<int>;

/// One atom of an offspring law: the offspring vector k and its probability.
struct Atom {
  State k;
  double p = 0.0;
  bool operator==(const Atom&) const = default;
};

/// Finitely supported offspring law of one type.
struct OffspringLaw {
  std::vector<Atom> atoms;
  bool operator==(const OffspringLaw&) const = default;
};

/// Multitype Galton-Watson offspring mechanism with finite supports.
///
/// Construction validates every law: masses must be nonnegative and sum to
/// one within 1e-12 (they are then renormalised exactly), offspring vectors
/// must have d nonnegative coordinates. Zero-mass atoms are dropped and
/// repeated offspring vectors are merged, so `atoms` always lists the support.
class BranchingModel {
 public:
  static constexpr double kMassTolerance = 1e-12;

  explicit BranchingModel(std::vector<OffspringLaw> laws);

  std::size_t d() const { return laws_.size(); }
  const OffspringLaw& law(std::size_t i) const { return laws_[i]; }
  const std::vector<OffspringLaw>& laws() const { return laws_; }

  /// f(r) for any r >= 0 (no [0,1] check; the tilt needs f(a) with a > 1).
  Vector pgf(std::span<const double> r) const;

  /// 1 - f(1 - s), evaluated without cancellation when s is small.
  Vector pgf_complement(std::span<const double> s) const;

  /// Largest offspring count of type j over all laws.
  int max_offspring(std::size_t j) const;

  bool operator==(const BranchingModel&) const = default;

 private:
  std::vector<OffspringLaw> laws_;
};

struct ModelDiagnostics {
  bool nonsingular = false;
  bool positive_regular = false;
  /// Smallest n with M^n > 0 when positive_regular, else 0.
  int regularity_witness = 0;
  bool aperiodic_A5 = false;
  /// Left undecided here; set by the extinction solver.
  std::optional<bool> q_positive;
  /// Highest finite moment order; nullopt means every order (finite support).
  std::optional<int> moment_orders_available;
};

ModelDiagnostics validate(const BranchingModel& model);

/// Smallest n <= (d-1)^2+1 such that every entry of A^n is positive, where A
/// is the support pattern of `m`; nullopt when no such n exists.
std::optional<int> primitivity_witness(const Matrix& m);

/// f(r) with r checked to lie in [0,1]^d.
Vector gen_fn(const BranchingModel& model, std::span<const double> r);

/// f_n(r), the n-fold composition (f_0 is the identity).
Vector gen_fn_iterate(const BranchingModel& model, std::span<const double> r, unsigned n);

/// 1 - f_n(0) componentwise, computed through the complement map so that
/// survival probabilities far below machine epsilon keep full precision.
Vector survival_iterate(const BranchingModel& model, unsigned n);

/// P_x(X_n != 0) = 1 - prod_j f_{n,j}(0)^{x_j} given s = 1 - f_n(0).
double survival_probability(std::span<const double> s, std::span<const int> x);

Matrix mean_matrix(const BranchingModel& model);

/// Covariance matrix of each offspring law.
std::vector<Matrix> covariance_matrices(const BranchingModel& model);

/// r^k = prod r_j^{k_j}.
double monomial(std::span<const double> r, std::span<const int> k);

}  // namespace gw
