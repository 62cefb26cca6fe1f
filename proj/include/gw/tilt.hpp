#pragma once

#include <string>

#include "gw/model.hpp"
#include "gw/spectral.hpp"

namespace gw {

/// A strictly positive tilt vector a.
class TiltVector {
 public:
  explicit TiltVector(Vector a);
  static TiltVector uniform(std::size_t d, double c) { return TiltVector(Vector(d, c)); }

  const Vector& values() const { return a_; }
  std::size_t size() const { return a_.size(); }
  double operator[](std::size_t i) const { return a_[i]; }

 private:
  Vector a_;
};

struct ExtinctionData {
  Vector q;
  int iterations = 0;
  /// ||f(q) - q||_inf
  double residual = 0.0;
};

struct ExtinctionOptions {
  double tolerance = 1e-14;
  int max_iterations = 100'000;
};

/// Minimal fixed point of f in [0,1]^d. Nonsingular models with rho <= 1
/// return q = 1 directly; otherwise f is iterated from 0. Throws
/// ValidationError if some q_i = 0 (the model then violates q > 0).
ExtinctionData extinction_vector(const BranchingModel& model, const ExtinctionOptions& opts = {});

/// The associated process: pbar_i(k) = a^k p_i(k) / f_i(a).
BranchingModel associate(const BranchingModel& model, const TiltVector& a);

struct CriticalTiltOptions {
  double bracket_lo = 1e-3;
  double bracket_hi = 10.0;
  int grid_points = 64;
  double tolerance = 1e-10;
};

/// A tilt a = c 1 whose associated process has Perron root 1 (within
/// opts.tolerance). Throws DomainError when rho_bar(c) - 1 never changes
/// sign on the bracket.
TiltVector critical_tilt(const BranchingModel& model, const CriticalTiltOptions& opts = {});

/// Perron root of the process associated with a.
double tilted_perron_root(const BranchingModel& model, const TiltVector& a);

struct SubcriticalityReport {
  double rho = 0.0;
  Vector q;
  double rho_bar = 0.0;
  bool skipped = false;
  std::string note;
};

/// For a supercritical model, checks that the process associated with q is
/// subcritical (throws InconsistencyError otherwise). Non-supercritical
/// models are reported as skipped.
SubcriticalityReport subcriticality_check(const BranchingModel& model);

/// Models with |rho - 1| below this are treated as critical.
inline constexpr double kCriticalityTolerance = 1e-10;

}  // namespace gw
