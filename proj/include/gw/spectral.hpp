#pragma once

#include <vector>

#include "gw/matrix.hpp"
#include "gw/model.hpp"

namespace gw {

/// Perron root and eigenvectors, normalised so that u.1 = u.v = 1.
struct SpectralData {
  double rho = 0.0;
  Vector u;  ///< right eigenvector, M u^T = rho u^T
  Vector v;  ///< left eigenvector,  v M = rho v
  int iterations = 0;
};

struct PerronOptions {
  double tolerance = 1e-13;
  int max_iterations = 1'000'000;
};

/// Power iteration on M and M^T. Throws SpectralError for a non-primitive
/// matrix and ConvergenceError if the iteration limit is hit.
SpectralData perron(const Matrix& m, const PerronOptions& opts = {});

inline SpectralData perron(const BranchingModel& model, const PerronOptions& opts = {}) {
  return perron(mean_matrix(model), opts);
}

/// gaps[n-1] = max_ij |rho^-n (M^n)_ij - u_i v_j| for n = 1..n_max.
std::vector<double> mean_power_diagnostic(const Matrix& m, int n_max);
std::vector<double> mean_power_diagnostic(const BranchingModel& model, int n_max);

/// C_{x,k} = (E_x[X_{k,i} X_{k,j}])_{ij} through the second-moment recursion
/// C_{x,k} = (M^T)^k C_{x,0} M^k + sum_{n=1}^k (M^T)^{k-n} (sum_i Sigma^i E_x[X_{n-1,i}]) M^{k-n}.
Matrix second_moments(const BranchingModel& model, std::span<const int> x, unsigned k);

}  // namespace gw
