#include "gw/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gw/errors.hpp"

namespace gw {
namespace {

struct PowerResult {
  Vector x;
  double lambda;
  int iterations;
};

// Dominant positive eigenvector of a primitive matrix, x normalised to sum 1.
PowerResult power_iterate(const Matrix& m, const PerronOptions& opts) {
  const std::size_t d = m.rows();
  Vector x(d, 1.0 / static_cast<double>(d));
  double lambda = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Vector y = m.apply(x);
    double sum = 0.0;
    for (double e : y) sum += e;
    if (!(sum > 0.0)) throw SpectralError("power iteration collapsed to zero");
    for (double& e : y) e /= sum;
    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) change = std::max(change, std::abs(y[i] - x[i]));
    const double lambda_change = std::abs(sum - lambda);
    x = std::move(y);
    lambda = sum;
    if (lambda_change < opts.tolerance * std::max(1.0, lambda) && change < opts.tolerance)
      return {x, lambda, it};
  }
  throw ConvergenceError(fmt::format("power iteration did not converge in {} iterations",
                                     opts.max_iterations));
}

}  // namespace

SpectralData perron(const Matrix& m, const PerronOptions& opts) {
  if (m.rows() != m.cols() || m.rows() == 0) throw SpectralError("mean matrix must be square");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) < 0.0 || !std::isfinite(m(i, j)))
        throw SpectralError("mean matrix must be finite and nonnegative");
  if (!primitivity_witness(m)) throw SpectralError("mean matrix is not primitive");

  PowerResult right = power_iterate(m, opts);
  PowerResult left = power_iterate(m.transpose(), opts);

  SpectralData out;
  out.u = std::move(right.x);
  out.v = std::move(left.x);
  const double uv = dot(out.u, out.v);
  for (double& e : out.v) e /= uv;
  // Two-sided quotient; second-order accurate in the eigenvector errors.
  out.rho = dot(out.v, m.apply(out.u)) / dot(out.v, out.u);
  out.iterations = std::max(right.iterations, left.iterations);
  return out;
}

std::vector<double> mean_power_diagnostic(const Matrix& m, int n_max) {
  const SpectralData sp = perron(m);
  const std::size_t d = m.rows();
  const Matrix scaled = m * (1.0 / sp.rho);
  Matrix power = Matrix::identity(d);
  std::vector<double> gaps;
  gaps.reserve(static_cast<std::size_t>(std::max(n_max, 0)));
  for (int n = 1; n <= n_max; ++n) {
    power = power * scaled;
    double gap = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        gap = std::max(gap, std::abs(power(i, j) - sp.u[i] * sp.v[j]));
    gaps.push_back(gap);
  }
  return gaps;
}

std::vector<double> mean_power_diagnostic(const BranchingModel& model, int n_max) {
  return mean_power_diagnostic(mean_matrix(model), n_max);
}

Matrix second_moments(const BranchingModel& model, std::span<const int> x, unsigned k) {
  const std::size_t d = model.d();
  if (x.size() != d) throw DomainError("initial state dimension does not match the model");
  const Matrix m = mean_matrix(model);
  const Matrix mt = m.transpose();
  const auto sigmas = covariance_matrices(model);

  Matrix c0(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) c0(i, j) = static_cast<double>(x[i]) * x[j];

  Matrix c = mt.pow(k) * c0 * m.pow(k);
  Vector mean(x.begin(), x.end());  // E_x[X_{n-1}] starting at n = 1
  for (unsigned n = 1; n <= k; ++n) {
    Matrix inner(d, d);
    for (std::size_t i = 0; i < d; ++i) inner += sigmas[i] * mean[i];
    c += mt.pow(k - n) * inner * m.pow(k - n);
    mean = m.apply_left(mean);
  }
  return c;
}

}  // namespace gw
