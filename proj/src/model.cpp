#include "gw/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <fmt/format.h>

#include "gw/errors.hpp"

namespace gw {

double monomial(std::span<const double> r, std::span<const int> k) {
  double v = 1.0;
  for (std::size_t j = 0; j < k.size(); ++j)
    if (k[j] != 0) v *= std::pow(r[j], k[j]);
  return v;
}

BranchingModel::BranchingModel(std::vector<OffspringLaw> laws) {
  if (laws.empty()) throw ValidationError("model needs at least one type");
  const std::size_t d = laws.size();
  laws_.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::map<State, double> merged;
    double total = 0.0;
    for (const Atom& a : laws[i].atoms) {
      if (a.k.size() != d)
        throw ValidationError(fmt::format("type {}: offspring vector has {} coordinates, expected {}",
                                          i + 1, a.k.size(), d));
      if (std::any_of(a.k.begin(), a.k.end(), [](int c) { return c < 0; }))
        throw ValidationError(fmt::format("type {}: negative offspring count", i + 1));
      if (!(a.p >= 0.0) || !std::isfinite(a.p))
        throw ValidationError(fmt::format("type {}: negative or non-finite mass {}", i + 1, a.p));
      merged[a.k] += a.p;
      total += a.p;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
      throw ValidationError(fmt::format("type {}: masses sum to {:.17g}, not 1", i + 1, total));
    OffspringLaw law;
    for (const auto& [k, p] : merged)
      if (p > 0.0) law.atoms.push_back({k, p});
    laws_.push_back(std::move(law));
  }
}

Vector BranchingModel::pgf(std::span<const double> r) const {
  Vector out(d(), 0.0);
  for (std::size_t i = 0; i < d(); ++i)
    for (const Atom& a : laws_[i].atoms) out[i] += a.p * monomial(r, a.k);
  return out;
}

Vector BranchingModel::pgf_complement(std::span<const double> s) const {
  Vector log_keep(d());
  for (std::size_t j = 0; j < d(); ++j) log_keep[j] = std::log1p(-s[j]);
  Vector out(d(), 0.0);
  for (std::size_t i = 0; i < d(); ++i)
    for (const Atom& a : laws_[i].atoms) {
      double expo = 0.0;
      for (std::size_t j = 0; j < d(); ++j)
        if (a.k[j] != 0) expo += a.k[j] * log_keep[j];
      out[i] += a.p * -std::expm1(expo);
    }
  return out;
}

int BranchingModel::max_offspring(std::size_t j) const {
  int m = 0;
  for (const auto& law : laws_)
    for (const Atom& a : law.atoms) m = std::max(m, a.k[j]);
  return m;
}

std::optional<int> primitivity_witness(const Matrix& m) {
  const std::size_t d = m.rows();
  std::vector<char> pattern(d * d), power(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) pattern[i * d + j] = m(i, j) > 0.0;
  power = pattern;
  const int bound = static_cast<int>((d - 1) * (d - 1) + 1);
  for (int n = 1; n <= bound; ++n) {
    if (std::all_of(power.begin(), power.end(), [](char c) { return c != 0; })) return n;
    std::vector<char> next(d * d, 0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k)
        if (power[i * d + k])
          for (std::size_t j = 0; j < d; ++j) next[i * d + j] |= pattern[k * d + j];
    power = std::move(next);
  }
  return std::nullopt;
}

ModelDiagnostics validate(const BranchingModel& model) {
  ModelDiagnostics diag;
  const std::size_t d = model.d();

  // f(r) = Mr exactly when every individual has exactly one child.
  for (const auto& law : model.laws())
    for (const Atom& a : law.atoms) {
      int total = 0;
      for (int c : a.k) total += c;
      if (total != 1) diag.nonsingular = true;
    }

  if (auto w = primitivity_witness(mean_matrix(model))) {
    diag.positive_regular = true;
    diag.regularity_witness = *w;
  }

  diag.aperiodic_A5 = true;
  for (std::size_t j = 0; j < d && diag.aperiodic_A5; ++j) {
    bool found = false;
    for (const auto& law : model.laws()) {
      std::map<State, double> support;
      for (const Atom& a : law.atoms) support.emplace(a.k, a.p);
      for (const Atom& a : law.atoms) {
        State up = a.k;
        ++up[j];
        if (support.count(up)) {
          found = true;
          break;
        }
      }
      if (found) break;
    }
    diag.aperiodic_A5 = found;
  }
  return diag;
}

Vector gen_fn(const BranchingModel& model, std::span<const double> r) {
  if (r.size() != model.d()) throw DomainError("argument dimension does not match the model");
  for (double x : r)
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError(fmt::format("argument {} outside [0,1]", x));
  return model.pgf(r);
}

Vector gen_fn_iterate(const BranchingModel& model, std::span<const double> r, unsigned n) {
  Vector cur = gen_fn(model, r);
  if (n == 0) return Vector(r.begin(), r.end());
  for (unsigned k = 1; k < n; ++k) cur = model.pgf(cur);
  return cur;
}

Vector survival_iterate(const BranchingModel& model, unsigned n) {
  Vector s(model.d(), 1.0);
  for (unsigned k = 0; k < n; ++k) s = model.pgf_complement(s);
  return s;
}

double survival_probability(std::span<const double> s, std::span<const int> x) {
  double expo = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] == 0) continue;
    if (s[j] >= 1.0) return 1.0;
    expo += x[j] * std::log1p(-s[j]);
  }
  return -std::expm1(expo);
}

Matrix mean_matrix(const BranchingModel& model) {
  const std::size_t d = model.d();
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (const Atom& a : model.law(i).atoms)
      for (std::size_t j = 0; j < d; ++j) m(i, j) += a.p * a.k[j];
  return m;
}

std::vector<Matrix> covariance_matrices(const BranchingModel& model) {
  const std::size_t d = model.d();
  const Matrix m = mean_matrix(model);
  std::vector<Matrix> out;
  out.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    Matrix c(d, d);
    for (const Atom& a : model.law(i).atoms)
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t l = 0; l < d; ++l)
          c(j, l) += a.p * (a.k[j] - m(i, j)) * (a.k[l] - m(i, l));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace gw
