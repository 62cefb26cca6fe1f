#include "gw/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "gw/errors.hpp"

namespace gw {

TiltVector::TiltVector(Vector a) : a_(std::move(a)) {
  if (a_.empty()) throw DomainError("tilt vector is empty");
  for (double x : a_)
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError(fmt::format("tilt entry {} is not positive", x));
}

ExtinctionData extinction_vector(const BranchingModel& model, const ExtinctionOptions& opts) {
  const std::size_t d = model.d();
  const ModelDiagnostics diag = validate(model);
  ExtinctionData out;

  // For nonsingular positive-regular models q = 1 exactly when rho <= 1;
  // iterating from 0 would need O(1/eps) steps in the critical case.
  if (diag.nonsingular && diag.positive_regular &&
      perron(model).rho <= 1.0 + kCriticalityTolerance) {
    out.q.assign(d, 1.0);
    Vector fq = model.pgf(out.q);
    for (std::size_t i = 0; i < d; ++i) out.residual = std::max(out.residual, std::abs(fq[i] - 1.0));
    return out;
  }

  Vector q(d, 0.0);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Vector next = model.pgf(q);
    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) change = std::max(change, std::abs(next[i] - q[i]));
    q = std::move(next);
    out.iterations = it;
    if (change < opts.tolerance) break;
    if (it == opts.max_iterations)
      throw ConvergenceError("extinction iteration did not converge");
  }
  out.q = q;
  Vector fq = model.pgf(q);
  for (std::size_t i = 0; i < d; ++i) out.residual = std::max(out.residual, std::abs(fq[i] - q[i]));
  for (std::size_t i = 0; i < d; ++i)
    if (!(q[i] > 0.0))
      throw ValidationError(fmt::format("extinction probability of type {} is 0; q > 0 fails", i + 1));
  return out;
}

BranchingModel associate(const BranchingModel& model, const TiltVector& a) {
  if (a.size() != model.d()) throw DomainError("tilt dimension does not match the model");
  std::vector<OffspringLaw> laws;
  laws.reserve(model.d());
  for (const auto& law : model.laws()) {
    OffspringLaw tilted;
    double total = 0.0;
    for (const Atom& atom : law.atoms) {
      const double w = atom.p * monomial(a.values(), atom.k);
      tilted.atoms.push_back({atom.k, w});
      total += w;
    }
    for (Atom& atom : tilted.atoms) atom.p /= total;
    laws.push_back(std::move(tilted));
  }
  return BranchingModel(std::move(laws));
}

double tilted_perron_root(const BranchingModel& model, const TiltVector& a) {
  return perron(associate(model, a)).rho;
}

TiltVector critical_tilt(const BranchingModel& model, const CriticalTiltOptions& opts) {
  const std::size_t d = model.d();
  if (!(opts.bracket_lo > 0.0 && opts.bracket_hi > opts.bracket_lo))
    throw DomainError("critical-tilt bracket must satisfy 0 < lo < hi");
  auto excess = [&](double c) { return tilted_perron_root(model, TiltVector::uniform(d, c)) - 1.0; };

  if (std::abs(excess(1.0)) <= opts.tolerance) return TiltVector::uniform(d, 1.0);

  double lo = opts.bracket_lo, hi = opts.bracket_hi;
  double f_lo = excess(lo), f_hi = excess(hi);
  if (d > 1) {
    // rho_bar(c) need not be monotone for d >= 2: scan a geometric grid for
    // the first sign change.
    const int n = std::max(opts.grid_points, 2);
    const double ratio = std::pow(opts.bracket_hi / opts.bracket_lo, 1.0 / (n - 1));
    std::optional<std::pair<double, double>> found;
    double prev_c = lo, prev_f = f_lo;
    for (int i = 1; i < n && !found; ++i) {
      const double c = (i == n - 1) ? opts.bracket_hi : opts.bracket_lo * std::pow(ratio, i);
      const double f = excess(c);
      if (std::abs(f) <= opts.tolerance) return TiltVector::uniform(d, c);
      if ((prev_f < 0.0) != (f < 0.0)) {
        found = {prev_c, c};
        f_lo = prev_f;
        f_hi = f;
      }
      prev_c = c;
      prev_f = f;
    }
    if (!found)
      throw DomainError(fmt::format(
          "no critical tilt a = c*1 with c in [{}, {}]; supply a tilt vector explicitly",
          opts.bracket_lo, opts.bracket_hi));
    lo = found->first;
    hi = found->second;
  } else if ((f_lo < 0.0) == (f_hi < 0.0)) {
    throw DomainError(fmt::format("no critical tilt in [{}, {}]", opts.bracket_lo, opts.bracket_hi));
  }

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = excess(mid);
    if (std::abs(f) <= opts.tolerance || hi - lo <= 1e-16 * hi) return TiltVector::uniform(d, mid);
    if ((f < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
    }
  }
  throw ConvergenceError("critical-tilt bisection did not converge");
}

SubcriticalityReport subcriticality_check(const BranchingModel& model) {
  SubcriticalityReport rep;
  rep.rho = perron(model).rho;
  if (rep.rho <= 1.0 + kCriticalityTolerance) {
    rep.skipped = true;
    rep.q.assign(model.d(), 1.0);
    rep.rho_bar = rep.rho;
    rep.note = "model is not supercritical: q = 1 and the tilt by q is neutral";
    return rep;
  }
  rep.q = extinction_vector(model).q;
  rep.rho_bar = tilted_perron_root(model, TiltVector(rep.q));
  if (!(rep.rho_bar < 1.0))
    throw InconsistencyError(fmt::format(
        "process associated with q has Perron root {:.17g} >= 1", rep.rho_bar));
  rep.note = "process associated with q is subcritical";
  return rep;
}

}  // namespace gw
