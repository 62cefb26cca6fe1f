#include "gw/progeny.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gw/errors.hpp"
#include "gw/spectral.hpp"

namespace gw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_zero(std::span<const int> x) {
  return std::all_of(x.begin(), x.end(), [](int c) { return c == 0; });
}

double dot_state(std::span<const int> x, const Vector& u) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * u[j];
  return s;
}

// p^{*n} on the box, one sparse convolution per factor.
std::vector<double> convolution_power(const std::vector<Atom>& atoms, int n, const Box& box) {
  const std::size_t d = box.dim();
  const auto coords = box.coordinates();
  std::vector<double> cur(box.size(), 0.0), next(box.size());
  cur[0] = 1.0;
  for (int step = 0; step < n; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t idx = 0; idx < cur.size(); ++idx) {
      if (cur[idx] == 0.0) continue;
      const int* c = coords.data() + idx * d;
      for (const Atom& a : atoms) {
        bool fits = true;
        std::size_t off = 0;
        for (std::size_t j = 0; j < d; ++j) {
          if (c[j] + a.k[j] > box.caps()[j]) {
            fits = false;
            break;
          }
          off += static_cast<std::size_t>(a.k[j]) * box.stride(j);
        }
        if (fits) next[idx + off] += cur[idx] * a.p;
      }
    }
    cur.swap(next);
  }
  return cur;
}

int permutation_sign(const std::vector<std::size_t>& perm) {
  int inversions = 0;
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = i + 1; j < perm.size(); ++j)
      if (perm[i] > perm[j]) ++inversions;
  return inversions % 2 == 0 ? 1 : -1;
}

void check_query(const BranchingModel& model, std::span<const int> x0, std::span<const int> n) {
  const std::size_t d = model.d();
  if (x0.size() != d || n.size() != d) throw DomainError("x0 and n must have d coordinates");
  if (std::any_of(x0.begin(), x0.end(), [](int c) { return c < 0; }) || is_zero(x0))
    throw DomainError("x0 must be a nonzero state");
  for (std::size_t i = 0; i < d; ++i)
    if (n[i] < x0[i])
      throw DomainError(fmt::format("progeny target ({}) is not >= x0 ({})", fmt::join(n, ","),
                                    fmt::join(x0, ",")));
}

// P_{x0}(path, N = n) (path optional) from the joint programme on Box(n).
double progeny_mass(const BranchingModel& model, std::span<const int> x0, std::span<const int> n,
                    const PathEvent* path) {
  const Box box{State(n.begin(), n.end())};
  int steps = std::accumulate(n.begin(), n.end(), 0);
  if (path) steps = std::max(steps, path->last_time());
  const TransitionKernel kernel(model, box);
  const JointStateProgeny joint = joint_state_progeny(kernel, x0, steps, box, kInf, path);
  return joint.at(State(model.d(), 0), n);
}

}  // namespace

double progeny_pmf_formula(const BranchingModel& model, std::span<const int> x0, std::span<const int> n) {
  check_query(model, x0, n);
  const std::size_t d = model.d();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d; ++i)
    if (n[i] > 0) keep.push_back(i);
  const std::size_t r = keep.size();
  if (r > kMaxFormulaTypes)
    throw ValidationError(fmt::format("the determinant expansion supports at most {} types with positive "
                                      "target, got {}; use the dynamic programme",
                                      kMaxFormulaTypes, r));

  // Reduced problem on the kept types: atoms producing a removed type are dropped.
  State caps(r), target(r);
  for (std::size_t a = 0; a < r; ++a) caps[a] = target[a] = n[keep[a]] - x0[keep[a]];
  const Box box(caps);
  std::vector<std::vector<double>> powers(r);
  for (std::size_t a = 0; a < r; ++a) {
    std::vector<Atom> atoms;
    for (const Atom& atom : model.law(keep[a]).atoms) {
      bool ok = true;
      for (std::size_t j = 0; j < d; ++j)
        if (n[j] == 0 && atom.k[j] > 0) ok = false;
      if (!ok) continue;
      State k(r);
      for (std::size_t b = 0; b < r; ++b) k[b] = atom.k[keep[b]];
      atoms.push_back({k, atom.p});
    }
    powers[a] = convolution_power(atoms, n[keep[a]], box);
  }

  const auto coords = box.coordinates();
  std::vector<std::size_t> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    std::vector<SignedLatticeMeasure> mu(r);
    for (std::size_t a = 0; a < r; ++a) {
      mu[a] = {box, std::vector<double>(box.size(), 0.0), 0.0};
      const double diag = perm[a] == a ? static_cast<double>(n[keep[a]]) : 0.0;
      for (std::size_t idx = 0; idx < box.size(); ++idx) {
        const double p = powers[a][idx];
        if (p == 0.0) continue;
        mu[a].values[idx] = (diag - coords[idx * r + perm[a]]) * p;
      }
    }
    double chain;
    if (r == 1) {
      chain = mu[0].values[box.index(target)];
    } else {
      SignedLatticeMeasure acc = mu[0];
      for (std::size_t a = 1; a + 1 < r; ++a) acc = convolve(acc, mu[a]);
      chain = convolve_at(acc, mu[r - 1], target);
    }
    total += permutation_sign(perm) * chain;
  } while (std::next_permutation(perm.begin(), perm.end()));

  double prod = 1.0;
  for (std::size_t a = 0; a < r; ++a) prod *= n[keep[a]];
  return total / prod;
}

LatticeDistribution progeny_pmf_dp(const BranchingModel& model, std::span<const int> x0, const State& n_cap) {
  const std::size_t d = model.d();
  if (x0.size() != d || n_cap.size() != d) throw DomainError("x0 and n_cap must have d coordinates");
  if (is_zero(x0)) throw DomainError("x0 must be a nonzero state");
  const Box box(n_cap);
  LatticeDistribution out{box, std::vector<double>(box.size(), 0.0), 0.0};
  if (!box.contains(x0)) {
    out.overflow = 1.0;
    return out;
  }
  // A surviving generation adds at least one individual, so after ||n_cap||_1
  // steps every tree with N <= n_cap has died out.
  const int steps = std::accumulate(n_cap.begin(), n_cap.end(), 0);
  const TransitionKernel kernel(model, box);
  const JointStateProgeny joint = joint_state_progeny(kernel, x0, steps, box, kInf);
  const std::vector<double> slice = joint.progeny_slice(State(d, 0));
  out.mass = slice;
  out.overflow = std::max(0.0, 1.0 - out.retained());
  return out;
}

double path_and_progeny(const BranchingModel& model, const PathEvent& ev, std::span<const int> n) {
  ev.check(model.d());
  check_query(model, ev.x0, n);
  return progeny_mass(model, ev.x0, n, &ev);
}

Lemma1Result lemma1_check(const BranchingModel& model, const TiltVector& a, std::span<const int> x0,
                          const std::vector<PathEvent>& paths, std::span<const int> n) {
  check_query(model, x0, n);
  const BranchingModel tilted = associate(model, a);
  const double z = progeny_mass(model, x0, n, nullptr);
  const double zbar = progeny_mass(tilted, x0, n, nullptr);
  if (!(z > 0.0) || !(zbar > 0.0))
    throw DegenerateConditionError(fmt::format("P(N = ({})) is zero from ({})", fmt::join(n, ","),
                                               fmt::join(x0, ",")));
  Lemma1Result out;
  for (const PathEvent& ev : paths) {
    ev.check(model.d());
    if (!std::equal(ev.x0.begin(), ev.x0.end(), x0.begin(), x0.end()))
      throw DomainError("every path must start from x0");
    const double p = progeny_mass(model, x0, n, &ev) / z;
    const double pbar = progeny_mass(tilted, x0, n, &ev) / zbar;
    out.original.push_back(p);
    out.tilted.push_back(pbar);
    out.max_discrepancy = std::max(out.max_discrepancy, std::abs(p - pbar));
  }
  return out;
}

State lattice_floor(int n, const Vector& w) {
  State out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<int>(std::floor(n * w[i] + 1e-9));
  return out;
}

ProgenyScalingReport proposition_scaling(const BranchingModel& model, std::span<const int> x0,
                                         const std::vector<int>& n_values) {
  const std::size_t d = model.d();
  if (x0.size() != d || is_zero(x0)) throw DomainError("x0 must be a nonzero state of dimension d");
  const ModelDiagnostics diag = validate(model);
  if (!diag.aperiodic_A5)
    throw DomainError("A5 fails: the offspring supports are periodic, so P(N = n) vanishes on a sublattice");
  const SpectralData sp = perron(model);
  if (std::abs(sp.rho - 1.0) > kCriticalityTolerance)
    throw DomainError(fmt::format("the scaling law needs a critical model (rho = {:.17g}); tilt it first", sp.rho));

  ProgenyScalingReport out;
  out.w = sp.v;
  out.sigma = Matrix(d, d);
  const auto cov = covariance_matrices(model);
  for (std::size_t i = 0; i < d; ++i) out.sigma += cov[i] * sp.v[i];
  if (!cholesky_positive_definite(out.sigma))
    throw DomainError("A6 fails: the aggregate covariance matrix is not positive definite");

  // Rows e_i - m^i for i < d, then x0.
  const Matrix m = mean_matrix(model);
  Matrix rows(d, d);
  for (std::size_t i = 0; i + 1 < d; ++i)
    for (std::size_t j = 0; j < d; ++j) rows(i, j) = (i == j ? 1.0 : 0.0) - m(i, j);
  for (std::size_t j = 0; j < d; ++j) rows(d - 1, j) = x0[j];
  out.formula_constant = determinant(rows) /
                         (sp.v[d - 1] * std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(d)) *
                          std::sqrt(determinant(out.sigma)));

  for (int n : n_values) {
    const State target = lattice_floor(n, sp.v);
    bool feasible = true;
    for (std::size_t i = 0; i < d; ++i)
      if (target[i] < x0[i]) feasible = false;
    if (!feasible) {
      out.notes.push_back(fmt::format("n={}: floor(n w) = ({}) lies below x0; skipped", n, fmt::join(target, ",")));
      continue;
    }
    ScalingRow row;
    row.n = n;
    row.target = target;
    row.probability = progeny_pmf_formula(model, x0, target);
    row.scaled = std::pow(static_cast<double>(n), 0.5 * static_cast<double>(d) + 1.0) * row.probability;
    out.rows.push_back(std::move(row));
  }

  if (out.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(out.rows.size());
    for (const auto& r : out.rows) {
      const double x = 1.0 / r.n;
      sx += x;
      sy += r.scaled;
      sxx += x * x;
      sxy += x * r.scaled;
    }
    const double den = k * sxx - sx * sx;
    out.plateau = den != 0.0 ? (sy * sxx - sx * sxy) / den : sy / k;
  } else if (!out.rows.empty()) {
    out.plateau = out.rows.front().scaled;
  }
  return out;
}

Theorem2Report theorem2_verify(const BranchingModel& model, const PathEvent& ev,
                               const std::vector<int>& n_values, const Box& box,
                               std::optional<TiltVector> tilt, double leak_tol) {
  const std::size_t d = model.d();
  ev.check(d);
  const TiltVector a = tilt ? *tilt : critical_tilt(model);
  const BranchingModel tilted = associate(model, a);
  const SpectralData sp = perron(tilted);

  Theorem2Report out;
  out.tilt = a.values();
  out.rho_bar = sp.rho;
  out.u_bar = sp.u;
  out.v_bar = sp.v;
  if (std::abs(sp.rho - 1.0) > 1e-8)
    out.notes.push_back(fmt::format("associated process is not critical (rho_bar = {:.17g})", sp.rho));
  const State& xj = ev.last_state();
  out.limit = dot_state(xj, sp.u) / dot_state(ev.x0, sp.u) *
              path_probability(TransitionKernel(tilted, box), ev, leak_tol);

  for (int n : n_values) {
    const State target = lattice_floor(n, sp.v);
    bool feasible = true;
    for (std::size_t i = 0; i < d; ++i)
      if (target[i] < ev.x0[i]) feasible = false;
    if (!feasible) {
      out.notes.push_back(fmt::format("n={}: floor(n v_bar) lies below x0; skipped", n));
      continue;
    }
    const double z = progeny_pmf_formula(model, ev.x0, target);
    if (!(z > 0.0)) {
      out.notes.push_back(fmt::format("n={}: P(N = ({})) is zero; skipped", n, fmt::join(target, ",")));
      continue;
    }
    // P(path, N = target) = sum_l P(path, N_{k_j} = l) P_{x_j}(N = target - l + x_j).
    const Box pbox(target);
    int steps = std::max(ev.last_time(), 0);
    const JointStateProgeny joint =
        joint_state_progeny(TransitionKernel(model, pbox), ev.x0, steps, pbox, kInf, &ev);
    double joint_prob = 0.0;
    if (pbox.contains(xj)) {
      const std::vector<double> slice = joint.progeny_slice(xj);
      if (is_zero(xj)) {
        joint_prob = slice[pbox.index(target)];
      } else {
        for (std::size_t li = 0; li < slice.size(); ++li) {
          if (slice[li] == 0.0) continue;
          const State l = pbox.state(li);
          State rest(d);
          for (std::size_t i = 0; i < d; ++i) rest[i] = target[i] - l[i] + xj[i];
          joint_prob += slice[li] * progeny_pmf_formula(model, xj, rest);
        }
      }
    }
    Theorem2Row row;
    row.n = n;
    row.target = target;
    row.probability = joint_prob / z;
    row.limit = out.limit;
    row.gap = std::abs(row.probability - out.limit);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace gw
