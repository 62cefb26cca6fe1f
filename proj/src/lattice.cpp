#include "gw/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gw/errors.hpp"

namespace gw {
namespace {

constexpr std::size_t kMaxBoxSize = 50'000'000;

// Adds in * law into out on the box; returns the mass that lands outside.
double convolve_with_law(std::span<const double> in, const Box& box, std::span<const int> coords,
                         const OffspringLaw& law, std::span<double> out) {
  const std::size_t d = box.dim();
  const State& caps = box.caps();
  std::vector<std::size_t> offsets;
  offsets.reserve(law.atoms.size());
  for (const Atom& a : law.atoms) {
    std::size_t off = 0;
    for (std::size_t j = 0; j < d; ++j) off += static_cast<std::size_t>(a.k[j]) * box.stride(j);
    offsets.push_back(off);
  }
  double dropped = 0.0;
  for (std::size_t idx = 0; idx < in.size(); ++idx) {
    const double m = in[idx];
    if (m == 0.0) continue;
    const int* c = coords.data() + idx * d;
    for (std::size_t a = 0; a < law.atoms.size(); ++a) {
      const Atom& atom = law.atoms[a];
      bool fits = true;
      for (std::size_t j = 0; j < d; ++j)
        if (c[j] + atom.k[j] > caps[j]) {
          fits = false;
          break;
        }
      if (fits)
        out[idx + offsets[a]] += m * atom.p;
      else
        dropped += m * atom.p;
    }
  }
  return dropped;
}

void require_dim(const Box& box, std::span<const int> x) {
  if (x.size() != box.dim())
    throw DomainError(fmt::format("state has {} coordinates, box has {}", x.size(), box.dim()));
}

}  // namespace

// ---------------------------------------------------------------- Box

Box::Box(State caps) : caps_(std::move(caps)) {
  if (caps_.empty()) throw ValidationError("box needs at least one coordinate");
  strides_.assign(caps_.size(), 1);
  size_ = 1;
  for (std::size_t j = caps_.size(); j-- > 0;) {
    if (caps_[j] < 0) throw ValidationError("box caps must be nonnegative");
    strides_[j] = size_;
    size_ *= static_cast<std::size_t>(caps_[j]) + 1;
    if (size_ > kMaxBoxSize) throw ValidationError("box has too many lattice points");
  }
}

bool Box::contains(std::span<const int> x) const {
  if (x.size() != caps_.size()) return false;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] < 0 || x[j] > caps_[j]) return false;
  return true;
}

std::size_t Box::index(std::span<const int> x) const {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < x.size(); ++j) idx += static_cast<std::size_t>(x[j]) * strides_[j];
  return idx;
}

State Box::state(std::size_t idx) const {
  State x(caps_.size());
  for (std::size_t j = 0; j < caps_.size(); ++j) {
    x[j] = static_cast<int>(idx / strides_[j]);
    idx %= strides_[j];
  }
  return x;
}

std::vector<int> Box::coordinates() const {
  const std::size_t d = dim();
  std::vector<int> out(size_ * d);
  State x(d, 0);
  for (std::size_t idx = 0; idx < size_; ++idx) {
    std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(idx * d));
    for (std::size_t j = d; j-- > 0;) {
      if (x[j] < caps_[j]) {
        ++x[j];
        break;
      }
      x[j] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------- distributions

LatticeDistribution LatticeDistribution::point(const Box& box, std::span<const int> x) {
  require_dim(box, x);
  if (!box.contains(x)) throw DomainError(fmt::format("state ({}) lies outside the box", fmt::join(x, ",")));
  LatticeDistribution dist{box, std::vector<double>(box.size(), 0.0), 0.0};
  dist.mass[box.index(x)] = 1.0;
  return dist;
}

double LatticeDistribution::at(std::span<const int> x) const {
  return box.contains(x) ? mass[box.index(x)] : 0.0;
}

double LatticeDistribution::retained() const {
  return std::accumulate(mass.begin(), mass.end(), 0.0);
}

void LatticeDistribution::check(double tol) const {
  if (mass.size() != box.size()) throw ValidationError("mass vector does not match the box");
  for (double m : mass)
    if (!(m >= 0.0)) throw ValidationError("negative lattice mass");
  if (!(overflow >= 0.0)) throw ValidationError("negative overflow");
  const double total = retained() + overflow;
  if (std::abs(total - 1.0) > tol)
    throw ValidationError(fmt::format("lattice masses plus overflow sum to {:.17g}", total));
}

SignedLatticeMeasure convolve(const SignedLatticeMeasure& a, const SignedLatticeMeasure& b) {
  if (!(a.box == b.box)) throw DomainError("convolution operands live on different boxes");
  const Box& box = a.box;
  const std::size_t d = box.dim();
  const auto coords = box.coordinates();
  SignedLatticeMeasure out{box, std::vector<double>(box.size(), 0.0), a.overflow_abs + b.overflow_abs};
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (a.values[i] == 0.0) continue;
    const int* ci = coords.data() + i * d;
    for (std::size_t k = 0; k < box.size(); ++k) {
      if (b.values[k] == 0.0) continue;
      const int* ck = coords.data() + k * d;
      bool fits = true;
      for (std::size_t j = 0; j < d; ++j)
        if (ci[j] + ck[j] > box.caps()[j]) {
          fits = false;
          break;
        }
      const double prod = a.values[i] * b.values[k];
      if (fits)
        out.values[i + k] += prod;  // row-major offsets add when nothing wraps
      else
        out.overflow_abs += std::abs(prod);
    }
  }
  return out;
}

double convolve_at(const SignedLatticeMeasure& a, const SignedLatticeMeasure& b,
                   std::span<const int> target) {
  if (!(a.box == b.box)) throw DomainError("convolution operands live on different boxes");
  const Box& box = a.box;
  if (!box.contains(target)) throw DomainError("convolution target outside the box");
  const std::size_t d = box.dim();
  const auto coords = box.coordinates();
  const std::size_t t = box.index(target);
  double sum = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (a.values[i] == 0.0) continue;
    const int* ci = coords.data() + i * d;
    bool below = true;
    for (std::size_t j = 0; j < d; ++j)
      if (ci[j] > target[j]) {
        below = false;
        break;
      }
    if (below) sum += a.values[i] * b.values[t - i];
  }
  return sum;
}

void PathEvent::check(std::size_t d) const {
  if (marks.empty()) throw ValidationError("path event needs at least one observation");
  if (x0.size() != d) throw ValidationError("initial state has the wrong dimension");
  if (std::all_of(x0.begin(), x0.end(), [](int c) { return c == 0; }))
    throw ValidationError("initial state must be nonzero");
  int prev = 0;
  for (const Mark& m : marks) {
    if (m.time < prev) throw ValidationError("path times must be nonnegative and nondecreasing");
    if (m.state.size() != d) throw ValidationError("path state has the wrong dimension");
    if (std::any_of(m.state.begin(), m.state.end(), [](int c) { return c < 0; }))
      throw ValidationError("path states must be nonnegative");
    prev = m.time;
  }
}

// ---------------------------------------------------------------- kernel

TransitionKernel::TransitionKernel(const BranchingModel& model, Box box) : box_(std::move(box)) {
  const std::size_t d = box_.dim();
  if (d != model.d()) throw DomainError("box dimension does not match the model");
  const std::size_t n = box_.size();
  if (n > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("box too large for kernel");
  const auto coords = box_.coordinates();

  offsets_.assign(n + 1, 0);
  row_overflow_.assign(n, 0.0);
  std::vector<double> prev(n, 0.0), cur(n, 0.0);

  for (std::size_t idx = 0; idx < n; ++idx) {
    std::fill(cur.begin(), cur.end(), 0.0);
    const int* c = coords.data() + idx * d;
    std::size_t type = d;
    for (std::size_t j = d; j-- > 0;)
      if (c[j] > 0) {
        type = j;
        break;
      }
    if (type == d) {
      cur[0] = 1.0;  // state 0 is absorbing
    } else {
      const std::size_t parent = idx - box_.stride(type);
      std::fill(prev.begin(), prev.end(), 0.0);
      for (const Entry& e : row(parent)) prev[e.to] = e.p;
      row_overflow_[idx] = row_overflow_[parent] +
                           convolve_with_law(prev, box_, coords, model.law(type), cur);
    }
    for (std::size_t to = 0; to < n; ++to)
      if (cur[to] != 0.0) entries_.push_back({static_cast<std::uint32_t>(to), cur[to]});
    offsets_[idx + 1] = entries_.size();
  }
}

double TransitionKernel::forward(std::span<const double> in, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  double escaped = 0.0;
  for (std::size_t from = 0; from < in.size(); ++from) {
    const double m = in[from];
    if (m == 0.0) continue;
    escaped += m * row_overflow_[from];
    for (const Entry& e : row(from)) out[e.to] += m * e.p;
  }
  return escaped;
}

void TransitionKernel::backward(std::span<const double> h, std::span<double> out) const {
  for (std::size_t from = 0; from < box_.size(); ++from) {
    double s = 0.0;
    for (const Entry& e : row(from)) s += e.p * h[e.to];
    out[from] = s;
  }
}

// ---------------------------------------------------------------- transitions

LatticeDistribution one_step(const BranchingModel& model, std::span<const int> x, const Box& box) {
  if (box.dim() != model.d()) throw DomainError("box dimension does not match the model");
  LatticeDistribution dist = LatticeDistribution::point(box, State(model.d(), 0));
  if (!box.contains(x)) throw DomainError(fmt::format("state ({}) lies outside the box", fmt::join(x, ",")));
  const auto coords = box.coordinates();
  std::vector<double> next(box.size());
  for (std::size_t i = 0; i < model.d(); ++i)
    for (int c = 0; c < x[i]; ++c) {
      std::fill(next.begin(), next.end(), 0.0);
      dist.overflow += convolve_with_law(dist.mass, box, coords, model.law(i), next);
      dist.mass.swap(next);
    }
  return dist;
}

LatticeDistribution n_step(const TransitionKernel& kernel, std::span<const int> x, int n,
                           double leak_tol) {
  if (n < 0) throw DomainError("number of steps must be nonnegative");
  LatticeDistribution dist = LatticeDistribution::point(kernel.box(), x);
  std::vector<double> next(dist.mass.size());
  for (int k = 0; k < n; ++k) {
    dist.overflow += kernel.forward(dist.mass, next);
    dist.mass.swap(next);
  }
  if (dist.overflow > leak_tol)
    throw TruncationError(fmt::format(
        "{:.3g} of the mass left the box (caps {}) within {} steps; enlarge the box",
        dist.overflow, fmt::join(kernel.box().caps(), ","), n));
  return dist;
}

LatticeDistribution n_step(const BranchingModel& model, std::span<const int> x, int n,
                           const Box& box, double leak_tol) {
  require_dim(box, x);
  if (!box.contains(x)) throw DomainError("initial state lies outside the box");
  return n_step(TransitionKernel(model, box), x, n, leak_tol);
}

double path_probability(const TransitionKernel& kernel, const PathEvent& ev, double leak_tol) {
  const Box& box = kernel.box();
  ev.check(box.dim());
  if (!box.contains(ev.x0)) throw DomainError("initial state lies outside the box");
  double prob = 1.0;
  State cur = ev.x0;
  int t = 0;
  for (const auto& mark : ev.marks) {
    if (!box.contains(mark.state)) throw DomainError("path state lies outside the box");
    const int dt = mark.time - t;
    if (dt == 0) {
      if (mark.state != cur) return 0.0;
    } else {
      prob *= n_step(kernel, cur, dt, leak_tol).at(mark.state);
    }
    if (prob == 0.0) return 0.0;
    cur = mark.state;
    t = mark.time;
  }
  return prob;
}

double path_probability(const BranchingModel& model, const PathEvent& ev, const Box& box,
                        double leak_tol) {
  return path_probability(TransitionKernel(model, box), ev, leak_tol);
}

// ---------------------------------------------------------------- (state, progeny)

double JointStateProgeny::at(std::span<const int> state, std::span<const int> progeny) const {
  if (!state_box.contains(state) || !progeny_box.contains(progeny)) return 0.0;
  return mass[state_box.index(state) * progeny_box.size() + progeny_box.index(progeny)];
}

LatticeDistribution JointStateProgeny::state_marginal() const {
  LatticeDistribution out{state_box, std::vector<double>(state_box.size(), 0.0),
                          overflow_state + overflow_progeny};
  const std::size_t p = progeny_box.size();
  for (std::size_t s = 0; s < state_box.size(); ++s)
    for (std::size_t n = 0; n < p; ++n) out.mass[s] += mass[s * p + n];
  return out;
}

LatticeDistribution JointStateProgeny::progeny_marginal() const {
  LatticeDistribution out{progeny_box, std::vector<double>(progeny_box.size(), 0.0),
                          overflow_state + overflow_progeny};
  const std::size_t p = progeny_box.size();
  for (std::size_t s = 0; s < state_box.size(); ++s)
    for (std::size_t n = 0; n < p; ++n) out.mass[n] += mass[s * p + n];
  return out;
}

std::vector<double> JointStateProgeny::progeny_slice(std::span<const int> state) const {
  const std::size_t p = progeny_box.size();
  std::vector<double> out(p, 0.0);
  if (!state_box.contains(state)) return out;
  const std::size_t s = state_box.index(state);
  std::copy(mass.begin() + static_cast<std::ptrdiff_t>(s * p),
            mass.begin() + static_cast<std::ptrdiff_t>((s + 1) * p), out.begin());
  return out;
}

JointStateProgeny joint_state_progeny(const TransitionKernel& kernel, std::span<const int> x0, int k,
                                      const Box& progeny_box, double leak_tol,
                                      const PathEvent* constraint) {
  const Box& sbox = kernel.box();
  const std::size_t d = sbox.dim();
  if (progeny_box.dim() != d) throw DomainError("progeny box dimension does not match the model");
  if (k < 0) throw DomainError("number of steps must be nonnegative");
  require_dim(sbox, x0);
  if (!sbox.contains(x0) || !progeny_box.contains(x0))
    throw DomainError("initial state lies outside the state or progeny box");
  if (constraint) {
    constraint->check(d);
    if (constraint->x0 != State(x0.begin(), x0.end()))
      throw DomainError("path constraint starts from a different state");
  }

  const std::size_t ns = sbox.size();
  const std::size_t np = progeny_box.size();
  const auto scoords = sbox.coordinates();
  const auto pcoords = progeny_box.coordinates();
  const State& pcaps = progeny_box.caps();
  std::vector<std::size_t> shift(ns, 0);  // progeny-index offset of adding state s
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t j = 0; j < d; ++j)
      shift[s] += static_cast<std::size_t>(scoords[s * d + j]) * progeny_box.stride(j);

  JointStateProgeny out{sbox, progeny_box, std::vector<double>(ns * np, 0.0), 0.0, 0.0};
  out.mass[sbox.index(x0) * np + progeny_box.index(x0)] = 1.0;
  std::vector<char> live(ns, 0);
  live[sbox.index(x0)] = 1;

  auto apply_marks = [&](int t) {
    if (!constraint) return;
    for (const auto& mark : constraint->marks) {
      if (mark.time != t) continue;
      const bool inside = sbox.contains(mark.state);
      const std::size_t keep = inside ? sbox.index(mark.state) : ns;
      for (std::size_t s = 0; s < ns; ++s) {
        if (s == keep || !live[s]) continue;
        std::fill(out.mass.begin() + static_cast<std::ptrdiff_t>(s * np),
                  out.mass.begin() + static_cast<std::ptrdiff_t>((s + 1) * np), 0.0);
        live[s] = 0;
      }
    }
  };
  apply_marks(0);

  std::vector<double> next(ns * np);
  std::vector<char> next_live(ns);
  for (int t = 1; t <= k; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(next_live.begin(), next_live.end(), 0);
    for (std::size_t s = 0; s < ns; ++s) {
      if (!live[s]) continue;
      const double* block = out.mass.data() + s * np;
      const auto row = kernel.row(s);
      const double escape = kernel.row_overflow(s);
      for (std::size_t p = 0; p < np; ++p) {
        const double m = block[p];
        if (m == 0.0) continue;
        out.overflow_state += m * escape;
        const int* pc = pcoords.data() + p * d;
        for (const auto& e : row) {
          const int* sc = scoords.data() + static_cast<std::size_t>(e.to) * d;
          bool fits = true;
          for (std::size_t j = 0; j < d; ++j)
            if (pc[j] + sc[j] > pcaps[j]) {
              fits = false;
              break;
            }
          if (fits) {
            next[static_cast<std::size_t>(e.to) * np + p + shift[e.to]] += m * e.p;
            next_live[e.to] = 1;
          } else {
            out.overflow_progeny += m * e.p;
          }
        }
      }
    }
    out.mass.swap(next);
    live.swap(next_live);
    apply_marks(t);
  }
  const double leaked = out.overflow_state + out.overflow_progeny;
  if (leaked > leak_tol)
    throw TruncationError(fmt::format(
        "{:.3g} of the (state, progeny) mass left the boxes within {} steps; enlarge them", leaked, k));
  return out;
}

JointStateProgeny joint_state_progeny(const BranchingModel& model, std::span<const int> x0, int k,
                                      const Box& state_box, const Box& progeny_box, double leak_tol,
                                      const PathEvent* constraint) {
  return joint_state_progeny(TransitionKernel(model, state_box), x0, k, progeny_box, leak_tol,
                             constraint);
}

}  // namespace gw
