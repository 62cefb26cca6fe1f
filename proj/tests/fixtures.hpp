#pragma once

#include <cmath>
#include <random>
#include <string>

#include "gw/model.hpp"
#include "gw/spectral.hpp"
#include "gw/tilt.hpp"

namespace fx {

inline gw::BranchingModel model_a() {
  return gw::BranchingModel({{{{{0}, 0.25}, {{2}, 0.75}}}});
}
inline gw::BranchingModel model_b() {
  return gw::BranchingModel({{{{{0}, 0.3}, {{1}, 0.4}, {{2}, 0.3}}}});
}
inline gw::BranchingModel model_c() {
  return gw::BranchingModel({{{{{0, 0}, 0.4}, {{1, 1}, 0.6}}},
                             {{{{0, 0}, 0.4}, {{1, 0}, 0.2}, {{0, 1}, 0.2}, {{0, 2}, 0.2}}}});
}
inline gw::BranchingModel model_d() {
  return gw::BranchingModel({{{{{0}, 0.2}, {{1}, 0.3}, {{2}, 0.5}}}});
}
inline gw::BranchingModel model_e() {
  return gw::BranchingModel({{{{{0}, 0.5}, {{1}, 0.5}}}});
}

inline std::string data_dir() { return GW_DATA_DIR; }

/// Random finite-support model whose mean matrix is primitive (every type
/// can produce every type) and which puts mass on the empty offspring.
inline gw::BranchingModel random_model(std::mt19937_64& rng, std::size_t d, int max_child = 2) {
  std::uniform_int_distribution<int> child(0, max_child);
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  std::vector<gw::OffspringLaw> laws;
  for (std::size_t i = 0; i < d; ++i) {
    gw::OffspringLaw law;
    law.atoms.push_back({gw::State(d, 0), mass(rng)});
    for (std::size_t j = 0; j < d; ++j) {
      gw::State k(d, 0);
      k[j] = 1;
      law.atoms.push_back({k, mass(rng)});
    }
    for (int extra = 0; extra < 2; ++extra) {
      gw::State k(d);
      for (auto& c : k) c = child(rng);
      law.atoms.push_back({k, mass(rng)});
    }
    double total = 0.0;
    for (const auto& a : law.atoms) total += a.p;
    for (auto& a : law.atoms) a.p /= total;
    laws.push_back(law);
  }
  return gw::BranchingModel(laws);
}


/// MODEL C tilted by a = 0.8 * 1: a two-type subcritical model (rho ~ 0.794)
/// whose Yaglom law fits in a 40 x 40 box.
inline gw::BranchingModel model_c8() {
  return gw::associate(model_c(), gw::TiltVector::uniform(2, 0.8));
}

}  // namespace fx
