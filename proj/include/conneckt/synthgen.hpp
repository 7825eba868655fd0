#pragma once

// Seeded generator of ground-truth networks and fluorescence-like recordings.
//
// Spiking model, per time step t and neuron j:
//   spike_j(t) = [u < p_spont] or ([some in-neighbour spiked at t-1] and [u' < p_trans])
//   f_j(t)     = decay * f_j(t-1) + spike_j(t) + noise_sd * N(0, 1),  f_j(-1) = 0
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by
// the standard. Uniforms take the top 53 bits; normals use Box-Muller. The
// network stream is seeded with `seed`, the recording stream with
// splitmix64(seed), so the two never share draws. Every (t, j) cell consumes
// exactly four engine outputs whatever the branch taken.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "conneckt/error.hpp"
#include "conneckt/io.hpp"
#include "conneckt/types.hpp"

namespace conneckt {

struct SimParams {
  std::size_t p = 50;
  double density = 0.015;
  std::size_t T = 5000;
  double p_spont = 0.005;
  double p_trans = 0.5;
  double decay = 0.98;
  double noise_sd = 0.1;
  std::uint64_t seed = 1;
  /// (neuron, time) cells that spike regardless of the draws.
  std::vector<std::pair<std::size_t, std::size_t>> forced_spikes;

  void validate() const {
    auto probability = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) {
        fail(ErrorKind::Parameter,
             std::string(name) + " must lie in [0, 1], got " + format_real(v));
      }
    };
    probability(density, "density");
    probability(p_spont, "p_spont");
    probability(p_trans, "p_trans");
    if (!(decay > 0.0 && decay < 1.0)) {
      fail(ErrorKind::Parameter, "decay must lie in (0, 1), got " + format_real(decay));
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
      fail(ErrorKind::Parameter, "noise_sd must be finite and >= 0");
    }
    if (p < 2) fail(ErrorKind::Parameter, "simulation needs at least 2 neurons");
    if (T < 1) fail(ErrorKind::Parameter, "simulation needs at least 1 sample");
    for (const auto& [neuron, t] : forced_spikes) {
      if (neuron >= p || t >= T) {
        fail(ErrorKind::Range, "forced spike outside the simulated range");
      }
    }
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

inline Network generate_network(const SimParams& params) {
  params.validate();
  Rng rng(params.seed);
  Network net(params.p);
  for (std::size_t i = 0; i < params.p; ++i) {
    for (std::size_t j = 0; j < params.p; ++j) {
      if (i == j) continue;
      if (rng.uniform() < params.density) net.add_edge(i, j);
    }
  }
  return net;
}

inline FluorescenceRecording simulate_recording(const Network& net, const SimParams& params) {
  params.validate();
  if (net.size() != params.p) {
    fail(ErrorKind::Dimension, "network has " + std::to_string(net.size()) +
                                   " neurons, parameters ask for " +
                                   std::to_string(params.p));
  }
  const std::size_t p = params.p;
  const std::size_t T = params.T;

  std::vector<std::vector<std::size_t>> inputs(p);
  for (const auto& [from, to] : net.edges()) inputs[to].push_back(from);

  std::vector<std::vector<bool>> forced(p, std::vector<bool>(T, false));
  for (const auto& [neuron, t] : params.forced_spikes) forced[neuron][t] = true;

  Rng rng(splitmix64(params.seed));
  FluorescenceRecording rec;
  rec.values.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(T));
  std::vector<char> fired(p, 0), fired_next(p, 0);
  std::vector<double> level(p, 0.0);

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < p; ++j) {
      const double u_spont = rng.uniform();
      const double u_trans = rng.uniform();
      const double noise = rng.normal();

      bool driven = false;
      if (t > 0) {
        for (std::size_t i : inputs[j]) {
          if (fired[i]) {
            driven = true;
            break;
          }
        }
      }
      const bool spike = forced[j][t] || u_spont < params.p_spont ||
                         (driven && u_trans < params.p_trans);
      fired_next[j] = spike ? 1 : 0;
      level[j] = params.decay * level[j] + (spike ? 1.0 : 0.0) + params.noise_sd * noise;
      rec.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t)) = level[j];
    }
    fired.swap(fired_next);
  }
  return rec;
}

}  // namespace conneckt
