#pragma once

// Quantum-equilibrium initial configurations: rejection sampling of |psi|^2
// against the SO(3) x SO(3) volume element, one independent random stream
// per sample index.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "types.hpp"

namespace bohm {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream: the n-th draw is a pure function of (key, n), so a
/// stream for sample k can be opened anywhere without generating k-1 others.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix64(seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform double in the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_{};
};

/// |psi|^2 in closed form (not normalized; the maximum is max(c, s)^2 <= 1).
inline double density(const QubitPairState& state, const PairConfiguration& z) noexcept {
  const double c = state.cos_half(), s = state.sin_half();
  const double c1 = std::cos(0.5 * z.rotor1.alpha), s1 = std::sin(0.5 * z.rotor1.alpha);
  const double c2 = std::cos(0.5 * z.rotor2.alpha), s2 = std::sin(0.5 * z.rotor2.alpha);
  if (state.family == Family::Antiparallel) {
    return c * c * c1 * c1 * s2 * s2 + s * s * s1 * s1 * c2 * c2 +
           2.0 * c * s * c1 * s1 * c2 * s2 * std::cos(state.phase + z.rotor1.beta - z.rotor2.beta);
  }
  return c * c * c1 * c1 * c2 * c2 + s * s * s1 * s1 * s2 * s2 +
         2.0 * c * s * c1 * s1 * c2 * s2 * std::cos(state.phase + z.rotor1.beta + z.rotor2.beta);
}

struct EnsembleSpec {
  QubitPairState state;
  std::uint64_t count{1};
  std::uint64_t seed{};

  void validate() const {
    state.validate();
    if (count < 1) throw Error(ErrorKind::ConfigError, "ensemble.count must be >= 1");
  }
};

struct SampleDraw {
  PairConfiguration config;
  double density{};
  std::uint64_t attempts{};
};

/// Attempts allowed per sample before the state is declared degenerate
/// (an acceptance rate below 1e-4 is never expected: max density >= 1/2).
inline constexpr std::uint64_t kMaxAttemptsPerSample = 1'000'000;

/// Sample k of the ensemble; depends only on (seed, k, state).
inline SampleDraw sample_one(const QubitPairState& state, std::uint64_t seed, std::uint64_t k) {
  CounterRng rng(seed, k);
  for (std::uint64_t attempt = 1; attempt <= kMaxAttemptsPerSample; ++attempt) {
    PairConfiguration z;
    z.rotor1.alpha = std::acos(2.0 * rng.uniform() - 1.0);
    z.rotor1.beta = kTwoPi * rng.uniform();
    z.rotor1.gamma = kTwoPi * rng.uniform();
    z.rotor2.alpha = std::acos(2.0 * rng.uniform() - 1.0);
    z.rotor2.beta = kTwoPi * rng.uniform();
    z.rotor2.gamma = kTwoPi * rng.uniform();
    const double d = density(state, z);
    if (rng.uniform() < d) return {z, d, attempt};
  }
  throw Error(ErrorKind::EnsembleDegenerate, "rejection sampler acceptance rate below 1e-4");
}

/// The whole ensemble in index order; identical for any worker count.
inline std::vector<SampleDraw> sample(const EnsembleSpec& spec, unsigned threads = 1) {
  spec.validate();
  std::vector<SampleDraw> out(spec.count);
  parallel_for(spec.count, threads, [&](std::size_t k) { out[k] = sample_one(spec.state, spec.seed, k); });
  std::uint64_t attempts = 0;
  for (const auto& d : out) attempts += d.attempts;
  if (static_cast<double>(spec.count) / static_cast<double>(attempts) < 1e-4)
    throw Error(ErrorKind::EnsembleDegenerate, "rejection sampler acceptance rate below 1e-4");
  return out;
}

}  // namespace bohm
