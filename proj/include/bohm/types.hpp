#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace bohm {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to [0, 2*pi).
inline double wrap_two_pi(double x) noexcept {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Reduces an angle to [-pi, pi).
inline double wrap_pi(double x) noexcept { return wrap_two_pi(x + kPi) - kPi; }

struct Vec3 {
  double x{}, y{}, z{};

  friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
  friend Vec3 operator-(Vec3 a) noexcept { return {-a.x, -a.y, -a.z}; }

  double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
  double norm_xy() const noexcept { return std::hypot(x, y); }
};

enum class Family { Antiparallel, Parallel };

inline std::string to_string(Family f) { return f == Family::Antiparallel ? "antiparallel" : "parallel"; }

inline Family family_from_string(const std::string& s) {
  if (s == "antiparallel") return Family::Antiparallel;
  if (s == "parallel") return Family::Parallel;
  throw Error(ErrorKind::ConfigError, "state.family must be 'antiparallel' or 'parallel', got '" + s + "'");
}

/// Euler angles of one rotor, composition R = Rz(beta) Ry(alpha) Rz(gamma).
/// alpha is the polar angle; beta and gamma are azimuthal.
struct Orientation {
  double alpha{kPi / 2};
  double beta{};
  double gamma{};

  /// Builds an orientation with beta and gamma reduced modulo 2*pi.
  static Orientation reduced(double alpha, double beta, double gamma) {
    return {alpha, wrap_two_pi(beta), wrap_two_pi(gamma)};
  }
};

/// Six-angle configuration of the rotor pair, ordered
/// (alpha1, beta1, gamma1, alpha2, beta2, gamma2).
struct PairConfiguration {
  Orientation rotor1;
  Orientation rotor2;

  std::array<double, 6> as_array() const noexcept {
    return {rotor1.alpha, rotor1.beta, rotor1.gamma, rotor2.alpha, rotor2.beta, rotor2.gamma};
  }
  static PairConfiguration from_array(const std::array<double, 6>& z) noexcept {
    return {{z[0], z[1], z[2]}, {z[3], z[4], z[5]}};
  }
  PairConfiguration reduced() const {
    return {Orientation::reduced(rotor1.alpha, rotor1.beta, rotor1.gamma),
            Orientation::reduced(rotor2.alpha, rotor2.beta, rotor2.gamma)};
  }
  const Orientation& rotor(int i) const noexcept { return i == 0 ? rotor1 : rotor2; }
};

/// Guiding state of the pair:
///   antiparallel: cos(theta/2)|up,down> + e^{i phase} sin(theta/2)|down,up>
///   parallel:     cos(theta/2)|up,up>   + e^{i phase} sin(theta/2)|down,down>
/// inertia only rescales time.
struct QubitPairState {
  Family family{Family::Antiparallel};
  double theta{};
  double phase{};
  double inertia{1.0};

  void validate() const {
    if (!(theta >= 0.0 && theta <= kPi))
      throw Error(ErrorKind::DomainError, "state.theta must lie in [0, pi], got " + std::to_string(theta));
    if (!(phase >= 0.0 && phase < kTwoPi))
      throw Error(ErrorKind::DomainError, "state.phase must lie in [0, 2pi), got " + std::to_string(phase));
    if (!(inertia > 0.0) || !std::isfinite(inertia))
      throw Error(ErrorKind::DomainError, "state.inertia must be positive, got " + std::to_string(inertia));
  }

  double cos_half() const noexcept { return std::cos(0.5 * theta); }
  double sin_half() const noexcept { return std::sin(0.5 * theta); }

  /// Largest |psi| over configuration space.
  double max_amplitude() const noexcept { return std::max(cos_half(), sin_half()); }
};

/// Guards against evaluating fields at nodes of psi or at the Euler-angle poles.
struct FieldThresholds {
  double node_relative{1e-8};  // |psi| <= node_relative * max|psi| is a node
  double sin_alpha_min{1e-8};
};

}  // namespace bohm
