#pragma once

// Closed-form two-rotor pilot wave and the Bohmian fields derived from it.
//
// Each rotor carries a spin-1/2 Wigner function of its Euler angles:
//   up(a, b, g)   = cos(a/2) exp(-i (b + g) / 2)
//   down(a, b, g) = sin(a/2) exp(+i (b - g) / 2)
// Phase derivatives are always taken as Im(d psi / psi), so the multivalued
// phase S is never materialized.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "errors.hpp"
#include "types.hpp"

namespace bohm {

/// A single-rotor basis function with the partials the angular Laplacian needs.
struct BasisValue {
  cplx value;
  cplx d_alpha, d_beta, d_gamma;
  cplx d_alpha2, d_beta2, d_gamma2, d_beta_gamma;
};

namespace detail {

struct HalfAngles {
  double cos_a, sin_a;  // cos(alpha/2), sin(alpha/2)
  cplx eb, eg;          // exp(i beta/2), exp(i gamma/2)
};

inline HalfAngles half_angles(const Orientation& o) noexcept {
  return {std::cos(0.5 * o.alpha), std::sin(0.5 * o.alpha), std::polar(1.0, 0.5 * o.beta),
          std::polar(1.0, 0.5 * o.gamma)};
}

inline BasisValue up_from(const HalfAngles& h) noexcept {
  const cplx phase = std::conj(h.eb * h.eg);  // exp(-i(b+g)/2)
  const cplx v = h.cos_a * phase;
  const cplx mi2(0.0, -0.5);
  return {v, -0.5 * h.sin_a * phase, mi2 * v, mi2 * v, -0.25 * v, -0.25 * v, -0.25 * v, -0.25 * v};
}

inline BasisValue down_from(const HalfAngles& h) noexcept {
  const cplx phase = h.eb * std::conj(h.eg);  // exp(i(b-g)/2)
  const cplx v = h.sin_a * phase;
  const cplx pi2(0.0, 0.5);
  return {v, 0.5 * h.cos_a * phase, pi2 * v, -pi2 * v, -0.25 * v, -0.25 * v, -0.25 * v, 0.25 * v};
}

}  // namespace detail

inline BasisValue basis_up(const Orientation& o) noexcept { return detail::up_from(detail::half_angles(o)); }
inline BasisValue basis_down(const Orientation& o) noexcept { return detail::down_from(detail::half_angles(o)); }

/// Second partials of psi within one rotor's angles.
struct SecondPartials {
  cplx aa, bb, gg, bg;
};

/// psi with its six first partials (a1, b1, g1, a2, b2, g2) and per-rotor
/// second partials.
struct WaveValue {
  cplx psi;
  std::array<cplx, 6> dpsi;
  std::array<SecondPartials, 2> d2psi;
};

/// Evaluates psi = A f(z1) g(z2) + B h(z1) k(z2) for the family of `state`.
inline WaveValue pilot_wave(const QubitPairState& state, const PairConfiguration& z) noexcept {
  const auto h1 = detail::half_angles(z.rotor1);
  const auto h2 = detail::half_angles(z.rotor2);
  const BasisValue up1 = detail::up_from(h1), dn1 = detail::down_from(h1);
  const BasisValue up2 = detail::up_from(h2), dn2 = detail::down_from(h2);

  const cplx a(state.cos_half(), 0.0);
  const cplx b = std::polar(state.sin_half(), state.phase);

  const BasisValue& f = up1;
  const BasisValue& h = dn1;
  const BasisValue& g = state.family == Family::Antiparallel ? dn2 : up2;
  const BasisValue& k = state.family == Family::Antiparallel ? up2 : dn2;

  const cplx ag = a * g.value, bk = b * k.value;  // rotor-2 weights for rotor-1 partials
  const cplx af = a * f.value, bh = b * h.value;  // rotor-1 weights for rotor-2 partials

  WaveValue w;
  w.psi = af * g.value + bh * k.value;
  w.dpsi = {ag * f.d_alpha + bk * h.d_alpha, ag * f.d_beta + bk * h.d_beta, ag * f.d_gamma + bk * h.d_gamma,
            af * g.d_alpha + bh * k.d_alpha, af * g.d_beta + bh * k.d_beta, af * g.d_gamma + bh * k.d_gamma};
  w.d2psi[0] = {ag * f.d_alpha2 + bk * h.d_alpha2, ag * f.d_beta2 + bk * h.d_beta2,
                ag * f.d_gamma2 + bk * h.d_gamma2, ag * f.d_beta_gamma + bk * h.d_beta_gamma};
  w.d2psi[1] = {af * g.d_alpha2 + bh * k.d_alpha2, af * g.d_beta2 + bh * k.d_beta2,
                af * g.d_gamma2 + bh * k.d_gamma2, af * g.d_beta_gamma + bh * k.d_beta_gamma};
  return w;
}

/// Applies the real rotation-generator triple of one rotor to a gradient
/// (d/dalpha, d/dbeta, d/dgamma) of a scalar field. With the phase gradient
/// this yields the Bohmian angular momentum M = i M_hat S.
inline Vec3 rotor_generator(double alpha, double beta, double g_alpha, double g_beta, double g_gamma) noexcept {
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  const double sb = std::sin(beta), cb = std::cos(beta);
  const double cot = ca / sa;
  return {-cot * cb * g_beta - sb * g_alpha + (cb / sa) * g_gamma,
          -cot * sb * g_beta + cb * g_alpha + (sb / sa) * g_gamma, -g_beta};
}

/// Shared local quantities at a configuration away from nodes and poles.
struct LocalFields {
  WaveValue wave;
  std::array<double, 6> grad_phase;    // Im(d psi / psi)
  std::array<double, 6> grad_log_amp;  // Re(d psi / psi)
  std::array<double, 2> sin_alpha, cos_alpha;
};

/// Evaluates psi and its phase/amplitude log-gradients, enforcing the node and
/// pole guards.
inline LocalFields local_fields(const QubitPairState& state, const PairConfiguration& z,
                                const FieldThresholds& thr = {}) {
  LocalFields lf;
  for (int i = 0; i < 2; ++i) {
    const double a = z.rotor(i).alpha;
    lf.sin_alpha[i] = std::sin(a);
    lf.cos_alpha[i] = std::cos(a);
    if (!(lf.sin_alpha[i] > thr.sin_alpha_min))
      throw Error(ErrorKind::CoordinateSingularity, "sin(alpha" + std::to_string(i + 1) + ") below threshold");
  }
  lf.wave = pilot_wave(state, z);
  const double r = std::abs(lf.wave.psi);
  if (!(r > thr.node_relative * state.max_amplitude()))
    throw Error(ErrorKind::NodeProximity, "|psi| below node threshold");
  const cplx inv = 1.0 / lf.wave.psi;
  for (int j = 0; j < 6; ++j) {
    const cplx q = lf.wave.dpsi[j] * inv;
    lf.grad_phase[j] = q.imag();
    lf.grad_log_amp[j] = q.real();
  }
  return lf;
}

struct AngularMomentumPair {
  Vec3 m1;
  Vec3 m2;
  const Vec3& operator[](int i) const noexcept { return i == 0 ? m1 : m2; }
};

inline AngularMomentumPair angular_momenta(const LocalFields& lf, const PairConfiguration& z) noexcept {
  const auto& s = lf.grad_phase;
  return {rotor_generator(z.rotor1.alpha, z.rotor1.beta, s[0], s[1], s[2]),
          rotor_generator(z.rotor2.alpha, z.rotor2.beta, s[3], s[4], s[5])};
}

inline AngularMomentumPair angular_momenta(const QubitPairState& state, const PairConfiguration& z,
                                           const FieldThresholds& thr = {}) {
  return angular_momenta(local_fields(state, z, thr), z);
}

/// Laplacian of R divided by R for rotor i, from the psi partials through
///   lap(R)/R = Re(lap(psi)/psi) + |grad S|^2
/// with the SO(3) angular Laplacian
///   d2a + cot(a) da + (d2b + d2g - 2 cos(a) dbdg) / sin^2(a).
inline double laplacian_amp_over_amp(const LocalFields& lf, int i) noexcept {
  const double sa = lf.sin_alpha[i], ca = lf.cos_alpha[i];
  const double inv_s2 = 1.0 / (sa * sa);
  const auto& d2 = lf.wave.d2psi[i];
  const cplx da = lf.wave.dpsi[3 * i];
  const cplx lap_psi = d2.aa + (ca / sa) * da + inv_s2 * (d2.bb + d2.gg - 2.0 * ca * d2.bg);
  const double re = (lap_psi / lf.wave.psi).real();
  const double sa_ = lf.grad_phase[3 * i], sb = lf.grad_phase[3 * i + 1], sg = lf.grad_phase[3 * i + 2];
  const double grad_s2 = sa_ * sa_ + inv_s2 * (sb * sb + sg * sg - 2.0 * ca * sb * sg);
  return re + grad_s2;
}

/// Q = -(lap1 R + lap2 R) / (2 I R).
inline double quantum_potential(const LocalFields& lf, double inertia) noexcept {
  return -(laplacian_amp_over_amp(lf, 0) + laplacian_amp_over_amp(lf, 1)) / (2.0 * inertia);
}

inline double quantum_potential(const QubitPairState& state, const PairConfiguration& z,
                                const FieldThresholds& thr = {}) {
  return quantum_potential(local_fields(state, z, thr), state.inertia);
}

/// H = (|M1|^2 + |M2|^2) / (2I) + Q.
inline double energy(const QubitPairState& state, const PairConfiguration& z, const FieldThresholds& thr = {}) {
  const auto lf = local_fields(state, z, thr);
  const auto m = angular_momenta(lf, z);
  const double kin = (m.m1.x * m.m1.x + m.m1.y * m.m1.y + m.m1.z * m.m1.z + m.m2.x * m.m2.x + m.m2.y * m.m2.y +
                      m.m2.z * m.m2.z) /
                     (2.0 * state.inertia);
  return kin + quantum_potential(lf, state.inertia);
}

inline constexpr double kTorqueStep = 1e-4;

/// T_i = -D_i Q: central differences of Q in rotor-i angles (step h and h/2)
/// combined by one Richardson level.
inline std::array<Vec3, 2> quantum_torque(const QubitPairState& state, const PairConfiguration& z,
                                          const FieldThresholds& thr = {}, double step = kTorqueStep) {
  auto q_at = [&](int j, double delta) {
    auto arr = z.as_array();
    arr[j] += delta;
    return quantum_potential(state, PairConfiguration::from_array(arr), thr);
  };
  auto central = [&](int j, double h) { return (q_at(j, h) - q_at(j, -h)) / (2.0 * h); };
  // Fails fast at nodes/poles before the stencil is evaluated.
  (void)local_fields(state, z, thr);
  for (int i = 0; i < 2; ++i) {
    const double a = z.rotor(i).alpha;
    if (!(std::sin(a - step) > thr.sin_alpha_min && std::sin(a + step) > thr.sin_alpha_min))
      throw Error(ErrorKind::CoordinateSingularity, "torque stencil crosses a pole");
  }
  std::array<double, 6> grad{};
  for (int j = 0; j < 6; ++j) {
    const double coarse = central(j, step);
    const double fine = central(j, 0.5 * step);
    grad[j] = (4.0 * fine - coarse) / 3.0;
  }
  const Vec3 d1 = rotor_generator(z.rotor1.alpha, z.rotor1.beta, grad[0], grad[1], grad[2]);
  const Vec3 d2 = rotor_generator(z.rotor2.alpha, z.rotor2.beta, grad[3], grad[4], grad[5]);
  return {-d1, -d2};
}

/// Azimuths of the in-plane momentum projections and the family's relative
/// angle: phi2 - phi1 (antiparallel) or phi1 + phi2 (parallel), in [0, 2 pi).
struct Azimuths {
  double phi1;
  double phi2;
  double relative;
};

inline constexpr double kAzimuthMinProjection = 1e-12;

inline Azimuths azimuths(const AngularMomentumPair& m, Family family) {
  if (!(m.m1.norm_xy() > kAzimuthMinProjection) || !(m.m2.norm_xy() > kAzimuthMinProjection))
    throw Error(ErrorKind::UndefinedAzimuth, "in-plane angular momentum projection vanishes");
  const double p1 = std::atan2(m.m1.y, m.m1.x);
  const double p2 = std::atan2(m.m2.y, m.m2.x);
  const double rel = family == Family::Antiparallel ? p2 - p1 : p1 + p2;
  return {p1, p2, wrap_two_pi(rel)};
}

}  // namespace bohm
