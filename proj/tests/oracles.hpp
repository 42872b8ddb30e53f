#pragma once

// Independent reference computations used only by the tests.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include "bohm/types.hpp"

namespace bohm::oracle {

using Mat2 = std::array<std::array<cplx, 2>, 2>;

inline Mat2 mul(const Mat2& a, const Mat2& b) {
  Mat2 c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
  return c;
}

inline Mat2 rot_z(double angle) {
  const cplx e = std::exp(cplx(0.0, -0.5 * angle));
  return {{{e, 0.0}, {0.0, std::conj(e)}}};
}

inline Mat2 rot_y(double angle) {
  const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
  return {{{c, -s}, {s, c}}};
}

/// Spin-1/2 representation of Rz(b) Ry(a) Rz(g) built by matrix products.
/// Column 0 holds (up, down) wave functions of the rotor.
inline Mat2 su2(double a, double b, double g) { return mul(mul(rot_z(b), rot_y(a)), rot_z(g)); }

inline cplx up(const Orientation& o) { return su2(o.alpha, o.beta, o.gamma)[0][0]; }
inline cplx down(const Orientation& o) { return su2(o.alpha, o.beta, o.gamma)[1][0]; }

/// psi built from scratch from the matrix representation.
inline cplx psi(const QubitPairState& s, const PairConfiguration& z) {
  const cplx a = std::cos(0.5 * s.theta);
  const cplx b = std::polar(std::sin(0.5 * s.theta), s.phase);
  if (s.family == Family::Antiparallel) return a * up(z.rotor1) * down(z.rotor2) + b * down(z.rotor1) * up(z.rotor2);
  return a * up(z.rotor1) * up(z.rotor2) + b * down(z.rotor1) * down(z.rotor2);
}

/// Two-level Richardson extrapolation of an O(h^2) estimate d(h).
template <class D>
auto romberg(D&& d, double h) {
  const auto d0 = d(h), d1 = d(0.5 * h), d2 = d(0.25 * h);
  const auto e0 = (4.0 * d1 - d0) / 3.0, e1 = (4.0 * d2 - d1) / 3.0;
  return (16.0 * e1 - e0) / 15.0;
}

template <class F>
auto central_diff(F&& f, std::array<double, 6> x, int j, double h) {
  auto xp = x, xm = x;
  xp[j] += h;
  xm[j] -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

/// Second central difference in one coordinate, extrapolated.
template <class F>
auto second_diff(F&& f, std::array<double, 6> x, int j, double h) {
  auto d2 = [&](double step) {
    auto xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    return (f(xp) - 2.0 * f(x) + f(xm)) / (step * step);
  };
  return romberg(d2, h);
}

/// Mixed central difference in coordinates j and k, extrapolated.
template <class F>
auto mixed_diff(F&& f, std::array<double, 6> x, int j, int k, double h) {
  auto dm = [&](double step) {
    auto pp = x, pm = x, mp = x, mm = x;
    pp[j] += step, pp[k] += step;
    pm[j] += step, pm[k] -= step;
    mp[j] -= step, mp[k] += step;
    mm[j] -= step, mm[k] -= step;
    return (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step * step);
  };
  return romberg(dm, h);
}

template <class F>
auto richardson_first(F&& f, const std::array<double, 6>& x, int j, double h) {
  return romberg([&](double step) { return central_diff(f, x, j, step); }, h);
}

/// Angular Laplacian of a scalar field in rotor i's angles by finite
/// differences.
template <class F>
auto fd_laplacian(F&& f, const std::array<double, 6>& x, int rotor, double h = 2e-2) {
  const int a = 3 * rotor, b = a + 1, g = a + 2;
  const double sa = std::sin(x[a]), ca = std::cos(x[a]);
  return second_diff(f, x, a, h) + (ca / sa) * richardson_first(f, x, a, h) +
         (second_diff(f, x, b, h) + second_diff(f, x, g, h) - 2.0 * ca * mixed_diff(f, x, b, g, h)) / (sa * sa);
}

/// Integral over one SO(3) of f(alpha, beta, gamma) sin(alpha): composite
/// Gauss-Legendre (3 points per panel) in alpha, trapezoid in the periodic
/// angles.
template <class F>
auto so3_integral(F&& f, int alpha_panels = 400, int periodic_points = 16) {
  using R = decltype(f(0.0, 0.0, 0.0));
  const double xs[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double ws[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  R total{};
  const double da = kPi / alpha_panels, dp = kTwoPi / periodic_points;
  for (int p = 0; p < alpha_panels; ++p) {
    const double mid = (p + 0.5) * da;
    for (int q = 0; q < 3; ++q) {
      const double a = mid + 0.5 * da * xs[q];
      const double wa = 0.5 * da * ws[q] * std::sin(a);
      for (int ib = 0; ib < periodic_points; ++ib)
        for (int ig = 0; ig < periodic_points; ++ig) total += wa * dp * dp * f(a, ib * dp, ig * dp);
    }
  }
  return total;
}

inline PairConfiguration random_configuration(std::mt19937_64& rng, double margin = 0.05) {
  std::uniform_real_distribution<double> a(margin, kPi - margin), p(0.0, kTwoPi);
  return {{a(rng), p(rng), p(rng)}, {a(rng), p(rng), p(rng)}};
}

inline QubitPairState random_state(std::mt19937_64& rng, Family f, double inertia = 1.0) {
  std::uniform_real_distribution<double> t(0.0, kPi), p(0.0, kTwoPi);
  return {f, t(rng), p(rng), inertia};
}

}  // namespace bohm::oracle
