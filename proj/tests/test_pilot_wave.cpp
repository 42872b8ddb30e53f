#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bohm/pilot_wave.hpp"
#include "oracles.hpp"

using namespace bohm;

namespace {

Orientation orient(const std::array<double, 6>& x, int i) { return {x[3 * i], x[3 * i + 1], x[3 * i + 2]}; }

double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Basis, MatchesMatrixRepresentation) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 200; ++n) {
    const auto z = oracle::random_configuration(rng, 0.0);
    EXPECT_LT(std::abs(basis_up(z.rotor1).value - oracle::up(z.rotor1)), 1e-14);
    EXPECT_LT(std::abs(basis_down(z.rotor1).value - oracle::down(z.rotor1)), 1e-14);
  }
}

TEST(Basis, PoleAndEquatorValues) {
  EXPECT_NEAR(std::abs(basis_up({1e-9, 0.3, 0.4}).value), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(basis_down({1e-9, 0.3, 0.4}).value), 0.0, 1e-9);
  const auto u = basis_up({kPi / 2, 0.0, 0.0}).value;
  EXPECT_NEAR(u.real(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(u.imag(), 0.0, 1e-15);
}

TEST(Basis, NormAndOrthogonalityOverSO3) {
  const double norm_up = oracle::so3_integral([](double a, double b, double g) {
    return std::norm(basis_up({a, b, g}).value);
  });
  const double norm_down = oracle::so3_integral([](double a, double b, double g) {
    return std::norm(basis_down({a, b, g}).value);
  });
  const cplx overlap = oracle::so3_integral([](double a, double b, double g) {
    return std::conj(basis_up({a, b, g}).value) * basis_down({a, b, g}).value;
  });
  EXPECT_NEAR(norm_up, 4.0 * kPi * kPi, 1e-8);
  EXPECT_NEAR(norm_down, 4.0 * kPi * kPi, 1e-8);
  EXPECT_LT(std::abs(overlap), 1e-10);
}

TEST(Basis, AnalyticPartialsMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (int n = 0; n < 50; ++n) {
    const auto z = oracle::random_configuration(rng);
    for (int kind = 0; kind < 2; ++kind) {
      auto f = [&](const std::array<double, 6>& x) {
        return kind == 0 ? basis_up(orient(x, 0)).value : basis_down(orient(x, 0)).value;
      };
      const BasisValue bv = kind == 0 ? basis_up(z.rotor1) : basis_down(z.rotor1);
      const auto x = z.as_array();
      const cplx first[3] = {bv.d_alpha, bv.d_beta, bv.d_gamma};
      const cplx second[3] = {bv.d_alpha2, bv.d_beta2, bv.d_gamma2};
      for (int j = 0; j < 3; ++j) {
        EXPECT_LT(rel_err(first[j], oracle::central_diff(f, x, j, 1e-6)), 1e-8);
        EXPECT_LT(rel_err(second[j], oracle::second_diff(f, x, j, 2e-2)), 1e-8);
      }
      EXPECT_LT(rel_err(bv.d_beta_gamma, oracle::mixed_diff(f, x, 1, 2, 2e-2)), 1e-8);
    }
  }
}

TEST(Basis, EigenfunctionOfAngularLaplacian) {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 50; ++n) {
    const auto x = oracle::random_configuration(rng, 0.2).as_array();
    for (int kind = 0; kind < 2; ++kind) {
      auto f = [&](const std::array<double, 6>& y) {
        return kind == 0 ? basis_up(orient(y, 0)).value : basis_down(orient(y, 0)).value;
      };
      const cplx lap = oracle::fd_laplacian(f, x, 0);
      EXPECT_LT(std::abs(-lap - 0.75 * f(x)), 1e-8) << "kind " << kind;
    }
  }
}

class PilotWaveFamilies : public ::testing::TestWithParam<Family> {};

TEST_P(PilotWaveFamilies, MatchesMatrixOracle) {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 300; ++n) {
    const auto s = oracle::random_state(rng, GetParam());
    const auto z = oracle::random_configuration(rng, 0.0);
    EXPECT_LT(std::abs(pilot_wave(s, z).psi - oracle::psi(s, z)), 1e-14);
  }
}

TEST_P(PilotWaveFamilies, PartialsMatchFiniteDifferences) {
  std::mt19937_64 rng(22);
  for (int n = 0; n < 100; ++n) {
    const auto s = oracle::random_state(rng, GetParam());
    const auto z = oracle::random_configuration(rng);
    const auto w = pilot_wave(s, z);
    if (std::abs(w.psi) < 1e-6) continue;
    auto f = [&](const std::array<double, 6>& x) { return pilot_wave(s, PairConfiguration::from_array(x)).psi; };
    const auto x = z.as_array();
    for (int j = 0; j < 6; ++j) {
      const cplx fd = oracle::central_diff(f, x, j, 1e-6);
      EXPECT_LT(std::abs(w.dpsi[j] - fd), 1e-6 * std::max(std::abs(fd), std::abs(w.psi)));
    }
    for (int i = 0; i < 2; ++i) {
      const int a = 3 * i;
      const auto& d2 = w.d2psi[i];
      EXPECT_LT(std::abs(d2.aa - oracle::second_diff(f, x, a, 2e-2)), 1e-7);
      EXPECT_LT(std::abs(d2.bb - oracle::second_diff(f, x, a + 1, 2e-2)), 1e-7);
      EXPECT_LT(std::abs(d2.gg - oracle::second_diff(f, x, a + 2, 2e-2)), 1e-7);
      EXPECT_LT(std::abs(d2.bg - oracle::mixed_diff(f, x, a + 1, a + 2, 2e-2)), 1e-7);
    }
  }
}

TEST_P(PilotWaveFamilies, DensityIndependentOfGammas) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int n = 0; n < 20; ++n) {
    const auto s = oracle::random_state(rng, GetParam());
    auto z = oracle::random_configuration(rng);
    const double ref = std::norm(pilot_wave(s, z).psi);
    for (int k = 0; k < 100; ++k) {
      z.rotor1.gamma = u(rng);
      z.rotor2.gamma = u(rng);
      EXPECT_NEAR(std::norm(pilot_wave(s, z).psi), ref, 1e-14);
    }
  }
}

TEST_P(PilotWaveFamilies, EnergyIsConstant) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> inertia(0.1, 10.0);
  int evaluated = 0;
  for (int n = 0; n < 1000; ++n) {
    const auto s = oracle::random_state(rng, GetParam(), inertia(rng));
    const auto z = oracle::random_configuration(rng, 1e-3);
    try {
      const double h = energy(s, z);
      EXPECT_NEAR(h * s.inertia, 0.75, 1e-8) << "theta " << s.theta;
      ++evaluated;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NodeProximity);
    }
  }
  EXPECT_GT(evaluated, 990);
}

TEST_P(PilotWaveFamilies, QuantumPotentialMatchesFiniteDifferenceLaplacian) {
  std::mt19937_64 rng(25);
  for (int n = 0; n < 40; ++n) {
    const auto s = oracle::random_state(rng, GetParam());
    const auto z = oracle::random_configuration(rng, 0.3);
    const double r0 = std::abs(pilot_wave(s, z).psi);
    if (r0 < 1e-2) continue;
    auto amp = [&](const std::array<double, 6>& x) { return std::abs(oracle::psi(s, PairConfiguration::from_array(x))); };
    const auto x = z.as_array();
    const double q_fd = -(oracle::fd_laplacian(amp, x, 0) + oracle::fd_laplacian(amp, x, 1)) / (2.0 * s.inertia * r0);
    EXPECT_NEAR(quantum_potential(s, z), q_fd, 1e-6 * std::max(1.0, std::abs(q_fd)));
  }
}

INSTANTIATE_TEST_SUITE_P(Families, PilotWaveFamilies, ::testing::Values(Family::Antiparallel, Family::Parallel),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(AngularMomentum, ProductStateClosedForm) {
  std::mt19937_64 rng(31);
  const QubitPairState s{Family::Antiparallel, 0.0, 0.0, 1.0};
  for (int n = 0; n < 100; ++n) {
    const auto z = oracle::random_configuration(rng);
    const auto m = angular_momenta(s, z);
    const double a1 = z.rotor1.alpha, b1 = z.rotor1.beta;
    const double a2 = z.rotor2.alpha, b2 = z.rotor2.beta;
    // up: S = -(b+g)/2, down: S = (b-g)/2
    const double k1 = (1.0 - std::cos(a1)) / (2.0 * std::sin(a1));
    EXPECT_NEAR(m.m1.z, 0.5, 1e-12);
    EXPECT_NEAR(m.m1.x, -k1 * std::cos(b1), 1e-12);
    EXPECT_NEAR(m.m1.y, -k1 * std::sin(b1), 1e-12);
    const double k2 = (1.0 + std::cos(a2)) / (2.0 * std::sin(a2));
    EXPECT_NEAR(m.m2.z, -0.5, 1e-12);
    EXPECT_NEAR(m.m2.x, -k2 * std::cos(b2), 1e-12);
    EXPECT_NEAR(m.m2.y, -k2 * std::sin(b2), 1e-12);
    const auto az = azimuths(m, Family::Antiparallel);
    EXPECT_NEAR(std::abs(wrap_pi(az.phi1 - (b1 + kPi))), 0.0, 1e-12);
  }
}

TEST(AngularMomentum, AntiparallelZComponentsCancel) {
  std::mt19937_64 rng(32);
  for (int n = 0; n < 1000; ++n) {
    const auto s = oracle::random_state(rng, Family::Antiparallel);
    const auto z = oracle::random_configuration(rng, 1e-3);
    try {
      const auto m = angular_momenta(s, z);
      EXPECT_LT(std::abs(m.m1.z + m.m2.z), 1e-10);
      EXPECT_GE(m.m1.norm(), 0.5 - 1e-12);
      EXPECT_GE(m.m2.norm(), 0.5 - 1e-12);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NodeProximity);
    }
  }
}

TEST(AngularMomentum, SingletTotalVanishes) {
  std::mt19937_64 rng(33);
  const QubitPairState s{Family::Antiparallel, kPi / 2, kPi, 1.0};
  for (int n = 0; n < 1000; ++n) {
    const auto z = oracle::random_configuration(rng, 1e-3);
    try {
      const auto m = angular_momenta(s, z);
      const Vec3 t = m.m1 + m.m2;
      EXPECT_LT(t.norm(), 1e-10 * std::max(1.0, m.m1.norm()));
      EXPECT_NEAR(azimuths(m, Family::Antiparallel).relative, kPi, 1e-9);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NodeProximity);
    }
  }
}

TEST(QuantumPotential, ProductStateIsSumOfSingleRotorTerms) {
  std::mt19937_64 rng(41);
  const QubitPairState s{Family::Antiparallel, 0.0, 0.0, 2.5};
  for (int n = 0; n < 100; ++n) {
    const auto z = oracle::random_configuration(rng);
    const auto m = angular_momenta(s, z);
    const double q1 = 3.0 / (8.0 * s.inertia) - m.m1.norm() * m.m1.norm() / (2.0 * s.inertia);
    const double q2 = 3.0 / (8.0 * s.inertia) - m.m2.norm() * m.m2.norm() / (2.0 * s.inertia);
    EXPECT_NEAR(quantum_potential(s, z), q1 + q2, 1e-12);
  }
}

TEST(QuantumPotential, InvariantUnderCommonAzimuthShift) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int n = 0; n < 100; ++n) {
    const auto s = oracle::random_state(rng, Family::Antiparallel);
    auto z = oracle::random_configuration(rng, 0.2);
    try {
      const double q0 = quantum_potential(s, z);
      const double shift = u(rng);
      z.rotor1.beta += shift;
      z.rotor2.beta += shift;
      EXPECT_NEAR(quantum_potential(s, z), q0, 1e-9 * std::max(1.0, std::abs(q0)));
    } catch (const Error&) {
    }
  }
}

TEST(QuantumTorque, SpinUpRotorClosedForm) {
  // Product state: only rotor 1 in the up state contributes the alpha1 part.
  std::mt19937_64 rng(51);
  const QubitPairState s{Family::Antiparallel, 0.0, 0.0, 1.0};
  for (int n = 0; n < 50; ++n) {
    const auto z = oracle::random_configuration(rng, 0.3);
    const auto t = quantum_torque(s, z);
    const double a = z.rotor1.alpha, b = z.rotor1.beta;
    const double c = std::cos(0.5 * a);
    const double dq = -std::tan(0.5 * a) / (8.0 * s.inertia * c * c);
    EXPECT_NEAR(t[0].x, std::sin(b) * dq, 1e-8);
    EXPECT_NEAR(t[0].y, -std::cos(b) * dq, 1e-8);
    EXPECT_NEAR(t[0].z, 0.0, 1e-8);
  }
}

TEST(QuantumTorque, SingletTorquesCancel) {
  std::mt19937_64 rng(52);
  const QubitPairState s{Family::Antiparallel, kPi / 2, kPi, 1.0};
  for (int n = 0; n < 50; ++n) {
    const auto z = oracle::random_configuration(rng, 0.3);
    try {
      const auto t = quantum_torque(s, z);
      EXPECT_LT((t[0] + t[1]).norm(), 1e-6 * std::max(1.0, t[0].norm()));
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NodeProximity);
    }
  }
}

TEST(Guards, NodeAndPoleErrors) {
  const QubitPairState singlet{Family::Antiparallel, kPi / 2, kPi, 1.0};
  const PairConfiguration same{{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}};
  EXPECT_NEAR(std::abs(pilot_wave(singlet, same).psi), 0.0, 1e-16);
  EXPECT_NEAR(std::abs(oracle::psi(singlet, same)), 0.0, 1e-16);
  try {
    (void)angular_momenta(singlet, same);
    FAIL() << "expected NodeProximity";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NodeProximity);
  }
  const QubitPairState prod{Family::Antiparallel, 0.0, 0.0, 1.0};
  try {
    (void)angular_momenta(prod, {{1e-10, 0.0, 0.0}, {1.0, 0.0, 0.0}});
    FAIL() << "expected CoordinateSingularity";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CoordinateSingularity);
  }
}

TEST(Guards, AzimuthUndefinedWhenProjectionVanishes) {
  AngularMomentumPair m{{0.0, 0.0, 0.5}, {1.0, 0.0, -0.5}};
  try {
    (void)azimuths(m, Family::Antiparallel);
    FAIL() << "expected UndefinedAzimuth";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedAzimuth);
  }
  AngularMomentumPair same{{0.3, 0.4, 0.5}, {0.3, 0.4, -0.5}};
  EXPECT_NEAR(azimuths(same, Family::Antiparallel).relative, 0.0, 1e-15);
}

TEST(StateValidation, RejectsOutOfRangeParameters) {
  for (QubitPairState s : {QubitPairState{Family::Antiparallel, -0.1, 0.0, 1.0},
                           QubitPairState{Family::Antiparallel, 4.0, 0.0, 1.0},
                           QubitPairState{Family::Antiparallel, 1.0, 7.0, 1.0},
                           QubitPairState{Family::Antiparallel, 1.0, 0.0, 0.0}}) {
    try {
      s.validate();
      FAIL() << "expected DomainError";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DomainError);
    }
  }
}
