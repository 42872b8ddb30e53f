#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <random>

#include "bohm/pilot_wave.hpp"
#include "bohm/sampling.hpp"
#include "bohm/statistics.hpp"
#include "oracles.hpp"

using namespace bohm;

namespace {

// Marginal of x = cos(alpha1) for either family: (1 + cos(theta) x) / 2.
double cos_alpha_cdf(double theta, double x) { return 0.5 * (x + 1.0) + 0.25 * std::cos(theta) * (x * x - 1.0); }

// Marginal of d = beta1 - beta2 (antiparallel) or beta1 + beta2 (parallel):
// (1 + (pi^2/16) sin(theta) cos(phase + d)) / (2 pi).
double azimuth_cdf(double theta, double phase, double d) {
  return (d + kPi * kPi / 16.0 * std::sin(theta) * (std::sin(phase + d) - std::sin(phase))) / kTwoPi;
}

std::vector<double> bin_probabilities(const Histogram& h, const std::function<double(double)>& cdf) {
  std::vector<double> p(h.bins());
  for (std::size_t i = 0; i < h.bins(); ++i) p[i] = cdf(h.right(i)) - cdf(h.left(i));
  return p;
}

}  // namespace

TEST(CounterRng, UniformInOpenIntervalAndStreamsDiffer) {
  CounterRng a(1, 0), b(1, 1), c(2, 0);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = a.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u;
  }
  EXPECT_NEAR(mean / 100000.0, 0.5, 0.005);
  CounterRng a2(1, 0);
  EXPECT_NE(a2(), b());
  CounterRng a3(1, 0);
  EXPECT_NE(a3(), c());
}

TEST(Density, MatchesPilotWave) {
  std::mt19937_64 rng(71);
  for (Family f : {Family::Antiparallel, Family::Parallel}) {
    for (int n = 0; n < 500; ++n) {
      const auto s = oracle::random_state(rng, f);
      const auto z = oracle::random_configuration(rng, 0.0);
      const double d = density(s, z);
      EXPECT_NEAR(d, std::norm(oracle::psi(s, z)), 1e-14);
      EXPECT_LE(d, 1.0 + 1e-15);
    }
  }
}

class Marginals : public ::testing::TestWithParam<std::tuple<Family, double, double>> {};

TEST_P(Marginals, MatchAnalyticForms) {
  const auto [family, theta, phase] = GetParam();
  EnsembleSpec spec{{family, theta, phase, 1.0}, 40000, 2024};
  const auto draws = sample(spec);
  Histogram ha(-1.0, 1.0, 40), hb(0.0, kTwoPi, 40), hg(0.0, kTwoPi, 40);
  CompensatedSum mz;
  for (const auto& d : draws) {
    ha.add(std::cos(d.config.rotor1.alpha));
    const double sum = family == Family::Antiparallel ? d.config.rotor1.beta - d.config.rotor2.beta
                                                      : d.config.rotor1.beta + d.config.rotor2.beta;
    hb.add(wrap_two_pi(sum));
    hg.add(d.config.rotor2.gamma);
    mz.add(angular_momenta(spec.state, d.config).m1.z);
  }
  EXPECT_GT(chi_square_pvalue(ha, bin_probabilities(ha, [&](double x) { return cos_alpha_cdf(theta, x); })), 1e-3);
  EXPECT_GT(chi_square_pvalue(hb, bin_probabilities(hb, [&](double x) { return azimuth_cdf(theta, phase, x); })),
            1e-3);
  EXPECT_GT(chi_square_uniform_pvalue(hg), 1e-3);
  // Ensemble mean of M1z reproduces the quantum expectation cos(theta)/2.
  EXPECT_NEAR(mz.value() / static_cast<double>(draws.size()), 0.5 * std::cos(theta), 0.01);
}

INSTANTIATE_TEST_SUITE_P(States, Marginals,
                         ::testing::Values(std::make_tuple(Family::Antiparallel, 0.0, 0.0),
                                           std::make_tuple(Family::Antiparallel, kPi / 5, 0.0),
                                           std::make_tuple(Family::Antiparallel, kPi / 2, kPi),
                                           std::make_tuple(Family::Antiparallel, 2.0, 1.0),
                                           std::make_tuple(Family::Parallel, kPi / 5, 0.5)));

TEST(Sampler, IndependentOfThreadCount) {
  EnsembleSpec spec{{Family::Antiparallel, kPi / 4, 0.3, 1.0}, 5000, 99};
  const auto one = sample(spec, 1);
  const auto four = sample(spec, 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    const auto a = one[k].config.as_array(), b = four[k].config.as_array();
    ASSERT_EQ(std::memcmp(a.data(), b.data(), sizeof(a)), 0) << k;
  }
  const auto prefix = sample({spec.state, 100, 99}, 3);
  for (std::size_t k = 0; k < prefix.size(); ++k)
    EXPECT_EQ(prefix[k].config.as_array(), one[k].config.as_array());
}

TEST(Sampler, DifferentSeedsGiveDifferentEnsembles) {
  const QubitPairState s{Family::Antiparallel, 1.0, 0.0, 1.0};
  EXPECT_NE(sample_one(s, 1, 0).config.as_array(), sample_one(s, 2, 0).config.as_array());
}

TEST(Sampler, RejectsEmptyEnsembleAndBadState) {
  try {
    (void)sample({{Family::Antiparallel, 1.0, 0.0, 1.0}, 0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
  try {
    (void)sample({{Family::Antiparallel, 5.0, 0.0, 1.0}, 10, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}
