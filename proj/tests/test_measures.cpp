#include <gtest/gtest.h>

#include <cmath>

#include "bohm/measures.hpp"

using namespace bohm;

TEST(Measures, BinaryEntropyReferenceValues) {
  EXPECT_NEAR(binary_entropy(0.75), 0.8112781244591328, 1e-15);
  EXPECT_DOUBLE_EQ(binary_entropy(0.5), 1.0);
  EXPECT_DOUBLE_EQ(binary_entropy(0.0), 0.0);
  EXPECT_DOUBLE_EQ(binary_entropy(1.0), 0.0);
  EXPECT_THROW((void)binary_entropy(1.1), Error);
}

TEST(Measures, EntanglementOfFormationFormsAgree) {
  for (int k = 0; k <= 1000; ++k) {
    const double theta = kPi * k / 1000.0;
    const double p = state_weight(theta);
    EXPECT_NEAR(entanglement_of_formation(p), entanglement_of_formation_from_concurrence(concurrence(theta)), 1e-12)
        << theta;
  }
}

TEST(Measures, SymmetricUnderWeightExchange) {
  for (int k = 0; k <= 1000; ++k) {
    const double p = k / 1000.0, theta = kPi * k / 1000.0;
    EXPECT_NEAR(binary_entropy(p), binary_entropy(1.0 - p), 1e-12);
    EXPECT_NEAR(procrustean_yield(p), procrustean_yield(1.0 - p), 1e-12);
    EXPECT_NEAR(concurrence(theta), concurrence(kPi - theta), 1e-12);
    // Filtering one pair can never beat the entropy of entanglement.
    EXPECT_GE(entanglement_of_formation(p) + 1e-15, procrustean_yield(p)) << p;
  }
}

TEST(Measures, EndpointValues) {
  EXPECT_DOUBLE_EQ(concurrence(0.0), 0.0);
  EXPECT_NEAR(concurrence(kPi / 2), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(procrustean_yield(state_weight(0.0)), 0.0);
  EXPECT_NEAR(procrustean_yield(state_weight(kPi / 2)), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(schmidt_projection_yield(22, 1.0), 0.0);
  EXPECT_THROW((void)concurrence(-0.1), Error);
}

TEST(Measures, SchmidtProjectionYield) {
  EXPECT_NEAR(schmidt_projection_yield(2, 0.5), 0.25, 1e-15);
  // n = 3, p = 1/2: (1/3)(2 * 3/8 * log2 3).
  EXPECT_NEAR(schmidt_projection_yield(3, 0.5), 0.25 * std::log2(3.0), 1e-14);
  for (int k = 1; k < 50; ++k) {
    const double p = k / 100.0;
    const double y = schmidt_projection_yield(22, p);
    EXPECT_GT(y, 0.0);
    EXPECT_LT(y, entanglement_of_formation(p));
  }
  // Approaches the entropy slowly as n grows.
  EXPECT_LT(schmidt_projection_yield(100, 0.3), schmidt_projection_yield(1000, 0.3));
  EXPECT_NO_THROW((void)schmidt_projection_yield(kSchmidtMaxPairs, 0.3));
  try {
    (void)schmidt_projection_yield(kSchmidtMaxPairs + 1, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OverflowGuard);
  }
  EXPECT_THROW((void)schmidt_projection_yield(1, 0.3), Error);
}

TEST(Measures, ComparisonTable) {
  std::vector<EnsemblePoint> ens = {{0.0, 0.0, 0.01, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0},
                                    {kPi / 4, 0.8, 0.01, 0.6, 0.01, 0.1, 0.01, 0.7, 0.01},
                                    {kPi / 2, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0}};
  const auto rows = comparison_table({0.0, kPi / 4, kPi / 2}, ens);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rows[0].p, 1.0);
  EXPECT_DOUBLE_EQ(rows[0].e_f, 0.0);
  EXPECT_FALSE(rows[1].ordering_violation);
  EXPECT_NEAR(rows[2].y_procrustean, 1.0, 1e-15);
  ens[1].p_plus = 0.1;
  EXPECT_TRUE(comparison_table({kPi / 4}, ens)[0].ordering_violation);
  try {
    (void)comparison_table({1.0}, ens);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingEnsemble);
  }
}
