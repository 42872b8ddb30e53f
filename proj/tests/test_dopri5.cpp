#include <gtest/gtest.h>

#include <cmath>

#include "bohm/dopri5.hpp"

using namespace bohm;

namespace {

struct Oscillator {
  void operator()(double, const OdeState<2>& y, OdeState<2>& dy) const {
    dy[0] = y[1];
    dy[1] = -y[0];
  }
};

}  // namespace

TEST(Dopri5, ExponentialGrowth) {
  auto rhs = [](double, const OdeState<1>& y, OdeState<1>& dy) { dy[0] = y[0]; };
  StepControl ctl;
  ctl.rel_tol = 1e-11;
  ctl.abs_tol = 1e-13;
  DormandPrince5<1, decltype(rhs)> dp(rhs, ctl);
  dp.reset(0.0, {1.0});
  ASSERT_EQ(dp.advance(5.0, [](const auto&) {}), decltype(dp)::Status::Reached);
  EXPECT_DOUBLE_EQ(dp.time(), 5.0);
  EXPECT_NEAR(dp.state()[0] / std::exp(5.0), 1.0, 1e-9);
}

TEST(Dopri5, DenseOutputTracksExactSolution) {
  StepControl ctl;
  ctl.rel_tol = 1e-10;
  ctl.abs_tol = 1e-12;
  DormandPrince5<2, Oscillator> dp(Oscillator{}, ctl);
  dp.reset(0.0, {0.0, 1.0});
  double worst = 0.0;
  std::size_t segments = 0;
  dp.advance(20.0, [&](const DenseSegment<2>& seg) {
    ++segments;
    for (int j = 0; j <= 10; ++j) {
      const double t = seg.t0 + seg.h * j / 10.0;
      const auto y = seg.at(t);
      worst = std::max(worst, std::abs(y[0] - std::sin(t)) + std::abs(y[1] - std::cos(t)));
    }
    const auto e = seg.end();
    worst = std::max(worst, std::abs(e[0] - std::sin(seg.t1())));
  });
  EXPECT_GT(segments, 10u);
  EXPECT_LT(worst, 1e-8);
}

TEST(Dopri5, ErrorShrinksWithTolerance) {
  double previous = 1.0;
  for (double tol : {1e-5, 1e-7, 1e-9, 1e-11}) {
    StepControl ctl;
    ctl.rel_tol = tol;
    ctl.abs_tol = tol;
    DormandPrince5<2, Oscillator> dp(Oscillator{}, ctl);
    dp.reset(0.0, {0.0, 1.0});
    dp.advance(10.0, [](const auto&) {});
    const double err = std::abs(dp.state()[0] - std::sin(10.0));
    EXPECT_LT(err, previous);
    EXPECT_LT(err, 1e3 * tol);
    previous = err;
  }
}

TEST(Dopri5, ContinuesAcrossAdvanceCalls) {
  DormandPrince5<2, Oscillator> dp(Oscillator{}, StepControl{});
  dp.reset(0.0, {0.0, 1.0});
  dp.advance(3.0, [](const auto&) {});
  dp.advance(7.0, [](const auto&) {});
  EXPECT_DOUBLE_EQ(dp.time(), 7.0);
  EXPECT_NEAR(dp.state()[0], std::sin(7.0), 1e-7);
}

TEST(Dopri5, DomainErrorEndsIntegration) {
  // y' = 1 with the domain ending at y = 1.
  auto rhs = [](double, const OdeState<1>& y, OdeState<1>& dy) {
    if (y[0] > 1.0) throw Error(ErrorKind::CoordinateSingularity, "outside domain");
    dy[0] = 1.0;
  };
  DormandPrince5<1, decltype(rhs)> dp(rhs, StepControl{});
  dp.reset(0.0, {0.0});
  EXPECT_EQ(dp.advance(5.0, [](const auto&) {}), decltype(dp)::Status::Failed);
  ASSERT_TRUE(dp.failure().has_value());
  EXPECT_EQ(*dp.failure(), ErrorKind::CoordinateSingularity);
  EXPECT_LE(dp.state()[0], 1.0);
  EXPECT_GT(dp.state()[0], 0.99);
}

TEST(Dopri5, RejectsInvalidTolerances) {
  for (double rel : {0.0, -1.0, 1e-20, std::nan("")}) {
    StepControl ctl;
    ctl.rel_tol = rel;
    try {
      DormandPrince5<2, Oscillator> dp(Oscillator{}, ctl);
      FAIL() << "rel_tol " << rel;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidTolerance);
    }
  }
}
