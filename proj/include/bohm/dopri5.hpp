#pragma once

// Embedded Runge-Kutta 5(4) pair of Dormand and Prince with the 4th-order
// continuous extension of Hairer, Norsett and Wanner. The step-size
// controller is the PI controller used by DOPRI5.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "errors.hpp"

namespace bohm {

template <std::size_t N>
using OdeState = std::array<double, N>;

struct StepControl {
  double rel_tol{1e-9};
  double abs_tol{1e-11};
  /// When positive, every component is weighted as if its magnitude were this
  /// value (useful for unwrapped angles whose size carries no precision).
  double reference_magnitude{0.0};
  double initial_step{0.0};  // 0 selects automatically
  double max_step{std::numeric_limits<double>::infinity()};
  double min_step{1e-12};
  double safety{0.9};
  double fac_min{0.2};
  double fac_max{10.0};
  double beta{0.04};
  std::size_t max_steps{50'000'000};

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !std::isfinite(rel_tol) || !std::isfinite(abs_tol))
      throw Error(ErrorKind::InvalidTolerance, "rel_tol and abs_tol must be positive and finite");
    if (rel_tol < 1e-15)
      throw Error(ErrorKind::InvalidTolerance, "rel_tol below 1e-15 cannot be honoured in double precision");
    if (!(min_step > 0.0) || !(max_step > min_step))
      throw Error(ErrorKind::InvalidTolerance, "step bounds must satisfy 0 < min_step < max_step");
  }
};

/// Dense-output polynomial for one accepted step [t0, t0 + h].
template <std::size_t N>
struct DenseSegment {
  double t0{};
  double h{};
  std::array<OdeState<N>, 5> coef{};

  double t1() const noexcept { return t0 + h; }
  const OdeState<N>& start() const noexcept { return coef[0]; }
  OdeState<N> end() const noexcept {
    OdeState<N> y;
    for (std::size_t i = 0; i < N; ++i) y[i] = coef[0][i] + coef[1][i];
    return y;
  }

  OdeState<N> at(double t) const noexcept {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    OdeState<N> y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = coef[0][i] + th * (coef[1][i] + th1 * (coef[2][i] + th * (coef[3][i] + th1 * coef[4][i])));
    return y;
  }
};

namespace dp5 {
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                        a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp5

/// Adaptive integrator for y' = f(t, y). `Rhs` is callable as
/// `void(double t, const OdeState<N>& y, OdeState<N>& dydt)`; it may throw
/// bohm::Error to signal that y lies outside its domain, in which case the
/// step is retried with a smaller size before the integration is abandoned.
template <std::size_t N, class Rhs>
class DormandPrince5 {
 public:
  using State = OdeState<N>;
  using Segment = DenseSegment<N>;

  enum class Status { Reached, Failed };

  DormandPrince5(Rhs rhs, StepControl ctl) : rhs_(std::move(rhs)), ctl_(ctl) { ctl_.validate(); }

  void reset(double t0, const State& y0) {
    t_ = t0;
    y_ = y0;
    rhs_(t_, y_, k1_);
    h_ = ctl_.initial_step > 0.0 ? ctl_.initial_step : 0.0;
    fac_old_ = 1e-4;
    failure_.reset();
  }

  double time() const noexcept { return t_; }
  const State& state() const noexcept { return y_; }
  std::size_t accepted_steps() const noexcept { return accepted_; }
  std::size_t rejected_steps() const noexcept { return rejected_; }
  std::size_t rhs_calls() const noexcept { return calls_; }
  /// Why the last advance() failed, if it did.
  const std::optional<ErrorKind>& failure() const noexcept { return failure_; }

  /// Integrates to t_end, calling on_step(segment) after every accepted step.
  template <class Observer>
  Status advance(double t_end, Observer&& on_step) {
    if (!(t_end > t_)) return Status::Reached;
    if (h_ <= 0.0) h_ = initial_step(t_end - t_);
    bool last_rejected = false;
    while (t_ < t_end) {
      if (accepted_ + rejected_ >= ctl_.max_steps) {
        failure_ = ErrorKind::InvalidTolerance;
        return Status::Failed;
      }
      double h = std::min(h_, ctl_.max_step);
      bool final_step = false;
      if (t_ + 1.01 * h >= t_end) {
        h = t_end - t_;
        final_step = true;
      }
      if (h < ctl_.min_step && !final_step) {
        if (!failure_) failure_ = ErrorKind::InvalidTolerance;
        return Status::Failed;
      }

      double err = 0.0;
      bool ok = true;
      try {
        err = trial_step(h);
      } catch (const Error& e) {
        ok = false;
        failure_ = e.kind();
      }
      if (!ok || !std::isfinite(err)) {
        ++rejected_;
        h_ = 0.25 * h;
        last_rejected = true;
        if (h_ < ctl_.min_step) {
          if (!failure_) failure_ = ErrorKind::InvalidTolerance;
          return Status::Failed;
        }
        continue;
      }

      const double fac11 = std::pow(err, 0.2 - ctl_.beta * 0.75);
      if (err <= 1.0) {
        double fac = fac11 / std::pow(fac_old_, ctl_.beta);
        fac = std::clamp(fac / ctl_.safety, 1.0 / ctl_.fac_max, 1.0 / ctl_.fac_min);
        double h_new = h / fac;
        fac_old_ = std::max(err, 1e-4);
        if (last_rejected) h_new = std::min(h_new, h);
        build_segment(h);
        t_ = final_step ? t_end : t_ + h;
        y_ = y_new_;
        k1_ = k7_;
        ++accepted_;
        failure_.reset();
        last_rejected = false;
        on_step(static_cast<const Segment&>(segment_));
        // A clipped final step says little about the next admissible size.
        h_ = final_step ? std::max(h_, h_new) : h_new;
      } else {
        h_ = h / std::min(1.0 / ctl_.fac_min, fac11 / ctl_.safety);
        ++rejected_;
        last_rejected = true;
      }
    }
    return Status::Reached;
  }

 private:
  double scale(double a, double b) const noexcept {
    const double mag = ctl_.reference_magnitude > 0.0 ? ctl_.reference_magnitude : std::max(std::abs(a), std::abs(b));
    return ctl_.abs_tol + ctl_.rel_tol * mag;
  }

  void eval(double t, const State& y, State& dy) {
    ++calls_;
    rhs_(t, y, dy);
  }

  double norm(const State& v) const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double q = v[i] / scale(y_[i], y_[i]);
      s += q * q;
    }
    return std::sqrt(s / static_cast<double>(N));
  }

  // Starting step heuristic of Hairer, Norsett and Wanner.
  double initial_step(double span) {
    const double d0 = norm(y_);
    const double d1 = norm(k1_);
    double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    State y1, f1;
    for (std::size_t i = 0; i < N; ++i) y1[i] = y_[i] + h0 * k1_[i];
    try {
      eval(t_ + h0, y1, f1);
    } catch (const Error&) {
      return std::max(1e-3 * h0, ctl_.min_step * 10.0);
    }
    State diff;
    for (std::size_t i = 0; i < N; ++i) diff[i] = f1[i] - k1_[i];
    const double d2 = norm(diff) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, span, ctl_.max_step});
  }

  double trial_step(double h) {
    using namespace dp5;
    State yt;
    for (std::size_t i = 0; i < N; ++i) yt[i] = y_[i] + h * a21 * k1_[i];
    eval(t_ + c2 * h, yt, k2_);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    eval(t_ + c3 * h, yt, k3_);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    eval(t_ + c4 * h, yt, k4_);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    eval(t_ + c5 * h, yt, k5_);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
    eval(t_ + h, yt, k6_);
    for (std::size_t i = 0; i < N; ++i)
      y_new_[i] = y_[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
    eval(t_ + h, y_new_, k7_);

    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      const double q = e / scale(y_[i], y_new_[i]);
      s += q * q;
    }
    return std::sqrt(s / static_cast<double>(N));
  }

  void build_segment(double h) {
    using namespace dp5;
    segment_.t0 = t_;
    segment_.h = h;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = y_new_[i] - y_[i];
      const double bspl = h * k1_[i] - ydiff;
      segment_.coef[0][i] = y_[i];
      segment_.coef[1][i] = ydiff;
      segment_.coef[2][i] = bspl;
      segment_.coef[3][i] = ydiff - h * k7_[i] - bspl;
      segment_.coef[4][i] =
          h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] + d7 * k7_[i]);
    }
  }

  Rhs rhs_;
  StepControl ctl_;
  double t_{};
  double h_{};
  double fac_old_{1e-4};
  State y_{}, y_new_{};
  State k1_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{};
  Segment segment_{};
  std::size_t accepted_{}, rejected_{}, calls_{};
  std::optional<ErrorKind> failure_;
};

}  // namespace bohm
