#pragma once

// Ensemble statistics: relative-azimuth distributions, the Bohmian
// concurrence with its circular-moment identities, distributions of
// per-trajectory time averages and the discrete/continuous split of the
// concurrency distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "dynamics.hpp"
#include "errors.hpp"
#include "types.hpp"

namespace bohm {

/// Neumaier compensated accumulator; adding in a fixed order makes the
/// result independent of how the inputs were produced.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  void merge(const CompensatedSum& o) noexcept {
    add(o.sum_);
    add(o.comp_);
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_{};
  double comp_{};
};

inline constexpr std::size_t kMinStatisticsSamples = 1000;

inline void require_samples(std::size_t n, std::size_t min, const char* what) {
  if (n < min)
    throw Error(ErrorKind::TooFewSamples,
                std::string(what) + " needs at least " + std::to_string(min) + " samples, got " + std::to_string(n));
}

class Histogram {
 public:
  Histogram() = default;
  Histogram(double lo, double hi, std::size_t bins) : lo_(lo), hi_(hi), counts_(bins, 0) {
    if (bins == 0 || !(hi > lo)) throw Error(ErrorKind::DomainError, "histogram needs bins > 0 and hi > lo");
  }

  std::size_t bin_of(double x) const {
    if (!(x >= lo_ - 1e-12 * (hi_ - lo_) && x <= hi_ + 1e-12 * (hi_ - lo_)))
      throw Error(ErrorKind::DomainError, "value " + std::to_string(x) + " outside histogram range");
    const auto i = static_cast<std::int64_t>(std::floor((x - lo_) / width()));
    return static_cast<std::size_t>(std::clamp<std::int64_t>(i, 0, static_cast<std::int64_t>(bins()) - 1));
  }
  void add(double x) {
    ++counts_[bin_of(x)];
    ++total_;
  }
  /// Sets the normalizing count (entries counted elsewhere, e.g. delta parts).
  void set_total(std::uint64_t n) noexcept { total_ = n; }

  std::size_t bins() const noexcept { return counts_.size(); }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
  double left(std::size_t i) const noexcept { return lo_ + width() * static_cast<double>(i); }
  double right(std::size_t i) const noexcept { return i + 1 == bins() ? hi_ : left(i + 1); }
  std::uint64_t count(std::size_t i) const noexcept { return counts_[i]; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t in_range() const noexcept {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }
  /// count / (total * width): integrates to in_range() / total().
  double density(std::size_t i) const noexcept {
    return total_ == 0 ? 0.0 : static_cast<double>(counts_[i]) / (static_cast<double>(total_) * width());
  }
  double integral() const noexcept {
    CompensatedSum s;
    for (std::size_t i = 0; i < bins(); ++i) s.add(density(i) * width());
    return s.value();
  }

 private:
  double lo_{0.0}, hi_{1.0};
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_{};
};

// ---------------------------------------------------------------------------

struct RelativeAngleHistograms {
  Histogram angle;  // relative angle on [0, 2 pi)
  Histogram cosine; // cos(relative - phase) on [-1, 1]
};

inline constexpr std::size_t kDefaultBins = 64;

inline RelativeAngleHistograms delta_phi_histogram(std::span<const double> relative, double phase,
                                                   std::size_t bins = kDefaultBins,
                                                   std::size_t min_samples = kMinStatisticsSamples) {
  require_samples(relative.size(), min_samples, "delta_phi_histogram");
  RelativeAngleHistograms h{Histogram(0.0, kTwoPi, bins), Histogram(-1.0, 1.0, bins)};
  for (double r : relative) {
    h.angle.add(wrap_two_pi(r));
    h.cosine.add(std::cos(r - phase));
  }
  return h;
}

struct CircularSummary {
  std::size_t count{};
  double mean_cos{}, mean_sin{};
  double se_cos{}, se_sin{};
  double var_cos{}, var_sin{};  // in-sample (1/N) variances
  double circular_mean{};       // atan2(mean_sin, mean_cos) in [0, 2 pi)
  double se_circular_mean{};
  double c_b{};  // sqrt(mean_cos^2 + mean_sin^2)
  double se_c_b{};
  double mean_cos_shifted{}, se_cos_shifted{};  // <cos(rel - phase)>
  double mean_sin_shifted{}, se_sin_shifted{};  // <sin(rel - phase)>, vanishes in equilibrium
  double identity_residual{};                   // 1 - c_b^2 - (var_cos + var_sin)
};

inline CircularSummary bohmian_concurrence(std::span<const double> relative, double phase,
                                           std::size_t min_samples = kMinStatisticsSamples) {
  require_samples(relative.size(), min_samples, "bohmian_concurrence");
  const double n = static_cast<double>(relative.size());
  CompensatedSum sc, ss, scs, sss;
  for (double r : relative) {
    sc.add(std::cos(r));
    ss.add(std::sin(r));
    scs.add(std::cos(r - phase));
    sss.add(std::sin(r - phase));
  }
  CircularSummary out;
  out.count = relative.size();
  out.mean_cos = sc.value() / n;
  out.mean_sin = ss.value() / n;
  out.mean_cos_shifted = scs.value() / n;
  out.mean_sin_shifted = sss.value() / n;

  CompensatedSum vc, vs, cv, vcs, vss;
  for (double r : relative) {
    const double dc = std::cos(r) - out.mean_cos, ds = std::sin(r) - out.mean_sin;
    vc.add(dc * dc);
    vs.add(ds * ds);
    cv.add(dc * ds);
    const double dcs = std::cos(r - phase) - out.mean_cos_shifted;
    const double dss = std::sin(r - phase) - out.mean_sin_shifted;
    vcs.add(dcs * dcs);
    vss.add(dss * dss);
  }
  out.var_cos = vc.value() / n;
  out.var_sin = vs.value() / n;
  const double cov = cv.value() / n;
  const double bessel = n > 1.0 ? n / (n - 1.0) : 1.0;
  out.se_cos = std::sqrt(out.var_cos * bessel / n);
  out.se_sin = std::sqrt(out.var_sin * bessel / n);
  out.se_cos_shifted = std::sqrt(vcs.value() / n * bessel / n);
  out.se_sin_shifted = std::sqrt(vss.value() / n * bessel / n);

  out.c_b = std::hypot(out.mean_cos, out.mean_sin);
  out.circular_mean = wrap_two_pi(std::atan2(out.mean_sin, out.mean_cos));
  const double mc = out.mean_cos, ms = out.mean_sin;
  const double vmc = out.var_cos * bessel / n, vms = out.var_sin * bessel / n, cmc = cov * bessel / n;
  if (out.c_b > 1e-300) {
    const double c2 = out.c_b * out.c_b;
    out.se_c_b = std::sqrt(std::max(0.0, (mc * mc * vmc + ms * ms * vms + 2.0 * mc * ms * cmc) / c2));
    out.se_circular_mean = std::sqrt(std::max(0.0, (ms * ms * vmc + mc * mc * vms - 2.0 * mc * ms * cmc) / (c2 * c2)));
  } else {
    out.se_c_b = std::sqrt(vmc + vms);
    out.se_circular_mean = kPi;
  }
  out.identity_residual = 1.0 - out.c_b * out.c_b - (out.var_cos + out.var_sin);
  return out;
}

// ---------------------------------------------------------------------------

inline constexpr double kDefaultEpsilon = 1e-3;
inline constexpr double kJointBinWidth = 1.0 / 16.0;
inline constexpr double kMaxNonConvergedFraction = 0.05;

namespace detail {

// Keeps converged entries and enforces the sample-count/convergence gates.
inline std::vector<TimeAverages> converged_only(std::span<const TimeAverages> all, std::size_t min_samples) {
  std::vector<TimeAverages> kept;
  kept.reserve(all.size());
  for (const auto& a : all)
    if (a.converged) kept.push_back(a);
  if (!all.empty() && static_cast<double>(all.size() - kept.size()) > kMaxNonConvergedFraction * all.size())
    throw Error(ErrorKind::ExcessiveNonConvergence,
                std::to_string(all.size() - kept.size()) + " of " + std::to_string(all.size()) +
                    " trajectories did not converge");
  require_samples(kept.size(), min_samples, "time-average statistics");
  return kept;
}

inline double mean_and_se(std::span<const double> v, double& se, double& var) {
  const double n = static_cast<double>(v.size());
  CompensatedSum s;
  for (double x : v) s.add(x);
  const double m = s.value() / n;
  CompensatedSum q;
  for (double x : v) q.add((x - m) * (x - m));
  var = n > 1.0 ? q.value() / (n - 1.0) : 0.0;
  se = std::sqrt(var / n);
  return m;
}

}  // namespace detail

struct TimeAverageDistribution {
  Histogram histogram;  // of <cos>_T over [-1, 1]
  std::vector<std::uint64_t> concurrent, anti_concurrent, mixed;  // per-bin split
  double mean{}, se{}, variance{};  // across trajectories; variance uses 1/(N-1)
  double se_variance{};             // standard error of the variance estimate
  std::size_t used{}, non_converged{};
};

inline TimeAverageDistribution time_average_distribution(std::span<const TimeAverages> all,
                                                         std::size_t bins = kDefaultBins,
                                                         double epsilon = kDefaultEpsilon,
                                                         std::size_t min_samples = kMinStatisticsSamples) {
  const auto kept = detail::converged_only(all, min_samples);
  TimeAverageDistribution d;
  d.histogram = Histogram(-1.0, 1.0, bins);
  d.concurrent.assign(bins, 0);
  d.anti_concurrent.assign(bins, 0);
  d.mixed.assign(bins, 0);
  std::vector<double> values;
  values.reserve(kept.size());
  for (const auto& a : kept) {
    const std::size_t b = d.histogram.bin_of(a.cos_avg);
    d.histogram.add(a.cos_avg);
    if (a.concurrency >= 1.0 - epsilon)
      ++d.concurrent[b];
    else if (a.concurrency <= -1.0 + epsilon)
      ++d.anti_concurrent[b];
    else
      ++d.mixed[b];
    values.push_back(a.cos_avg);
  }
  d.mean = detail::mean_and_se(values, d.se, d.variance);
  // Var of the sample variance: (m4 - (n-3)/(n-1) s^4) / n.
  const double n = static_cast<double>(values.size());
  CompensatedSum m4;
  for (double x : values) m4.add(std::pow(x - d.mean, 4));
  const double mu4 = m4.value() / n;
  d.se_variance = std::sqrt(std::max(0.0, (mu4 - (n - 3.0) / (n - 1.0) * d.variance * d.variance) / n));
  d.used = kept.size();
  d.non_converged = all.size() - kept.size();
  return d;
}

struct ConcurrencyDecomposition {
  double p_plus{}, p_minus{}, p_zero{};
  double se_p_plus{}, se_p_minus{}, se_p_zero{};
  Histogram rho;  // continuous part over (-1, 1); integrates to 1 - p_plus - p_minus
  double epsilon{kDefaultEpsilon};
  double mean_concurrency{}, se_mean_concurrency{};
  std::size_t used{}, non_converged{};

  double rho_integral() const noexcept { return rho.integral(); }
  double normalization_residual() const noexcept { return p_plus + p_minus + rho_integral() - 1.0; }
};

inline ConcurrencyDecomposition concurrency_decomposition(std::span<const TimeAverages> all,
                                                          double epsilon = kDefaultEpsilon,
                                                          std::size_t bins = kDefaultBins,
                                                          std::size_t min_samples = kMinStatisticsSamples) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw Error(ErrorKind::DomainError, "statistics.epsilon must lie in (0, 1)");
  const auto kept = detail::converged_only(all, min_samples);
  ConcurrencyDecomposition d;
  d.epsilon = epsilon;
  d.rho = Histogram(-1.0, 1.0, bins);
  std::uint64_t plus = 0, minus = 0, positive_mixed = 0;
  std::vector<double> values;
  values.reserve(kept.size());
  for (const auto& a : kept) {
    values.push_back(a.concurrency);
    if (a.concurrency >= 1.0 - epsilon) {
      ++plus;
    } else if (a.concurrency <= -1.0 + epsilon) {
      ++minus;
    } else {
      d.rho.add(a.concurrency);
      if (a.concurrency > 0.0) ++positive_mixed;
    }
  }
  const double n = static_cast<double>(kept.size());
  d.rho.set_total(kept.size());
  d.p_plus = static_cast<double>(plus) / n;
  d.p_minus = static_cast<double>(minus) / n;
  d.p_zero = static_cast<double>(plus + positive_mixed) / n;
  d.se_p_plus = std::sqrt(d.p_plus * (1.0 - d.p_plus) / n);
  d.se_p_minus = std::sqrt(d.p_minus * (1.0 - d.p_minus) / n);
  d.se_p_zero = std::sqrt(d.p_zero * (1.0 - d.p_zero) / n);
  double var = 0.0;
  d.mean_concurrency = detail::mean_and_se(values, d.se_mean_concurrency, var);
  d.used = kept.size();
  d.non_converged = all.size() - kept.size();
  return d;
}

struct JointHistogram {
  double bin_width{kJointBinWidth};
  std::size_t bins{};  // per axis, over [-1, 1]
  std::vector<std::uint64_t> counts;  // row-major: [concurrency bin][cos bin]
  std::uint64_t total{};
  double mean_cos{}, mean_concurrency{};

  std::uint64_t count(std::size_t cos_bin, std::size_t conc_bin) const noexcept {
    return counts[conc_bin * bins + cos_bin];
  }
  double density(std::size_t cos_bin, std::size_t conc_bin) const noexcept {
    return static_cast<double>(count(cos_bin, conc_bin)) / (static_cast<double>(total) * bin_width * bin_width);
  }
  /// Marginal density over <cos>_T.
  std::vector<double> marginal_cos() const {
    std::vector<double> m(bins, 0.0);
    for (std::size_t j = 0; j < bins; ++j) {
      CompensatedSum s;
      for (std::size_t i = 0; i < bins; ++i) s.add(density(j, i) * bin_width);
      m[j] = s.value();
    }
    return m;
  }
  /// Marginal density over the concurrency.
  std::vector<double> marginal_concurrency() const {
    std::vector<double> m(bins, 0.0);
    for (std::size_t i = 0; i < bins; ++i) {
      CompensatedSum s;
      for (std::size_t j = 0; j < bins; ++j) s.add(density(j, i) * bin_width);
      m[i] = s.value();
    }
    return m;
  }
};

inline JointHistogram joint_histogram(std::span<const TimeAverages> all, double bin_width = kJointBinWidth,
                                      std::size_t min_samples = kMinStatisticsSamples) {
  if (!(bin_width > 0.0) || !(bin_width <= 2.0))
    throw Error(ErrorKind::DomainError, "statistics.joint_bin must lie in (0, 2]");
  const auto kept = detail::converged_only(all, min_samples);
  JointHistogram h;
  h.bin_width = bin_width;
  h.bins = static_cast<std::size_t>(std::llround(2.0 / bin_width));
  h.bin_width = 2.0 / static_cast<double>(h.bins);
  h.counts.assign(h.bins * h.bins, 0);
  const Histogram axis(-1.0, 1.0, h.bins);
  CompensatedSum sc, sq;
  for (const auto& a : kept) {
    ++h.counts[axis.bin_of(a.concurrency) * h.bins + axis.bin_of(a.cos_avg)];
    sc.add(a.cos_avg);
    sq.add(a.concurrency);
  }
  h.total = kept.size();
  h.mean_cos = sc.value() / static_cast<double>(h.total);
  h.mean_concurrency = sq.value() / static_cast<double>(h.total);
  return h;
}

// ---------------------------------------------------------------------------
// Goodness-of-fit helpers.

inline double chi_square_upper_tail(double statistic, double dof) {
  if (dof < 1.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), statistic));
}

/// Pearson chi-square p-value of `h` against bin probabilities `expected`
/// (which must sum to one over the histogram range).
inline double chi_square_pvalue(const Histogram& h, std::span<const double> expected) {
  const double n = static_cast<double>(h.in_range());
  double stat = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double e = n * expected[i];
    if (e <= 0.0) continue;
    const double d = static_cast<double>(h.count(i)) - e;
    stat += d * d / e;
    ++used;
  }
  return chi_square_upper_tail(stat, static_cast<double>(used) - 1.0);
}

inline double chi_square_uniform_pvalue(const Histogram& h) {
  std::vector<double> p(h.bins(), 1.0 / static_cast<double>(h.bins()));
  return chi_square_pvalue(h, p);
}

/// Two-sample chi-square homogeneity test on identically binned histograms.
inline double chi_square_two_sample_pvalue(const Histogram& a, const Histogram& b) {
  if (a.bins() != b.bins()) throw Error(ErrorKind::DomainError, "histograms must share binning");
  const double na = static_cast<double>(a.in_range()), nb = static_cast<double>(b.in_range());
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  double stat = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < a.bins(); ++i) {
    const double ca = static_cast<double>(a.count(i)), cb = static_cast<double>(b.count(i));
    if (ca + cb == 0.0) continue;
    const double d = ka * ca - kb * cb;
    stat += d * d / (ca + cb);
    ++used;
  }
  return chi_square_upper_tail(stat, static_cast<double>(used) - 1.0);
}

struct KsResult {
  double statistic{};
  double critical{};  // at the requested significance
  bool same() const noexcept { return statistic < critical; }
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic critical value
/// c(a) sqrt((n + m) / (n m)), c(a) = sqrt(-ln(a / 2) / 2).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double significance = 0.01) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::TooFewSamples, "KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double c = std::sqrt(-std::log(0.5 * significance) / 2.0);
  return {d, c * std::sqrt((n + m) / (n * m))};
}

}  // namespace bohm
