#pragma once

#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "measures.hpp"
#include "parallel.hpp"
#include "pilot_wave.hpp"
#include "sampling.hpp"
#include "statistics.hpp"

namespace bohm {

struct EnsembleOptions {
  EnsembleSpec spec;
  AnalysisOptions analysis{};
  std::size_t bins{kDefaultBins};
  double epsilon{kDefaultEpsilon};
  double joint_bin{kJointBinWidth};
  unsigned threads{1};
  bool integrate{true};
  std::size_t min_samples{kMinStatisticsSamples};
  double max_abort_fraction{1e-3};
};

struct EnsembleResult {
  EnsembleSpec spec;
  std::vector<SampleDraw> samples;
  std::vector<double> relative_angles;  // at t = 0, samples with defined azimuths
  std::vector<Vec3> m1, m2;             // at t = 0
  std::vector<TrajectoryAnalysis> analyses;
  std::vector<TimeAverages> averages;  // non-aborted trajectories, index order
  std::size_t aborted{}, non_converged{}, undefined_azimuth{}, degenerate{};

  CircularSummary circular;
  RelativeAngleHistograms histograms;
  double mean_m1z{}, se_m1z{}, mean_m2z{}, se_m2z{};

  std::optional<TimeAverageDistribution> time_average;
  std::optional<ConcurrencyDecomposition> decomposition;
  std::optional<JointHistogram> joint;

  EnsemblePoint point() const {
    EnsemblePoint p;
    p.theta = spec.state.theta;
    p.c_b = circular.c_b;
    p.se_c_b = circular.se_c_b;
    if (decomposition) {
      p.p_plus = decomposition->p_plus;
      p.se_p_plus = decomposition->se_p_plus;
      p.p_minus = decomposition->p_minus;
      p.se_p_minus = decomposition->se_p_minus;
      p.p_zero = decomposition->p_zero;
      p.se_p_zero = decomposition->se_p_zero;
    }
    return p;
  }
};

/// Samples the equilibrium ensemble, reduces every trajectory to its time
/// averages and assembles all distributions. Per-index results are merged in
/// index order, so the output does not depend on the number of workers.
inline EnsembleResult run_ensemble(const EnsembleOptions& opt) {
  opt.spec.validate();
  if (opt.integrate) opt.analysis.validate();
  EnsembleResult r;
  r.spec = opt.spec;
  r.samples = sample(opt.spec, opt.threads);
  const auto& state = opt.spec.state;
  const std::size_t n = r.samples.size();

  std::vector<std::optional<AngularMomentumPair>> moments(n);
  parallel_for(n, opt.threads, [&](std::size_t k) {
    try {
      moments[k] = angular_momenta(state, r.samples[k].config, opt.analysis.tolerances.thresholds);
    } catch (const Error&) {
    }
  });
  CompensatedSum s1, s2, q1, q2;
  for (std::size_t k = 0; k < n; ++k) {
    if (!moments[k]) {
      ++r.undefined_azimuth;
      continue;
    }
    r.m1.push_back(moments[k]->m1);
    r.m2.push_back(moments[k]->m2);
    s1.add(moments[k]->m1.z);
    s2.add(moments[k]->m2.z);
    q1.add(moments[k]->m1.z * moments[k]->m1.z);
    q2.add(moments[k]->m2.z * moments[k]->m2.z);
    try {
      r.relative_angles.push_back(azimuths(*moments[k], state.family).relative);
    } catch (const Error&) {
      ++r.undefined_azimuth;
    }
  }
  const double nm = static_cast<double>(r.m1.size());
  if (nm > 1.0) {
    r.mean_m1z = s1.value() / nm;
    r.mean_m2z = s2.value() / nm;
    r.se_m1z = std::sqrt(std::max(0.0, q1.value() / nm - r.mean_m1z * r.mean_m1z) / (nm - 1.0));
    r.se_m2z = std::sqrt(std::max(0.0, q2.value() / nm - r.mean_m2z * r.mean_m2z) / (nm - 1.0));
  }
  r.circular = bohmian_concurrence(r.relative_angles, state.phase, opt.min_samples);
  r.histograms = delta_phi_histogram(r.relative_angles, state.phase, opt.bins, opt.min_samples);

  if (!opt.integrate) return r;

  r.analyses.resize(n);
  // Stop early once either failure gate can no longer be met.
  const double nd = static_cast<double>(n);
  std::atomic<std::size_t> aborted{0}, failed{0};
  parallel_for(
      n, opt.threads,
      [&](std::size_t k) {
        const auto& a = r.analyses[k] = analyze_trajectory(state, r.samples[k].config, opt.analysis);
        if (a.flags & kAbortFlags) {
          if (static_cast<double>(++aborted) > opt.max_abort_fraction * nd)
            throw Error(ErrorKind::ExcessiveAborts, "more than " + std::to_string(opt.max_abort_fraction * nd) +
                                                        " of " + std::to_string(n) +
                                                        " trajectories aborted at nodes or poles");
        } else if (!a.averages.converged && static_cast<double>(++failed) > kMaxNonConvergedFraction * nd) {
          throw Error(ErrorKind::ExcessiveNonConvergence,
                      "more than " + std::to_string(kMaxNonConvergedFraction * nd) + " of " + std::to_string(n) +
                          " trajectories did not converge");
        }
      },
      4);
  for (const auto& a : r.analyses) {
    if (a.flags & kAbortFlags) {
      ++r.aborted;
      continue;
    }
    if (!a.averages.converged) ++r.non_converged;
    if (a.flags & kDegenerate) ++r.degenerate;
    r.averages.push_back(a.averages);
  }
  if (static_cast<double>(r.aborted) > opt.max_abort_fraction * static_cast<double>(n))
    throw Error(ErrorKind::ExcessiveAborts, std::to_string(r.aborted) + " of " + std::to_string(n) +
                                                " trajectories aborted at nodes or poles");
  r.time_average = time_average_distribution(r.averages, opt.bins, opt.epsilon, opt.min_samples);
  r.decomposition = concurrency_decomposition(r.averages, opt.epsilon, opt.bins, opt.min_samples);
  r.joint = joint_histogram(r.averages, opt.joint_bin, opt.min_samples);
  return r;
}

/// Relative angles of the given configurations after evolving each for time
/// `dt`; entries whose evolution aborts or whose azimuth is undefined are
/// skipped.
inline std::vector<double> evolved_relative_angles(const QubitPairState& state,
                                                   const std::vector<SampleDraw>& samples, double dt,
                                                   const IntegrationTolerances& tol = {}, unsigned threads = 1) {
  IntegrationTolerances t = tol;
  t.record_samples = false;
  std::vector<std::optional<double>> rel(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t k) {
    const Trajectory tr = integrate(state, samples[k].config, dt, t);
    if (tr.aborted()) return;
    try {
      const auto z = PairConfiguration::from_array(tr.segments.back().end());
      rel[k] = azimuths(angular_momenta(state, z, t.thresholds), state.family).relative;
    } catch (const Error&) {
    }
  });
  std::vector<double> out;
  for (const auto& v : rel)
    if (v) out.push_back(*v);
  return out;
}

}  // namespace bohm
