#pragma once

// Invariant suite run by `bohmqubit validate`: every structural property of
// the model checked at reduced sample sizes, each reported with its measured
// residual and the bound it is held to.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "config.hpp"
#include "dynamics.hpp"
#include "ensemble.hpp"
#include "measures.hpp"
#include "pilot_wave.hpp"
#include "sampling.hpp"
#include "statistics.hpp"

namespace bohm {

struct CheckResult {
  std::string name;
  double value{};
  double bound{};
  bool at_least{};  // pass when value >= bound instead of value <= bound
  bool pass{};
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  void at_most(std::string name, double value, double bound) {
    checks.push_back({std::move(name), value, bound, false, value <= bound});
  }
  void at_least(std::string name, double value, double bound) {
    checks.push_back({std::move(name), value, bound, true, value >= bound});
  }
};

struct ValidationSizes {
  int random_points{1000};
  int trajectories{10};
  double trajectory_horizon{50.0};  // units of I
  std::uint64_t ensemble{4000};
  std::uint64_t trajectory_ensemble{1000};
};

namespace detail {

using Field = std::function<cplx(const std::array<double, 6>&)>;

inline cplx fd_second(const Field& f, std::array<double, 6> x, int j, double h) {
  auto d2 = [&](double s) {
    auto p = x, m = x;
    p[j] += s;
    m[j] -= s;
    return (f(p) - 2.0 * f(x) + f(m)) / (s * s);
  };
  const cplx a = d2(h), b = d2(0.5 * h), c = d2(0.25 * h);
  return (16.0 * (4.0 * c - b) / 3.0 - (4.0 * b - a) / 3.0) / 15.0;
}

inline cplx fd_first(const Field& f, std::array<double, 6> x, int j, double h) {
  auto d1 = [&](double s) {
    auto p = x, m = x;
    p[j] += s;
    m[j] -= s;
    return (f(p) - f(m)) / (2.0 * s);
  };
  const cplx a = d1(h), b = d1(0.5 * h), c = d1(0.25 * h);
  return (16.0 * (4.0 * c - b) / 3.0 - (4.0 * b - a) / 3.0) / 15.0;
}

inline cplx fd_mixed(const Field& f, std::array<double, 6> x, int j, int k, double h) {
  auto dm = [&](double s) {
    auto pp = x, pm = x, mp = x, mm = x;
    pp[j] += s, pp[k] += s, pm[j] += s, pm[k] -= s, mp[j] -= s, mp[k] += s, mm[j] -= s, mm[k] -= s;
    return (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * s * s);
  };
  const cplx a = dm(h), b = dm(0.5 * h), c = dm(0.25 * h);
  return (16.0 * (4.0 * c - b) / 3.0 - (4.0 * b - a) / 3.0) / 15.0;
}

inline cplx fd_laplacian(const Field& f, const std::array<double, 6>& x, double h = 2e-2) {
  const double s = std::sin(x[0]), c = std::cos(x[0]);
  return fd_second(f, x, 0, h) + (c / s) * fd_first(f, x, 0, h) +
         (fd_second(f, x, 1, h) + fd_second(f, x, 2, h) - 2.0 * c * fd_mixed(f, x, 1, 2, h)) / (s * s);
}

inline PairConfiguration uniform_configuration(std::mt19937_64& rng, double margin) {
  std::uniform_real_distribution<double> a(margin, kPi - margin), p(0.0, kTwoPi);
  return {{a(rng), p(rng), p(rng)}, {a(rng), p(rng), p(rng)}};
}

inline QubitPairState uniform_state(std::mt19937_64& rng, Family f, double inertia) {
  std::uniform_real_distribution<double> t(0.0, kPi), p(0.0, kTwoPi);
  return {f, t(rng), p(rng), inertia};
}

inline void pilot_wave_checks(const RunConfig& cfg, const ValidationSizes& n, ValidationReport& rep) {
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  double eigen = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto x = uniform_configuration(rng, 0.2).as_array();
    for (int kind = 0; kind < 2; ++kind) {
      Field f = [kind](const std::array<double, 6>& y) {
        const Orientation o{y[0], y[1], y[2]};
        return kind == 0 ? basis_up(o).value : basis_down(o).value;
      };
      eigen = std::max(eigen, std::abs(-fd_laplacian(f, x) - 0.75 * f(x)));
    }
  }
  rep.at_most("pilot_wave.eigen_check", eigen, 1e-8);

  // Gauss-Legendre (3 points per panel) in alpha, trapezoid in beta and gamma.
  const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)}, gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  cplx overlap = 0.0;
  const int panels = 200, per = 8;
  const double da = kPi / panels, dp = kTwoPi / per;
  for (int p = 0; p < panels; ++p)
    for (int q = 0; q < 3; ++q) {
      const double a = (p + 0.5) * da + 0.5 * da * gx[q];
      for (int ib = 0; ib < per; ++ib)
        for (int ig = 0; ig < per; ++ig) {
          const Orientation o{a, ib * dp, ig * dp};
          overlap += 0.5 * da * gw[q] * std::sin(a) * dp * dp * std::conj(basis_up(o).value) * basis_down(o).value;
        }
    }
  rep.at_most("pilot_wave.orthogonality", std::abs(overlap), 1e-8);

  double mz = 0.0, singlet = 0.0, norm_deficit = 0.0, energy_dev = 0.0, partials = 0.0;
  const QubitPairState singlet_state{Family::Antiparallel, kPi / 2, kPi, cfg.state.inertia};
  for (int k = 0; k < n.random_points; ++k) {
    const auto z = uniform_configuration(rng, 1e-3);
    for (Family fam : {Family::Antiparallel, Family::Parallel}) {
      const auto s = uniform_state(rng, fam, cfg.state.inertia);
      try {
        const auto lf = local_fields(s, z);
        const auto m = angular_momenta(lf, z);
        if (fam == Family::Antiparallel) mz = std::max(mz, std::abs(m.m1.z + m.m2.z));
        norm_deficit = std::max({norm_deficit, 0.5 - m.m1.norm(), 0.5 - m.m2.norm()});
        const double h = energy(s, z);
        const double ref = 0.75 / s.inertia;
        energy_dev = std::max(energy_dev, std::abs(h - ref) / ref);
      } catch (const Error&) {
      }
    }
    try {
      const auto m = angular_momenta(singlet_state, z);
      singlet = std::max(singlet, (m.m1 + m.m2).norm() / std::max(1.0, m.m1.norm()));
    } catch (const Error&) {
    }
  }
  for (int k = 0; k < 100; ++k) {
    const auto s = uniform_state(rng, k % 2 ? Family::Parallel : Family::Antiparallel, cfg.state.inertia);
    const auto z = uniform_configuration(rng, 0.05);
    const auto w = pilot_wave(s, z);
    if (std::abs(w.psi) < 1e-6) continue;
    const auto x = z.as_array();
    for (int j = 0; j < 6; ++j) {
      auto p = x, m = x;
      p[j] += 1e-6;
      m[j] -= 1e-6;
      const cplx fd =
          (pilot_wave(s, PairConfiguration::from_array(p)).psi - pilot_wave(s, PairConfiguration::from_array(m)).psi) /
          2e-6;
      partials = std::max(partials, std::abs(w.dpsi[j] - fd) / std::max(std::abs(fd), std::abs(w.psi)));
    }
  }
  rep.at_most("pilot_wave.mz_sum_antiparallel", mz, 1e-10);
  rep.at_most("pilot_wave.singlet_total_momentum", singlet, 1e-10);
  rep.at_most("pilot_wave.momentum_norm_deficit", std::max(0.0, norm_deficit), 1e-12);
  rep.at_most("pilot_wave.energy_constant", energy_dev, 1e-8);
  rep.at_most("pilot_wave.partials_vs_fd", partials, 1e-6);
}

inline void dynamics_checks(const RunConfig& cfg, const ValidationSizes& n, unsigned threads, ValidationReport& rep) {
  QubitPairState s = cfg.state;
  s.family = Family::Antiparallel;  // the z-momentum sum is an antiparallel invariant
  IntegrationTolerances tol = cfg.tolerances();
  tol.output_interval = 0.5;
  const auto n_traj = static_cast<std::size_t>(n.trajectories);
  IntegrationTolerances tight = tol;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  tight.record_samples = false;
  const double t_ref = std::min(10.0, n.trajectory_horizon) * s.inertia;
  std::vector<double> drift(n_traj, 0.0), torque(n_traj, 0.0), mz(n_traj, 0.0), rescale(n_traj, 0.0),
      reference(n_traj, 0.0);
  std::vector<int> same(n_traj, 1);
  parallel_for(
      n_traj, threads,
      [&](std::size_t k) {
        const auto z0 = sample_one(s, cfg.seed, k).config;
        const auto tr = integrate(s, z0, n.trajectory_horizon * s.inertia, tol);
        if (tr.aborted()) return;
        drift[k] = max_energy_drift(tr);
        torque[k] = max_torque_mismatch(tr);
        for (const auto& smp : tr.samples) mz[k] = std::max(mz[k], std::abs(smp.m1.z + smp.m2.z));
        const auto ref = integrate(s, z0, t_ref, tight);
        if (!ref.aborted()) {
          const auto a = tr.state_at(t_ref), b = ref.segments.back().end();
          for (int j = 0; j < 6; ++j) reference[k] = std::max(reference[k], std::abs(a[j] - b[j]));
        }
        const auto again = integrate(s, z0, n.trajectory_horizon * s.inertia, tol);
        same[k] = again.samples.size() == tr.samples.size() &&
                  std::equal(tr.samples.begin(), tr.samples.end(), again.samples.begin(),
                             [](const TrajectorySample& a, const TrajectorySample& b) {
                               return std::memcmp(a.zeta.data(), b.zeta.data(), sizeof a.zeta) == 0 &&
                                      std::memcmp(&a.t, &b.t, sizeof a.t) == 0;
                             });
        QubitPairState heavy = s;
        heavy.inertia = 2.0 * s.inertia;
        const auto a = analyze_trajectory(s, z0, cfg.analysis());
        const auto b = analyze_trajectory(heavy, z0, cfg.analysis());
        rescale[k] = std::max(std::abs(a.averages.cos_avg - b.averages.cos_avg),
                              std::abs(a.averages.concurrency - b.averages.concurrency));
      },
      1);
  rep.at_most("dynamics.energy_drift", *std::max_element(drift.begin(), drift.end()), 1e-6);
  rep.at_most("dynamics.torque_mismatch", *std::max_element(torque.begin(), torque.end()), 1e-4);
  rep.at_most("dynamics.reference_agreement", *std::max_element(reference.begin(), reference.end()), 1e-6);
  rep.at_most("dynamics.mz_sum_along_trajectory", *std::max_element(mz.begin(), mz.end()), 1e-10);
  rep.at_most("dynamics.time_rescaling", *std::max_element(rescale.begin(), rescale.end()), 1e-6);
  rep.at_most("dynamics.determinism_mismatches",
              static_cast<double>(std::count(same.begin(), same.end(), 0)), 0.0);
}

inline void sampling_checks(const RunConfig& cfg, const ValidationSizes& n, unsigned threads, ValidationReport& rep) {
  QubitPairState s = cfg.state;
  s.family = Family::Antiparallel;
  const EnsembleSpec spec{s, n.ensemble, cfg.seed};
  const auto serial = sample(spec, 1);
  const auto parallel = sample(spec, std::max(2u, threads));
  std::size_t differ = 0;
  for (std::size_t k = 0; k < serial.size(); ++k) {
    const auto a = serial[k].config.as_array(), b = parallel[k].config.as_array();
    if (std::memcmp(a.data(), b.data(), sizeof a) != 0) ++differ;
  }
  rep.at_most("sampling.thread_reproducibility_mismatches", static_cast<double>(differ), 0.0);

  CompensatedSum m1, q1;
  std::vector<double> rel0;
  for (const auto& d : serial) {
    try {
      const auto m = angular_momenta(s, d.config, cfg.tolerances().thresholds);
      m1.add(m.m1.z);
      q1.add(m.m1.z * m.m1.z);
      rel0.push_back(azimuths(m, s.family).relative);
    } catch (const Error&) {
    }
  }
  const double nn = static_cast<double>(serial.size());
  const double mean = m1.value() / nn;
  const double se = std::sqrt(std::max(0.0, q1.value() / nn - mean * mean) / (nn - 1.0));
  rep.at_most("sampling.mean_m1z_sigmas", std::abs(mean - 0.5 * std::cos(s.theta)) / std::max(se, 1e-300), 3.0);

  // Evolved ensemble against an independent t = 0 ensemble.
  const auto evolved = evolved_relative_angles(s, serial, 5.0 * s.inertia, cfg.tolerances(), threads);
  const auto reference = sample({s, n.ensemble, cfg.seed + 1}, threads);
  std::vector<double> rel_ref;
  for (const auto& d : reference) {
    try {
      rel_ref.push_back(azimuths(angular_momenta(s, d.config), s.family).relative);
    } catch (const Error&) {
    }
  }
  const auto h0 = delta_phi_histogram(rel_ref, s.phase, 32, 100);
  const auto h1 = delta_phi_histogram(evolved, s.phase, 32, 100);
  rep.at_least("sampling.stationarity_pvalue", chi_square_two_sample_pvalue(h0.angle, h1.angle), 0.01);
}

inline void statistics_checks(const RunConfig& cfg, const ValidationSizes& n, unsigned threads,
                              ValidationReport& rep) {
  QubitPairState s = cfg.state;
  s.family = Family::Antiparallel;
  EnsembleOptions opt = cfg.ensemble_options(s.theta, threads);
  opt.spec.state = s;
  opt.spec.count = n.ensemble;
  opt.integrate = false;
  opt.min_samples = 100;
  const auto fixed = run_ensemble(opt);
  rep.at_most("statistics.circular_identity", std::abs(fixed.circular.identity_residual), 1e-12);
  rep.at_most("statistics.mean_sin_shifted_sigmas",
              std::abs(fixed.circular.mean_sin_shifted) / std::max(fixed.circular.se_sin_shifted, 1e-300), 3.0);

  // Non-ergodicity witness and family mirror at theta = pi/5.
  EnsembleOptions t = opt;
  t.spec.state = {Family::Antiparallel, kPi / 5, 0.0, s.inertia};
  t.spec.count = n.trajectory_ensemble;
  t.integrate = true;
  const auto anti = run_ensemble(t);
  const auto& ta = *anti.time_average;
  rep.at_least("statistics.nonergodic_variance_sigmas", ta.variance / std::max(ta.se_variance, 1e-300), 10.0);
  const double combined = std::hypot(ta.se, anti.circular.se_c_b);
  rep.at_most("statistics.time_average_mean_sigmas", std::abs(ta.mean - anti.circular.c_b) / combined, 3.0);

  EnsembleOptions p = t;
  p.spec.state.family = Family::Parallel;
  const auto par = run_ensemble(p);
  const auto ks = ks_two_sample(anti.relative_angles, par.relative_angles);
  rep.at_most("statistics.family_mirror_ks_over_critical", ks.statistic / ks.critical, 1.0);
  const auto& da = *anti.decomposition;
  const auto& dp = *par.decomposition;
  rep.at_most("statistics.family_mirror_p_plus_sigmas",
              std::abs(dp.p_plus - da.p_minus) / std::max(std::hypot(dp.se_p_plus, da.se_p_minus), 1e-300), 3.0);

  // C_B nondecreasing over nine angles in [0, pi/2].
  std::vector<std::pair<double, double>> cb;
  for (int k = 0; k <= 8; ++k) {
    EnsembleOptions g = opt;
    g.spec.state = {Family::Antiparallel, kPi / 2 * k / 8.0, 0.0, s.inertia};
    const auto r = run_ensemble(g);
    cb.emplace_back(r.circular.c_b, r.circular.se_c_b);
  }
  int violations = 0;
  for (std::size_t k = 1; k < cb.size(); ++k)
    if (cb[k].first < cb[k - 1].first - 3.0 * std::hypot(cb[k].second, cb[k - 1].second)) ++violations;
  rep.at_most("statistics.c_b_monotonicity_violations", violations, 0.0);
}

inline void measures_checks(ValidationReport& rep) {
  double symmetry = 0.0, forms = 0.0, ordering = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double p = k / 1000.0, theta = kPi * k / 1000.0;
    symmetry = std::max({symmetry, std::abs(binary_entropy(p) - binary_entropy(1.0 - p)),
                         std::abs(procrustean_yield(p) - procrustean_yield(1.0 - p)),
                         std::abs(concurrence(theta) - concurrence(kPi - theta))});
    forms = std::max(forms, std::abs(entanglement_of_formation(state_weight(theta)) -
                                     entanglement_of_formation_from_concurrence(concurrence(theta))));
    ordering = std::max(ordering, procrustean_yield(p) - entanglement_of_formation(p));
  }
  rep.at_most("measures.symmetry", symmetry, 1e-12);
  rep.at_most("measures.formation_forms_agree", forms, 1e-12);
  rep.at_most("measures.formation_above_procrustean", std::max(0.0, ordering), 0.0);
}

}  // namespace detail

inline ValidationReport run_validation(const RunConfig& cfg, unsigned threads = 1, const ValidationSizes& n = {}) {
  cfg.validate();
  ValidationReport rep;
  // A group that raises is reported as one failed entry and the rest still run.
  auto guarded = [&](const char* group, auto&& run) {
    try {
      run();
    } catch (const Error& e) {
      rep.checks.push_back({std::string(group) + ".raised_" + std::string(to_string(e.kind())),
                            std::numeric_limits<double>::quiet_NaN(), 0.0, false, false});
    }
  };
  guarded("pilot_wave", [&] { detail::pilot_wave_checks(cfg, n, rep); });
  guarded("dynamics", [&] { detail::dynamics_checks(cfg, n, threads, rep); });
  guarded("sampling", [&] { detail::sampling_checks(cfg, n, threads, rep); });
  guarded("statistics", [&] { detail::statistics_checks(cfg, n, threads, rep); });
  guarded("measures", [&] { detail::measures_checks(rep); });
  return rep;
}

}  // namespace bohm
