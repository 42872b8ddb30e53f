// bohmqubit: batch front end for trajectories, ensembles, theta sweeps and the
// invariant suite.
//
// Exit codes: 0 success, 1 validation failure, 2 configuration error,
// 3 runtime abort.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bohm/config.hpp"
#include "bohm/dynamics.hpp"
#include "bohm/ensemble.hpp"
#include "bohm/io.hpp"
#include "bohm/measures.hpp"
#include "bohm/parallel.hpp"
#include "bohm/sampling.hpp"
#include "bohm/validate.hpp"

namespace {

using namespace bohm;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed, count;
  std::optional<double> theta, phase, rel_tol, inertia, horizon;
  std::optional<std::string> family, out;
  std::vector<double> z0;
  unsigned threads{0};
};

void add_common(CLI::App& cmd, Overrides& o) {
  const RunConfig d;
  cmd.add_option("--config", o.config_path, "JSON configuration file (a run manifest also works)");
  cmd.add_option("--seed", o.seed, "ensemble seed [default " + std::to_string(d.seed) + "]");
  cmd.add_option("--count", o.count, "ensemble size [default " + std::to_string(d.count) + "]");
  cmd.add_option("--theta", o.theta, "entanglement angle theta in [0, pi] [default pi/5]");
  cmd.add_option("--phase", o.phase, "relative phase in [0, 2 pi) [default 0]");
  cmd.add_option("--family", o.family, "state family [default antiparallel]")
      ->check(CLI::IsMember({"antiparallel", "parallel"}));
  cmd.add_option("--inertia", o.inertia, "moment of inertia I [default 1]");
  cmd.add_option("--rel-tol", o.rel_tol, "integrator relative tolerance [default 1e-9]");
  cmd.add_option("--out", o.out, "output directory [default out]");
  cmd.add_option("--threads", o.threads, "worker threads, 0 = all cores [default 0]");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c;
  if (!o.config_path.empty()) c = load_config(o.config_path, c);
  if (o.seed) c.seed = *o.seed;
  if (o.count) c.count = *o.count;
  if (o.theta) c.state.theta = *o.theta;
  if (o.phase) c.state.phase = *o.phase;
  if (o.family) c.state.family = family_from_string(*o.family);
  if (o.inertia) c.state.inertia = *o.inertia;
  if (o.rel_tol) c.rel_tol = *o.rel_tol;
  if (o.out) c.out_dir = *o.out;
  if (o.horizon) c.trajectory_horizon = *o.horizon;
  if (!o.z0.empty()) {
    std::array<double, 6> a{};
    std::copy(o.z0.begin(), o.z0.end(), a.begin());
    c.z0 = PairConfiguration::from_array(a);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

int cmd_trajectory(const RunConfig& cfg) {
  Stopwatch total;
  Manifest man("trajectory", cfg, cfg.out_dir);
  const PairConfiguration z0 = cfg.z0 ? *cfg.z0 : sample_one(cfg.state, cfg.seed, 0).config;
  const double I = cfg.state.inertia;
  IntegrationTolerances tol = cfg.tolerances();
  tol.output_interval = cfg.output_interval * I;

  Stopwatch sw;
  const Trajectory tr = integrate(cfg.state, z0, cfg.trajectory_horizon * I, tol);
  man.time("integrate", sw.seconds());

  json f;
  f["z0"] = z0.as_array();
  f["horizon"] = tr.horizon;
  f["flags"] = flag_names(tr.flags);
  f["samples"] = tr.samples.size();
  if (!tr.samples.empty()) {
    const auto& a = tr.samples.front();
    const auto& b = tr.samples.back();
    const double span = b.t - a.t;
    double a1_lo = a.zeta[0], a1_hi = a1_lo, a2_lo = a.zeta[3], a2_hi = a2_lo;
    for (const auto& s : tr.samples) {
      a1_lo = std::min(a1_lo, s.zeta[0]);
      a1_hi = std::max(a1_hi, s.zeta[0]);
      a2_lo = std::min(a2_lo, s.zeta[3]);
      a2_hi = std::max(a2_hi, s.zeta[3]);
    }
    f["alpha_range"] = {a1_hi - a1_lo, a2_hi - a2_lo};
    f["alpha_constant"] = std::max(a1_hi - a1_lo, a2_hi - a2_lo) < 1e-8;
    if (span > 0.0) {
      f["mean_beta_rates"] = {(b.zeta[1] - a.zeta[1]) / span, (b.zeta[4] - a.zeta[4]) / span};
      f["mean_azimuth_rates"] = {(b.phi1 - a.phi1) / span, (b.phi2 - a.phi2) / span};
    }
  }
  int code = kExitOk;
  if (tr.aborted()) {
    f["abort_reason"] = std::string(to_string(*tr.abort_reason));
    code = kExitRuntime;
  } else {
    sw = Stopwatch();
    const auto period = period_detect(tr);
    f["period"] = period.period ? json(*period.period) : json(nullptr);
    f["degenerate"] = period.degenerate;
    const auto annulus = annulus_radii(tr);
    f["annulus"] = {{"inner", annulus.inner}, {"outer", annulus.outer}, {"stabilized", annulus.stabilized}};
    f["energy_drift"] = max_energy_drift(tr);
    f["time_average_cos"] = time_average_cos(tr, cfg.state.phase);
    f["concurrency"] = concurrency(tr);
    try {
      const auto curve = rotating_frame_curve(tr);
      f["rotating_frame"] = {{"closure", curve.closure}, {"scale", curve.scale}, {"points", curve.points.size()}};
      if (cfg.wants("csv")) man.write("rotating_frame.csv", rotating_frame_csv(curve));
    } catch (const Error& e) {
      f["rotating_frame"] = nullptr;
      f["rotating_frame_unavailable"] = e.what();
    }
    man.time("features", sw.seconds());
  }
  if (cfg.wants("csv")) man.write("trajectory.csv", trajectory_csv(tr));
  man.write("features.json", f.dump(2) + "\n");
  man.extra()["flagged_trajectories"] = tr.flags ? 1 : 0;
  man.time("total", total.seconds());
  man.finish();
  if (code == kExitRuntime) std::cerr << "trajectory aborted: " << to_string(*tr.abort_reason) << '\n';
  std::cout << "wrote " << man.directory().string() << '\n';
  return code;
}

void write_ensemble(Manifest& man, const RunConfig& cfg, const EnsembleResult& r, const std::string& prefix) {
  if (cfg.wants("csv")) {
    man.write(prefix + "delta_phi_histogram.csv", histogram_csv(r.histograms.angle));
    man.write(prefix + "cos_histogram.csv", histogram_csv(r.histograms.cosine));
    if (r.time_average) man.write(prefix + "time_average_histogram.csv", time_average_csv(*r.time_average));
    if (r.decomposition) man.write(prefix + "concurrency_rho.csv", histogram_csv(r.decomposition->rho));
    if (r.joint) man.write(prefix + "joint_histogram.csv", joint_csv(*r.joint));
    man.write(prefix + "per_trajectory.csv", per_trajectory_csv(r));
    man.write(prefix + "samples.csv", samples_csv(r.samples));
  }
  if (cfg.wants("json")) man.write(prefix + "summary.json", summary_json(r).dump(2) + "\n");
}

json flag_counts(const EnsembleResult& r) {
  return {{"aborted", r.aborted},
          {"non_converged", r.non_converged},
          {"degenerate", r.degenerate},
          {"undefined_azimuth", r.undefined_azimuth}};
}

int cmd_ensemble(const RunConfig& cfg, unsigned threads) {
  Stopwatch total;
  Manifest man("ensemble", cfg, cfg.out_dir);
  const auto r = run_ensemble(cfg.ensemble_options(cfg.state.theta, threads));
  man.time("ensemble", total.seconds());
  write_ensemble(man, cfg, r, "");
  man.extra()["flagged_trajectories"] = flag_counts(r);
  man.time("total", total.seconds());
  man.finish();
  std::cout << "C_B = " << fmt17(r.circular.c_b) << " +- " << fmt17(r.circular.se_c_b) << '\n';
  std::cout << "wrote " << man.directory().string() << '\n';
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, unsigned threads) {
  if (cfg.theta_values.empty()) throw Error(ErrorKind::ConfigError, "sweep.theta_values must not be empty");
  Stopwatch total;
  Manifest man("sweep", cfg, cfg.out_dir);
  std::vector<EnsemblePoint> points;
  json flags = json::object();
  for (std::size_t k = 0; k < cfg.theta_values.size(); ++k) {
    const double theta = cfg.theta_values[k];
    Stopwatch sw;
    const auto r = run_ensemble(cfg.ensemble_options(theta, threads));
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "theta_%02zu_", k);
    man.time(std::string(prefix) + "ensemble", sw.seconds());
    write_ensemble(man, cfg, r, prefix);
    flags[fmt17(theta)] = flag_counts(r);
    points.push_back(r.point());
    std::cout << "theta = " << fmt17(theta) << "  C_B = " << fmt17(r.circular.c_b) << '\n';
  }
  const auto rows = comparison_table(cfg.theta_values, points);
  man.write("comparison_table.csv", comparison_csv(rows));
  man.extra()["flagged_trajectories"] = flags;
  man.extra()["ordering_violations"] =
      std::count_if(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.ordering_violation; });
  man.time("total", total.seconds());
  man.finish();
  std::cout << "wrote " << man.directory().string() << '\n';
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, unsigned threads) {
  Stopwatch total;
  Manifest man("validate", cfg, cfg.out_dir);
  const auto rep = run_validation(cfg, threads);
  json j = json::array();
  for (const auto& c : rep.checks) {
    std::printf("%s  %-48s %.3e %s %.1e\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                c.at_least ? ">=" : "<=", c.bound);
    j.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound},
                 {"relation", c.at_least ? ">=" : "<="}, {"pass", c.pass}});
  }
  man.write("validation_report.json", json{{"pass", rep.ok()}, {"checks", j}}.dump(2) + "\n");
  man.time("total", total.seconds());
  man.finish();
  std::cout << (rep.ok() ? "all invariants hold" : "invariant violations found") << '\n';
  return rep.ok() ? kExitOk : kExitValidation;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::DomainError:
    case ErrorKind::InvalidTolerance:
    case ErrorKind::MissingEnsemble:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"de Broglie-Bohm simulation of an entangled pair of spin-1/2 rigid rotors"};
  app.require_subcommand(1);
  Overrides o;

  auto* traj = app.add_subcommand("trajectory", "integrate one trajectory and extract its features");
  add_common(*traj, o);
  traj->add_option("--z0", o.z0, "initial angles alpha1 beta1 gamma1 alpha2 beta2 gamma2")->expected(6);
  traj->add_option("--horizon", o.horizon, "integration horizon in units of I [default 50]");
  auto* ens = app.add_subcommand("ensemble", "sample an equilibrium ensemble and analyse every trajectory");
  add_common(*ens, o);
  auto* sweep = app.add_subcommand("sweep", "run the ensemble over sweep.theta_values and tabulate the measures");
  add_common(*sweep, o);
  auto* val = app.add_subcommand("validate", "run the invariant suite at reduced sample sizes");
  add_common(*val, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    const RunConfig cfg = resolve(o);
    const unsigned threads = resolve_threads(o.threads);
    if (traj->parsed()) return cmd_trajectory(cfg);
    if (ens->parsed()) return cmd_ensemble(cfg, threads);
    if (sweep->parsed()) return cmd_sweep(cfg, threads);
    return cmd_validate(cfg, threads);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
