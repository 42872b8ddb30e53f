#pragma once

// Bohmian trajectories of the rotor pair and the per-trajectory features
// built from them (annulus radii, rotating-frame curve, period, time averages
// of the relative azimuth and of the concurrency sign).
//
// Integration runs in the dimensionless time s = t / I with the unit-inertia
// guidance field, so changing I rescales the time axis and nothing else.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "dopri5.hpp"
#include "errors.hpp"
#include "pilot_wave.hpp"
#include "types.hpp"

namespace bohm {

enum TrajectoryFlag : unsigned {
  kNonConverged = 1u << 0,
  kNodeAbort = 1u << 1,
  kSingularityAbort = 1u << 2,
  kAzimuthGap = 1u << 3,
  kDegenerate = 1u << 4,
};

inline std::vector<std::string> flag_names(unsigned flags) {
  std::vector<std::string> out;
  if (flags & kNonConverged) out.emplace_back("NON_CONVERGED");
  if (flags & kNodeAbort) out.emplace_back("NODE_ABORT");
  if (flags & kSingularityAbort) out.emplace_back("SINGULARITY_ABORT");
  if (flags & kAzimuthGap) out.emplace_back("AZIMUTH_GAP");
  if (flags & kDegenerate) out.emplace_back("DEGENERATE");
  return out;
}

inline constexpr unsigned kAbortFlags = kNodeAbort | kSingularityAbort;

using ConfigArray = std::array<double, 6>;

/// Angle rates at unit inertia:
///   da/ds = S_a,  db/ds = (S_b - cos a S_g) / sin^2 a,  dg/ds = (S_g - cos a S_b) / sin^2 a
/// per rotor, i.e. the phase gradient raised with the SO(3) metric.
inline ConfigArray unit_guidance(const LocalFields& lf) noexcept {
  ConfigArray r;
  for (int i = 0; i < 2; ++i) {
    const double sa = lf.grad_phase[3 * i], sb = lf.grad_phase[3 * i + 1], sg = lf.grad_phase[3 * i + 2];
    const double c = lf.cos_alpha[i], s2 = lf.sin_alpha[i] * lf.sin_alpha[i];
    r[3 * i] = sa;
    r[3 * i + 1] = (sb - c * sg) / s2;
    r[3 * i + 2] = (sg - c * sb) / s2;
  }
  return r;
}

inline ConfigArray guidance_field(const QubitPairState& state, const PairConfiguration& z,
                                  const FieldThresholds& thr = {}) {
  ConfigArray r = unit_guidance(local_fields(state, z, thr));
  for (double& v : r) v /= state.inertia;
  return r;
}

struct IntegrationTolerances {
  double rel_tol{1e-9};
  double abs_tol{1e-11};
  /// Spacing of the uniform output grid in units of I; 0 records step ends only.
  double output_interval{0.0};
  bool record_samples{true};
  FieldThresholds thresholds{};
  /// Accepted-step budget over the whole trajectory, extensions included.
  std::size_t max_steps{200'000};

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !std::isfinite(rel_tol) || !std::isfinite(abs_tol))
      throw Error(ErrorKind::InvalidTolerance, "integrator.rel_tol and integrator.abs_tol must be positive");
    if (!(output_interval >= 0.0)) throw Error(ErrorKind::InvalidTolerance, "output_interval must be >= 0");
    if (!(thresholds.node_relative > 0.0) || !(thresholds.sin_alpha_min > 0.0))
      throw Error(ErrorKind::InvalidTolerance, "integrator.r_min and integrator.s_min must be positive");
    if (max_steps < 1) throw Error(ErrorKind::InvalidTolerance, "max_steps must be >= 1");
  }

  StepControl step_control() const {
    StepControl c;
    c.rel_tol = rel_tol;
    c.abs_tol = abs_tol;
    c.reference_magnitude = 1.0;
    return c;
  }
};

struct TrajectorySample {
  double t{};
  ConfigArray zeta{};  // unwrapped angles
  Vec3 m1, m2;
  double energy{};
  double phi1{}, phi2{};  // unwrapped azimuths
};

struct Trajectory {
  QubitPairState state;
  PairConfiguration initial;
  IntegrationTolerances tolerances;
  std::vector<TrajectorySample> samples;
  std::vector<DenseSegment<6>> segments;  // in dimensionless time s = t / I
  double horizon{};                       // time actually reached
  std::optional<double> period;
  unsigned flags{};
  std::optional<ErrorKind> abort_reason;
  double next_step{};  // step proposal carried across extensions (s units)

  bool aborted() const noexcept { return (flags & kAbortFlags) != 0; }
  double s_end() const noexcept { return segments.empty() ? 0.0 : segments.back().t1(); }

  /// Dense-output configuration at dimensionless time s in [0, s_end()].
  ConfigArray state_at_s(double s) const {
    if (segments.empty()) return initial.as_array();
    auto it = std::upper_bound(segments.begin(), segments.end(), s,
                               [](double v, const DenseSegment<6>& seg) { return v < seg.t0; });
    if (it != segments.begin()) --it;
    return it->at(s);
  }
  ConfigArray state_at(double t) const { return state_at_s(t / state.inertia); }
};

namespace detail {

struct GuidanceRhs {
  const QubitPairState* state;
  FieldThresholds thr;
  void operator()(double, const ConfigArray& y, ConfigArray& dy) const {
    dy = unit_guidance(local_fields(*state, PairConfiguration::from_array(y), thr));
  }
};

inline void unwrap_into(double& unwrapped, double wrapped) noexcept {
  unwrapped += wrap_pi(wrapped - unwrapped);
}

inline TrajectorySample make_sample(const Trajectory& tr, double s, const ConfigArray& zeta,
                                    const TrajectorySample* prev, unsigned& flags) {
  TrajectorySample smp;
  smp.t = s * tr.state.inertia;
  smp.zeta = zeta;
  const auto z = PairConfiguration::from_array(zeta);
  const auto lf = local_fields(tr.state, z, tr.tolerances.thresholds);
  const auto m = angular_momenta(lf, z);
  smp.m1 = m.m1;
  smp.m2 = m.m2;
  smp.energy = (m.m1.x * m.m1.x + m.m1.y * m.m1.y + m.m1.z * m.m1.z + m.m2.x * m.m2.x + m.m2.y * m.m2.y +
                m.m2.z * m.m2.z) /
                   (2.0 * tr.state.inertia) +
               quantum_potential(lf, tr.state.inertia);
  const bool ok1 = m.m1.norm_xy() > kAzimuthMinProjection, ok2 = m.m2.norm_xy() > kAzimuthMinProjection;
  if (!ok1 || !ok2) flags |= kAzimuthGap;
  const double p1 = ok1 ? std::atan2(m.m1.y, m.m1.x) : (prev ? prev->phi1 : 0.0);
  const double p2 = ok2 ? std::atan2(m.m2.y, m.m2.x) : (prev ? prev->phi2 : 0.0);
  if (prev) {
    smp.phi1 = prev->phi1;
    smp.phi2 = prev->phi2;
    if (ok1) unwrap_into(smp.phi1, p1);
    if (ok2) unwrap_into(smp.phi2, p2);
  } else {
    smp.phi1 = p1;
    smp.phi2 = p2;
  }
  return smp;
}

inline void continue_integration(Trajectory& tr, double new_horizon) {
  if (tr.aborted() || !(new_horizon > tr.horizon)) return;
  const double s_target = new_horizon / tr.state.inertia;
  StepControl ctl = tr.tolerances.step_control();
  if (tr.next_step > 0.0) ctl.initial_step = tr.next_step;
  if (tr.segments.size() >= tr.tolerances.max_steps) {
    tr.flags |= kNonConverged;
    return;
  }
  ctl.max_steps = tr.tolerances.max_steps - tr.segments.size();
  DormandPrince5<6, GuidanceRhs> dp(GuidanceRhs{&tr.state, tr.tolerances.thresholds}, ctl);
  const double s0 = tr.s_end();
  const ConfigArray y0 = tr.segments.empty() ? tr.initial.as_array() : tr.segments.back().end();
  try {
    dp.reset(s0, y0);
  } catch (const Error& e) {
    tr.abort_reason = e.kind();
    tr.flags |= e.kind() == ErrorKind::NodeProximity ? kNodeAbort : kSingularityAbort;
    return;
  }

  const double grid = tr.tolerances.output_interval;  // units of I, i.e. s units
  auto record = [&](double s, const ConfigArray& zeta) {
    try {
      tr.samples.push_back(make_sample(tr, s, zeta, &tr.samples.back(), tr.flags));
    } catch (const Error&) {
      tr.flags |= kAzimuthGap;
    }
  };
  auto on_step = [&](const DenseSegment<6>& seg) {
    tr.segments.push_back(seg);
    if (!tr.tolerances.record_samples) return;
    if (grid > 0.0) {
      auto k = static_cast<std::int64_t>(std::floor(seg.t0 / grid)) + 1;
      for (;; ++k) {
        const double sg = static_cast<double>(k) * grid;
        if (sg >= seg.t1()) break;
        if (sg <= seg.t0) continue;
        record(sg, seg.at(sg));
      }
    }
    record(seg.t1(), seg.end());
  };
  const auto status = dp.advance(s_target, on_step);
  tr.horizon = tr.s_end() * tr.state.inertia;
  tr.next_step = 0.0;
  if (status == decltype(dp)::Status::Failed) {
    const ErrorKind why = dp.failure().value_or(ErrorKind::InvalidTolerance);
    tr.abort_reason = why;
    if (why == ErrorKind::NodeProximity)
      tr.flags |= kNodeAbort;
    else if (why == ErrorKind::CoordinateSingularity)
      tr.flags |= kSingularityAbort;
    else
      tr.flags |= kNonConverged;
  } else if (!tr.segments.empty()) {
    tr.next_step = tr.segments.back().h;
  }
}

}  // namespace detail

/// Integrates the guidance equations from z0 up to `horizon` (time units).
/// Node or pole encounters abort the run and set a flag instead of throwing.
inline Trajectory integrate(const QubitPairState& state, const PairConfiguration& z0, double horizon,
                            const IntegrationTolerances& tol = {}) {
  state.validate();
  tol.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error(ErrorKind::InvalidTolerance, "horizon must be positive and finite");
  Trajectory tr;
  tr.state = state;
  tr.initial = z0;
  tr.tolerances = tol;
  if (tol.record_samples) {
    try {
      tr.samples.push_back(detail::make_sample(tr, 0.0, z0.as_array(), nullptr, tr.flags));
    } catch (const Error& e) {
      tr.abort_reason = e.kind();
      tr.flags |= e.kind() == ErrorKind::NodeProximity ? kNodeAbort : kSingularityAbort;
      return tr;
    }
  }
  detail::continue_integration(tr, horizon);
  return tr;
}

/// Continues an existing trajectory to a longer horizon.
inline void extend(Trajectory& tr, double new_horizon) { detail::continue_integration(tr, new_horizon); }

// ---------------------------------------------------------------------------
// Track: fields sampled uniformly inside every accepted step.

struct TrackPoint {
  double s{};
  Vec3 m1, m2;
  double phi1{}, phi2{};  // unwrapped
  bool azimuth_ok{true};
};

inline constexpr int kDefaultSubdivisions = 8;

namespace detail {

/// Number of equal panels that keeps every azimuthal Euler angle turning by
/// at most max_turn per panel across a dense segment.
inline int panel_count(const DenseSegment<6>& seg, double max_turn, int at_least) noexcept {
  const auto end = seg.end();
  double turn = 0.0;
  for (int j : {1, 2, 4, 5}) turn = std::max(turn, std::abs(end[j] - seg.start()[j]));
  const double n = std::ceil(turn / max_turn);
  return std::clamp(static_cast<int>(std::min(n, 65536.0)), at_least, 65536);
}

inline constexpr double kTrackTurn = 0.25;
inline constexpr double kQuadratureTurn = 0.5;

}  // namespace detail

namespace detail {

inline TrackPoint track_point(const Trajectory& tr, double s, const ConfigArray& zeta, const TrackPoint* prev) {
  TrackPoint p;
  p.s = s;
  const auto z = PairConfiguration::from_array(zeta);
  AngularMomentumPair m;
  try {
    m = angular_momenta(tr.state, z, tr.tolerances.thresholds);
  } catch (const Error&) {
    p.azimuth_ok = false;
    if (prev) {
      p.m1 = prev->m1;
      p.m2 = prev->m2;
      p.phi1 = prev->phi1;
      p.phi2 = prev->phi2;
    }
    return p;
  }
  p.m1 = m.m1;
  p.m2 = m.m2;
  p.azimuth_ok = m.m1.norm_xy() > kAzimuthMinProjection && m.m2.norm_xy() > kAzimuthMinProjection;
  const double a1 = std::atan2(m.m1.y, m.m1.x), a2 = std::atan2(m.m2.y, m.m2.x);
  if (prev) {
    p.phi1 = prev->phi1;
    p.phi2 = prev->phi2;
    if (p.azimuth_ok) {
      unwrap_into(p.phi1, a1);
      unwrap_into(p.phi2, a2);
    }
  } else {
    p.phi1 = a1;
    p.phi2 = a2;
  }
  return p;
}

}  // namespace detail

struct Track {
  std::vector<TrackPoint> points;
  std::size_t segments_consumed{};
  int subdivisions{kDefaultSubdivisions};
  bool gaps{};
};

/// Appends track points for segments not yet consumed.
inline void update_track(const Trajectory& tr, Track& track) {
  if (track.points.empty()) {
    track.points.push_back(detail::track_point(tr, 0.0, tr.initial.as_array(), nullptr));
    if (!track.points.back().azimuth_ok) track.gaps = true;
  }
  for (; track.segments_consumed < tr.segments.size(); ++track.segments_consumed) {
    const auto& seg = tr.segments[track.segments_consumed];
    const int n = detail::panel_count(seg, detail::kTrackTurn, track.subdivisions);
    for (int j = 1; j <= n; ++j) {
      const double s = j == n ? seg.t1() : seg.t0 + seg.h * j / n;
      const ConfigArray zeta = j == n ? seg.end() : seg.at(s);
      track.points.push_back(detail::track_point(tr, s, zeta, &track.points.back()));
      if (!track.points.back().azimuth_ok) track.gaps = true;
    }
  }
}

inline Track build_track(const Trajectory& tr, int subdivisions = kDefaultSubdivisions) {
  Track t;
  t.subdivisions = subdivisions;
  update_track(tr, t);
  return t;
}

// ---------------------------------------------------------------------------
// Geometric features.

/// Rotor-2 momentum as seen by the frame construction. The parallel family is
/// the image of the antiparallel one under (alpha, beta, gamma) ->
/// (pi - alpha, -beta, gamma) on rotor 2, which sends M2 to (x, -y, -z); the
/// mirror restores the co-rotating symmetry both families share.
inline Vec3 frame_image(const Vec3& m2, Family f) noexcept {
  return f == Family::Parallel ? Vec3{m2.x, -m2.y, -m2.z} : m2;
}

struct AnnulusRadii {
  double inner{};
  double outer{};
  bool stabilized{};
};

/// Extremes of |M1_xy + M2_xy| (rotor 2 through frame_image) along the trajectory; stabilized when the
/// extremes of the first half already agree with the full run to 1%.
inline AnnulusRadii annulus_radii(const Trajectory& tr) {
  const Track track = build_track(tr);
  const double s_half = 0.5 * tr.s_end();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  double lo_half = lo, hi_half = 0.0;
  for (const auto& p : track.points) {
    const double r = (p.m1 + frame_image(p.m2, tr.state.family)).norm_xy();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    if (p.s <= s_half) {
      lo_half = std::min(lo_half, r);
      hi_half = std::max(hi_half, r);
    }
  }
  AnnulusRadii out{lo, hi, false};
  const double tol = 0.01 * std::max(hi, 1e-300);
  out.stabilized = std::abs(lo_half - lo) <= tol && std::abs(hi_half - hi) <= tol;
  if (hi < 1e-12) out.stabilized = true;
  return out;
}

/// Relative configuration expressed in the frame co-rotating with the azimuth
/// of the total in-plane momentum.
struct RotatingFrameState {
  double dx{}, dy{};      // (M2 - M1)_xy in the rotating frame
  double total_xy{};      // |M1_xy + M2_xy|
  double m1z{};
  bool defined{};

  std::array<double, 4> vec() const noexcept { return {dx, dy, total_xy, m1z}; }
};

inline constexpr double kTotalMomentumFloor = 1e-10;

inline RotatingFrameState rotating_frame_state(const Vec3& m1, const Vec3& m2_raw,
                                               Family f = Family::Antiparallel) noexcept {
  const Vec3 m2 = frame_image(m2_raw, f);
  const Vec3 tot = m1 + m2;
  const double n = tot.norm_xy();
  RotatingFrameState r;
  r.total_xy = n;
  r.m1z = m1.z;
  if (!(n > kTotalMomentumFloor)) return r;
  const double c = tot.x / n, s = tot.y / n;
  const Vec3 d = m2 - m1;
  r.dx = c * d.x + s * d.y;
  r.dy = -s * d.x + c * d.y;
  r.defined = true;
  return r;
}

struct CurvePoint {
  double t, x, y;
};

struct RotatingFrameCurve {
  std::vector<CurvePoint> points;
  double scale{};    // max |M2 - M1|
  double closure{};  // min return distance of the curve to its start, relative to scale
};

namespace detail {

inline double dist4(const std::array<double, 4>& a, const std::array<double, 4>& b) noexcept {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline RotatingFrameState rotating_state_at(const Trajectory& tr, double s) {
  const auto z = PairConfiguration::from_array(tr.state_at_s(s));
  const auto m = angular_momenta(tr.state, z, tr.tolerances.thresholds);
  return rotating_frame_state(m.m1, m.m2, tr.state.family);
}

struct ReturnSearch {
  std::optional<double> first_return;  // s units
  double best_relative{std::numeric_limits<double>::infinity()};
  bool static_configuration{};
  bool undefined{};
  double scale{};
};

// Finds returns of the rotating-frame configuration (components selected by
// `planar_only`) to its initial value. Local minima of the distance on the
// track grid are refined on the dense output.
inline ReturnSearch find_returns(const Trajectory& tr, const Track& track, double rel_tol, bool planar_only,
                                 bool stop_at_first) {
  ReturnSearch out;
  const auto& pts = track.points;
  if (pts.size() < 3) return out;
  auto project = [&](const RotatingFrameState& r) {
    auto v = r.vec();
    if (planar_only) v[2] = v[3] = 0.0;
    return v;
  };
  std::vector<double> dist(pts.size(), std::numeric_limits<double>::quiet_NaN());
  const RotatingFrameState r0 = rotating_frame_state(pts[0].m1, pts[0].m2, tr.state.family);
  double scale = 0.0;
  bool any_defined = false;
  for (const auto& p : pts) scale = std::max(scale, (frame_image(p.m2, tr.state.family) - p.m1).norm());
  out.scale = scale;
  if (!r0.defined) {
    out.undefined = true;
    return out;
  }
  const auto x0 = project(r0);
  double dmax = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto r = rotating_frame_state(pts[k].m1, pts[k].m2, tr.state.family);
    if (!r.defined) continue;
    any_defined = true;
    dist[k] = dist4(project(r), x0);
    dmax = std::max(dmax, dist[k]);
  }
  if (!any_defined) {
    out.undefined = true;
    return out;
  }
  const double tol = rel_tol * scale;
  if (dmax <= tol) {
    out.static_configuration = true;
    return out;
  }
  const double depart = std::min(1e-2 * scale, 0.25 * dmax);
  std::size_t k = 0;
  while (k < pts.size() && !(dist[k] > depart)) ++k;
  for (++k; k + 1 < pts.size(); ++k) {
    if (std::isnan(dist[k]) || std::isnan(dist[k - 1]) || std::isnan(dist[k + 1])) continue;
    if (!(dist[k] <= dist[k - 1] && dist[k] <= dist[k + 1])) continue;
    if (dist[k] > 0.25 * dmax) continue;
    auto f = [&](double s) {
      try {
        const auto r = rotating_state_at(tr, s);
        if (!r.defined) return std::numeric_limits<double>::max();
        return dist4(project(r), x0);
      } catch (const Error&) {
        return std::numeric_limits<double>::max();
      }
    };
    const auto [s_min, d_min] = boost::math::tools::brent_find_minima(f, pts[k - 1].s, pts[k + 1].s, 48);
    const double rel = scale > 0.0 ? d_min / scale : d_min;
    out.best_relative = std::min(out.best_relative, rel);
    if (d_min <= tol && !out.first_return) {
      out.first_return = s_min;
      if (stop_at_first) break;
    }
  }
  return out;
}

}  // namespace detail

/// Planar curve of M2 - M1 in the frame rotating with the total-M azimuth.
inline RotatingFrameCurve rotating_frame_curve(const Trajectory& tr) {
  const Track track = build_track(tr);
  RotatingFrameCurve c;
  for (const auto& p : track.points) {
    const auto r = rotating_frame_state(p.m1, p.m2, tr.state.family);
    if (!r.defined)
      throw Error(ErrorKind::UndefinedAzimuth, "total in-plane angular momentum vanishes along the trajectory");
    c.points.push_back({p.s * tr.state.inertia, r.dx, r.dy});
  }
  const auto search = detail::find_returns(tr, track, 0.0, /*planar_only=*/true, /*stop_at_first=*/false);
  c.scale = search.scale;
  c.closure = search.best_relative;
  return c;
}

struct PeriodResult {
  std::optional<double> period;  // time units
  bool degenerate{};
};

inline constexpr double kPeriodTolerance = 1e-4;

namespace detail {

inline PeriodResult period_from_track(const Trajectory& tr, const Track& track, double rel_tol) {
  PeriodResult out;
  const auto search = find_returns(tr, track, rel_tol, /*planar_only=*/false, /*stop_at_first=*/true);
  if (search.undefined || search.static_configuration) {
    // Every time is a recurrence; report the first grid time.
    out.degenerate = true;
    if (track.points.size() > 1) out.period = track.points[1].s * tr.state.inertia;
    return out;
  }
  if (search.first_return) out.period = *search.first_return * tr.state.inertia;
  return out;
}

}  // namespace detail

/// Smallest time at which the rotating-frame configuration (both momenta in
/// the frame co-rotating with the total in-plane momentum) returns to its
/// initial value within rel_tol * max|M2 - M1|.
inline PeriodResult period_detect(const Trajectory& tr, double rel_tol = kPeriodTolerance) {
  return detail::period_from_track(tr, build_track(tr), rel_tol);
}

// ---------------------------------------------------------------------------
// Time averages.

struct TimeAverages {
  double cos_avg{};
  double concurrency{};
  double horizon{};
  bool converged{};
};

namespace detail {

inline constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                     0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665,
                                                       0.5688888888888889, 0.4786286704993665,
                                                       0.2369268850561891};

inline double relative_angle(const AngularMomentumPair& m, Family f) noexcept {
  const double p1 = std::atan2(m.m1.y, m.m1.x), p2 = std::atan2(m.m2.y, m.m2.x);
  return f == Family::Antiparallel ? p2 - p1 : p1 + p2;
}

// Mean of cos(relative - phase) over s in [0, s_end]; 5-point Gauss-Legendre
// on panels of every dense segment.
inline double mean_cos_relative(const Trajectory& tr, double s_end, double phase, bool& gap) {
  double sum = 0.0, comp = 0.0, measure = 0.0;
  for (const auto& seg : tr.segments) {
    if (seg.t0 >= s_end) break;
    const int panels = panel_count(seg, kQuadratureTurn, 1);
    for (int p = 0; p < panels; ++p) {
      const double a = seg.t0 + seg.h * p / panels;
      if (a >= s_end) break;
      const double b = std::min(p + 1 == panels ? seg.t1() : seg.t0 + seg.h * (p + 1) / panels, s_end);
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
        const double s = mid + half * kGaussNodes[q];
        const auto z = PairConfiguration::from_array(seg.at(s));
        double v;
        try {
          const auto m = angular_momenta(tr.state, z, tr.tolerances.thresholds);
          if (!(m.m1.norm_xy() > kAzimuthMinProjection && m.m2.norm_xy() > kAzimuthMinProjection)) {
            gap = true;
            continue;
          }
          v = std::cos(relative_angle(m, tr.state.family) - phase);
        } catch (const Error&) {
          gap = true;
          continue;
        }
        const double w = half * kGaussWeights[q];
        // Neumaier summation.
        const double term = w * v;
        const double t = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
        measure += w;
      }
    }
  }
  return measure > 0.0 ? (sum + comp) / measure : 0.0;
}

inline constexpr double kIncrementFloor = 1e-14;

inline int increment_sign(double d) noexcept { return std::abs(d) < kIncrementFloor ? 0 : (d > 0.0 ? 1 : -1); }

// Time-weighted sign of the product of azimuth increments over the track
// sub-intervals in [0, s_end]. Intervals with an undefined azimuth or a
// vanishing increment carry no measure.
inline double mean_concurrency(const Trajectory& tr, const Track& track, double s_end, bool& gap) {
  double num = 0.0, measure = 0.0;
  const auto& pts = track.points;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const TrackPoint& a = pts[k - 1];
    if (a.s >= s_end) break;
    TrackPoint b = pts[k];
    if (b.s > s_end) b = detail::track_point(tr, s_end, tr.state_at_s(s_end), &a);
    if (!a.azimuth_ok || !b.azimuth_ok) {
      gap = true;
      continue;
    }
    const int sg = increment_sign(b.phi1 - a.phi1) * increment_sign(b.phi2 - a.phi2);
    if (sg == 0) continue;
    const double ds = b.s - a.s;
    num += sg * ds;
    measure += ds;
  }
  return measure > 0.0 ? num / measure : 0.0;
}

}  // namespace detail

/// Average of cos(relative - phase) over one period when known, else over
/// the whole integrated horizon.
inline double time_average_cos(const Trajectory& tr, double phase) {
  const double s_end = tr.period ? *tr.period / tr.state.inertia : tr.s_end();
  bool gap = false;
  return detail::mean_cos_relative(tr, s_end, phase, gap);
}

/// Signed share of time during which both azimuths advance in the same sense,
/// over one period when known, else over the whole horizon.
inline double concurrency(const Trajectory& tr) {
  const double s_end = tr.period ? *tr.period / tr.state.inertia : tr.s_end();
  bool gap = false;
  return detail::mean_concurrency(tr, build_track(tr), s_end, gap);
}

struct AnalysisOptions {
  IntegrationTolerances tolerances{};
  double initial_horizon{16.0};  // units of I
  double horizon_cap{2000.0};    // units of I
  double period_tolerance{kPeriodTolerance};
  double cesaro_tolerance{1e-3};
  int subdivisions{kDefaultSubdivisions};

  void validate() const {
    tolerances.validate();
    if (!(initial_horizon > 0.0) || !(horizon_cap >= initial_horizon))
      throw Error(ErrorKind::InvalidTolerance, "integrator.horizon_cap must be >= the initial horizon (> 0)");
    if (!(period_tolerance > 0.0) || !(cesaro_tolerance > 0.0))
      throw Error(ErrorKind::InvalidTolerance, "period and Cesaro tolerances must be positive");
  }
};

struct TrajectoryAnalysis {
  TimeAverages averages;
  std::optional<double> period;
  unsigned flags{};
  std::size_t steps{};
};

/// Integrates from z0 and reduces the trajectory to its time averages: over
/// one period when a recurrence is found, otherwise as Cesaro means with
/// horizon doubling until successive values agree or the cap is hit.
inline TrajectoryAnalysis analyze_trajectory(const QubitPairState& state, const PairConfiguration& z0,
                                             const AnalysisOptions& opt = {}) {
  opt.validate();
  IntegrationTolerances tol = opt.tolerances;
  tol.record_samples = false;
  tol.output_interval = 0.0;
  const double I = state.inertia;
  Trajectory tr = integrate(state, z0, opt.initial_horizon * I, tol);
  Track track;
  track.subdivisions = opt.subdivisions;
  TrajectoryAnalysis out;
  std::optional<double> prev_cos, prev_conc;
  double horizon = opt.initial_horizon;
  for (;;) {
    if (tr.aborted()) {
      out.flags = tr.flags;
      out.steps = tr.segments.size();
      return out;
    }
    if (tr.flags & kNonConverged) {  // step budget or step-size collapse
      out.averages.horizon = tr.horizon;
      break;
    }
    update_track(tr, track);
    const auto pr = detail::period_from_track(tr, track, opt.period_tolerance);
    bool gap = track.gaps;
    if (pr.period) {
      const double s_end = *pr.period / I;
      out.period = pr.period;
      out.averages.cos_avg = detail::mean_cos_relative(tr, s_end, state.phase, gap);
      out.averages.concurrency = detail::mean_concurrency(tr, track, s_end, gap);
      out.averages.horizon = *pr.period;
      out.averages.converged = true;
      if (pr.degenerate) out.flags |= kDegenerate;
      break;
    }
    const double s_end = tr.s_end();
    const double c = detail::mean_cos_relative(tr, s_end, state.phase, gap);
    const double q = detail::mean_concurrency(tr, track, s_end, gap);
    out.averages = {c, q, s_end * I, false};
    if (prev_cos && std::abs(c - *prev_cos) < opt.cesaro_tolerance &&
        std::abs(q - *prev_conc) < opt.cesaro_tolerance) {
      out.averages.converged = true;
      break;
    }
    prev_cos = c;
    prev_conc = q;
    if (horizon >= opt.horizon_cap) {
      out.flags |= kNonConverged;
      break;
    }
    horizon = std::min(2.0 * horizon, opt.horizon_cap);
    extend(tr, horizon * I);
  }
  if (track.gaps) out.flags |= kAzimuthGap;
  out.flags |= tr.flags;
  out.steps = tr.segments.size();
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics along a trajectory.

/// Largest |H(t) - 3/(4I)| / (3/(4I)) over the recorded samples.
inline double max_energy_drift(const Trajectory& tr) {
  const double ref = 3.0 / (4.0 * tr.state.inertia);
  double worst = 0.0;
  for (const auto& s : tr.samples) worst = std::max(worst, std::abs(s.energy - ref) / ref);
  return worst;
}

/// Compares a centred difference of M_i(t) along the dense output with the
/// quantum torque T_i at `points` interior times; returns the largest
/// |dM/dt - T| / |T| over rotors with |T| > torque_floor.
inline double max_torque_mismatch(const Trajectory& tr, int points = 64, double torque_floor = 1e-8,
                                  double dt = 1e-3) {
  const double I = tr.state.inertia;
  const double span = tr.horizon;
  double worst = 0.0;
  auto m_at = [&](double t) {
    return angular_momenta(tr.state, PairConfiguration::from_array(tr.state_at(t)), tr.tolerances.thresholds);
  };
  const double h = dt * I;
  for (int k = 1; k <= points; ++k) {
    const double t = span * k / (points + 1.0);
    if (t - h < 0.0 || t + h > span) continue;
    const auto torque = quantum_torque(tr.state, PairConfiguration::from_array(tr.state_at(t)),
                                       tr.tolerances.thresholds);
    for (int i = 0; i < 2; ++i) {
      auto fd = [&](double step) { return (1.0 / (2.0 * step)) * (m_at(t + step)[i] - m_at(t - step)[i]); };
      const Vec3 coarse = fd(h), fine = fd(0.5 * h);
      const Vec3 deriv = (1.0 / 3.0) * (4.0 * fine - coarse);
      const double tn = torque[i].norm();
      if (tn <= torque_floor) continue;
      worst = std::max(worst, (deriv - torque[i]).norm() / tn);
    }
  }
  return worst;
}

}  // namespace bohm
