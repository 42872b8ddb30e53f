#pragma once

// Run configuration: one JSON document, every field optional, unknown keys
// rejected. Messages name the offending field by its dotted path.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynamics.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "statistics.hpp"
#include "types.hpp"

namespace bohm {

using json = nlohmann::json;

struct RunConfig {
  QubitPairState state{Family::Antiparallel, kPi / 5, 0.0, 1.0};

  std::uint64_t count{10'000};
  std::uint64_t seed{1};

  double rel_tol{1e-9};
  double abs_tol{1e-11};
  double horizon_cap{2000.0};  // units of I
  double r_min{1e-8};          // relative node threshold on |psi|
  double s_min{1e-8};          // pole threshold on sin(alpha)

  std::size_t bins{kDefaultBins};
  double epsilon{kDefaultEpsilon};
  double joint_bin{kJointBinWidth};

  std::vector<double> theta_values{0.0, kPi / 8, kPi / 5, kPi / 4, 3 * kPi / 8, kPi / 2};

  std::optional<PairConfiguration> z0;
  double trajectory_horizon{50.0};  // units of I
  double output_interval{0.01};     // units of I

  std::string out_dir{"out"};
  std::vector<std::string> formats{"csv", "json"};

  bool wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
  }

  void validate() const {
    state.validate();
    if (count < 1) throw Error(ErrorKind::ConfigError, "ensemble.count must be >= 1");
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw Error(ErrorKind::InvalidTolerance, std::string(name) + " must be positive and finite");
    };
    positive(rel_tol, "integrator.rel_tol");
    positive(abs_tol, "integrator.abs_tol");
    positive(horizon_cap, "integrator.horizon_cap");
    positive(r_min, "integrator.r_min");
    positive(s_min, "integrator.s_min");
    if (rel_tol < 1e-15) throw Error(ErrorKind::InvalidTolerance, "integrator.rel_tol must be >= 1e-15");
    if (r_min >= 1.0) throw Error(ErrorKind::InvalidTolerance, "integrator.r_min must be < 1");
    if (s_min >= 1.0) throw Error(ErrorKind::InvalidTolerance, "integrator.s_min must be < 1");
    if (bins < 2) throw Error(ErrorKind::ConfigError, "statistics.bins must be >= 2");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::ConfigError, "statistics.epsilon must lie in (0, 1)");
    if (!(joint_bin > 0.0 && joint_bin <= 2.0))
      throw Error(ErrorKind::ConfigError, "statistics.joint_bin must lie in (0, 2]");
    for (double t : theta_values)
      if (!(t >= 0.0 && t <= kPi))
        throw Error(ErrorKind::DomainError, "sweep.theta_values entries must lie in [0, pi], got " + std::to_string(t));
    positive(trajectory_horizon, "trajectory.horizon");
    if (!(output_interval >= 0.0)) throw Error(ErrorKind::ConfigError, "trajectory.output_interval must be >= 0");
    if (z0)
      for (int i = 0; i < 2; ++i) {
        const double a = z0->rotor(i).alpha;
        if (!(a > 0.0 && a < kPi))
          throw Error(ErrorKind::DomainError, "trajectory.z0 alpha" + std::to_string(i + 1) + " must lie in (0, pi)");
      }
    if (out_dir.empty()) throw Error(ErrorKind::ConfigError, "output.directory must not be empty");
    for (const auto& f : formats)
      if (f != "csv" && f != "json")
        throw Error(ErrorKind::ConfigError, "output.formats entries must be 'csv' or 'json', got '" + f + "'");
  }

  IntegrationTolerances tolerances() const {
    IntegrationTolerances t;
    t.rel_tol = rel_tol;
    t.abs_tol = abs_tol;
    t.thresholds.node_relative = r_min;
    t.thresholds.sin_alpha_min = s_min;
    return t;
  }

  AnalysisOptions analysis() const {
    AnalysisOptions a;
    a.tolerances = tolerances();
    a.horizon_cap = horizon_cap;
    a.initial_horizon = std::min(a.initial_horizon, horizon_cap);
    return a;
  }

  EnsembleOptions ensemble_options(double theta, unsigned threads) const {
    EnsembleOptions o;
    o.spec.state = state;
    o.spec.state.theta = theta;
    o.spec.count = count;
    o.spec.seed = seed;
    o.analysis = analysis();
    o.bins = bins;
    o.epsilon = epsilon;
    o.joint_bin = joint_bin;
    o.threads = threads;
    return o;
  }
};

inline json to_json(const RunConfig& c) {
  json j;
  j["state"] = {{"family", to_string(c.state.family)}, {"theta", c.state.theta}, {"phase", c.state.phase}};
  j["inertia"] = c.state.inertia;
  j["ensemble"] = {{"count", c.count}, {"seed", c.seed}};
  j["integrator"] = {{"rel_tol", c.rel_tol},
                     {"abs_tol", c.abs_tol},
                     {"horizon_cap", c.horizon_cap},
                     {"r_min", c.r_min},
                     {"s_min", c.s_min}};
  j["statistics"] = {{"bins", c.bins}, {"epsilon", c.epsilon}, {"joint_bin", c.joint_bin}};
  j["sweep"] = {{"theta_values", c.theta_values}};
  j["trajectory"] = {{"horizon", c.trajectory_horizon}, {"output_interval", c.output_interval}};
  if (c.z0) j["trajectory"]["z0"] = c.z0->as_array();
  j["output"] = {{"directory", c.out_dir}, {"formats", c.formats}};
  return j;
}

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const json& root) : root_(root) {}

  template <class T>
  void read(const char* section, const char* key, T& out) {
    const json* node = find(section, key);
    if (!node) return;
    const std::string name = path(section, key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!node->is_number()) throw Error(ErrorKind::ConfigError, name + " must be a number");
        out = node->get<double>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!node->is_number_unsigned())
          throw Error(ErrorKind::ConfigError, name + " must be a non-negative integer");
        out = node->get<T>();
      } else {
        out = node->get<T>();
      }
    } catch (const json::exception&) {
      throw Error(ErrorKind::ConfigError, name + " has the wrong type");
    }
  }

  const json* find(const char* section, const char* key) {
    const json* parent = &root_;
    if (section) {
      auto it = root_.find(section);
      if (it == root_.end()) return nullptr;
      if (!it->is_object()) throw Error(ErrorKind::ConfigError, std::string(section) + " must be an object");
      parent = &*it;
    }
    auto it = parent->find(key);
    if (it == parent->end()) return nullptr;
    seen_.insert(path(section, key));
    return &*it;
  }

  void reject_unknown() const {
    static const std::set<std::string> sections = {"state",      "ensemble",   "integrator", "statistics",
                                                   "sweep",      "trajectory", "output"};
    for (auto it = root_.begin(); it != root_.end(); ++it) {
      if (sections.count(it.key())) {
        if (!it->is_object()) throw Error(ErrorKind::ConfigError, it.key() + " must be an object");
        for (auto jt = it->begin(); jt != it->end(); ++jt)
          if (!seen_.count(it.key() + "." + jt.key()))
            throw Error(ErrorKind::ConfigError, "unknown configuration key '" + it.key() + "." + jt.key() + "'");
      } else if (!seen_.count(it.key())) {
        throw Error(ErrorKind::ConfigError, "unknown configuration key '" + it.key() + "'");
      }
    }
  }

 private:
  static std::string path(const char* section, const char* key) {
    return section ? std::string(section) + "." + key : std::string(key);
  }

  const json& root_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Overlays the fields present in `j` onto `base`. A document with a top-level
/// "config" object (a run manifest) is read through that object.
inline RunConfig config_from_json(const json& doc, RunConfig base = {}) {
  const json& j = doc.is_object() && doc.contains("config") && doc["config"].is_object() ? doc["config"] : doc;
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "configuration must be a JSON object");
  detail::ConfigReader r(j);
  std::string family = to_string(base.state.family);
  r.read("state", "family", family);
  base.state.family = family_from_string(family);
  r.read("state", "theta", base.state.theta);
  r.read("state", "phase", base.state.phase);
  r.read(nullptr, "inertia", base.state.inertia);
  r.read("ensemble", "count", base.count);
  r.read("ensemble", "seed", base.seed);
  r.read("integrator", "rel_tol", base.rel_tol);
  r.read("integrator", "abs_tol", base.abs_tol);
  r.read("integrator", "horizon_cap", base.horizon_cap);
  r.read("integrator", "r_min", base.r_min);
  r.read("integrator", "s_min", base.s_min);
  r.read("statistics", "bins", base.bins);
  r.read("statistics", "epsilon", base.epsilon);
  r.read("statistics", "joint_bin", base.joint_bin);
  if (const json* tv = r.find("sweep", "theta_values")) {
    if (!tv->is_array()) throw Error(ErrorKind::ConfigError, "sweep.theta_values must be an array of numbers");
    base.theta_values.clear();
    for (const auto& v : *tv) {
      if (!v.is_number()) throw Error(ErrorKind::ConfigError, "sweep.theta_values must be an array of numbers");
      base.theta_values.push_back(v.get<double>());
    }
  }
  r.read("trajectory", "horizon", base.trajectory_horizon);
  r.read("trajectory", "output_interval", base.output_interval);
  if (const json* z = r.find("trajectory", "z0")) {
    if (!z->is_array() || z->size() != 6)
      throw Error(ErrorKind::ConfigError, "trajectory.z0 must be an array of six angles");
    std::array<double, 6> a{};
    for (std::size_t i = 0; i < 6; ++i) {
      if (!(*z)[i].is_number()) throw Error(ErrorKind::ConfigError, "trajectory.z0 must be an array of six angles");
      a[i] = (*z)[i].get<double>();
    }
    base.z0 = PairConfiguration::from_array(a);
  }
  r.read("output", "directory", base.out_dir);
  if (const json* f = r.find("output", "formats")) {
    if (!f->is_array()) throw Error(ErrorKind::ConfigError, "output.formats must be an array of strings");
    base.formats.clear();
    for (const auto& v : *f) {
      if (!v.is_string()) throw Error(ErrorKind::ConfigError, "output.formats must be an array of strings");
      base.formats.push_back(v.get<std::string>());
    }
  }
  r.reject_unknown();
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open configuration file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, "configuration file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

}  // namespace bohm
