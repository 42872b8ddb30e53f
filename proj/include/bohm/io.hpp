#pragma once

// Output files: CSV with 17 significant digits (exact round trip), JSON
// summaries, and the run manifest with SHA-256 digests of every file written.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "config.hpp"
#include "dynamics.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "measures.hpp"
#include "sampling.hpp"
#include "statistics.hpp"

namespace bohm {

inline constexpr const char* kVersion = "0.1.0";

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  template <class... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return fmt17(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  template <class I>
  static std::enable_if_t<std::is_integral_v<I>, std::string> cell(I v) {
    return std::to_string(v);
  }

  std::ostringstream out_;
};

inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Collects everything needed to rerun a command and check its outputs.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& cfg, std::filesystem::path dir)
      : command_(std::move(command)), config_(cfg), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  /// Writes `content` to dir/name and records its digest.
  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
    files_[name] = sha256_hex(content);
  }

  void time(const std::string& stage, double seconds) { timings_[stage] = seconds; }
  json& extra() { return extra_; }

  json to_json() const {
    json j;
    j["tool"] = "bohmqubit";
    j["version"] = kVersion;
    j["command"] = command_;
    j["seed"] = config_.seed;
    j["config"] = bohm::to_json(config_);
    j["timings_seconds"] = timings_;
    j["outputs"] = json::object();
    for (const auto& [name, digest] : files_) j["outputs"][name] = {{"sha256", digest}};
    for (auto it = extra_.begin(); it != extra_.end(); ++it) j[it.key()] = it.value();
    return j;
  }

  void finish() {
    const auto path = dir_ / "manifest.json";
    std::ofstream out(path);
    out << to_json().dump(2) << '\n';
  }

  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  std::string command_;
  RunConfig config_;
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
  std::map<std::string, double> timings_;
  json extra_ = json::object();
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Serializers.

inline std::string trajectory_csv(const Trajectory& tr) {
  CsvBuilder csv({"t", "alpha1", "beta1", "gamma1", "alpha2", "beta2", "gamma2", "M1x", "M1y", "M1z", "M2x", "M2y",
                  "M2z", "H", "phi1", "phi2"});
  for (const auto& s : tr.samples)
    csv.row(s.t, s.zeta[0], s.zeta[1], s.zeta[2], s.zeta[3], s.zeta[4], s.zeta[5], s.m1.x, s.m1.y, s.m1.z, s.m2.x,
            s.m2.y, s.m2.z, s.energy, s.phi1, s.phi2);
  return csv.str();
}

inline std::string rotating_frame_csv(const RotatingFrameCurve& c) {
  CsvBuilder csv({"t", "x", "y"});
  for (const auto& p : c.points) csv.row(p.t, p.x, p.y);
  return csv.str();
}

inline std::string samples_csv(const std::vector<SampleDraw>& draws) {
  CsvBuilder csv({"index", "alpha1", "beta1", "gamma1", "alpha2", "beta2", "gamma2", "density"});
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const auto& z = draws[k].config;
    csv.row(k, z.rotor1.alpha, z.rotor1.beta, z.rotor1.gamma, z.rotor2.alpha, z.rotor2.beta, z.rotor2.gamma,
            draws[k].density);
  }
  return csv.str();
}

inline std::string histogram_csv(const Histogram& h) {
  CsvBuilder csv({"bin_left", "bin_right", "density", "count"});
  for (std::size_t i = 0; i < h.bins(); ++i) csv.row(h.left(i), h.right(i), h.density(i), h.count(i));
  return csv.str();
}

inline std::string time_average_csv(const TimeAverageDistribution& d) {
  CsvBuilder csv({"bin_left", "bin_right", "density", "count", "concurrent", "anti_concurrent", "mixed"});
  const auto& h = d.histogram;
  for (std::size_t i = 0; i < h.bins(); ++i)
    csv.row(h.left(i), h.right(i), h.density(i), h.count(i), d.concurrent[i], d.anti_concurrent[i], d.mixed[i]);
  return csv.str();
}

inline std::string joint_csv(const JointHistogram& j) {
  CsvBuilder csv({"cos_left", "cos_right", "concurrency_left", "concurrency_right", "density", "count"});
  for (std::size_t q = 0; q < j.bins; ++q)
    for (std::size_t c = 0; c < j.bins; ++c) {
      const double cl = -1.0 + j.bin_width * static_cast<double>(c);
      const double ql = -1.0 + j.bin_width * static_cast<double>(q);
      csv.row(cl, c + 1 == j.bins ? 1.0 : cl + j.bin_width, ql, q + 1 == j.bins ? 1.0 : ql + j.bin_width,
              j.density(c, q), j.count(c, q));
    }
  return csv.str();
}

inline std::string per_trajectory_csv(const EnsembleResult& r) {
  CsvBuilder csv({"index", "cos_avg", "concurrency", "horizon", "period", "converged", "flags"});
  for (std::size_t k = 0; k < r.analyses.size(); ++k) {
    const auto& a = r.analyses[k];
    csv.row(k, a.averages.cos_avg, a.averages.concurrency, a.averages.horizon, a.period ? *a.period : -1.0,
            a.averages.converged ? 1 : 0, a.flags);
  }
  return csv.str();
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  CsvBuilder csv({"theta", "p", "concurrence", "E_F", "Y_procrustean", "Y_schmidt", "C_B", "se_C_B", "P_plus",
                  "se_P_plus", "P_minus", "se_P_minus", "P_zero", "ordering_violation"});
  for (const auto& r : rows)
    csv.row(r.theta, r.p, r.concurrence, r.e_f, r.y_procrustean, r.y_schmidt, r.c_b, r.se_c_b, r.p_plus, r.se_p_plus,
            r.p_minus, r.se_p_minus, r.p_zero, r.ordering_violation ? 1 : 0);
  return csv.str();
}

inline json summary_json(const EnsembleResult& r) {
  json j;
  j["theta"] = r.spec.state.theta;
  j["phase"] = r.spec.state.phase;
  j["family"] = to_string(r.spec.state.family);
  j["count"] = r.spec.count;
  j["seed"] = r.spec.seed;
  j["c_b"] = r.circular.c_b;
  j["se_c_b"] = r.circular.se_c_b;
  j["circular_mean"] = r.circular.circular_mean;
  j["se_circular_mean"] = r.circular.se_circular_mean;
  j["mean_cos_shifted"] = r.circular.mean_cos_shifted;
  j["mean_sin_shifted"] = r.circular.mean_sin_shifted;
  j["se_sin_shifted"] = r.circular.se_sin_shifted;
  j["identity_residual"] = r.circular.identity_residual;
  j["mean_m1z"] = r.mean_m1z;
  j["se_m1z"] = r.se_m1z;
  j["mean_m2z"] = r.mean_m2z;
  j["se_m2z"] = r.se_m2z;
  j["undefined_azimuth"] = r.undefined_azimuth;
  if (r.decomposition) {
    const auto& d = *r.decomposition;
    j["p_plus"] = d.p_plus;
    j["se_p_plus"] = d.se_p_plus;
    j["p_minus"] = d.p_minus;
    j["se_p_minus"] = d.se_p_minus;
    j["p_zero"] = d.p_zero;
    j["se_p_zero"] = d.se_p_zero;
    j["rho_integral"] = d.rho_integral();
    j["mean_concurrency"] = d.mean_concurrency;
  }
  if (r.time_average) {
    j["time_average_mean"] = r.time_average->mean;
    j["time_average_se"] = r.time_average->se;
    j["time_average_variance"] = r.time_average->variance;
    j["time_average_se_variance"] = r.time_average->se_variance;
  }
  j["flags"] = {{"aborted", r.aborted},
                {"non_converged", r.non_converged},
                {"degenerate", r.degenerate},
                {"undefined_azimuth", r.undefined_azimuth}};
  return j;
}

}  // namespace bohm
