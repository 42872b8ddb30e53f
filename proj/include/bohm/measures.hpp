#pragma once

// Standard pure-state entanglement quantities used as references for the
// Bohmian ensemble measures. p denotes the weight cos^2(theta/2) of the first
// product configuration.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "statistics.hpp"
#include "types.hpp"

namespace bohm {

namespace detail {
inline void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::DomainError, std::string(what) + ": p must lie in [0, 1]");
}
}  // namespace detail

/// Weight of the first configuration, p = cos^2(theta/2).
inline double state_weight(double theta) {
  if (!(theta >= 0.0 && theta <= kPi)) throw Error(ErrorKind::DomainError, "theta must lie in [0, pi]");
  const double c = std::cos(0.5 * theta);
  return c * c;
}

/// Wootters concurrence of the pure pair state, |sin theta|.
inline double concurrence(double theta) {
  if (!(theta >= 0.0 && theta <= kPi)) throw Error(ErrorKind::DomainError, "theta must lie in [0, pi]");
  return std::abs(std::sin(theta));
}

inline double binary_entropy(double p) {
  detail::require_probability(p, "binary_entropy");
  auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
  return term(p) + term(1.0 - p);
}

/// Entanglement of formation of the pure state with weight p: h(p).
inline double entanglement_of_formation(double p) { return binary_entropy(p); }

/// The same quantity through the concurrence, h((1 + sqrt(1 - C^2)) / 2).
inline double entanglement_of_formation_from_concurrence(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorKind::DomainError, "concurrence must lie in [0, 1]");
  return binary_entropy(0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c))));
}

/// Single-pair Procrustean (local filtering) yield, 2 min(p, 1 - p).
inline double procrustean_yield(double p) {
  detail::require_probability(p, "procrustean_yield");
  return 2.0 * std::min(p, 1.0 - p);
}

inline constexpr int kSchmidtMaxPairs = 10'000;

/// Expected Bell pairs per input pair from Schmidt projection on n pairs:
///   (1/n) sum_k C(n,k) p^k (1-p)^(n-k) log2 C(n,k).
inline double schmidt_projection_yield(int n, double p) {
  if (n < 2) throw Error(ErrorKind::DomainError, "schmidt_projection_yield: n must be >= 2");
  if (n > kSchmidtMaxPairs)
    throw Error(ErrorKind::OverflowGuard, "schmidt_projection_yield: n above " + std::to_string(kSchmidtMaxPairs));
  detail::require_probability(p, "schmidt_projection_yield");
  if (p == 0.0 || p == 1.0) return 0.0;  // a single term with log2 C(n, 0) = 0
  const double lp = std::log(p), lq = std::log1p(-p);
  const double lgn = std::lgamma(n + 1.0);
  CompensatedSum s;
  for (int k = 1; k < n; ++k) {
    const double log_binom = lgn - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double weight = std::exp(log_binom + k * lp + (n - k) * lq);
    s.add(weight * log_binom / std::log(2.0));
  }
  return s.value() / n;
}

inline constexpr int kSchmidtPairsDefault = 22;

/// Ensemble-derived Bohmian quantities at one theta.
struct EnsemblePoint {
  double theta{};
  double c_b{}, se_c_b{};
  double p_plus{}, se_p_plus{};
  double p_minus{}, se_p_minus{};
  double p_zero{}, se_p_zero{};
};

struct ComparisonRow {
  double theta{}, p{};
  double concurrence{}, e_f{}, y_procrustean{}, y_schmidt{};
  double c_b{}, se_c_b{};
  double p_plus{}, se_p_plus{}, p_minus{}, se_p_minus{}, p_zero{};
  bool ordering_violation{};  // P+ falls below a yield by more than 3 SE
};

/// Joins reference quantities with the ensemble results on a theta grid.
/// Interior points (0 < C < 1) are checked for P+ >= both yields within 3 SE.
inline std::vector<ComparisonRow> comparison_table(const std::vector<double>& theta_grid,
                                                   const std::vector<EnsemblePoint>& ensembles,
                                                   int schmidt_pairs = kSchmidtPairsDefault) {
  std::vector<ComparisonRow> rows;
  for (double theta : theta_grid) {
    const auto it = std::find_if(ensembles.begin(), ensembles.end(),
                                 [&](const EnsemblePoint& e) { return std::abs(e.theta - theta) < 1e-12; });
    if (it == ensembles.end())
      throw Error(ErrorKind::MissingEnsemble, "no ensemble for theta = " + std::to_string(theta));
    ComparisonRow r;
    r.theta = theta;
    r.p = state_weight(theta);
    r.concurrence = concurrence(theta);
    r.e_f = entanglement_of_formation(r.p);
    r.y_procrustean = procrustean_yield(r.p);
    r.y_schmidt = schmidt_projection_yield(schmidt_pairs, r.p);
    r.c_b = it->c_b;
    r.se_c_b = it->se_c_b;
    r.p_plus = it->p_plus;
    r.se_p_plus = it->se_p_plus;
    r.p_minus = it->p_minus;
    r.se_p_minus = it->se_p_minus;
    r.p_zero = it->p_zero;
    const bool interior = r.concurrence > 1e-12 && r.concurrence < 1.0 - 1e-12;
    if (interior) {
      const double margin = 3.0 * r.se_p_plus;
      r.ordering_violation = r.p_plus + margin < r.y_procrustean || r.p_plus + margin < r.y_schmidt;
    }
    if (r.p_zero + 1e-12 < r.p_plus) r.ordering_violation = true;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace bohm
