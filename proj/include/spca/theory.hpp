#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spca/csv.hpp"
#include "spca/errors.hpp"
#include "spca/exact.hpp"
#include "spca/numerics.hpp"

namespace spca {

// Deterministic model parameters shared by the closed-form curves.
struct ModelParams {
  int n = 0;
  int k = 0;
  int k_prime = 0;
  double lambda = 1.0;
  std::optional<double> beta;  // only the high-temperature results use it
  double delta = 0.1;          // slack constant for applicability flags

  void validate() const {
    if (n < 1 || k < 1 || k > n || k_prime < 1 || k_prime > n) {
      throw InvalidParameterError("model params: require 1 <= k, k' <= n");
    }
    if (!(lambda > 0.0)) {
      throw InvalidParameterError("model params: lambda must be > 0");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
      throw InvalidParameterError("model params: delta must lie in (0,1)");
    }
    if (beta && *beta < 0.0) {
      throw InvalidParameterError("model params: beta must be >= 0");
    }
  }
};

// One point of the annealed energy curve.
struct CurvePoint {
  int ell = 0;
  double gamma = 0.0;                    // typical minimum energy scale
  double first_moment_threshold = 0.0;   // gamma with extra slack alpha_n
  std::optional<double> finite_difference;  // gamma(ell+1) - gamma(ell)
};

namespace detail {

inline void check_curve_domain(const ModelParams& p, int ell) {
  const int lo = static_cast<int>(
      (static_cast<std::int64_t>(p.k) * p.k_prime) / p.n);
  const int hi = std::min(p.k, p.k_prime);
  if (ell < lo || ell > hi) {
    throw InvalidParameterError(
        "curve domain: ell must lie in [" + std::to_string(lo) + "," +
        std::to_string(hi) + "], got " + std::to_string(ell));
  }
  if (p.k_prime - ell > p.n - p.k) {
    throw InvalidParameterError("curve domain: complement class infeasible");
  }
}

// log of the overlap-class size C(k, ell) * C(n-k, k'-ell).
inline double log_class_size(const ModelParams& p, int ell) {
  return log_binomial(p.k, ell) + log_binomial(p.n - p.k, p.k_prime - ell);
}

}  // namespace detail

// Energy threshold below which an overlap class is unlikely to reach:
// first_moment_threshold(p, ell, alpha) =
//   -lambda * ell^2 / k - 2 k' sqrt((log class size + alpha) / n).
// The probability that the class minimum dips below it is at most
// exp(-alpha)/sqrt(alpha) for one class (see first_moment_failure_bounds).
inline double first_moment_threshold(const ModelParams& p, int ell, double alpha_n) {
  p.validate();
  detail::check_curve_domain(p, ell);
  if (alpha_n < 0.0) {
    throw InvalidParameterError("first_moment_threshold: alpha must be >= 0");
  }
  const double signal = -p.lambda * static_cast<double>(ell) *
                        static_cast<double>(ell) / static_cast<double>(p.k);
  const double entropy = detail::log_class_size(p, ell) + alpha_n;
  return signal - 2.0 * static_cast<double>(p.k_prime) *
                      std::sqrt(entropy / static_cast<double>(p.n));
}

struct FirstMomentFailureBounds {
  double per_class = 0.0;  // (1/sqrt(alpha)) * exp(-alpha)
  double union_all = 0.0;  // (k'/sqrt(alpha)) * exp(-alpha)
};

inline FirstMomentFailureBounds first_moment_failure_bounds(const ModelParams& p,
                                                            double alpha_n) {
  p.validate();
  if (!(alpha_n > 0.0)) {
    throw InvalidParameterError(
        "first_moment_failure_bounds: alpha must be > 0 for a finite bound");
  }
  FirstMomentFailureBounds b;
  b.per_class = std::exp(-alpha_n) / std::sqrt(alpha_n);
  b.union_all = static_cast<double>(p.k_prime) * b.per_class;
  return b;
}

// The annealed curve itself (the alpha = 0 threshold), with the forward
// finite difference filled in when ell + 1 is also inside the domain.
inline CurvePoint gamma_curve(const ModelParams& p, int ell) {
  CurvePoint point;
  point.ell = ell;
  point.gamma = first_moment_threshold(p, ell, 0.0);
  point.first_moment_threshold = point.gamma;
  const int hi = std::min(p.k, p.k_prime);
  if (ell + 1 <= hi && p.k_prime - (ell + 1) <= p.n - p.k) {
    point.finite_difference = first_moment_threshold(p, ell + 1, 0.0) - point.gamma;
  }
  return point;
}

// ---------------------------------------------------------------------------
// Critical overlap scale
// ---------------------------------------------------------------------------

struct EllC {
  double value = 0.0;
  double inner_argument = 0.0;  // argument of the outer logarithm
  bool regime_ok = false;       // inner_argument > 1
};

// Predicted location of the annealed curve's maximum:
//   ell_c = (k/(2 lambda)) sqrt(k'/(n log(n/k'))) * log((1/(2 lambda)) sqrt(n/(k' log(n/k')))).
// Outside the regime inner_argument > 1 the outer log is <= 0 and the
// formula loses its meaning; regime_ok flags this instead of erroring.
inline EllC ell_c(const ModelParams& p) {
  p.validate();
  if (p.k_prime >= p.n) {
    throw InvalidParameterError("ell_c: requires k' < n");
  }
  const double n = static_cast<double>(p.n);
  const double kp = static_cast<double>(p.k_prime);
  const double log_ratio = std::log(n / kp);
  if (!(log_ratio > 0.0)) {
    throw InvalidParameterError("ell_c: requires log(n/k') > 0");
  }
  EllC result;
  result.inner_argument = 0.5 / p.lambda * std::sqrt(n / (kp * log_ratio));
  result.regime_ok = result.inner_argument > 1.0;
  result.value = 0.5 / p.lambda * static_cast<double>(p.k) *
                 std::sqrt(kp / (n * log_ratio)) * std::log(result.inner_argument);
  return result;
}

// ---------------------------------------------------------------------------
// Shape report for the annealed curve
// ---------------------------------------------------------------------------

// Purely descriptive scan of the curve's finite differences.  The monotone
// predictions hold asymptotically, so matches/mismatches are reported and
// never asserted.
struct ShapeReport {
  int domain_lo = 0;
  int domain_hi = 0;
  int argmax_ell = 0;           // ties toward the smallest ell
  int increasing_prefix_end = 0;  // largest ell with gamma increasing on [lo, ell]
  int decreasing_suffix_start = 0;  // smallest ell with gamma decreasing on [ell, hi]
  EllC critical;                // ell_c and its regime flag
  int predicted_rise_end = 0;   // floor((1 - delta) * ell_c)
  int predicted_fall_start = 0; // 10 * ceil(ell_c)
  bool rise_matches_prediction = false;
  bool fall_matches_prediction = false;  // differences <= -lambda*ell/k there
  bool argmax_in_predicted_window = false;
  double gap_scale = 0.0;       // k'*k/(lambda*n), unit-constant rendering
};

inline ShapeReport gamma_shape_report(const ModelParams& p) {
  p.validate();
  ShapeReport report;
  report.domain_lo = static_cast<int>(
      (static_cast<std::int64_t>(p.k) * p.k_prime) / p.n);
  report.domain_hi = std::min(p.k, p.k_prime);
  while (p.k_prime - report.domain_lo > p.n - p.k) ++report.domain_lo;
  if (report.domain_lo > report.domain_hi) {
    throw InvalidParameterError("shape report: empty curve domain");
  }
  const int lo = report.domain_lo;
  const int hi = report.domain_hi;
  std::vector<double> gamma(static_cast<std::size_t>(hi - lo + 1));
  for (int ell = lo; ell <= hi; ++ell) {
    gamma[static_cast<std::size_t>(ell - lo)] = gamma_curve(p, ell).gamma;
  }
  report.argmax_ell = lo;
  for (int ell = lo + 1; ell <= hi; ++ell) {
    if (gamma[static_cast<std::size_t>(ell - lo)] >
        gamma[static_cast<std::size_t>(report.argmax_ell - lo)]) {
      report.argmax_ell = ell;
    }
  }
  report.increasing_prefix_end = lo;
  for (int ell = lo; ell < hi; ++ell) {
    if (gamma[static_cast<std::size_t>(ell - lo + 1)] >
        gamma[static_cast<std::size_t>(ell - lo)]) {
      report.increasing_prefix_end = ell + 1;
    } else {
      break;
    }
  }
  report.decreasing_suffix_start = hi;
  for (int ell = hi; ell > lo; --ell) {
    if (gamma[static_cast<std::size_t>(ell - lo)] <
        gamma[static_cast<std::size_t>(ell - lo - 1)]) {
      report.decreasing_suffix_start = ell - 1;
    } else {
      break;
    }
  }
  report.critical = ell_c(p);
  const double lc = report.critical.value;
  report.predicted_rise_end =
      static_cast<int>(std::floor((1.0 - p.delta) * lc));
  report.predicted_fall_start = 10 * static_cast<int>(std::ceil(lc));
  // Rise prediction: strictly increasing differences up to the predicted end.
  report.rise_matches_prediction = true;
  for (int ell = lo; ell + 1 <= std::min(hi, report.predicted_rise_end); ++ell) {
    if (!(gamma[static_cast<std::size_t>(ell - lo + 1)] >
          gamma[static_cast<std::size_t>(ell - lo)])) {
      report.rise_matches_prediction = false;
      break;
    }
  }
  // Fall prediction: differences at or beyond the onset drop by at least
  // lambda * ell / k.
  report.fall_matches_prediction = true;
  for (int ell = std::max(lo, report.predicted_fall_start); ell + 1 <= hi; ++ell) {
    const double diff = gamma[static_cast<std::size_t>(ell - lo + 1)] -
                        gamma[static_cast<std::size_t>(ell - lo)];
    if (!(diff <= -p.lambda * static_cast<double>(ell) / static_cast<double>(p.k))) {
      report.fall_matches_prediction = false;
      break;
    }
  }
  report.argmax_in_predicted_window =
      report.critical.regime_ok &&
      report.argmax_ell >= report.predicted_rise_end &&
      report.argmax_ell <= report.predicted_fall_start;
  report.gap_scale = static_cast<double>(p.k_prime) * static_cast<double>(p.k) /
                     (p.lambda * static_cast<double>(p.n));
  return report;
}

inline nlohmann::json shape_report_to_json(const ShapeReport& r) {
  nlohmann::json j;
  j["domain_lo"] = r.domain_lo;
  j["domain_hi"] = r.domain_hi;
  j["argmax_ell"] = r.argmax_ell;
  j["increasing_prefix_end"] = r.increasing_prefix_end;
  j["decreasing_suffix_start"] = r.decreasing_suffix_start;
  j["ell_c"] = r.critical.value;
  j["ell_c_inner_argument"] = r.critical.inner_argument;
  j["ell_c_regime_ok"] = r.critical.regime_ok;
  j["predicted_rise_end"] = r.predicted_rise_end;
  j["predicted_fall_start"] = r.predicted_fall_start;
  j["rise_matches_prediction"] = r.rise_matches_prediction;
  j["fall_matches_prediction"] = r.fall_matches_prediction;
  j["argmax_in_predicted_window"] = r.argmax_in_predicted_window;
  j["gap_scale"] = r.gap_scale;
  j["gap_scale_note"] = "unit-constant rendering";
  return j;
}

// ---------------------------------------------------------------------------
// Parameter ranges in which the landscape statements are informative
// ---------------------------------------------------------------------------

struct InformativeRanges {
  double ell_low_exclusive = 0.0;  // max(1, k k'/n); informative ell exceed it
  double ell_high = 0.0;           // (k/(2 lambda)) sqrt((k'/n) log n)
  double k_prime_low = 0.0;        // k^2 log n / (lambda^2 n)
  double k_prime_high = 0.0;       // n lambda^2 / log n
  bool k_prime_valid = false;      // k' inside [k_prime_low, k_prime_high]
};

// Concrete renderings of the asymptotic windows; the "much greater than" on
// the lower overlap end is rendered as a strict inequality with no slack
// factor.
inline InformativeRanges informative_ranges(const ModelParams& p) {
  p.validate();
  const double n = static_cast<double>(p.n);
  const double k = static_cast<double>(p.k);
  const double kp = static_cast<double>(p.k_prime);
  const double log_n = std::log(n);
  InformativeRanges r;
  r.ell_low_exclusive = std::max(1.0, k * kp / n);
  r.ell_high = k / (2.0 * p.lambda) * std::sqrt(kp / n * log_n);
  r.k_prime_low = k * k * log_n / (p.lambda * p.lambda * n);
  r.k_prime_high = n * p.lambda * p.lambda / log_n;
  r.k_prime_valid = kp >= r.k_prime_low && kp <= r.k_prime_high;
  return r;
}

// ---------------------------------------------------------------------------
// High-temperature depth bound and the overlap choice it suggests
// ---------------------------------------------------------------------------

struct HighTempBound {
  double bound = 0.0;       // -(4 beta lambda / k) ell^2 + (ln2/2) ell - ln2
  double prob_floor = 0.0;  // 1 - 2^{-(ell-2)/2}
  bool ell_applicable = false;      // ell >= 2 e k (k'/n)^{1-delta}
  bool k_prime_applicable = false;  // k' <= n^{1-delta}
};

inline HighTempBound high_temp_depth_bound(const ModelParams& p, int ell) {
  p.validate();
  if (ell < 1) {
    throw InvalidParameterError("high_temp_depth_bound: ell must be >= 1");
  }
  const double beta = p.beta.value_or(0.0);
  const double l = static_cast<double>(ell);
  HighTempBound b;
  b.bound = -(4.0 * beta * p.lambda / static_cast<double>(p.k)) * l * l +
            0.5 * kLn2 * l - kLn2;
  b.prob_floor = 1.0 - std::exp2(-(l - 2.0) / 2.0);
  const double ratio = static_cast<double>(p.k_prime) / static_cast<double>(p.n);
  b.ell_applicable =
      l >= 2.0 * std::exp(1.0) * static_cast<double>(p.k) *
               std::pow(ratio, 1.0 - p.delta);
  b.k_prime_applicable =
      static_cast<double>(p.k_prime) <=
      std::pow(static_cast<double>(p.n), 1.0 - p.delta);
  return b;
}

struct EllChoice {
  int ell = 0;
  double guaranteed_depth = 0.0;  // (ln2/4) min{(ln2/16) k/(beta lambda), L2} - ln2
  double beta_upper = 0.0;        // B1 = (ln2/16) k / (lambda L1)
  double beta_lower = 0.0;        // B2 = (ln2/16) k / (lambda L2)
};

// Picks the overlap scale that maximizes the high-temperature depth bound
// within [L1, L2]: the unconstrained optimum (ln2/16) k / (beta lambda) when
// beta lies in [B2, B1], else L2 for smaller beta; beta above B1 is out of
// regime.  The result is floored to the integer grid (and kept >= L1).
inline EllChoice choose_ell_high_temp(const ModelParams& p, double L1, double L2) {
  p.validate();
  if (!(L1 >= 1.0) || !(L2 >= L1)) {
    throw InvalidParameterError("choose_ell_high_temp: requires 1 <= L1 <= L2");
  }
  const double beta = p.beta.value_or(0.0);
  const double k = static_cast<double>(p.k);
  EllChoice choice;
  choice.beta_upper = kLn2 / 16.0 * k / (p.lambda * L1);
  choice.beta_lower = kLn2 / 16.0 * k / (p.lambda * L2);
  if (beta > choice.beta_upper) {
    throw InvalidParameterError(
        "choose_ell_high_temp: beta exceeds the regime bound " +
        format_double(choice.beta_upper));
  }
  double raw;
  double unconstrained = std::numeric_limits<double>::infinity();
  if (beta > 0.0) unconstrained = kLn2 / 16.0 * k / (beta * p.lambda);
  raw = (beta >= choice.beta_lower) ? unconstrained : L2;
  int ell = static_cast<int>(std::floor(raw));
  const int ell_min = static_cast<int>(std::ceil(L1));
  const int ell_max = static_cast<int>(std::floor(L2));
  if (ell_min > ell_max) {
    throw InvalidParameterError(
        "choose_ell_high_temp: no integer overlap lies in [L1, L2]");
  }
  ell = std::clamp(ell, ell_min, ell_max);
  choice.ell = ell;
  choice.guaranteed_depth = kLn2 / 4.0 * std::min(unconstrained, L2) - kLn2;
  return choice;
}

// ---------------------------------------------------------------------------
// Exact counting: pairs within an overlap class, tail mass, binomial ratios
// ---------------------------------------------------------------------------

// Exact number of ordered pairs (v, u) of supports in the overlap-ell class
// whose mutual overlap <v,u> equals m (v = u included, contributing at
// m = k').  Decomposes over m0 = |v ∩ u ∩ x|:
//   C(k,ell) C(n-k,k'-ell) * sum_m0 C(ell,m0) C(k-ell,ell-m0)
//     * C(k'-ell, m-m0) * C(n-k-k'+ell, k'-m-ell+m0).
// Out-of-range terms contribute zero.
inline BigInt pair_overlap_count(const ModelParams& p, int ell, int m) {
  p.validate();
  if (ell < 0 || ell > std::min(p.k, p.k_prime) || p.k_prime - ell > p.n - p.k) {
    return BigInt(0);
  }
  if (m < 0 || m > p.k_prime) return BigInt(0);
  const BigInt class_size =
      binomial_exact(p.k, ell) * binomial_exact(p.n - p.k, p.k_prime - ell);
  BigInt inner = 0;
  for (int m0 = 0; m0 <= ell; ++m0) {
    inner += binomial_exact(ell, m0) * binomial_exact(p.k - ell, ell - m0) *
             binomial_exact(p.k_prime - ell, m - m0) *
             binomial_exact(p.n - p.k - p.k_prime + ell, p.k_prime - m - ell + m0);
  }
  return class_size * inner;
}

struct TailMass {
  double exact_ratio = 0.0;  // sum_{t >= ell} class_size(t) / C(n, k')
  double bound = 0.0;        // 2^{1-ell}
  bool applicable = false;   // ell >= 2 e k (k'/n)^{1-delta}
  bool within_bound = false; // exact integer comparison, meaningful if applicable
};

// Probability mass of overlap >= ell under the uniform distribution on
// k'-sparse supports, compared against the 2^{1-ell} bound.  The comparison
// is carried out on exact integers: tail * 2^{ell-1} <= C(n, k').
inline TailMass tail_mass_bound(const ModelParams& p, int ell, double delta) {
  p.validate();
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidParameterError("tail_mass_bound: delta must lie in (0,1)");
  }
  if (ell < 1) {
    throw InvalidParameterError("tail_mass_bound: ell must be >= 1");
  }
  BigInt tail = 0;
  const int m_max = std::min(p.k, p.k_prime);
  for (int t = ell; t <= m_max; ++t) {
    tail += binomial_exact(p.k, t) * binomial_exact(p.n - p.k, p.k_prime - t);
  }
  const BigInt total = binomial_exact(p.n, p.k_prime);
  TailMass result;
  result.exact_ratio = bigint_to_double(tail) / bigint_to_double(total);
  result.bound = std::exp2(1.0 - static_cast<double>(ell));
  const double ratio = static_cast<double>(p.k_prime) / static_cast<double>(p.n);
  result.applicable =
      static_cast<double>(ell) >= 2.0 * std::exp(1.0) *
                                      static_cast<double>(p.k) *
                                      std::pow(ratio, 1.0 - delta);
  result.within_bound = tail * boost::multiprecision::pow(BigInt(2), ell - 1) <= total;
  return result;
}

struct BinomRatio {
  double lhs = 0.0;   // log C(n, k'-t) - log C(n, k')
  double rhs = 0.0;   // -t (1 - delta) log(n/k')
  bool pass = false;  // report only; the underlying statement is asymptotic
};

inline BinomRatio binom_ratio_check(int n, int k_prime, int t, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidParameterError("binom_ratio_check: delta must lie in (0,1)");
  }
  if (t < 0 || t > k_prime) {
    throw InvalidParameterError("binom_ratio_check: requires 0 <= t <= k'");
  }
  if (k_prime < 1 || n < 1 ||
      static_cast<double>(k_prime) >
          std::pow(static_cast<double>(n), 1.0 - delta)) {
    throw InvalidParameterError(
        "binom_ratio_check: requires 1 <= k' <= n^(1-delta)");
  }
  BinomRatio result;
  result.lhs = log_binomial(n, k_prime - t) - log_binomial(n, k_prime);
  result.rhs = -static_cast<double>(t) * (1.0 - delta) *
               std::log(static_cast<double>(n) / static_cast<double>(k_prime));
  result.pass = result.lhs <= result.rhs;
  return result;
}

// Reference scale for the conjectured hardness: the exponent k^2/(lambda^2 n).
inline double conjectured_runtime(const ModelParams& p) {
  p.validate();
  return static_cast<double>(p.k) * static_cast<double>(p.k) /
         (p.lambda * p.lambda * static_cast<double>(p.n));
}

// ---------------------------------------------------------------------------
// Curve sweep output
// ---------------------------------------------------------------------------

// CSV header "ell,gamma,A_ell,finite_difference"; the last column is empty
// when ell+1 leaves the domain.
inline void write_gamma_csv(const ModelParams& p, double alpha_n,
                            std::ostream& out) {
  p.validate();
  CsvWriter csv(out);
  csv.write_row({"ell", "gamma", "A_ell", "finite_difference"});
  int lo = static_cast<int>((static_cast<std::int64_t>(p.k) * p.k_prime) / p.n);
  while (p.k_prime - lo > p.n - p.k) ++lo;
  const int hi = std::min(p.k, p.k_prime);
  for (int ell = lo; ell <= hi; ++ell) {
    const CurvePoint point = gamma_curve(p, ell);
    const double a_ell = first_moment_threshold(p, ell, alpha_n);
    csv.write_row({std::to_string(ell), format_double(point.gamma),
                   format_double(a_ell),
                   point.finite_difference ? format_double(*point.finite_difference)
                                           : std::string()});
  }
}

}  // namespace spca
