#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "spca/errors.hpp"
#include "spca/model.hpp"
#include "spca/rng.hpp"
#include "spca/subsets.hpp"

namespace spca {

struct RecoveryResult {
  SparseSupport estimate;
  std::string method;
  bool exact = false;   // estimate == planted support
  int overlap = 0;      // |estimate intersect x|
  double wall_time = 0.0;          // seconds
  std::uint64_t enumerations = 0;  // supports visited by exhaustive methods
  int intermediate_overlap = -1;   // pre-boost overlap (subexponential search)
  int k_prime_used = 0;            // sparsity of the intermediate search
};

namespace detail {

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void finish_result(RecoveryResult& result, const Instance& inst,
                          const WallClock& clock) {
  result.overlap = overlap(result.estimate, inst.x);
  result.exact = result.estimate.size() == inst.x.size() &&
                 result.overlap == static_cast<int>(inst.x.size());
  result.wall_time = clock.seconds();
}

// Indices of the k largest values, ties broken toward the smaller index;
// returned sorted ascending.
inline SparseSupport top_k_indices(const std::vector<double>& values, int k) {
  std::vector<std::int32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) {
                     return values[static_cast<std::size_t>(a)] >
                            values[static_cast<std::size_t>(b)];
                   });
  SparseSupport out(order.begin(), order.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Diagonal thresholding
// ---------------------------------------------------------------------------

// Support = indices of the k largest diagonal entries of y.  Reads nothing
// but the diagonal.
inline RecoveryResult diagonal_thresholding(const Instance& inst) {
  detail::WallClock clock;
  std::vector<double> diag(static_cast<std::size_t>(inst.n));
  for (int i = 0; i < inst.n; ++i) diag[static_cast<std::size_t>(i)] = inst.y(i, i);
  RecoveryResult result;
  result.method = "diag";
  result.estimate = detail::top_k_indices(diag, inst.k);
  detail::finish_result(result, inst, clock);
  return result;
}

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

struct PowerIterationResult {
  std::vector<double> v;      // unit vector
  double eigenvalue = 0.0;    // Rayleigh quotient at v
  int iterations = 0;
  bool converged = false;     // residual criterion met before max_iter
  bool degenerate = false;    // leading eigenvalue gap below resolution
};

namespace detail {

inline void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

inline std::vector<double> random_unit_vector(int n, RngState& rng) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i + 1 < n; i += 2) {
    const auto [a, b] = rng.next_normal_pair();
    v[static_cast<std::size_t>(i)] = a;
    v[static_cast<std::size_t>(i + 1)] = b;
  }
  if (n % 2 == 1) {
    v[static_cast<std::size_t>(n - 1)] = rng.next_normal_pair().first;
  }
  normalize(v);
  return v;
}

struct PowerPass {
  std::vector<double> v;
  double eigenvalue = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Power iteration on the operator y - shift * uu^T (pass u empty for no
// deflation).  Stops when ||Yv - (v^T Y v) v|| <= tol * ||Y||_F.
inline PowerPass power_pass(const Instance& inst, double tol, int max_iter,
                            RngState& rng, const std::vector<double>& u,
                            double shift) {
  const double scale = inst.y.frobenius_norm();
  PowerPass pass;
  pass.v = random_unit_vector(inst.n, rng);
  std::vector<double> w;
  for (pass.iterations = 0; pass.iterations < max_iter; ++pass.iterations) {
    inst.y.matvec(pass.v, w);
    if (!u.empty()) {
      double proj = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) proj += u[i] * pass.v[i];
      for (std::size_t i = 0; i < u.size(); ++i) w[i] -= shift * proj * u[i];
    }
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) rayleigh += w[i] * pass.v[i];
    pass.eigenvalue = rayleigh;
    double residual = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double r = w[i] - rayleigh * pass.v[i];
      residual += r * r;
    }
    if (std::sqrt(residual) <= tol * scale) {
      pass.converged = true;
      break;
    }
    pass.v = w;
    normalize(pass.v);
  }
  return pass;
}

}  // namespace detail

// Leading eigenvector of y from a random start.  Degeneracy (no usable gap
// between the top two eigenvalues, e.g. y proportional to the identity) is
// detected by one deflated pass and reported via the flag.
inline PowerIterationResult power_iteration(const Instance& inst, double tol,
                                            int max_iter, RngState& rng) {
  if (!(tol > 0.0)) throw InvalidParameterError("power_iteration: tol must be > 0");
  if (max_iter < 1) {
    throw InvalidParameterError("power_iteration: max_iter must be >= 1");
  }
  const detail::PowerPass top =
      detail::power_pass(inst, tol, max_iter, rng, {}, 0.0);
  PowerIterationResult result;
  result.v = top.v;
  result.eigenvalue = top.eigenvalue;
  result.iterations = top.iterations;
  result.converged = top.converged;
  const detail::PowerPass second =
      detail::power_pass(inst, tol, max_iter, rng, top.v, top.eigenvalue);
  result.degenerate =
      top.eigenvalue - second.eigenvalue <= tol * inst.y.frobenius_norm();
  return result;
}

// Support estimate from a dense vector: the k largest |v_i|.
inline SparseSupport support_from_vector(const std::vector<double>& v, int k) {
  std::vector<double> mag(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mag[i] = std::abs(v[i]);
  return detail::top_k_indices(mag, k);
}

inline RecoveryResult power_iteration_recovery(const Instance& inst, double tol,
                                               int max_iter, RngState& rng) {
  detail::WallClock clock;
  const PowerIterationResult pi = power_iteration(inst, tol, max_iter, rng);
  RecoveryResult result;
  result.method = "power";
  result.estimate = support_from_vector(pi.v, inst.k);
  detail::finish_result(result, inst, clock);
  return result;
}

// ---------------------------------------------------------------------------
// Boosting: one matrix-vector product plus thresholding
// ---------------------------------------------------------------------------

struct BoostResult {
  SparseSupport estimate;
  int sign = 1;                    // chosen orientation of y2 * v
  double condition_value = 0.0;    // <v, x> / ||v||  (diagnostic, uses x)
  double condition_threshold = 0.0;
  bool condition_holds = false;
};

// Correlation the guarantee asks of the warm start:
// (constant + epsilon) * (k / lambda) * sqrt(log(n) / n).
inline double boost_condition_threshold(int n, int k, double lambda,
                                        double epsilon, double constant = 4.0) {
  return (constant + epsilon) * static_cast<double>(k) / lambda *
         std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));
}

// Refines a warm-start direction v on a fresh observation: computes y2 * v,
// orients it by the sign s that maximizes the gap between the k-th and
// (k+1)-th largest entries of s * (y2 * v), and returns the top-k indices.
// The orientation step resolves the sign ambiguity of eigenvector inputs.
inline BoostResult boost(const Instance& inst2, const std::vector<double>& v,
                         double epsilon, double constant = 4.0) {
  if (static_cast<int>(v.size()) != inst2.n) {
    throw InvalidParameterError("boost: vector dimension mismatch");
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw InvalidParameterError("boost: v must be nonzero");
  std::vector<double> w;
  inst2.y.matvec(v, w);
  const int k = inst2.k;
  auto gap_for_sign = [&](int s) {
    std::vector<double> scored(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) scored[i] = s * w[i];
    std::nth_element(scored.begin(), scored.begin() + (k - 1), scored.end(),
                     std::greater<double>());
    const double kth = scored[static_cast<std::size_t>(k - 1)];
    const double k1th = *std::max_element(scored.begin() + k, scored.end());
    return kth - k1th;
  };
  BoostResult result;
  // k = n leaves no (k+1)-th entry; orientation is irrelevant then.
  result.sign = (k < inst2.n && gap_for_sign(-1) > gap_for_sign(+1)) ? -1 : 1;
  std::vector<double> oriented(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) oriented[i] = result.sign * w[i];
  result.estimate = detail::top_k_indices(oriented, k);
  double corr = 0.0;
  for (std::int32_t i : inst2.x) corr += v[static_cast<std::size_t>(i)];
  result.condition_value = std::abs(corr) / norm;
  result.condition_threshold =
      boost_condition_threshold(inst2.n, k, inst2.lambda, epsilon, constant);
  result.condition_holds = result.condition_value >= result.condition_threshold;
  return result;
}

// ---------------------------------------------------------------------------
// Exhaustive search at full sparsity (maximum likelihood)
// ---------------------------------------------------------------------------

struct ExhaustiveOptimum {
  SparseSupport argmax;
  double value = 0.0;  // v^T y v at the optimizer (always set: >= 1 subset)
  std::uint64_t enumerations = 0;
};

// Maximizes v^T y v over all supports of size `size`; ties broken toward the
// lexicographically smallest support.
inline ExhaustiveOptimum exhaustive_argmax(const Instance& inst, int size,
                                           std::uint64_t budget) {
  ExhaustiveOptimum best;
  SparseSupport v;
  bool any = false;
  for_each_subset(inst.n, size, budget, [&](const std::vector<int>& idx) {
    v.assign(idx.begin(), idx.end());
    ++best.enumerations;
    const double value = -hamiltonian(inst, v);
    if (!any || value > best.value) {
      any = true;
      best.value = value;
      best.argmax = v;
    }
  });
  return best;
}

inline RecoveryResult mle_exhaustive(const Instance& inst,
                                     std::uint64_t budget = kDefaultEnumerationBudget) {
  detail::WallClock clock;
  const ExhaustiveOptimum best = exhaustive_argmax(inst, inst.k, budget);
  RecoveryResult result;
  result.method = "mle";
  result.estimate = best.argmax;
  result.enumerations = best.enumerations;
  detail::finish_result(result, inst, clock);
  return result;
}

// ---------------------------------------------------------------------------
// Subexponential search: reduced-sparsity exhaustive search plus boosting
// ---------------------------------------------------------------------------

inline int subexp_k_prime(const Instance& inst, double c_mult) {
  const double raw = c_mult * static_cast<double>(inst.k) *
                     static_cast<double>(inst.k) /
                     (inst.lambda * inst.lambda * static_cast<double>(inst.n));
  const int k_prime = std::max(1, static_cast<int>(std::llround(raw)));
  return std::min(k_prime, inst.n);
}

// Searches supports of reduced size k' = max(1, round(c_mult k^2/(lambda^2 n)))
// on one half of a split observation, then boosts the found direction on the
// other half to a full size-k estimate.
inline RecoveryResult subexp_search(const Instance& inst, double c_mult,
                                    RngState& rng,
                                    std::uint64_t budget = kDefaultEnumerationBudget,
                                    double epsilon = 0.0) {
  detail::WallClock clock;
  if (!(c_mult > 0.0)) {
    throw InvalidParameterError("subexp_search: c_mult must be > 0");
  }
  const int k_prime = subexp_k_prime(inst, c_mult);
  const auto [half1, half2] = split_observation(inst, rng);
  const ExhaustiveOptimum best = exhaustive_argmax(half1, k_prime, budget);
  std::vector<double> v(static_cast<std::size_t>(inst.n), 0.0);
  for (std::int32_t i : best.argmax) v[static_cast<std::size_t>(i)] = 1.0;
  const BoostResult boosted = boost(half2, v, epsilon);
  RecoveryResult result;
  result.method = "subexp";
  result.estimate = boosted.estimate;
  result.enumerations = best.enumerations;
  result.intermediate_overlap = overlap(best.argmax, inst.x);
  result.k_prime_used = k_prime;
  detail::finish_result(result, inst, clock);
  return result;
}

// Boost wrapped as a standalone recovery method: oracle-free warm start from
// diagonal thresholding on one half, boost on the other.
inline RecoveryResult boost_recovery(const Instance& inst, RngState& rng,
                                     double epsilon = 0.0) {
  detail::WallClock clock;
  const auto [half1, half2] = split_observation(inst, rng);
  const RecoveryResult warm = diagonal_thresholding(half1);
  std::vector<double> v(static_cast<std::size_t>(inst.n), 0.0);
  for (std::int32_t i : warm.estimate) v[static_cast<std::size_t>(i)] = 1.0;
  const BoostResult boosted = boost(half2, v, epsilon);
  RecoveryResult result;
  result.method = "boost";
  result.estimate = boosted.estimate;
  result.intermediate_overlap = overlap(warm.estimate, inst.x);
  detail::finish_result(result, inst, clock);
  return result;
}

}  // namespace spca
