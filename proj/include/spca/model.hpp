#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spca/errors.hpp"
#include "spca/rng.hpp"

namespace spca {

// A sparse support: sorted, duplicate-free indices into {0, ..., n-1}.
using SparseSupport = std::vector<std::int32_t>;

// Throws unless `s` is sorted, duplicate-free and within [0, n).
inline void validate_support(const SparseSupport& s, int n) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0 || s[i] >= n) {
      throw InvalidParameterError("support index " + std::to_string(s[i]) +
                                  " outside [0," + std::to_string(n) + ")");
    }
    if (i > 0 && s[i] <= s[i - 1]) {
      throw InvalidParameterError("support indices must be strictly increasing");
    }
  }
}

// Size of the intersection of two sorted supports.
inline int overlap(const SparseSupport& a, const SparseSupport& b) noexcept {
  int count = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

// Dense symmetric matrix with value semantics.  Full row-major storage: the
// redundancy is cheap at the sizes used here and keeps element access branch
// free in the hot loops.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  explicit SymmetricMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {
    if (n < 0) throw InvalidParameterError("matrix dimension must be >= 0");
  }

  int dim() const noexcept { return n_; }

  double operator()(int i, int j) const noexcept {
    return a_[static_cast<std::size_t>(i) * n_ + j];
  }

  // Sets both (i, j) and (j, i).
  void set(int i, int j, double v) noexcept {
    a_[static_cast<std::size_t>(i) * n_ + j] = v;
    a_[static_cast<std::size_t>(j) * n_ + i] = v;
  }

  // Adds to both (i, j) and (j, i); the diagonal is added once.
  void add(int i, int j, double v) noexcept {
    a_[static_cast<std::size_t>(i) * n_ + j] += v;
    if (i != j) a_[static_cast<std::size_t>(j) * n_ + i] += v;
  }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
  }

  // out = M * in
  void matvec(const std::vector<double>& in, std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
      const double* row = &a_[static_cast<std::size_t>(i) * n_];
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += row[j] * in[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = s;
    }
  }

  friend bool operator==(const SymmetricMatrix&, const SymmetricMatrix&) = default;

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// One planted-signal problem instance.
//
// The observation is y = (lambda / k) * x x^T + w, where x is the indicator
// vector of a k-sparse support and w is symmetric noise.  Both w and y are
// stored so that hot loops never rebuild the observation.
struct Instance {
  int n = 0;
  int k = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;  // provenance only; 0 for hand-assembled instances
  SparseSupport x;
  SymmetricMatrix w;
  SymmetricMatrix y;
};

// Uniformly random k-subset of {0, ..., n-1} via a partial Fisher-Yates
// shuffle; the result is sorted.  Consumes exactly the draws of k calls to
// next_below.
inline SparseSupport sample_signal(int n, int k, RngState& rng) {
  if (k < 1 || k > n) {
    throw InvalidParameterError("sample_signal: requires 1 <= k <= n");
  }
  std::vector<std::int32_t> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const std::uint64_t j =
        static_cast<std::uint64_t>(i) +
        rng.next_below(static_cast<std::uint64_t>(n - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  SparseSupport s(pool.begin(), pool.begin() + k);
  std::sort(s.begin(), s.end());
  return s;
}

// Gaussian orthogonal ensemble draw scaled so that off-diagonal entries have
// variance 1/n and diagonal entries variance 2/n.  Entries are generated for
// the upper triangle in row-major order (diagonal included), consuming
// Box-Muller pairs; this order is part of the serialization contract.
inline SymmetricMatrix sample_goe(int n, RngState& rng) {
  if (n <= 0) throw InvalidParameterError("sample_goe: dimension must be >= 1");
  SymmetricMatrix m(n);
  const double diag_scale = std::sqrt(2.0 / static_cast<double>(n));
  const double off_scale = std::sqrt(1.0 / static_cast<double>(n));
  bool have_spare = false;
  double spare = 0.0;
  auto next_normal = [&]() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const auto [a, b] = rng.next_normal_pair();
    spare = b;
    have_spare = true;
    return a;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double g = next_normal();
      m.set(i, j, g * (i == j ? diag_scale : off_scale));
    }
  }
  return m;
}

// Assembles an observation from its parts: y = (lambda / k) * x x^T + w.
inline Instance build_observation(int n, const SparseSupport& x, double lambda,
                                  SymmetricMatrix w, std::uint64_t seed = 0) {
  if (n <= 0) throw InvalidParameterError("build_observation: n must be >= 1");
  if (w.dim() != n) {
    throw InvalidParameterError("build_observation: noise dimension mismatch");
  }
  validate_support(x, n);
  if (x.empty()) {
    throw InvalidParameterError("build_observation: signal support is empty");
  }
  Instance inst;
  inst.n = n;
  inst.k = static_cast<int>(x.size());
  inst.lambda = lambda;
  inst.seed = seed;
  inst.x = x;
  inst.y = w;
  inst.w = std::move(w);
  const double spike = lambda / static_cast<double>(inst.k);
  for (std::int32_t i : inst.x) {
    for (std::int32_t j : inst.x) {
      if (j >= i) inst.y.add(i, j, spike);
    }
  }
  return inst;
}

// Streams used by make_instance so that signal and noise are independent of
// each other but fully determined by (seed).
inline constexpr std::uint64_t kStreamSignal = 1;
inline constexpr std::uint64_t kStreamNoise = 2;

// Draws a full instance from a single seed: the signal support from one
// stream, the noise matrix from another.  With zero_noise the noise matrix
// is identically zero (useful for smoke tests with a known optimum).
inline Instance make_instance(int n, int k, double lambda, std::uint64_t seed,
                              bool zero_noise = false) {
  RngState rng_signal(seed, kStreamSignal);
  SparseSupport x = sample_signal(n, k, rng_signal);
  SymmetricMatrix w(n);
  if (!zero_noise) {
    RngState rng_noise(seed, kStreamNoise);
    w = sample_goe(n, rng_noise);
  }
  return build_observation(n, x, lambda, std::move(w), seed);
}

// Splits an observation into two independent copies with the signal scaled
// down by sqrt(2): y1 = (y + g) / sqrt(2), y2 = (y - g) / sqrt(2) for a
// fresh noise draw g.  Both halves keep the original signal support.
//
// A noise-free observation (w identically zero) splits into two noise-free
// halves: mixing a fresh draw into an exact observation would manufacture
// noise instead of splitting it, and downstream methods rely on noise-free
// inputs staying noise-free through the split.
inline std::pair<Instance, Instance> split_observation(const Instance& inst,
                                                       RngState& rng) {
  const bool noise_free = inst.w.frobenius_norm() == 0.0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  SymmetricMatrix g(inst.n);
  if (!noise_free) g = sample_goe(inst.n, rng);
  SymmetricMatrix w1(inst.n), w2(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    for (int j = i; j < inst.n; ++j) {
      w1.set(i, j, (inst.w(i, j) + g(i, j)) * inv_sqrt2);
      w2.set(i, j, (inst.w(i, j) - g(i, j)) * inv_sqrt2);
    }
  }
  const double lambda_eff = inst.lambda * inv_sqrt2;
  Instance a = build_observation(inst.n, inst.x, lambda_eff, std::move(w1), inst.seed);
  Instance b = build_observation(inst.n, inst.x, lambda_eff, std::move(w2), inst.seed);
  return {std::move(a), std::move(b)};
}

// Energy of a support: H(v) = -sum_{i,j in v} y[i][j] (both orders of each
// off-diagonal pair contribute, matching the quadratic form v^T y v on
// 0/1-indicator vectors).
inline double hamiltonian(const Instance& inst, const SparseSupport& v) {
  validate_support(v, inst.n);
  double q = 0.0;
  for (std::int32_t i : v) {
    for (std::int32_t j : v) q += inst.y(i, j);
  }
  return -q;
}

// Energy change of the swap move v -> v - {i_out} + {i_in}, computed in
// O(|v|) without materializing the new support.  Requires i_out in v and
// i_in not in v.
inline double hamiltonian_delta(const Instance& inst, const SparseSupport& v,
                                int i_out, int i_in) {
  validate_support(v, inst.n);
  if (!std::binary_search(v.begin(), v.end(), i_out)) {
    throw InvalidParameterError("hamiltonian_delta: i_out not in support");
  }
  if (std::binary_search(v.begin(), v.end(), i_in)) {
    throw InvalidParameterError("hamiltonian_delta: i_in already in support");
  }
  if (i_in < 0 || i_in >= inst.n) {
    throw InvalidParameterError("hamiltonian_delta: i_in outside [0,n)");
  }
  double r_out = 0.0, r_in = 0.0;
  for (std::int32_t j : v) {
    r_out += inst.y(i_out, j);
    r_in += inst.y(i_in, j);
  }
  return 2.0 * r_out - inst.y(i_out, i_out) - 2.0 * r_in +
         2.0 * inst.y(i_in, i_out) - inst.y(i_in, i_in);
}

// Inverse temperature matched to the planted model: beta = lambda * n / (2k).
inline double beta_bayes(double lambda, int n, int k) {
  if (n <= 0 || k <= 0) {
    throw InvalidParameterError("beta_bayes: requires n >= 1 and k >= 1");
  }
  return lambda * static_cast<double>(n) / (2.0 * static_cast<double>(k));
}

}  // namespace spca
