#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spca/errors.hpp"

namespace spca {

inline constexpr std::uint64_t kDefaultEnumerationBudget = 100'000'000ull;

// C(n, k) in 64-bit arithmetic, saturating at UINT64_MAX on overflow so that
// budget comparisons stay safe for any input size.
inline std::uint64_t binomial_count_saturating(int n, int k) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  if (n < 0) throw InvalidParameterError("binomial_count: negative set size");
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t result = 1;
  for (int i = 0; i < k; ++i) {
    const std::uint64_t factor = static_cast<std::uint64_t>(n - i);
    // result * factor / (i+1) is exact, but the intermediate product can
    // overflow; split result = q*(i+1) + r to keep every step in range.
    const std::uint64_t div = static_cast<std::uint64_t>(i + 1);
    const std::uint64_t q = result / div;
    const std::uint64_t r = result % div;
    if (q != 0 && factor > kMax / q) return kMax;
    std::uint64_t next = q * factor;
    const std::uint64_t rem_part = r * factor / div;
    if (next > kMax - rem_part) return kMax;
    next += rem_part;
    result = next;
  }
  return result;
}

// Lexicographic enumerator over k-element subsets of {0, ..., n-1},
// represented as sorted index vectors.  The k = 0 case yields exactly one
// (empty) subset.
class SubsetEnumerator {
 public:
  SubsetEnumerator(int n, int k) : n_(n), k_(k) {
    if (n < 0 || k < 0 || k > n) {
      throw InvalidParameterError(
          "SubsetEnumerator: requires 0 <= k <= n, got n=" + std::to_string(n) +
          " k=" + std::to_string(k));
    }
    current_.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) current_[static_cast<std::size_t>(i)] = i;
  }

  const std::vector<int>& current() const noexcept { return current_; }

  // Advances to the next subset in lexicographic order; returns false once
  // the last subset has already been visited.
  bool advance() noexcept {
    int i = k_ - 1;
    while (i >= 0 && current_[static_cast<std::size_t>(i)] == n_ - k_ + i) --i;
    if (i < 0) return false;
    ++current_[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k_; ++j) {
      current_[static_cast<std::size_t>(j)] =
          current_[static_cast<std::size_t>(j - 1)] + 1;
    }
    return true;
  }

 private:
  int n_;
  int k_;
  std::vector<int> current_;
};

// Refuses up-front any exhaustive enumeration whose subset count exceeds the
// budget; the error message names the offending count.
inline void check_enumeration_budget(int n, int k, std::uint64_t budget) {
  const std::uint64_t count = binomial_count_saturating(n, k);
  if (count > budget) {
    const bool saturated = count == std::numeric_limits<std::uint64_t>::max();
    throw BudgetError("enumeration of C(" + std::to_string(n) + "," +
                      std::to_string(k) + ") = " +
                      (saturated ? std::string(">= 2^64")
                                 : std::to_string(count)) +
                      " supports exceeds budget " + std::to_string(budget));
  }
}

// Visits every k-subset of {0, ..., n-1} in lexicographic order after a
// budget check.  The callback receives the subset as a sorted index vector.
template <class Visitor>
void for_each_subset(int n, int k, std::uint64_t budget, Visitor&& visit) {
  check_enumeration_budget(n, k, budget);
  SubsetEnumerator it(n, k);
  do {
    visit(it.current());
  } while (it.advance());
}

}  // namespace spca
