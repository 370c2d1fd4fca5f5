#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "spca/errors.hpp"

namespace spca {

using BigInt = boost::multiprecision::cpp_int;

// Exact binomial coefficient C(a, b) as an arbitrary-precision integer.
// Out-of-range b (negative or > a) counts zero subsets rather than raising:
// callers sum products of coefficients over partitions where empty cells are
// legitimately absent.  Negative a is a caller bug and does raise.
inline BigInt binomial_exact(long long a, long long b) {
  if (a < 0) throw InvalidParameterError("binomial_exact: negative set size");
  if (b < 0 || b > a) return BigInt(0);
  if (b > a - b) b = a - b;
  BigInt result = 1;
  for (long long i = 0; i < b; ++i) {
    result *= (a - i);
    result /= (i + 1);  // exact: the running value is C(a, i+1), an integer
  }
  return result;
}

// Convert a (possibly huge) exact integer to double, saturating at +inf.
inline double bigint_to_double(const BigInt& v) {
  return v.convert_to<double>();
}

}  // namespace spca
