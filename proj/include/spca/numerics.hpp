#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "spca/errors.hpp"

namespace spca {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.6931471805599453094172321214581766;

// Compensated (Kahan) accumulator for long sums of doubles.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double y = x - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }

  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Streaming log(sum_i exp(x_i)) with a running maximum, so the sum never
// overflows and never loses the dominant term.  An empty accumulator and a
// sum of -inf terms both report -inf (log of zero mass).
class LogSumExp {
 public:
  void add(double x) noexcept {
    if (x == kNegInf) return;
    if (count_ == 0 || x > max_) {
      sum_ = (count_ == 0) ? 1.0 : sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    } else {
      sum_ += std::exp(x - max_);
    }
    ++count_;
  }

  double value() const noexcept {
    if (count_ == 0) return kNegInf;
    return max_ + std::log(sum_);
  }

  std::size_t count() const noexcept { return count_; }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
  std::size_t count_ = 0;
};

inline double log_sum_exp(double a, double b) noexcept {
  LogSumExp acc;
  acc.add(a);
  acc.add(b);
  return acc.value();
}

namespace detail {

// Shared grow-only table of log(i!) built by compensated summation of
// log(i).  Guarded by a mutex: the callers are setup paths and theory
// curves, never inner loops.
class LogFactorialTable {
 public:
  double at(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (static_cast<std::size_t>(n) >= values_.size()) grow(n);
    return values_[static_cast<std::size_t>(n)];
  }

 private:
  void grow(int n) {
    if (values_.empty()) {
      values_.push_back(0.0);  // log 0! = 0
      running_ = KahanSum{};
    }
    for (int i = static_cast<int>(values_.size()); i <= n; ++i) {
      running_.add(std::log(static_cast<double>(i)));
      values_.push_back(running_.value());
    }
  }

  std::mutex mutex_;
  std::vector<double> values_;
  KahanSum running_;
};

inline LogFactorialTable& log_factorial_table() {
  static LogFactorialTable table;
  return table;
}

}  // namespace detail

inline double log_factorial(int n) {
  if (n < 0) throw InvalidParameterError("log_factorial: negative argument");
  return detail::log_factorial_table().at(n);
}

// log of the binomial coefficient C(a, b) via the shared log-factorial
// table.  Requires 0 <= b <= a.
inline double log_binomial(int a, int b) {
  if (a < 0 || b < 0 || b > a) {
    throw InvalidParameterError("log_binomial: requires 0 <= b <= a, got a=" +
                                std::to_string(a) + " b=" + std::to_string(b));
  }
  return log_factorial(a) - log_factorial(b) - log_factorial(a - b);
}

}  // namespace spca
