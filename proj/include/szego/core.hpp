#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace szego {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters detected before any numerics run.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)), message_(what) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  std::string message_;
};

// A symbol evaluated outside its domain, or producing a non-finite value.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The implicit-shift QL iteration exhausted its sweep budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(std::size_t order, std::size_t index, const std::string& context = {})
      : Error(message(order, index, context)), order_(order), index_(index) {}

  std::size_t order() const noexcept { return order_; }
  std::size_t index() const noexcept { return index_; }

 private:
  static std::string message(std::size_t order, std::size_t index, const std::string& context) {
    std::ostringstream os;
    os << "QL iteration did not converge for eigenvalue " << index << " of order-" << order
       << " tridiagonal matrix";
    if (!context.empty()) os << " (" << context << ")";
    return os.str();
  }

  std::size_t order_;
  std::size_t index_;
};

// Closed real interval [lo, hi]; infinite endpoints allowed.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  bool contains(const Interval& other) const noexcept { return other.lo >= lo && other.hi <= hi; }
  double width() const noexcept { return hi - lo; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s += x;
  return s.value();
}

}  // namespace szego
