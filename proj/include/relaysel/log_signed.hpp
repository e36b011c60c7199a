#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace relaysel {

/// A real number stored as sign * exp(log_magnitude).
///
/// Products of factorials and large powers are assembled in this form so that
/// only the final value is exponentiated. sign == 0 means exactly zero and the
/// log magnitude is then ignored.
class LogSigned {
 public:
  constexpr LogSigned() = default;

  static LogSigned from_log(double log_magnitude, int sign = 1) {
    LogSigned v;
    v.sign_ = sign == 0 ? 0 : (sign > 0 ? 1 : -1);
    v.log_mag_ = v.sign_ == 0 ? -std::numeric_limits<double>::infinity() : log_magnitude;
    return v;
  }

  static LogSigned from_value(double x) {
    if (x == 0.0) return {};
    return from_log(std::log(std::fabs(x)), x > 0 ? 1 : -1);
  }

  double log_magnitude() const { return log_mag_; }
  int sign() const { return sign_; }
  bool is_zero() const { return sign_ == 0; }

  double value() const { return sign_ == 0 ? 0.0 : sign_ * std::exp(log_mag_); }

  LogSigned operator-() const { return from_log(log_mag_, -sign_); }

  friend LogSigned operator*(LogSigned a, LogSigned b) {
    if (a.is_zero() || b.is_zero()) return {};
    return from_log(a.log_mag_ + b.log_mag_, a.sign_ * b.sign_);
  }

  friend LogSigned operator/(LogSigned a, LogSigned b) {
    if (a.is_zero()) return {};
    return from_log(a.log_mag_ - b.log_mag_, a.sign_ * b.sign_);
  }

  friend LogSigned operator+(LogSigned a, LogSigned b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.log_mag_ < b.log_mag_) std::swap(a, b);
    const double d = b.log_mag_ - a.log_mag_;  // <= 0
    if (a.sign_ == b.sign_) return from_log(a.log_mag_ + std::log1p(std::exp(d)), a.sign_);
    if (d == 0.0) return {};
    return from_log(a.log_mag_ + std::log1p(-std::exp(d)), a.sign_);
  }

  friend LogSigned operator-(LogSigned a, LogSigned b) { return a + (-b); }

  LogSigned& operator+=(LogSigned o) { return *this = *this + o; }
  LogSigned& operator*=(LogSigned o) { return *this = *this * o; }

 private:
  double log_mag_ = -std::numeric_limits<double>::infinity();
  int sign_ = 0;
};

/// Pairwise (tree) reduction; the result does not depend on thread count or
/// traversal, only on the order of `terms`.
LogSigned pairwise_sum(std::span<const LogSigned> terms);

}  // namespace relaysel
