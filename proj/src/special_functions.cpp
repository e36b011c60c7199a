#include "relaysel/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "relaysel/errors.hpp"
#include "relaysel/log_signed.hpp"

namespace relaysel {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxIncGammaIter = 100000;

// Stirling series, valid to full double precision for x >= 10.
double log_gamma_stirling(double x) {
  static constexpr double kCoef[] = {1.0 / 12.0,          -1.0 / 360.0,  1.0 / 1260.0,
                                     -1.0 / 1680.0,       1.0 / 1188.0,  -691.0 / 360360.0,
                                     1.0 / 156.0,         -3617.0 / 122400.0};
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double corr = 0.0;
  double p = inv;
  for (double c : kCoef) {
    corr += c * p;
    p *= inv2;
  }
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + corr;
}

// P(s, x) by the power series; best for x < s + 1.
double lower_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int n = 1; n < kMaxIncGammaIter; ++n) {
    term *= x / (s + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) {
      return sum * std::exp(s * std::log(x) - x - log_gamma(s));
    }
  }
  throw NumericError("incomplete gamma series did not converge for s=" + std::to_string(s) +
                     ", x=" + std::to_string(x));
}

// ln of the Legendre continued fraction for Gamma(s, x) / (x^s e^-x); x >= s + 1.
double log_upper_cf_tail(double s, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIncGammaIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return std::log(h);
  }
  throw NumericError("incomplete gamma continued fraction did not converge for s=" +
                     std::to_string(s) + ", x=" + std::to_string(x));
}

void check_incgamma_args(double s, double x) {
  if (!(s > 0.0) || !(x >= 0.0) || !std::isfinite(s) || std::isnan(x)) {
    throw DomainError("incomplete gamma requires s > 0 and x >= 0 (s=" + std::to_string(s) +
                      ", x=" + std::to_string(x) + ")");
  }
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma requires a finite x > 0, got " + std::to_string(x));
  }
  if (x >= 10.0) return log_gamma_stirling(x);
  // Shift up into the Stirling range: Gamma(x) = Gamma(x+n) / (x (x+1) ... (x+n-1)).
  double prod = 1.0;
  double y = x;
  while (y < 10.0) {
    prod *= y;
    y += 1.0;
  }
  return log_gamma_stirling(y) - std::log(prod);
}

double regularized_lower_gamma(double s, double x) {
  check_incgamma_args(s, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < s + 1.0) return lower_series(s, x);
  return 1.0 - std::exp(log_upper_cf_tail(s, x) + s * std::log(x) - x - log_gamma(s));
}

double regularized_upper_gamma(double s, double x) {
  check_incgamma_args(s, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < s + 1.0) return 1.0 - lower_series(s, x);
  return std::exp(log_upper_cf_tail(s, x) + s * std::log(x) - x - log_gamma(s));
}

double log_upper_incomplete_gamma(double s, double x) {
  check_incgamma_args(s, x);
  if (x == 0.0) return log_gamma(s);
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  if (x < s + 1.0) return log_gamma(s) + std::log1p(-lower_series(s, x));
  return log_upper_cf_tail(s, x) + s * std::log(x) - x;
}

double upper_incomplete_gamma(double s, double x) { return std::exp(log_upper_incomplete_gamma(s, x)); }

double log_binomial(unsigned n, unsigned k) {
  if (k > n) throw DomainError("log_binomial requires k <= n");
  return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
}

// ---------------------------------------------------------------------------

namespace {

double j0_power_series(double x) {
  const double q = -0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (std::fabs(term) < 1e-18 * std::fabs(sum) + 1e-300) break;
  }
  return sum;
}

// Miller backward recurrence normalized with 1 = J0 + 2 sum_k J_{2k}.
double j0_miller(double x) {
  int n = static_cast<int>(x + 20.0 + std::sqrt(60.0 * x));
  n += n % 2;
  double jp1 = 0.0;
  double j = 1e-30;
  double norm = 0.0;
  double j0 = 0.0;
  for (int k = n; k >= 1; --k) {
    const double jm1 = (2.0 * k / x) * j - jp1;
    jp1 = j;
    j = jm1;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * j;
    if (std::fabs(j) > 1e250) {
      j *= 1e-250;
      jp1 *= 1e-250;
      norm *= 1e-250;
    }
  }
  j0 = j;
  norm += j0;
  return j0 / norm;
}

// Hankel asymptotic expansion; accurate to ~1e-16 for x >= 25.
double j0_hankel(double x) {
  double p = 0.0;
  double q = 0.0;
  double a = 1.0;  // a_k(0) / x^k, signs folded in below
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      const double f = (2.0 * k - 1.0);
      a *= -(f * f) / (8.0 * k * x);
    }
    if (std::fabs(a) > prev) break;
    prev = std::fabs(a);
    // P collects even k with sign (-1)^{k/2}, Q odd k with sign (-1)^{(k-1)/2}.
    switch (k % 4) {
      case 0: p += a; break;
      case 1: q += a; break;
      case 2: p -= a; break;
      case 3: q -= a; break;
    }
    if (std::fabs(a) < 1e-18) break;
  }
  const double chi = x - 0.25 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j0(double x) {
  x = std::fabs(x);
  if (x < 8.0) return j0_power_series(x);
  if (x < 25.0) return j0_miller(x);
  return j0_hankel(x);
}

double bessel_i0_scaled(double x) {
  if (!(x >= 0.0)) throw DomainError("bessel_i0 requires x >= 0");
  if (x <= 30.0) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 500; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return sum * std::exp(-x);
  }
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double f = 2.0 * k - 1.0;
    const double next = term * f * f / (8.0 * k * x);
    if (next > term) break;
    term = next;
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

double bessel_i0(double x) {
  if (!(x >= 0.0)) throw DomainError("bessel_i0 requires x >= 0");
  return bessel_i0_scaled(x) * std::exp(x);
}

// ---------------------------------------------------------------------------

std::uint64_t composition_count(unsigned total, unsigned parts) {
  if (parts == 0) return total == 0 ? 1 : 0;
  // C(total + parts - 1, parts - 1) with the smaller of the two as loop bound.
  const std::uint64_t n = static_cast<std::uint64_t>(total) + parts - 1;
  std::uint64_t k = std::min<std::uint64_t>(parts - 1, total);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(c);
}

CompositionRange::CompositionRange(unsigned total, unsigned parts, std::uint64_t cap)
    : total_(total), parts_(parts), count_(composition_count(total, parts)) {
  if (parts == 0) throw DomainError("compositions require at least one part");
  if (count_ > cap) {
    throw ResourceError("composition count C(" + std::to_string(total + parts - 1) + ", " +
                        std::to_string(parts - 1) + ") exceeds cap " + std::to_string(cap));
  }
}

CompositionRange::iterator CompositionRange::begin() const {
  iterator it;
  it.current_.assign(parts_, 0);
  it.current_[0] = total_;
  it.done_ = false;
  return it;
}

CompositionRange::iterator& CompositionRange::iterator::operator++() {
  const std::size_t parts = current_.size();
  std::size_t i = 0;
  while (i < parts && current_[i] == 0) ++i;
  if (i + 1 >= parts) {
    done_ = true;
    current_.clear();
    return *this;
  }
  const unsigned v = current_[i];
  current_[i] = 0;
  current_[0] = v - 1;
  ++current_[i + 1];
  return *this;
}

std::vector<std::vector<unsigned>> compositions(unsigned total, unsigned parts, std::uint64_t cap) {
  CompositionRange range(total, parts, cap);
  std::vector<std::vector<unsigned>> out;
  out.reserve(range.size());
  for (const auto& c : range) out.push_back(c);
  return out;
}

LogSigned pairwise_sum(std::span<const LogSigned> terms) {
  if (terms.empty()) return {};
  if (terms.size() == 1) return terms[0];
  const std::size_t half = terms.size() / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

}  // namespace relaysel
