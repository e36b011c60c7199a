#pragma once

// Series kernels shared by the exact and high-SNR outage code. Every routine
// is templated on the floating type so a point can be re-run in a wider
// format when the alternating sum over i would cancel too many digits.

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/special_functions/expm1.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "relaysel/errors.hpp"

namespace relaysel::detail {

namespace bmp = boost::multiprecision;
using Real50 = bmp::number<bmp::cpp_bin_float<50>, bmp::et_off>;
using Real100 = bmp::number<bmp::cpp_bin_float<100>, bmp::et_off>;
using Real200 = bmp::number<bmp::cpp_bin_float<200>, bmp::et_off>;
using Real400 = bmp::number<bmp::cpp_bin_float<400>, bmp::et_off>;

// Largest "needed digits" a double evaluation is trusted with (about 5 digits lost).
inline constexpr double kDoubleDigitBudget = 21.0;

/// Smallest supported tier (0 = double) holding `needed` decimal digits.
inline int tier_for(double needed) {
  if (!(needed == needed)) throw NumericError("precision estimate is NaN");
  if (needed <= kDoubleDigitBudget) return 0;
  for (int d : {50, 100, 200, 400}) {
    if (needed <= d) return d;
  }
  throw NumericError("required working precision (" + std::to_string(static_cast<int>(needed)) +
                     " digits) exceeds the 400-digit tier");
}

template <class F>
auto with_tier(int digits, F&& f) {
  switch (digits) {
    case 0: return f(std::type_identity<double>{});
    case 50: return f(std::type_identity<Real50>{});
    case 100: return f(std::type_identity<Real100>{});
    case 200: return f(std::type_identity<Real200>{});
    case 400: return f(std::type_identity<Real400>{});
    default: throw NumericError("unknown precision tier " + std::to_string(digits));
  }
}

inline constexpr double kMaxSeriesTerms = 1e6;

// The terms peak near j = z; refuse up front when that is out of reach.
inline unsigned series_cap(double z) {
  const double cap = 500.0 + z + 40.0 * std::sqrt(z);
  if (!(cap <= kMaxSeriesTerms)) {
    throw NumericError("outage series needs about " + std::to_string(static_cast<long long>(std::min(cap, 9e18))) +
                       " terms (1 - rho too small for this SNR)");
  }
  return static_cast<unsigned>(cap);
}

/// Yields P(n, z) (regularized lower incomplete gamma) for n = start, start+1, ...
template <class Real>
class PoissonTail {
 public:
  PoissonTail(const Real& z, unsigned start) : z_(z), zd_(static_cast<double>(z)) {
    using std::exp;
    pmf_ = exp(-z_);
    while (n_ < start) step();
  }

  Real next() {
    Real out;
    if (static_cast<double>(n_) < zd_) {
      out = Real(1) - cdf_;
      step();
      return out;
    }
    if (pos_ >= block_.size()) fill_block();
    out = block_[pos_++];
    ++n_;
    return out;
  }

 private:
  void step() {
    cdf_ += pmf_;
    ++n_;
    pmf_ *= z_ / Real(n_);
  }

  void fill_block() {
    const auto size = static_cast<std::size_t>(256.0 + 16.0 * std::sqrt(zd_));
    std::vector<Real> pmf(size);
    pmf[0] = pmf_;
    for (std::size_t k = 1; k < size; ++k) pmf[k] = pmf[k - 1] * z_ / Real(n_ + k);
    const unsigned top = n_ + static_cast<unsigned>(size) - 1;
    // S_top = sum_k z^k / ((top+1)...(top+k))
    Real term(1);
    Real s(1);
    const Real eps = std::numeric_limits<Real>::epsilon();
    for (unsigned k = 1; k < 1000000; ++k) {
      term *= z_ / Real(top + k);
      s += term;
      if (term < eps * s) break;
    }
    block_.assign(size, Real(0));
    block_[size - 1] = pmf[size - 1] * s;
    for (std::size_t k = size - 1; k-- > 0;) {
      s = Real(1) + z_ * s / Real(n_ + k + 1);
      block_[k] = pmf[k] * s;
    }
    pos_ = 0;
    pmf_ = pmf[size - 1] * z_ / Real(top + 1);
  }

  Real z_;
  double zd_;
  unsigned n_ = 0;
  Real pmf_;     // Poisson pmf at n_ (phase A) or at the index past the block (phase B)
  Real cdf_{0};  // sum of pmf below n_
  std::vector<Real> block_;
  std::size_t pos_ = 0;
};

template <class Real>
struct SeriesResult {
  Real value{0};
  unsigned terms = 0;
  double residual = 0.0;
};

/// Stop rule: past the Poisson peak, three consecutive terms whose geometric
/// tail estimate is below 1e-12 of the sum.
template <class Real>
class SeriesAccumulator {
 public:
  bool add(const Real& term, bool past_peak) {
    using std::abs;
    sum_ += term;
    ++terms_;
    prev_ = last_;
    last_ = std::fabs(static_cast<double>(term));
    // Slowly decaying terms must also have a small geometric tail.
    Real weight(1);
    if (prev_ > 0.0) {
      const double q = last_ / prev_;
      weight = q < 1.0 ? Real(1.0 / (1.0 - q)) : Real(1e300);
    }
    if (abs(term) * weight <= Real(1e-12) * abs(sum_)) {
      ++small_run_;
    } else {
      small_run_ = 0;
    }
    return past_peak && small_run_ >= 3;
  }

  SeriesResult<Real> result() const {
    double residual = last_;
    if (prev_ > 0.0 && last_ < prev_) {
      const double q = last_ / prev_;
      residual = last_ * q / (1.0 - q);
    }
    return {sum_, terms_, residual};
  }

  unsigned terms() const { return terms_; }

 private:
  Real sum_{0};
  unsigned terms_ = 0;
  unsigned small_run_ = 0;
  double last_ = 0.0;
  double prev_ = 0.0;
};

/// Coefficients of (sum_{k<m} t^k / k!)^i; entry s multiplies t^s.
template <class Real>
std::vector<Real> truncated_exp_power(unsigned m, unsigned i) {
  std::vector<Real> base(m);
  Real f(1);
  for (unsigned k = 0; k < m; ++k) {
    if (k > 0) f /= Real(k);
    base[k] = f;
  }
  std::vector<Real> out{Real(1)};
  for (unsigned r = 0; r < i; ++r) {
    std::vector<Real> next(out.size() + m - 1, Real(0));
    for (std::size_t a = 0; a < out.size(); ++a) {
      for (unsigned k = 0; k < m; ++k) next[a + k] += out[a] * base[k];
    }
    out.swap(next);
  }
  return out;
}

template <class Real>
Real factorial_real(unsigned n) {
  Real f(1);
  for (unsigned k = 2; k <= n; ++k) f *= Real(k);
  return f;
}

template <class Real>
Real ipow(Real x, unsigned e) {
  Real r(1);
  while (e) {
    if (e & 1u) r *= x;
    x *= x;
    e >>= 1u;
  }
  return r;
}

/// (-1)^i C(n, i) for i = 0..n.
template <class Real>
std::vector<Real> signed_binomials(unsigned n) {
  std::vector<Real> c(n + 1);
  Real v(1);
  for (unsigned i = 0; i <= n; ++i) {
    c[i] = (i % 2 == 0) ? v : -v;
    v = v * Real(n - i) / Real(i + 1);
  }
  return c;
}

/// psi(x, delta, i) = sum_s [poly^i]_s Gamma(x+s) / c^{x+s}, c = 1/delta + i.
template <class Real>
Real psi_series(unsigned x, const Real& delta, unsigned i, unsigned m) {
  const Real cinv = delta / (Real(1) + Real(i) * delta);
  const auto poly = truncated_exp_power<Real>(m, i);
  Real g = factorial_real<Real>(x - 1) * ipow(cinv, x);
  Real sum(0);
  for (std::size_t s = 0; s < poly.size(); ++s) {
    sum += poly[s] * g;
    g *= Real(x + static_cast<unsigned>(s)) * cinv;
  }
  return sum;
}

/// sum_{i<l} (-1)^i C(l-1, i) psi(x, delta, i).
template <class Real>
Real g_sum(unsigned x, double delta, unsigned l, unsigned m) {
  const Real d(delta);
  const auto sb = signed_binomials<Real>(l - 1);
  Real sum(0);
  for (unsigned i = 0; i < l; ++i) sum += sb[i] * psi_series<Real>(x, d, i, m);
  return sum;
}

/// Conditional outage of the selected relay, estimate in the actual SNR's
/// Nakagami family (bivariate gamma law). Requires 0 < delta <= 1.
template <class Real>
SeriesResult<Real> gamma_branch(double threshold, unsigned l, double delta_d, double snr, unsigned m) {
  const Real delta(delta_d);
  const Real rho = Real(1) - delta;
  const double z = m * threshold / (delta_d * snr);

  struct Lane {
    Real coef;
    Real u;
    std::vector<Real> w;  // [poly^i]_s c^{-s}
    std::vector<Real> b;  // (m+j-1+s)! c^{-m} (rho/delta)^j / j!, updated in place
  };
  const auto sb = signed_binomials<Real>(l - 1);
  const Real inv_fact = Real(1) / factorial_real<Real>(m - 1);
  std::vector<Lane> lanes(l);
  for (unsigned i = 0; i < l; ++i) {
    auto& ln = lanes[i];
    const Real d = Real(1) + Real(i) * delta;
    const Real cinv = delta / d;
    ln.coef = Real(l) * sb[i] * inv_fact;
    ln.u = rho / d;
    const auto poly = truncated_exp_power<Real>(m, i);
    ln.w.resize(poly.size());
    ln.b.resize(poly.size());
    Real cs(1);
    Real fact = factorial_real<Real>(m - 1);
    const Real cm = ipow(cinv, m);
    for (std::size_t s = 0; s < poly.size(); ++s) {
      ln.w[s] = poly[s] * cs;
      ln.b[s] = fact * cm;
      cs *= cinv;
      fact *= Real(m + static_cast<unsigned>(s));
    }
  }

  PoissonTail<Real> tail(Real(z), m);
  SeriesAccumulator<Real> acc;
  const unsigned cap = series_cap(z);
  for (unsigned j = 0;; ++j) {
    if (j >= cap) {
      throw NumericError("outage series did not converge within " + std::to_string(cap) + " terms");
    }
    Real inner(0);
    for (auto& ln : lanes) {
      Real lane_sum(0);
      for (std::size_t s = 0; s < ln.b.size(); ++s) {
        if (j > 0) ln.b[s] *= ln.u * Real(m + j - 1 + static_cast<unsigned>(s)) / Real(j);
        lane_sum += ln.w[s] * ln.b[s];
      }
      inner += ln.coef * lane_sum;
    }
    const Real term = tail.next() * inner;
    if (acc.add(term, m + j > z)) break;
  }
  return acc.result();
}

/// Gaussian-estimate branch, m >= 2: single series over n = j + k of the
/// expanded double series. Requires 0 < delta <= 1.
template <class Real>
SeriesResult<Real> gaussian_branch(double threshold, unsigned l, double delta_d, double snr, unsigned m) {
  const Real delta(delta_d);
  const Real rho = Real(1) - delta;
  const double z = m * threshold / (delta_d * snr);
  const auto sb = signed_binomials<Real>(l - 1);
  const Real scale = Real(l) * ipow(delta, m);

  std::vector<Real> inv_d(l);
  std::vector<Real> a(l);
  for (unsigned i = 0; i < l; ++i) {
    inv_d[i] = Real(1) / (Real(1) + Real(i) * delta);
    a[i] = inv_d[i];
  }
  Real rho_pow_e(1);  // rho^n C(m-2+n, n)

  PoissonTail<Real> tail(Real(z), m);
  SeriesAccumulator<Real> acc;
  const unsigned cap = series_cap(z);
  for (unsigned n = 0;; ++n) {
    if (n >= cap) {
      throw NumericError("outage series did not converge within " + std::to_string(cap) + " terms");
    }
    if (n > 0) {
      rho_pow_e *= rho * Real(m - 2 + n) / Real(n);
      for (unsigned i = 0; i < l; ++i) a[i] = (rho * a[i] + rho_pow_e) * inv_d[i];
    }
    Real inner(0);
    for (unsigned i = 0; i < l; ++i) inner += sb[i] * a[i];
    const Real term = tail.next() * scale * inner;
    if (acc.add(term, m + n > z)) break;
  }
  return acc.result();
}

/// Gaussian-estimate branch at m = 1 in closed form:
/// sum_k C(l,k) (-1)^{k-1} (1 - exp(-k x / (1 + (k-1) delta))), x = T / snr.
template <class Real>
Real gaussian_m1(double threshold, unsigned l, double delta_d, double snr) {
  const Real delta(delta_d);
  const Real x = Real(threshold) / Real(snr);
  const auto sb = signed_binomials<Real>(l);
  Real sum(0);
  for (unsigned k = 1; k <= l; ++k) {
    const Real arg = Real(k) * x / (Real(1) + Real(k - 1) * delta);
    sum -= sb[k] * (-boost::math::expm1(-arg));
  }
  return sum;
}

/// Gaussian-estimate branch with an error-free estimate of the first
/// component (delta = 0), m >= 1.
template <class Real>
Real gaussian_perfect(double threshold, unsigned l, double snr, unsigned m) {
  using std::exp;
  const Real t = Real(m) * Real(threshold) / Real(snr);
  const auto sb = signed_binomials<Real>(l - 1);
  const Real eps = std::numeric_limits<Real>::epsilon();
  Real sum(0);
  for (unsigned i = 0; i < l; ++i) {
    const Real a(i + 1);
    Real part = -boost::math::expm1(-a * t) / a;
    Real inner(0);
    for (unsigned k = 0; k + 2 <= m; ++k) {
      // int_0^t e^{i v} v^k / k! dv
      Real term = ipow(t, k + 1) / factorial_real<Real>(k);
      Real j_ik = term / Real(k + 1);
      if (i > 0) {
        for (unsigned r = 1; r < 100000; ++r) {
          term *= Real(i) * t / Real(r);
          const Real add = term / Real(k + r + 1);
          j_ik += add;
          if (add < eps * j_ik) break;
        }
      }
      inner += j_ik;
    }
    part -= exp(-a * t) * inner;
    sum += sb[i] * part;
  }
  return Real(l) * sum;
}

}  // namespace relaysel::detail
