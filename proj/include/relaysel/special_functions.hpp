#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace relaysel {

// ---------------------------------------------------------------------------
// Gamma family
// ---------------------------------------------------------------------------

/// ln Gamma(x) for x > 0. Throws DomainError otherwise.
double log_gamma(double x);

/// Regularized lower incomplete gamma P(s, x) = gamma(s, x) / Gamma(s).
double regularized_lower_gamma(double s, double x);

/// Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s).
double regularized_upper_gamma(double s, double x);

/// ln Gamma(s, x); finite wherever Gamma(s, x) > 0.
double log_upper_incomplete_gamma(double s, double x);

/// Non-regularized Gamma(s, x). Overflows to +inf where Gamma(s, x) > DBL_MAX
/// (roughly s > 171 with small x); use log_upper_incomplete_gamma there.
double upper_incomplete_gamma(double s, double x);

/// ln C(n, k).
double log_binomial(unsigned n, unsigned k);

// ---------------------------------------------------------------------------
// Bessel
// ---------------------------------------------------------------------------

/// J_0(x), absolute error below 1e-12 on |x| <= 100.
double bessel_j0(double x);

/// I_0(x) for x >= 0; overflows past x ~ 713, use bessel_i0_scaled there.
double bessel_i0(double x);

/// exp(-x) I_0(x) for x >= 0.
double bessel_i0_scaled(double x);

// ---------------------------------------------------------------------------
// Integer compositions
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kDefaultCompositionCap = 10'000'000;

/// Number of weak compositions of `total` into `parts` parts, C(total+parts-1, parts-1),
/// saturated at UINT64_MAX.
std::uint64_t composition_count(unsigned total, unsigned parts);

/// Iterates every vector (xi_0, ..., xi_{parts-1}) of nonnegative integers that
/// sums to `total`, exactly once, in colex order. No recursion; O(parts) state.
class CompositionRange {
 public:
  /// Throws DomainError if parts == 0 and ResourceError if the count exceeds cap.
  CompositionRange(unsigned total, unsigned parts, std::uint64_t cap = kDefaultCompositionCap);

  class iterator {
   public:
    using value_type = std::vector<unsigned>;
    using difference_type = std::ptrdiff_t;

    const std::vector<unsigned>& operator*() const { return current_; }
    const std::vector<unsigned>* operator->() const { return &current_; }
    iterator& operator++();
    iterator operator++(int) {
      auto tmp = *this;
      ++*this;
      return tmp;
    }
    bool operator==(const iterator& o) const { return done_ == o.done_ && (done_ || current_ == o.current_); }

   private:
    friend class CompositionRange;
    std::vector<unsigned> current_;
    bool done_ = true;
  };

  iterator begin() const;
  iterator end() const { return iterator{}; }
  std::uint64_t size() const { return count_; }

 private:
  unsigned total_;
  unsigned parts_;
  std::uint64_t count_;
};

/// Materialized form of CompositionRange.
std::vector<std::vector<unsigned>> compositions(unsigned total, unsigned parts,
                                                std::uint64_t cap = kDefaultCompositionCap);

}  // namespace relaysel
