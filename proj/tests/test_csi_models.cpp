#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "relaysel/csi_models.hpp"
#include "relaysel/errors.hpp"

using namespace relaysel;

namespace {

double ref_j0(double x) { return boost::math::cyl_bessel_j(0, x); }

// Prediction-error floor by direct integration over f with the Jakes PSD
// sampled at 1/T_d, using tanh-sinh to absorb the band-edge singularity.
double iir_rho_oracle(double snr, const IirPrediction& s) {
  const double fd = s.doppler_hz;
  const double td = s.update_interval_s;
  const double x = s.beta * std::pow(snr, s.alpha + 1.0);
  const double eps = 1.0 / x;
  const double k = 1.0 / (std::numbers::pi * fd * td);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double integral = ts.integrate(
      [&](double f) {
        const double r = f / fd;
        return std::log(k / std::sqrt((1.0 - r) * (1.0 + r)) + eps);
      },
      -fd, fd);
  return 1.0 - std::exp(td * integral) * std::pow(x, -(1.0 - 2.0 * fd * td)) + eps;
}

}  // namespace

TEST_CASE("rho_noisy_static") {
  CHECK(rho_noisy_static(1.0, 0.0, 1.0, 1, 1).rho == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rho_noisy_static(1e12, 0.0, 1.0, 1, 1).rho == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(rho_noisy_static(10.0, 0.0, 1.0, 4, 2).rho ==
        doctest::Approx(4.0 / std::sqrt(16.0 + 1.6 + 0.02)).epsilon(1e-14));
  CHECK(rho_noisy_static(10.0, 0.0, 1.0, 4, 2).rho == doctest::Approx(0.952921).epsilon(1e-6));

  // The Nakagami form at m = 1 reduces to L x / (L x + 1).
  for (double snr : {0.1, 1.0, 7.0, 300.0}) {
    for (unsigned l : {1u, 3u}) {
      for (double alpha : {-0.5, 0.0, 1.0}) {
        const double x = 0.7 * std::pow(snr, alpha + 1.0);
        const double nak = l / std::sqrt(l * l + 2.0 * l / x + 1.0 / (x * x));
        const auto r = rho_noisy_static(snr, alpha, 0.7, l, 1);
        CHECK(r.rho == doctest::Approx(nak).epsilon(1e-13));
        CHECK(r.rho + r.one_minus_rho == doctest::Approx(1.0).epsilon(1e-15));
      }
    }
  }
  // Complement stays accurate when rho rounds to one.
  const auto hi = rho_noisy_static(1e20, 0.0, 1.0, 1, 1);
  CHECK(hi.one_minus_rho == doctest::Approx(1e-20).epsilon(1e-10));

  CHECK_THROWS_AS(rho_noisy_static(0.0, 0.0, 1.0, 1, 1), DomainError);
  CHECK_THROWS_AS(rho_noisy_static(1.0, 0.0, 0.0, 1, 1), DomainError);
  CHECK_THROWS_AS(rho_noisy_static(1.0, 0.0, 1.0, 0, 1), DomainError);
}

TEST_CASE("rho_noisy_static is monotone in SNR") {
  for (unsigned m : {1u, 2u, 4u}) {
    double prev = 0.0;
    for (double db = -10.0; db <= 60.0; db += 0.5) {
      const double r = rho_noisy_static(std::pow(10.0, db / 10.0), -0.25, 1.0, 2, m).rho;
      CHECK(r >= prev);
      CHECK(r <= 1.0);
      prev = r;
    }
  }
}

TEST_CASE("jakes_autocorr and rho_outdated") {
  CHECK(jakes_autocorr(0.0, 55.0) == 1.0);
  CHECK(std::fabs(jakes_autocorr(2.404825557695773 / (2.0 * std::numbers::pi), 1.0)) < 1e-8);
  CHECK(jakes_autocorr(1e-3, 100.0) == doctest::Approx(ref_j0(0.2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(jakes_autocorr(1e-3, 100.0) == doctest::Approx(0.903713).epsilon(1e-6));
  CHECK(jakes_autocorr(1e-3, 100.0, 2.5) == doctest::Approx(2.5 * ref_j0(0.2 * std::numbers::pi)).epsilon(1e-12));

  CHECK(rho_outdated(0.0, 3e-3).rho == 1.0);
  CHECK(rho_outdated(0.0, 3e-3).one_minus_rho == 0.0);
  CHECK(std::fabs(rho_outdated(1.0, 2.404825557695773 / (2.0 * std::numbers::pi)).rho) < 1e-15);
  const double ref = ref_j0(0.2 * std::numbers::pi) * ref_j0(0.2 * std::numbers::pi);
  CHECK(rho_outdated(100.0, 1e-3).rho == doctest::Approx(ref).epsilon(1e-12));
  CHECK(rho_outdated(100.0, 1e-3).rho == doctest::Approx(0.816697).epsilon(1e-6));
}

TEST_CASE("fir_prediction_system") {
  const auto s0 = fir_prediction_system(1, 0.0, 1e-3, 0.0);
  CHECK(s0.u.size() == 1);
  CHECK(s0.u(0) == 1.0);
  CHECK(s0.r(0, 0) == 1.0);

  const auto s1 = fir_prediction_system(1, 0.0, 1e-3, 0.1);
  CHECK(s1.r(0, 0) == doctest::Approx(1.1));

  const auto s2 = fir_prediction_system(2, 100.0, 1e-3, 0.0);
  const double a = ref_j0(0.2 * std::numbers::pi), b = ref_j0(0.4 * std::numbers::pi);
  CHECK(s2.u(0) == doctest::Approx(a).epsilon(1e-12));
  CHECK(s2.u(1) == doctest::Approx(b).epsilon(1e-12));
  CHECK(s2.r(0, 0) == doctest::Approx(1.0));
  CHECK(s2.r(0, 1) == doctest::Approx(a).epsilon(1e-12));
  CHECK(s2.r(1, 0) == doctest::Approx(a).epsilon(1e-12));
  CHECK(s2.r(1, 1) == doctest::Approx(1.0));

  const auto s5 = fir_prediction_system(5, 70.0, 2e-3, 0.3);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double expect = ref_j0(2.0 * std::numbers::pi * 70.0 * 2e-3 * std::abs(i - j)) + (i == j ? 0.3 : 0.0);
      CHECK(s5.r(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("rho_fir") {
  // One noiseless tap is the outdated estimate.
  for (double td : {0.5e-3, 1e-3, 2e-3, 3e-3}) {
    FirPrediction f{1, 100.0, td, 0.0, 1.0, true};
    CHECK(rho_fir(10.0, f).rho == doctest::Approx(rho_outdated(100.0, td).rho).epsilon(1e-12));
  }
  for (unsigned l : {1u, 2u, 5u}) {
    FirPrediction f{l, 0.0, 1e-3, 0.0, 1.0, true};
    CHECK(rho_fir(10.0, f).rho == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Explicit 2x2 inverse.
  const double a = ref_j0(0.2 * std::numbers::pi), b = ref_j0(0.4 * std::numbers::pi);
  const double det = 1.0 - a * a;
  const double quad = (a * a - 2.0 * a * a * b + b * b) / det;
  FirPrediction f2{2, 100.0, 1e-3, 0.0, 1.0, true};
  CHECK(rho_fir(10.0, f2).rho == doctest::Approx(quad).epsilon(1e-12));

  // Noisy, 2 taps, against the same explicit inverse with diagonal loading.
  const double snr = 20.0, eps = 1.0 / snr;
  const double d = 1.0 + eps;
  const double qn = (d * a * a - 2.0 * a * a * b + d * b * b) / (d * d - a * a);
  FirPrediction f3{2, 100.0, 1e-3, 0.0, 1.0, false};
  CHECK(rho_fir(snr, f3).rho == doctest::Approx(qn).epsilon(1e-12));

  // More taps never hurt.
  double prev = 0.0;
  for (unsigned l = 1; l <= 8; ++l) {
    FirPrediction f{l, 100.0, 3e-3, 0.0, 1.0, false};
    const double r = rho_fir(100.0, f).rho;
    CHECK(r >= prev - 1e-12);
    CHECK(r <= 1.0);
    prev = r;
  }
}

TEST_CASE("pilot_noise_variance") {
  CHECK(pilot_noise_variance(10.0, 0.0, 1.0) == doctest::Approx(0.1));
  CHECK(pilot_noise_variance(100.0, -0.5, 2.0) == doctest::Approx(1.0 / (2.0 * 10.0)));
  CHECK(pilot_noise_variance(100.0, 0.0, 1.0, 3.0) == doctest::Approx(0.03));
}

TEST_CASE("rho_iir against an independent quadrature") {
  for (double td : {0.5e-3, 1e-3, 2e-3, 3e-3}) {
    for (double alpha : {-0.5, 0.0, 0.5}) {
      for (double snr : {1.0, 100.0, 1e4}) {
        IirPrediction s{100.0, td, alpha, 1.0};
        const double got = rho_iir(snr, s).rho;
        const double ref = std::clamp(iir_rho_oracle(snr, s), 0.0, 1.0);
        CHECK_MESSAGE(std::fabs(got - ref) < 1e-9, "td=" << td << " alpha=" << alpha << " snr=" << snr);
      }
    }
  }
  IirPrediction s{100.0, 1e-3, 0.0, 1.0};
  CHECK(rho_iir(100.0, s).rho == doctest::Approx(iir_rho_oracle(100.0, s)).epsilon(1e-9));
}

TEST_CASE("rho_iir limits and domain") {
  // Quasi-static channel with a strong pilot.
  IirPrediction slow{1e-3, 1e-3, 0.0, 1.0};
  CHECK(rho_iir(1e8, slow).rho > 0.999);
  IirPrediction bad{300.0, 2e-3, 0.0, 1.0};
  CHECK_THROWS_AS(rho_iir(10.0, bad), DomainError);
  // Noiseless prediction error beats any FIR length.
  IirPrediction iir{100.0, 2e-3, 0.0, 1.0};
  FirPrediction fir{8, 100.0, 2e-3, 0.0, 1.0, false};
  CHECK(rho_iir(1e3, iir).rho >= rho_fir(1e3, fir).rho - 1e-9);
}

TEST_CASE("asymptotic_ab") {
  const auto ns = asymptotic_ab(NoisyStatic{0.0, 1.0, 1}, 1);
  CHECK(ns.a == 1.0);
  CHECK(ns.b == 1.0);
  const auto ns2 = asymptotic_ab(NoisyStatic{1.0, 2.0, 5}, 2);
  CHECK(ns2.a == 2.0);
  CHECK(ns2.b == doctest::Approx(0.2));
  const auto od = asymptotic_ab(Outdated{0.0, 1e-3}, 1);
  CHECK(od.a == 0.0);
  CHECK(od.b == 0.0);
  const auto od2 = asymptotic_ab(Outdated{100.0, 1e-3}, 3);
  CHECK(od2.b == doctest::Approx(1.0 - ref_j0(0.2 * std::numbers::pi) * ref_j0(0.2 * std::numbers::pi)).epsilon(1e-12));
  const auto fx = asymptotic_ab(FixedRho{0.7}, 1);
  CHECK(fx.a == 0.0);
  CHECK(fx.b == doctest::Approx(0.3));

  FirPrediction fir{2, 100.0, 1e-3, 0.0, 1.0, false};
  FirPrediction fir0 = fir;
  fir0.noiseless = true;
  const auto fa = asymptotic_ab(fir, 1);
  CHECK(fa.a == 0.0);
  CHECK(fa.b == doctest::Approx(1.0 - rho_fir(1.0, fir0).rho).epsilon(1e-12));

  IirPrediction iir{100.0, 2e-3, 0.5, 2.0};
  const auto ia = asymptotic_ab(iir, 1);
  CHECK(ia.a == doctest::Approx(1.5 * 0.6));
  // b = exp(T_d int ln S) beta^-(1-2 f_d T_d), via the oracle with eps -> 0.
  const double k = 1.0 / (std::numbers::pi * 0.2);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double li = ts.integrate([&](double f) { return std::log(k / std::sqrt(1.0 - f * f / 1e4)); }, -100.0, 100.0);
  CHECK(ia.b == doctest::Approx(std::exp(2e-3 * li) * std::pow(2.0, -0.6)).epsilon(1e-9));
}

TEST_CASE("CorrelationProfile") {
  CorrelationProfile p(NoisyStatic{0.0, 1.0, 1}, 1);
  CHECK(p.at(1.0).rho == doctest::Approx(0.5));
  const auto v = p.over({1.0, 10.0, 100.0});
  REQUIRE(v.size() == 3);
  CHECK(v[2].rho > v[1].rho);
  CHECK(p.asymptote().a == 1.0);
  CHECK(p.m() == 1);

  // 1 - rho approaches b snr^-a.
  const EstimatorSpec specs[] = {NoisyStatic{-0.5, 1.0, 2}, NoisyStatic{0.5, 3.0, 1}, Outdated{100.0, 2e-3},
                                 FirPrediction{4, 100.0, 3e-3, 0.0, 1.0, false}, IirPrediction{100.0, 2e-3, 0.0, 1.0},
                                 FixedRho{0.9}};
  for (const auto& s : specs) {
    for (unsigned m : {1u, 2u}) {
      CorrelationProfile prof(s, m);
      const double snr = 1e8;
      const auto ab = prof.asymptote();
      const double lhs = std::pow(snr, ab.a) * prof.at(snr).one_minus_rho;
      CHECK_MESSAGE(lhs == doctest::Approx(ab.b).epsilon(0.05), estimator_name(s) << " m=" << m);
    }
  }
}

TEST_CASE("estimator validation") {
  CHECK_THROWS_AS(validate(EstimatorSpec{NoisyStatic{0.0, -1.0, 1}}), DomainError);
  CHECK_THROWS_AS(validate(EstimatorSpec{FixedRho{1.5}}), DomainError);
  CHECK_THROWS_AS(validate(EstimatorSpec{FirPrediction{0, 100.0, 1e-3, 0.0, 1.0, false}}), DomainError);
  CHECK_NOTHROW(validate(EstimatorSpec{Outdated{100.0, 1e-3}}));
  CHECK(estimator_name(EstimatorSpec{FirPrediction{}}) == "fir");
  CHECK(branch_of(EstimatorSpec{NoisyStatic{}}) == EstimateBranch::GammaEstimate);
  CHECK(branch_of(EstimatorSpec{Outdated{}}) == EstimateBranch::GammaEstimate);
  CHECK(branch_of(EstimatorSpec{FirPrediction{}}) == EstimateBranch::GaussianEstimate);
  CHECK(branch_of(EstimatorSpec{IirPrediction{}}) == EstimateBranch::GaussianEstimate);
  CHECK(branch_of(EstimatorSpec{FixedRho{0.5, EstimateBranch::GammaEstimate}}) == EstimateBranch::GammaEstimate);
}
