#include <doctest.h>

#include <cmath>
#include <set>

#include <boost/math/special_functions/gamma.hpp>

#include "relaysel/csi_models.hpp"
#include "relaysel/errors.hpp"
#include "relaysel/monte_carlo.hpp"
#include "relaysel/outage_analytic.hpp"

using namespace relaysel;

namespace {

SystemConfig make_cfg(unsigned n, double t, unsigned m, EstimatorSpec est) {
  SystemConfig cfg;
  cfg.relays = n;
  cfg.threshold = t;
  cfg.channel.m = m;
  cfg.estimator = est;
  return cfg;
}

double within_sigmas(double got, double expect, double se) { return std::fabs(got - expect) / se; }

}  // namespace

TEST_CASE("TrialRng basics") {
  TrialRng a(42, 7), b(42, 7), c(42, 8);
  for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());
  TrialRng a2(42, 7);
  CHECK(a2.next_u64() != c.next_u64());

  TrialRng r(1, 0);
  const int n = 200000;
  double s = 0, s2 = 0, e = 0, g = 0;
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform();
    CHECK_UNARY(u > 0.0 && u < 1.0);
    const double z = r.normal();
    s += z;
    s2 += z * z;
    e += r.exponential();
    g += r.gamma_int(3);
  }
  CHECK(std::fabs(s / n) < 5.0 / std::sqrt(n));
  CHECK(std::fabs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::fabs(e / n - 1.0) < 5.0 / std::sqrt(n));
  CHECK(std::fabs(g / n - 3.0) < 5.0 * std::sqrt(3.0 / n));

  double p = 0;
  for (int k = 0; k < n; ++k) p += std::norm(r.complex_normal(2.0));
  CHECK(std::fabs(p / n - 2.0) < 5.0 * 2.0 / std::sqrt(n));
}

TEST_CASE("derive_seed spreads indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(9, a, b));
  CHECK(seen.size() == 2500);
  CHECK(derive_seed(9, 1, 2) == derive_seed(9, 1, 2));
  CHECK(derive_seed(9, 1, 2) != derive_seed(10, 1, 2));
}

TEST_CASE("correlated pair: rho = 1 and marginals") {
  TrialRng r(3, 0);
  for (unsigned m : {1u, 2u, 3u}) {
    for (int k = 0; k < 1000; ++k) {
      const auto p = sample_correlated_nakagami_pair(m, Correlation::from_rho(1.0), 4.0, 10.0, r);
      CHECK(p.estimated == doctest::Approx(p.actual * 2.5).epsilon(1e-12));
    }
    const int n = 200000;
    double sa = 0, se = 0;
    for (int k = 0; k < n; ++k) {
      const auto p = sample_correlated_nakagami_pair(m, Correlation::from_rho(0.4), 4.0, 10.0, r);
      sa += p.actual;
      se += p.estimated;
    }
    CHECK(within_sigmas(sa / n, 4.0, 4.0 / std::sqrt(m * double(n))) < 5.0);
    CHECK(within_sigmas(se / n, 10.0, 10.0 / std::sqrt(m * double(n))) < 5.0);
  }
}

TEST_CASE("correlated pair: power correlation within 4 sigma at 1e6 pairs") {
  std::uint64_t seed = 100;
  for (unsigned m : {1u, 2u, 4u}) {
    for (double rho : {0.0, 0.25, 0.5, 0.9}) {
      const auto e = pair_power_correlation(m, Correlation::from_rho(rho), 1'000'000, ++seed);
      CHECK_MESSAGE(within_sigmas(e.rho, rho, e.std_err) < 4.0, "m=" << m << " rho=" << rho << " got " << e.rho);
      if (rho == 0.0) CHECK(std::fabs(e.rho) < 3.0 / std::sqrt(1e6) * 1.5);
    }
  }
  // Gaussian estimate: only one component is correlated.
  for (unsigned m : {1u, 2u, 3u}) {
    const auto e = pair_power_correlation(m, Correlation::from_rho(0.8), 1'000'000, ++seed, EstimateBranch::GaussianEstimate);
    CHECK_MESSAGE(within_sigmas(e.rho, 0.8 / std::sqrt(double(m)), e.std_err) < 4.0, "m=" << m);
  }
}

TEST_CASE("simulate_outage: closed-form points") {
  McOptions opt;
  opt.trials = 100000;
  opt.seed = 5;
  const auto hi = simulate_outage(make_cfg(3, 1.0, 1, FixedRho{0.5}), 80.0, opt);
  CHECK(hi.outages == 0);
  CHECK(hi.p_hat == 0.0);
  CHECK(hi.rare_event);
  CHECK(hi.upper_bound_95 > 0.0);
  CHECK(hi.upper_bound_95 == doctest::Approx(1.0 - std::pow(0.05, 1.0 / 1e5)).epsilon(1e-6));

  opt.trials = 1'000'000;
  for (double rho : {0.0, 0.7}) {
    const auto two_hop = simulate_outage(make_cfg(1, 2.0, 1, FixedRho{rho}), 10.0 * std::log10(2.0), opt);
    const double expect = 1.0 - std::exp(-2.0);
    CHECK(two_hop.std_err == doctest::Approx(std::sqrt(two_hop.p_hat * (1 - two_hop.p_hat) / 1e6)));
    CHECK(within_sigmas(two_hop.p_hat, expect, two_hop.std_err) < 4.0);
  }

  const auto cfg = make_cfg(3, 1.0, 1, FixedRho{0.9});
  const auto mc = simulate_outage(cfg, 10.0, opt);
  const double exact = outage_at(cfg, 10.0, Correlation::from_rho(0.9)).p_out;
  CHECK(within_sigmas(mc.p_hat, exact, mc.std_err) < 4.0);

  // Perfect CSI.
  const auto cfg1 = make_cfg(4, 1.0, 2, FixedRho{1.0});
  const auto mc1 = simulate_outage(cfg1, 5.0, opt);
  const double q = boost::math::gamma_q(2.0, 2.0 / std::pow(10.0, 0.5));
  const double f = 1.0 - q;
  double perfect = std::pow(f, 4);
  for (unsigned l = 1; l <= 4; ++l) perfect += decoding_set_pmf(4, l, std::pow(10.0, 0.5), 1.0, 2) * std::pow(f, l);
  CHECK(within_sigmas(mc1.p_hat, perfect, mc1.std_err) < 4.0);
}

TEST_CASE("simulate_outage: gamma and gaussian branches against the exact series") {
  McOptions opt;
  opt.trials = 1'000'000;
  opt.seed = 77;
  opt.workers = 4;
  for (auto branch : {EstimateBranch::GammaEstimate, EstimateBranch::GaussianEstimate}) {
    for (unsigned m : {1u, 2u}) {
      const auto cfg = make_cfg(3, 1.0, m, FixedRho{0.5, branch});
      const auto mc = simulate_outage(cfg, 10.0, opt);
      const double exact = outage_at(cfg, 10.0, Correlation::from_rho(0.5)).p_out;
      CHECK_MESSAGE(within_sigmas(mc.p_hat, exact, mc.std_err) < 4.0, "m=" << m << " branch=" << int(branch));
    }
  }
}

TEST_CASE("simulate_outage: reproducibility and parallel independence") {
  const auto cfg = make_cfg(3, 1.0, 2, NoisyStatic{0.0, 1.0, 1});
  McOptions base;
  base.trials = 200000;
  base.seed = 11;
  const auto a = simulate_outage(cfg, 8.0, base);
  const auto b = simulate_outage(cfg, 8.0, base);
  CHECK(a.outages == b.outages);
  CHECK(a.p_hat == b.p_hat);
  for (unsigned chunks : {1u, 7u, 64u, 1000u}) {
    for (unsigned workers : {1u, 3u, 8u}) {
      McOptions o = base;
      o.chunks = chunks;
      o.workers = workers;
      CHECK(simulate_outage(cfg, 8.0, o).outages == a.outages);
    }
  }
  McOptions other = base;
  other.seed = 12;
  CHECK(simulate_outage(cfg, 8.0, other).outages != a.outages);
}

TEST_CASE("selection is invariant to the estimated-SNR scale") {
  for (unsigned m : {1u, 3u}) {
    auto cfg = make_cfg(4, 1.0, m, FixedRho{0.6});
    for (int k = 0; k < 20000; ++k) {
      TrialRng r1(8, k), r2(8, k), r3(8, k);
      const auto base = simulate_trial(cfg, 6.0, Correlation::from_rho(0.6), r1);
      auto scaled = cfg;
      scaled.estimated_snr_scale = 0.125;
      const auto s1 = simulate_trial(scaled, 6.0, Correlation::from_rho(0.6), r2);
      scaled.estimated_snr_scale = 37.3;
      const auto s2 = simulate_trial(scaled, 6.0, Correlation::from_rho(0.6), r3);
      CHECK(base.selected == s1.selected);
      CHECK(base.selected == s2.selected);
      CHECK(base.outage == s1.outage);
      CHECK(base.outage == s2.outage);
    }
  }
}

TEST_CASE("simulate_estimation") {
  const auto ns = simulate_estimation(NoisyStatic{0.0, 1.0, 1}, 1.0, 1'000'000, 21);
  CHECK(within_sigmas(ns.rho, 0.5, ns.std_err) < 3.0);

  const auto ns2 = simulate_estimation(NoisyStatic{0.0, 1.0, 4}, 10.0, 1'000'000, 22, 2);
  CHECK(within_sigmas(ns2.rho, rho_noisy_static(10.0, 0.0, 1.0, 4, 2).rho, ns2.std_err) < 3.0);

  const double td = 2.404825557695773 / (2.0 * M_PI * 100.0);
  const auto od = simulate_estimation(Outdated{100.0, td}, 1.0, 1'000'000, 23);
  CHECK(within_sigmas(od.rho, 0.0, od.std_err) < 3.0);

  const FirPrediction fir{2, 100.0, 1e-3, 0.0, 1.0, true};
  const auto fe = simulate_estimation(fir, 10.0, 1'000'000, 24);
  CHECK(within_sigmas(fe.rho, rho_fir(10.0, fir).rho, fe.std_err) < 3.0);

  CHECK_THROWS_AS(simulate_estimation(IirPrediction{}, 10.0, 1000, 1), UnsupportedParameter);
  CHECK_THROWS_AS(simulate_estimation(FixedRho{}, 10.0, 1000, 1), UnsupportedParameter);
}

TEST_CASE("fit_diversity_slope") {
  std::vector<std::pair<double, double>> pts;
  for (double db = 50.0; db <= 70.0; db += 2.0) pts.emplace_back(db, std::pow(2.0 / std::pow(10.0, db / 10.0), 6));
  CHECK(fit_diversity_slope(pts, 50.0, 70.0) == doctest::Approx(6.0).epsilon(1e-10));

  std::vector<double> hi_grid;
  for (double db = 60.0; db <= 80.0; db += 2.0) hi_grid.push_back(db);
  SystemConfig cfg = make_cfg(3, 1.0, 1, NoisyStatic{-0.5, 1.0, 1});
  cfg.channel.snr_db = hi_grid;
  const auto hs = outage_high_snr(cfg, asymptotic_ab(cfg.estimator, 1));
  CHECK(fit_diversity_slope(hs, 60.0, 80.0) == doctest::Approx(2.0).epsilon(0.05));

  std::vector<double> grid;
  for (double db = 50.0; db <= 70.0; db += 2.5) grid.push_back(db);
  SystemConfig c2 = make_cfg(2, 1.0, 2, NoisyStatic{0.0, 1.0, 1});
  c2.channel.snr_db = grid;
  CHECK(fit_diversity_slope(outage_exact(c2), 50.0, 70.0) == doctest::Approx(4.0).epsilon(0.10));

  CHECK_THROWS_AS(fit_diversity_slope(pts, 50.0, 55.0), DomainError);
}
