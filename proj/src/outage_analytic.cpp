#include "relaysel/outage_analytic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "relaysel/csi_models.hpp"
#include "relaysel/errors.hpp"
#include "relaysel/special_functions.hpp"
#include "series.hpp"

namespace relaysel {

namespace {

void require_snr(double snr) {
  if (!(snr > 0.0) || !std::isfinite(snr)) throw DomainError("average SNR must be positive and finite");
}

void require_common(double threshold, unsigned l, double snr, unsigned m) {
  if (!(threshold > 0.0)) throw DomainError("threshold T must be positive");
  if (l == 0) throw DomainError("decoding-set size l must be >= 1");
  if (m == 0) throw DomainError("Nakagami m must be >= 1");
  require_snr(snr);
}

// Digits lost to the alternating sum over i: the largest i-term is at most
// l C(l-1, i) F while the result is at least F^l.
double cancellation_digits(unsigned l, double f) {
  if (!(f > 0.0)) throw NumericError("link outage probability underflows; SNR too high for the exact series");
  return std::log10(static_cast<double>(l)) + (l - 1) * std::log10(2.0) - (l - 1) * std::log10(f);
}

int series_tier(unsigned l, double f, double z, double delta, unsigned m) {
  const double needed = cancellation_digits(l, f) + std::log10(z + 10.0) + 16.0;
  int tier = detail::tier_for(needed);
  // exp(-z) and c^{-(m+s)} must stay inside the double exponent range.
  const double c_digits = (m + (l - 1) * (m - 1.0)) * std::log10((1.0 + (l - 1) * delta) / delta);
  if (tier == 0 && (z > 500.0 || c_digits > 280.0)) tier = 50;
  return tier;
}

SeriesValue from_series(const auto& r, int tier) {
  SeriesValue out;
  out.value = std::clamp(static_cast<double>(r.value), 0.0, 1.0);
  out.report.terms_used = r.terms;
  out.report.residual_bound = r.residual;
  out.report.precision_digits = static_cast<unsigned>(tier);
  return out;
}

}  // namespace

double link_outage(double snr, double threshold, unsigned m) {
  require_snr(snr);
  if (m == 0) throw DomainError("Nakagami m must be >= 1");
  return regularized_lower_gamma(m, m * threshold / snr);
}

double decoding_set_pmf(unsigned relays, unsigned l, double snr, double threshold, unsigned m) {
  if (l > relays) throw DomainError("decoding-set size exceeds relay count");
  require_snr(snr);
  const double x = m * threshold / snr;
  const double f = regularized_lower_gamma(m, x);
  const double q = regularized_upper_gamma(m, x);
  const double log_c = log_binomial(relays, l);
  double v = std::exp(log_c);
  if (relays > l) v *= std::pow(f, relays - l);
  if (l > 0) v *= std::pow(q, l);
  return v;
}

double empty_set_probability(unsigned relays, double snr, double threshold, unsigned m) {
  return std::pow(link_outage(snr, threshold, m), relays);
}

LogSigned psi_log(double x, Correlation c, unsigned i, unsigned m) {
  if (!(x > 0.0)) throw DomainError("psi requires x > 0");
  if (!(c.one_minus_rho > 0.0)) throw DomainError("psi requires rho < 1");
  if (m == 0) throw DomainError("Nakagami m must be >= 1");
  const double log_c = std::log(1.0 / c.one_minus_rho + i);
  std::vector<double> log_factor(m);  // -ln k! - k ln c
  for (unsigned k = 0; k < m; ++k) log_factor[k] = -log_gamma(k + 1.0) - k * log_c;
  std::vector<LogSigned> terms;
  for (const auto& xi : CompositionRange(i, m)) {
    double lt = 0.0;
    unsigned s = 0;
    for (unsigned k = 0; k < m; ++k) {
      lt += xi[k] * log_factor[k] - log_gamma(xi[k] + 1.0);
      s += k * xi[k];
    }
    lt += log_gamma(x + s);
    terms.push_back(LogSigned::from_log(lt));
  }
  const LogSigned prefactor = LogSigned::from_log(log_gamma(i + 1.0) - x * log_c);
  return prefactor * pairwise_sum(terms);
}

double psi(double x, Correlation c, unsigned i, unsigned m) {
  const LogSigned v = psi_log(x, c, i, m);
  if (v.log_magnitude() > 700.0) throw NumericError("psi overflows double range");
  return v.value();
}

double aux_integral_I(double mu, double alpha, unsigned m, double beta, unsigned j) {
  if (!(mu > -1.0)) throw DomainError("aux integral requires mu > -1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("aux integral requires alpha, beta > 0");
  if (m == 0) throw DomainError("Nakagami m must be >= 1");
  const double rate = alpha + j * beta;
  const double log_rate = std::log(rate);
  const double log_beta = std::log(beta);
  std::vector<LogSigned> terms;
  for (const auto& xi : CompositionRange(j, m)) {
    double lt = 0.0;
    unsigned s = 0;
    for (unsigned k = 0; k < m; ++k) {
      lt += xi[k] * (k * log_beta - log_gamma(k + 1.0)) - log_gamma(xi[k] + 1.0);
      s += k * xi[k];
    }
    lt += log_gamma(mu + s + 1.0) - (mu + s + 1.0) * log_rate;
    terms.push_back(LogSigned::from_log(lt));
  }
  const double log_pref = j * log_gamma(m) + log_gamma(j + 1.0);
  return (LogSigned::from_log(log_pref) * pairwise_sum(terms)).value();
}

SeriesValue cond_cdf_gamma_estimate(double threshold, unsigned l, Correlation c, double snr, unsigned m) {
  require_common(threshold, l, snr, m);
  const double f = link_outage(snr, threshold, m);
  if (c.one_minus_rho <= 0.0) return {std::pow(f, l), {}};
  const double delta = std::min(c.one_minus_rho, 1.0);
  const double z = m * threshold / (delta * snr);
  const int tier = series_tier(l, f, z, delta, m);
  return detail::with_tier(tier, [&]<class Real>(std::type_identity<Real>) {
    return from_series(detail::gamma_branch<Real>(threshold, l, delta, snr, m), tier);
  });
}

SeriesValue cond_cdf_gaussian_estimate(double threshold, unsigned l, Correlation c, double snr, unsigned m) {
  require_common(threshold, l, snr, m);
  const double f = link_outage(snr, threshold, m);
  const double delta = std::clamp(c.one_minus_rho, 0.0, 1.0);
  if (m == 1 || delta == 0.0) {
    const int tier = detail::tier_for(cancellation_digits(l, f) + 18.0);
    return detail::with_tier(tier, [&]<class Real>(std::type_identity<Real>) {
      const Real v = m == 1 ? detail::gaussian_m1<Real>(threshold, l, delta, snr)
                            : detail::gaussian_perfect<Real>(threshold, l, snr, m);
      SeriesValue out;
      out.value = std::clamp(static_cast<double>(v), 0.0, 1.0);
      out.report.terms_used = 1;
      out.report.precision_digits = static_cast<unsigned>(tier);
      return out;
    });
  }
  const double z = m * threshold / (delta * snr);
  const int tier = series_tier(l, f, z, delta, m);
  return detail::with_tier(tier, [&]<class Real>(std::type_identity<Real>) {
    return from_series(detail::gaussian_branch<Real>(threshold, l, delta, snr, m), tier);
  });
}

SeriesValue cond_cdf(EstimateBranch branch, double threshold, unsigned l, Correlation c, double snr, unsigned m) {
  return branch == EstimateBranch::GammaEstimate ? cond_cdf_gamma_estimate(threshold, l, c, snr, m)
                                                 : cond_cdf_gaussian_estimate(threshold, l, c, snr, m);
}

OutagePoint outage_at(const SystemConfig& cfg, double snr_db, Correlation c) {
  const double snr = db_to_linear(snr_db);
  const unsigned n = cfg.relays;
  const unsigned m = cfg.channel.m;
  const EstimateBranch branch = branch_of(cfg.estimator);
  OutagePoint pt;
  pt.snr_db = snr_db;
  double p = empty_set_probability(n, snr, cfg.threshold, m);
  double residual = 0.0;
  for (unsigned l = 1; l <= n; ++l) {
    const double w = decoding_set_pmf(n, l, snr, cfg.threshold, m);
    if (w == 0.0) continue;
    const SeriesValue sv = cond_cdf(branch, cfg.threshold, l, c, snr, m);
    p += w * sv.value;
    residual += w * sv.report.residual_bound;
    pt.truncation.terms_used = std::max(pt.truncation.terms_used, sv.report.terms_used);
    pt.truncation.precision_digits = std::max(pt.truncation.precision_digits, sv.report.precision_digits);
  }
  pt.truncation.residual_bound = residual;
  pt.p_out = std::clamp(p, 0.0, 1.0);
  return pt;
}

OutageCurve outage_exact(const SystemConfig& cfg) {
  validate(cfg);
  const CorrelationProfile profile(cfg.estimator, cfg.channel.m, cfg.channel.omega);
  OutageCurve curve;
  curve.config = cfg;
  for (double snr_db : cfg.channel.snr_db) {
    try {
      curve.points.push_back(outage_at(cfg, snr_db, profile.at(db_to_linear(snr_db))));
    } catch (const NumericError& e) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", snr_db);
      throw NumericError(std::string("at SNR ") + buf + " dB: " + e.what());
    }
  }
  return curve;
}

double g_function(unsigned m_plus_j, double a, double b, unsigned l, double snr, unsigned m) {
  if (l == 0 || m == 0 || m_plus_j == 0) throw DomainError("g_function requires l, m, x >= 1");
  if (!(b > 0.0) || !(a >= 0.0)) throw DomainError("g_function requires a >= 0 and b > 0");
  require_snr(snr);
  const double delta = b * std::pow(snr, -a);
  if (!(delta > 0.0)) throw NumericError("1 - rho underflows in g_function");
  const double depth = (l - 1) * (std::log10(2.0) + m_plus_j * std::max(0.0, -std::log10(delta)));
  const int tier = detail::tier_for(depth + 20.0);
  return detail::with_tier(tier, [&]<class Real>(std::type_identity<Real>) {
    return static_cast<double>(detail::g_sum<Real>(m_plus_j, delta, l, m));
  });
}

OutageCurve outage_high_snr(const SystemConfig& cfg, const Asymptote& asym) {
  validate(cfg);
  const unsigned n = cfg.relays;
  const unsigned m = cfg.channel.m;
  if (m > 1 && branch_of(cfg.estimator) == EstimateBranch::GaussianEstimate) {
    throw UnsupportedParameter("high-SNR expressions cover the Gaussian-estimate branch only for m = 1");
  }
  if (!(asym.a >= 0.0)) throw DomainError("asymptote exponent a must be >= 0");
  const double t = cfg.threshold;
  const double log_lead = (m - 1.0) * std::log(static_cast<double>(m)) - log_gamma(m);  // ln(m^{m-1}/Gamma(m))
  OutageCurve curve;
  curve.config = cfg;
  for (double snr_db : cfg.channel.snr_db) {
    const double snr = db_to_linear(snr_db);
    OutagePoint pt;
    pt.snr_db = snr_db;
    const double strict = std::exp(n * log_lead + m * n * std::log(t / snr));
    if (asym.a > 1.0 + kUnitSlopeWindow) {
      pt.p_out = strict;
    } else if (asym.a >= 1.0 - kUnitSlopeWindow) {
      pt.p_out = (n + 1.0) * strict;
    } else {
      if (!(asym.b > 0.0)) throw DomainError("asymptote b must be positive for a < 1");
      const double g = g_function(m, asym.a, asym.b, n, snr, m);
      const double log_pref = std::log(static_cast<double>(n)) + (m - 1.0) * std::log(static_cast<double>(m)) +
                              m * std::log(t) - 2.0 * log_gamma(m) - m * std::log(asym.b) -
                              (1.0 - asym.a) * m * std::log(snr);
      pt.p_out = std::exp(log_pref) * g;
    }
    curve.points.push_back(pt);
  }
  return curve;
}

double diversity_order(unsigned m, unsigned relays, double a) {
  if (m == 0 || relays == 0) throw DomainError("diversity order requires m, N >= 1");
  if (!(a >= 0.0)) throw DomainError("diversity order requires a >= 0");
  if (a < 1.0) return m * (a * (relays - 1.0) + 1.0);
  return static_cast<double>(m) * relays;
}

double conditional_pdf_rayleigh(double x, double y, double rho, double snr, double snr_hat) {
  if (!(x >= 0.0) || !(y >= 0.0)) throw DomainError("conditional pdf requires x, y >= 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("conditional pdf requires rho in [0, 1)");
  require_snr(snr);
  require_snr(snr_hat);
  const double delta = 1.0 - rho;
  const double u = std::sqrt(x / snr);
  const double v = std::sqrt(rho * y / snr_hat);
  const double arg = 2.0 * u * v / delta;
  return std::exp(-(u - v) * (u - v) / delta) * bessel_i0_scaled(arg) / (snr * delta);
}

}  // namespace relaysel
