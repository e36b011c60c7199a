#pragma once

#include <vector>

#include "relaysel/log_signed.hpp"
#include "relaysel/types.hpp"

namespace relaysel {

/// F_gamma(T) = P(m, m T / snr): probability that one Nakagami link is below T.
double link_outage(double snr, double threshold, unsigned m);

/// Pr{|S| = l} for N i.i.d. source-relay links.
double decoding_set_pmf(unsigned relays, unsigned l, double snr, double threshold, unsigned m);

/// Pr{S empty} = F_gamma(T)^N.
double empty_set_probability(unsigned relays, double snr, double threshold, unsigned m);

/// psi(x, rho, i) with c = 1/(1-rho) + i, summed over the compositions of i
/// into m parts in log domain. c.one_minus_rho must be positive.
LogSigned psi_log(double x, Correlation c, unsigned i, unsigned m);
double psi(double x, Correlation c, unsigned i, unsigned m);

/// Closed form of int_0^inf x^mu e^{-alpha x} Gamma(m, beta x)^j dx.
double aux_integral_I(double mu, double alpha, unsigned m, double beta, unsigned j);

struct SeriesValue {
  double value = 0.0;
  TruncationReport report;
};

/// F(T | |S| = l) when the estimate follows the bivariate gamma law.
SeriesValue cond_cdf_gamma_estimate(double threshold, unsigned l, Correlation c, double snr, unsigned m);

/// F(T | |S| = l) when the estimate is complex Gaussian (exponential power),
/// correlated with one of the m components of the actual channel.
SeriesValue cond_cdf_gaussian_estimate(double threshold, unsigned l, Correlation c, double snr, unsigned m);

/// Dispatches on the branch.
SeriesValue cond_cdf(EstimateBranch branch, double threshold, unsigned l, Correlation c, double snr, unsigned m);

/// P_out at one average SNR (linear) given the correlation at that SNR.
OutagePoint outage_at(const SystemConfig& cfg, double snr_db, Correlation c);

/// Exact curve over cfg.channel.snr_db, with rho evaluated per point.
OutageCurve outage_exact(const SystemConfig& cfg);

/// G(x, a, b, l, snr) = sum_{i<l} (-1)^i C(l-1, i) psi(x, 1 - b snr^{-a}, i).
double g_function(unsigned m_plus_j, double a, double b, unsigned l, double snr, unsigned m);

/// Half-width of the window around a = 1 that selects the bridging expression.
inline constexpr double kUnitSlopeWindow = 0.05;

/// High-SNR approximation for the given asymptote.
OutageCurve outage_high_snr(const SystemConfig& cfg, const Asymptote& asymptote);

/// m [a (N - 1) + 1] for a < 1, m N otherwise.
double diversity_order(unsigned m, unsigned relays, double a);

/// Density of the actual SNR x given the estimated SNR y, Rayleigh fading.
double conditional_pdf_rayleigh(double x, double y, double rho, double snr, double snr_hat);

}  // namespace relaysel
