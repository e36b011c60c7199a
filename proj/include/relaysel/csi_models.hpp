#pragma once

#include <vector>

#include <Eigen/Dense>

#include "relaysel/types.hpp"

namespace relaysel {

/// Power correlation of a pilot-averaged estimate in a static channel.
/// m = 1 gives L x / (L x + 1), m > 1 the Nakagami form; x = beta snr^{alpha+1}.
Correlation rho_noisy_static(double snr, double alpha, double beta, unsigned pilots, unsigned m);

/// Jakes autocorrelation Omega * J0(2 pi f_d tau).
double jakes_autocorr(double tau, double doppler_hz, double omega = 1.0);

/// Outdated (delayed, noiseless) estimate: J0^2(2 pi f_d T_d).
Correlation rho_outdated(double doppler_hz, double update_interval_s);

/// Wiener predictor system: u_k = rho_h(-k T_d), k = 1..L, and the first row of
/// the symmetric Toeplitz R with noise_var added on the diagonal.
struct FirSystem {
  Eigen::VectorXd u;
  Eigen::MatrixXd r;
};
FirSystem fir_prediction_system(unsigned taps, double doppler_hz, double update_interval_s,
                                double noise_var, double omega = 1.0);

/// Normalized noise variance N_0 / E_p = Omega / (beta snr^{alpha+1}).
double pilot_noise_variance(double snr, double alpha, double beta, double omega = 1.0);

/// u^H R^{-1} u / Omega via an SPD solve (jittered by 1e-12 Omega if R is singular).
Correlation rho_fir(double snr, const FirPrediction& spec, double omega = 1.0);

/// Infinite-history predictor; requires f_d T_d < 1/2.
Correlation rho_iir(double snr, const IirPrediction& spec, double omega = 1.0);

/// T_d * integral_{-f_d}^{f_d} ln[S(f) + noise_var] df, where S is the sampled
/// Jakes spectrum (DTFT of Omega J0(2 pi f_d k T_d)). noise_var = 0 allowed.
/// Throws NumericError if the quadrature error estimate exceeds 1e-8.
double iir_log_spectrum_integral(double doppler_hz, double update_interval_s, double noise_var,
                                 double omega = 1.0);

/// High-SNR pair (a, b) with 1 - rho ~ b snr^{-a}, per technique.
Asymptote asymptotic_ab(const EstimatorSpec& spec, unsigned m);

/// Throws DomainError / UnsupportedParameter for invalid estimator parameters.
void validate(const EstimatorSpec& spec);

/// rho as a function of average SNR for a fixed estimator; immutable after construction.
class CorrelationProfile {
 public:
  CorrelationProfile(EstimatorSpec spec, unsigned m, double omega = 1.0);

  Correlation at(double snr) const;
  std::vector<Correlation> over(const std::vector<double>& snr) const;
  const Asymptote& asymptote() const { return asymptote_; }
  const EstimatorSpec& spec() const { return spec_; }
  unsigned m() const { return m_; }

 private:
  EstimatorSpec spec_;
  unsigned m_;
  double omega_;
  Asymptote asymptote_;
};

}  // namespace relaysel
