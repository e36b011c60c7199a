#include "relaysel/csi_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "quadrature.hpp"
#include "relaysel/errors.hpp"
#include "relaysel/special_functions.hpp"

namespace relaysel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// 1 - J0(x) without cancellation near x = 0.
double one_minus_j0(double x) {
  if (std::fabs(x) >= 1.0) return 1.0 - bessel_j0(x);
  const double q = -0.25 * x * x;
  double term = 1.0;
  double sum = 0.0;
  for (int k = 1; k < 40; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum -= term;
    if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
  }
  return sum;
}

Correlation clamp(Correlation c) {
  c.one_minus_rho = std::clamp(c.one_minus_rho, 0.0, 1.0);
  c.rho = std::clamp(c.rho, 0.0, 1.0);
  return c;
}

const detail::GaussLegendreRule& rule_256() {
  static const detail::GaussLegendreRule r = detail::make_gauss_legendre(256);
  return r;
}

const detail::GaussLegendreRule& rule_128() {
  static const detail::GaussLegendreRule r = detail::make_gauss_legendre(128);
  return r;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

double u_r_quadratic(const FirSystem& sys) {
  Eigen::LLT<Eigen::MatrixXd> llt(sys.r);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-12 * std::max(1.0, sys.r(0, 0));
    Eigen::MatrixXd reg = sys.r;
    reg.diagonal().array() += jitter;
    llt.compute(reg);
    if (llt.info() != Eigen::Success) throw NumericError("FIR autocorrelation matrix is not positive definite");
  }
  return sys.u.dot(llt.solve(sys.u));
}

}  // namespace

EstimateBranch branch_of(const EstimatorSpec& spec) {
  return std::visit(overloaded{
                        [](const NoisyStatic&) { return EstimateBranch::GammaEstimate; },
                        [](const Outdated&) { return EstimateBranch::GammaEstimate; },
                        [](const FirPrediction&) { return EstimateBranch::GaussianEstimate; },
                        [](const IirPrediction&) { return EstimateBranch::GaussianEstimate; },
                        [](const FixedRho& f) { return f.branch; },
                    },
                    spec);
}

std::string estimator_name(const EstimatorSpec& spec) {
  static constexpr const char* kNames[] = {"noisy_static", "outdated", "fir", "iir", "fixed_rho"};
  return kNames[spec.index()];
}

void validate(const EstimatorSpec& spec) {
  std::visit(overloaded{
                 [](const NoisyStatic& s) {
                   if (!(s.alpha > -1.0)) throw UnsupportedParameter("noisy_static requires alpha > -1");
                   require_positive(s.beta, "beta");
                   if (s.pilots == 0) throw DomainError("pilot count L must be >= 1");
                 },
                 [](const Outdated& s) {
                   if (!(s.doppler_hz >= 0.0)) throw DomainError("doppler must be >= 0");
                   require_positive(s.update_interval_s, "update interval T_d");
                 },
                 [](const FirPrediction& s) {
                   if (s.taps == 0) throw DomainError("FIR predictor needs at least one tap");
                   if (!(s.doppler_hz >= 0.0)) throw DomainError("doppler must be >= 0");
                   require_positive(s.update_interval_s, "update interval T_d");
                   require_positive(s.beta, "beta");
                 },
                 [](const IirPrediction& s) {
                   require_positive(s.doppler_hz, "doppler");
                   require_positive(s.update_interval_s, "update interval T_d");
                   require_positive(s.beta, "beta");
                   if (!(s.alpha > -1.0)) throw UnsupportedParameter("iir requires alpha > -1");
                   if (!(s.doppler_hz * s.update_interval_s < 0.5)) {
                     throw DomainError("iir requires f_d T_d < 1/2 (no spectral aliasing)");
                   }
                 },
                 [](const FixedRho& s) {
                   if (!(s.rho >= 0.0 && s.rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
                 },
             },
             spec);
}

Correlation rho_noisy_static(double snr, double alpha, double beta, unsigned pilots, unsigned m) {
  require_positive(snr, "average SNR");
  require_positive(beta, "beta");
  if (pilots == 0) throw DomainError("pilot count L must be >= 1");
  if (m == 0) throw DomainError("Nakagami m must be >= 1");
  const double x = beta * std::pow(snr, alpha + 1.0);
  const double l = pilots;
  if (m == 1) {
    return clamp({l * x / (l * x + 1.0), 1.0 / (l * x + 1.0)});
  }
  const double excess = 2.0 * m * l / x + m / (x * x);  // D - L^2
  const double root = std::sqrt(l * l + excess);
  return clamp({l / root, excess / ((root + l) * root)});
}

double jakes_autocorr(double tau, double doppler_hz, double omega) {
  if (!(doppler_hz >= 0.0)) throw DomainError("doppler must be >= 0");
  return omega * bessel_j0(2.0 * std::numbers::pi * doppler_hz * tau);
}

Correlation rho_outdated(double doppler_hz, double update_interval_s) {
  if (!(doppler_hz >= 0.0)) throw DomainError("doppler must be >= 0");
  require_positive(update_interval_s, "update interval T_d");
  const double arg = 2.0 * std::numbers::pi * doppler_hz * update_interval_s;
  const double j0 = bessel_j0(arg);
  return clamp({j0 * j0, one_minus_j0(arg) * (1.0 + j0)});
}

FirSystem fir_prediction_system(unsigned taps, double doppler_hz, double update_interval_s, double noise_var,
                                double omega) {
  if (taps == 0) throw DomainError("FIR predictor needs at least one tap");
  if (!(noise_var >= 0.0)) throw DomainError("noise variance must be >= 0");
  std::vector<double> acf(taps + 1);
  for (unsigned k = 0; k <= taps; ++k) acf[k] = jakes_autocorr(k * update_interval_s, doppler_hz, omega);
  FirSystem sys{Eigen::VectorXd(taps), Eigen::MatrixXd(taps, taps)};
  for (unsigned k = 0; k < taps; ++k) sys.u[k] = acf[k + 1];
  for (unsigned i = 0; i < taps; ++i) {
    for (unsigned j = 0; j < taps; ++j) sys.r(i, j) = acf[i > j ? i - j : j - i];
    sys.r(i, i) += noise_var;
  }
  return sys;
}

double pilot_noise_variance(double snr, double alpha, double beta, double omega) {
  return omega / (beta * std::pow(snr, alpha + 1.0));
}

Correlation rho_fir(double snr, const FirPrediction& spec, double omega) {
  require_positive(snr, "average SNR");
  const double noise = spec.noiseless ? 0.0 : pilot_noise_variance(snr, spec.alpha, spec.beta, omega);
  const auto sys = fir_prediction_system(spec.taps, spec.doppler_hz, spec.update_interval_s, noise, omega);
  const double r = u_r_quadratic(sys) / omega;
  return clamp(Correlation::from_rho(r));
}

double iir_log_spectrum_integral(double doppler_hz, double update_interval_s, double noise_var, double omega) {
  require_positive(doppler_hz, "doppler");
  require_positive(update_interval_s, "update interval T_d");
  const double fdt = doppler_hz * update_interval_s;
  // Sampled Jakes spectrum in the band: S(f) = K / sqrt(1 - (f/f_d)^2), K = Omega / (pi f_d T_d).
  // With f = f_d sin(theta) the integral is f_d [ int cos ln(K + eps cos) - int cos ln cos ];
  // the second piece is 2 (ln 2 - 1) in closed form.
  const double k = omega / (std::numbers::pi * fdt);
  auto smooth = [&](double theta) {
    const double c = std::cos(theta);
    return c * std::log(k + noise_var * c);
  };
  const double half_pi = 0.5 * std::numbers::pi;
  const double fine = detail::integrate(rule_256(), -half_pi, half_pi, smooth);
  const double coarse = detail::integrate(rule_128(), -half_pi, half_pi, smooth);
  if (std::fabs(fine - coarse) > 1e-8 * std::max(1.0, std::fabs(fine))) {
    throw NumericError("log-spectrum quadrature error estimate exceeds 1e-8");
  }
  const double singular = 2.0 * (std::numbers::ln2 - 1.0);
  return fdt * (fine - singular);
}

Correlation rho_iir(double snr, const IirPrediction& spec, double omega) {
  require_positive(snr, "average SNR");
  validate(EstimatorSpec{spec});
  const double eps = pilot_noise_variance(snr, spec.alpha, spec.beta, omega);
  const double expo = 1.0 - 2.0 * spec.doppler_hz * spec.update_interval_s;
  const double log_int = iir_log_spectrum_integral(spec.doppler_hz, spec.update_interval_s, eps, omega);
  const double err_var = std::exp(log_int + expo * std::log(eps)) - eps;
  return clamp(Correlation::from_complement(err_var / omega));
}

Asymptote asymptotic_ab(const EstimatorSpec& spec, unsigned m) {
  validate(spec);
  return std::visit(
      overloaded{
          [m](const NoisyStatic& s) { return Asymptote{s.alpha + 1.0, m / (s.beta * s.pilots)}; },
          [](const Outdated& s) {
            return Asymptote{0.0, rho_outdated(s.doppler_hz, s.update_interval_s).one_minus_rho};
          },
          [](const FirPrediction& s) {
            FirPrediction noiseless = s;
            noiseless.noiseless = true;
            return Asymptote{0.0, rho_fir(1.0, noiseless).one_minus_rho};
          },
          [](const IirPrediction& s) {
            const double p = 1.0 - 2.0 * s.doppler_hz * s.update_interval_s;
            const double log_int = iir_log_spectrum_integral(s.doppler_hz, s.update_interval_s, 0.0);
            return Asymptote{(s.alpha + 1.0) * p, std::exp(log_int - p * std::log(s.beta))};
          },
          [](const FixedRho& s) { return Asymptote{0.0, 1.0 - s.rho}; },
      },
      spec);
}

CorrelationProfile::CorrelationProfile(EstimatorSpec spec, unsigned m, double omega)
    : spec_(std::move(spec)), m_(m), omega_(omega) {
  if (m == 0) throw DomainError("Nakagami m must be >= 1");
  require_positive(omega, "Omega_h");
  validate(spec_);
  asymptote_ = asymptotic_ab(spec_, m_);
}

Correlation CorrelationProfile::at(double snr) const {
  return std::visit(overloaded{
                        [&](const NoisyStatic& s) { return rho_noisy_static(snr, s.alpha, s.beta, s.pilots, m_); },
                        [&](const Outdated& s) { return rho_outdated(s.doppler_hz, s.update_interval_s); },
                        [&](const FirPrediction& s) { return rho_fir(snr, s, omega_); },
                        [&](const IirPrediction& s) { return rho_iir(snr, s, omega_); },
                        [](const FixedRho& s) { return Correlation::from_rho(s.rho); },
                    },
                    spec_);
}

std::vector<Correlation> CorrelationProfile::over(const std::vector<double>& snr) const {
  std::vector<Correlation> out;
  out.reserve(snr.size());
  for (double g : snr) out.push_back(at(g));
  return out;
}

}  // namespace relaysel
