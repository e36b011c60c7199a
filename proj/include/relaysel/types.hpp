#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace relaysel {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Outage threshold T <-> target rate r, T = 2^{2r} - 1.
inline double threshold_from_rate(double rate) { return std::exp2(2.0 * rate) - 1.0; }
inline double rate_from_threshold(double threshold) { return 0.5 * std::log2(threshold + 1.0); }

/// Fading shape, mean channel power and the average-SNR grid a curve is evaluated on.
struct ChannelSpec {
  unsigned m = 1;
  double omega = 1.0;
  std::vector<double> snr_db;

  std::vector<double> snr_linear() const {
    std::vector<double> out;
    out.reserve(snr_db.size());
    for (double d : snr_db) out.push_back(db_to_linear(d));
    return out;
  }
};

/// Which joint law the (actual, estimated) SNR pair follows in the analysis.
enum class EstimateBranch {
  GammaEstimate,     // estimate in the same Nakagami family (bivariate gamma)
  GaussianEstimate,  // estimate complex Gaussian (exponential power)
};

// Estimation techniques. Pilot power is E_p = beta * snr^alpha * E_d.
struct NoisyStatic {
  double alpha = 0.0;
  double beta = 1.0;
  unsigned pilots = 1;  // L, number of averaged pilot symbols
};

struct Outdated {
  double doppler_hz = 0.0;         // f_d
  double update_interval_s = 1e-3;  // T_d
};

struct FirPrediction {
  unsigned taps = 1;  // L
  double doppler_hz = 100.0;
  double update_interval_s = 1e-3;
  double alpha = 0.0;
  double beta = 1.0;
  bool noiseless = false;  // N_0 / E_p = 0 regardless of SNR
};

struct IirPrediction {
  double doppler_hz = 100.0;
  double update_interval_s = 1e-3;
  double alpha = 0.0;
  double beta = 1.0;
};

struct FixedRho {
  double rho = 1.0;
  EstimateBranch branch = EstimateBranch::GammaEstimate;
};

using EstimatorSpec = std::variant<NoisyStatic, Outdated, FirPrediction, IirPrediction, FixedRho>;

/// Branch used by the closed forms for a given estimator.
EstimateBranch branch_of(const EstimatorSpec& spec);

/// Short machine name: "noisy_static", "outdated", "fir", "iir", "fixed_rho".
std::string estimator_name(const EstimatorSpec& spec);

/// Correlation coefficient with its complement kept separately, so that
/// 1 - rho survives when rho is within a few ulps of one.
struct Correlation {
  double rho = 1.0;
  double one_minus_rho = 0.0;

  static Correlation from_rho(double r) { return {r, 1.0 - r}; }
  static Correlation from_complement(double d) { return {1.0 - d, d}; }
};

/// High-SNR model 1 - rho ~ b * snr^{-a}.
struct Asymptote {
  double a = 0.0;
  double b = 0.0;
};

struct SystemConfig {
  unsigned relays = 1;     // N
  double threshold = 1.0;  // T (linear)
  ChannelSpec channel;
  EstimatorSpec estimator = FixedRho{};
  double estimated_snr_scale = 1.0;  // mean estimated SNR / mean actual SNR (MC only)
};

void validate(const SystemConfig& cfg);

struct TruncationReport {
  unsigned terms_used = 0;
  double residual_bound = 0.0;
  unsigned precision_digits = 0;  // 0 = double
};

struct OutagePoint {
  double snr_db = 0.0;
  double p_out = 0.0;
  TruncationReport truncation;
};

struct OutageCurve {
  SystemConfig config;
  std::vector<OutagePoint> points;

  unsigned max_terms() const {
    unsigned t = 0;
    for (const auto& p : points) t = std::max(t, p.truncation.terms_used);
    return t;
  }
};

}  // namespace relaysel
