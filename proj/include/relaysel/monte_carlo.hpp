#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "relaysel/types.hpp"

namespace relaysel {

/// SplitMix64 stream keyed by (seed, counter). Each trial owns its stream, so
/// results do not depend on how trials are split across workers.
class TrialRng {
 public:
  TrialRng(std::uint64_t seed, std::uint64_t counter);

  std::uint64_t next_u64();
  double uniform();  // (0, 1)
  double normal();
  double exponential();
  double gamma_int(unsigned shape);                      // Gamma(shape, 1), integer shape
  std::complex<double> complex_normal(double variance);  // CN(0, variance)

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Deterministic child seed for a (sweep index, SNR index) pair.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

struct CorrelatedPair {
  double actual = 0.0;
  double estimated = 0.0;
};

/// Actual and estimated SNR with power correlation rho. GammaEstimate: every
/// one of the m complex components is correlated (bivariate gamma law).
/// GaussianEstimate: only the first component is, and the estimate is exponential.
CorrelatedPair sample_correlated_nakagami_pair(unsigned m, Correlation c, double snr, double snr_hat, TrialRng& rng,
                                               EstimateBranch branch = EstimateBranch::GammaEstimate);

struct McEstimate {
  double p_hat = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t outages = 0;
  double std_err = 0.0;
  std::uint64_t seed = 0;
  bool rare_event = false;      // fewer than 10 expected outages at p_hat
  double upper_bound_95 = 1.0;  // one-sided Clopper-Pearson
};

struct McOptions {
  std::uint64_t trials = 1'000'000;
  std::uint64_t seed = 1;
  unsigned chunks = 64;
  unsigned workers = 1;
};

struct TrialOutcome {
  bool outage = false;
  int selected = -1;  // relay index, -1 when the decoding set is empty
};

/// One realization of the selection-cooperation protocol.
TrialOutcome simulate_trial(const SystemConfig& cfg, double snr, Correlation c, TrialRng& rng);

/// Outage estimate at a fixed correlation.
McEstimate simulate_outage(const SystemConfig& cfg, double snr_db, Correlation c, const McOptions& opt);

/// Outage estimate with rho taken from the estimator at snr_db.
McEstimate simulate_outage(const SystemConfig& cfg, double snr_db, const McOptions& opt);

struct EmpiricalCorrelation {
  double rho = 0.0;
  double std_err = 0.0;  // from 100 batch means
};

/// Pearson correlation of |h|^2 and |h_hat|^2 from a physical simulation of
/// the estimator. Supports NoisyStatic, Outdated and FirPrediction.
EmpiricalCorrelation simulate_estimation(const EstimatorSpec& spec, double snr, std::uint64_t samples,
                                         std::uint64_t seed, unsigned m = 1, double omega = 1.0);

/// Sample power correlation of correlated pairs (for sampler checks).
EmpiricalCorrelation pair_power_correlation(unsigned m, Correlation c, std::uint64_t samples, std::uint64_t seed,
                                            EstimateBranch branch = EstimateBranch::GammaEstimate);

/// -slope of log10 P_out against snr_db/10 over [lo_db, hi_db]; needs >= 4 positive points.
double fit_diversity_slope(const OutageCurve& curve, double lo_db, double hi_db);
double fit_diversity_slope(const std::vector<std::pair<double, double>>& points, double lo_db, double hi_db);

}  // namespace relaysel
