#include "relaysel/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include <Eigen/Dense>
#include <boost/math/distributions/binomial.hpp>

#include "relaysel/csi_models.hpp"
#include "relaysel/errors.hpp"

namespace relaysel {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

McEstimate finish(std::uint64_t outages, std::uint64_t trials, std::uint64_t seed) {
  McEstimate e;
  e.trials = trials;
  e.outages = outages;
  e.seed = seed;
  e.p_hat = static_cast<double>(outages) / static_cast<double>(trials);
  e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(trials));
  e.rare_event = e.p_hat < 10.0 / static_cast<double>(trials);
  e.upper_bound_95 = boost::math::binomial_distribution<>::find_upper_bound_on_p(
      static_cast<double>(trials), static_cast<double>(outages), 0.05);
  return e;
}

// Batch-means estimate of a Pearson correlation.
class CorrelationBatches {
 public:
  explicit CorrelationBatches(std::uint64_t samples) : per_batch_(std::max<std::uint64_t>(1, samples / kBatches)) {}

  void add(double x, double y) {
    current_.add(x, y);
    total_.add(x, y);
    if (current_.n == per_batch_) {
      batch_rho_.push_back(current_.rho());
      current_ = {};
    }
  }

  EmpiricalCorrelation result() const {
    EmpiricalCorrelation out;
    out.rho = total_.rho();
    if (batch_rho_.size() >= 2) {
      double mean = 0.0;
      for (double r : batch_rho_) mean += r;
      mean /= batch_rho_.size();
      double var = 0.0;
      for (double r : batch_rho_) var += (r - mean) * (r - mean);
      var /= (batch_rho_.size() - 1.0);
      out.std_err = std::sqrt(var / batch_rho_.size());
    }
    return out;
  }

 private:
  static constexpr std::uint64_t kBatches = 100;

  struct Moments {
    std::uint64_t n = 0;
    double mx = 0.0, my = 0.0, cxx = 0.0, cyy = 0.0, cxy = 0.0;  // Welford
    void add(double x, double y) {
      ++n;
      const double dx = x - mx;
      mx += dx / n;
      const double dy = y - my;
      my += dy / n;
      cxx += dx * (x - mx);
      cyy += dy * (y - my);
      cxy += dx * (y - my);
    }
    double rho() const { return cxx > 0.0 && cyy > 0.0 ? cxy / std::sqrt(cxx * cyy) : 0.0; }
  };

  std::uint64_t per_batch_;
  Moments current_;
  Moments total_;
  std::vector<double> batch_rho_;
};

// Factor of the (lags x lags) Jakes covariance, C = F F^T, with noise-free lags.
Eigen::MatrixXd jakes_factor(unsigned lags, double doppler_hz, double interval_s, double omega) {
  Eigen::MatrixXd cov(lags, lags);
  for (unsigned i = 0; i < lags; ++i) {
    for (unsigned j = 0; j < lags; ++j) {
      cov(i, j) = jakes_autocorr((i > j ? i - j : j - i) * interval_s, doppler_hz, omega);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of the Jakes covariance failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

EmpiricalCorrelation simulate_noisy_static(const NoisyStatic& s, double snr, std::uint64_t samples,
                                           std::uint64_t seed, unsigned m, double omega) {
  const double noise_var = pilot_noise_variance(snr, s.alpha, s.beta, omega) / s.pilots;
  CorrelationBatches acc(samples);
  for (std::uint64_t k = 0; k < samples; ++k) {
    TrialRng rng(seed, k);
    const double power = rng.gamma_int(m) * omega / m;
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const std::complex<double> h = std::polar(std::sqrt(power), phase);
    const std::complex<double> h_hat = h + rng.complex_normal(noise_var);
    acc.add(std::norm(h), std::norm(h_hat));
  }
  return acc.result();
}

// The channel at lag 0 and its past samples at lags 1..taps are drawn jointly;
// the estimate is w^T y with w = R^{-1} u applied to the noisy past.
EmpiricalCorrelation simulate_prediction(unsigned taps, double doppler_hz, double interval_s, double noise_var,
                                         std::uint64_t samples, std::uint64_t seed, double omega) {
  const Eigen::MatrixXd factor = jakes_factor(taps + 1, doppler_hz, interval_s, omega);
  const FirSystem sys = fir_prediction_system(taps, doppler_hz, interval_s, noise_var, omega);
  Eigen::MatrixXd r = sys.r;
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) {
    r.diagonal().array() += 1e-12 * omega;
    llt.compute(r);
    if (llt.info() != Eigen::Success) throw NumericError("FIR autocorrelation matrix is not positive definite");
  }
  const Eigen::VectorXd w = llt.solve(sys.u);
  const unsigned lags = taps + 1;
  Eigen::VectorXcd white(lags);
  CorrelationBatches acc(samples);
  for (std::uint64_t k = 0; k < samples; ++k) {
    TrialRng rng(seed, k);
    for (unsigned i = 0; i < lags; ++i) white[i] = rng.complex_normal(1.0);
    const Eigen::VectorXcd h = factor.cast<std::complex<double>>() * white;
    std::complex<double> h_hat = 0.0;
    for (unsigned i = 0; i < taps; ++i) {
      std::complex<double> y = h[i + 1];
      if (noise_var > 0.0) y += rng.complex_normal(noise_var);
      h_hat += w[i] * y;
    }
    acc.add(std::norm(h[0]), std::norm(h_hat));
  }
  return acc.result();
}

}  // namespace

TrialRng::TrialRng(std::uint64_t seed, std::uint64_t counter)
    : state_(mix64(seed ^ mix64(counter * kGolden + 0x632BE59BD9B4E019ULL))) {}

std::uint64_t TrialRng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double TrialRng::uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

double TrialRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double t = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

double TrialRng::exponential() { return -std::log(uniform()); }

double TrialRng::gamma_int(unsigned shape) {
  double s = 0.0;
  for (unsigned k = 0; k < shape; ++k) s += exponential();
  return s;
}

std::complex<double> TrialRng::complex_normal(double variance) {
  const double sd = std::sqrt(0.5 * variance);
  const double re = normal();
  const double im = normal();
  return {sd * re, sd * im};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(seed + kGolden * (a + 1)) ^ (b * 0xD1B54A32D192ED03ULL));
}

CorrelatedPair sample_correlated_nakagami_pair(unsigned m, Correlation c, double snr, double snr_hat, TrialRng& rng,
                                               EstimateBranch branch) {
  const double a = std::sqrt(std::clamp(c.rho, 0.0, 1.0));
  const double b = std::sqrt(std::clamp(c.one_minus_rho, 0.0, 1.0));
  double actual = 0.0;
  double estimated = 0.0;
  for (unsigned k = 0; k < m; ++k) {
    const std::complex<double> g = rng.complex_normal(1.0);
    actual += std::norm(g);
    if (branch == EstimateBranch::GammaEstimate || k == 0) {
      const std::complex<double> w = rng.complex_normal(1.0);
      estimated += std::norm(a * g + b * w);
    }
  }
  CorrelatedPair out;
  out.actual = actual * snr / m;
  out.estimated = branch == EstimateBranch::GammaEstimate ? estimated * snr_hat / m : estimated * snr_hat;
  return out;
}

TrialOutcome simulate_trial(const SystemConfig& cfg, double snr, Correlation c, TrialRng& rng) {
  const unsigned m = cfg.channel.m;
  const EstimateBranch branch = branch_of(cfg.estimator);
  const double snr_hat = snr * cfg.estimated_snr_scale;
  TrialOutcome out;
  // Source-relay draws first so the R-D draws of relay k do not depend on
  // which of the other relays decoded.
  unsigned decoded_mask_bits = 0;
  std::vector<bool> decoded(cfg.relays);
  for (unsigned k = 0; k < cfg.relays; ++k) {
    decoded[k] = rng.gamma_int(m) * snr / m >= cfg.threshold;
    decoded_mask_bits += decoded[k];
  }
  if (decoded_mask_bits == 0) {
    out.outage = true;
    return out;
  }
  double best_est = -1.0;
  double best_actual = 0.0;
  for (unsigned k = 0; k < cfg.relays; ++k) {
    if (!decoded[k]) continue;
    const CorrelatedPair p = sample_correlated_nakagami_pair(m, c, snr, snr_hat, rng, branch);
    if (p.estimated > best_est) {
      best_est = p.estimated;
      best_actual = p.actual;
      out.selected = static_cast<int>(k);
    }
  }
  out.outage = best_actual < cfg.threshold;
  return out;
}

McEstimate simulate_outage(const SystemConfig& cfg, double snr_db, Correlation c, const McOptions& opt) {
  validate(cfg);
  if (opt.trials == 0) throw DomainError("trial count must be >= 1");
  const double snr = db_to_linear(snr_db);
  const std::uint64_t chunks = std::clamp<std::uint64_t>(opt.chunks, 1, opt.trials);
  const std::uint64_t per_chunk = (opt.trials + chunks - 1) / chunks;
  std::vector<std::uint64_t> counts(chunks, 0);

  auto run_chunk = [&](std::uint64_t ch) {
    const std::uint64_t lo = ch * per_chunk;
    const std::uint64_t hi = std::min(opt.trials, lo + per_chunk);
    std::uint64_t n = 0;
    for (std::uint64_t t = lo; t < hi; ++t) {
      TrialRng rng(opt.seed, t);
      n += simulate_trial(cfg, snr, c, rng).outage;
    }
    counts[ch] = n;
  };

  const unsigned workers = std::max(1u, opt.workers);
  if (workers == 1) {
    for (std::uint64_t ch = 0; ch < chunks; ++ch) run_chunk(ch);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t ch = w; ch < chunks; ch += workers) run_chunk(ch);
      });
    }
    for (auto& th : pool) th.join();
  }
  std::uint64_t outages = 0;
  for (auto n : counts) outages += n;
  return finish(outages, opt.trials, opt.seed);
}

McEstimate simulate_outage(const SystemConfig& cfg, double snr_db, const McOptions& opt) {
  validate(cfg);
  const CorrelationProfile profile(cfg.estimator, cfg.channel.m, cfg.channel.omega);
  return simulate_outage(cfg, snr_db, profile.at(db_to_linear(snr_db)), opt);
}

EmpiricalCorrelation simulate_estimation(const EstimatorSpec& spec, double snr, std::uint64_t samples,
                                         std::uint64_t seed, unsigned m, double omega) {
  validate(spec);
  if (!(snr > 0.0)) throw DomainError("average SNR must be positive");
  if (samples < 2) throw DomainError("need at least two samples");
  return std::visit(
      overloaded{
          [&](const NoisyStatic& s) { return simulate_noisy_static(s, snr, samples, seed, m, omega); },
          [&](const Outdated& s) {
            return simulate_prediction(1, s.doppler_hz, s.update_interval_s, 0.0, samples, seed, omega);
          },
          [&](const FirPrediction& s) {
            const double noise = s.noiseless ? 0.0 : pilot_noise_variance(snr, s.alpha, s.beta, omega);
            return simulate_prediction(s.taps, s.doppler_hz, s.update_interval_s, noise, samples, seed, omega);
          },
          [](const IirPrediction&) -> EmpiricalCorrelation {
            throw UnsupportedParameter("the infinite-history predictor cannot be simulated");
          },
          [](const FixedRho&) -> EmpiricalCorrelation {
            throw UnsupportedParameter("fixed_rho has no physical estimation procedure");
          },
      },
      spec);
}

EmpiricalCorrelation pair_power_correlation(unsigned m, Correlation c, std::uint64_t samples, std::uint64_t seed,
                                            EstimateBranch branch) {
  CorrelationBatches acc(samples);
  for (std::uint64_t k = 0; k < samples; ++k) {
    TrialRng rng(seed, k);
    const CorrelatedPair p = sample_correlated_nakagami_pair(m, c, 1.0, 1.0, rng, branch);
    acc.add(p.actual, p.estimated);
  }
  return acc.result();
}

double fit_diversity_slope(const std::vector<std::pair<double, double>>& points, double lo_db, double hi_db) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [db, p] : points) {
    if (db >= lo_db - 1e-9 && db <= hi_db + 1e-9 && p > 0.0) {
      xs.push_back(db / 10.0);
      ys.push_back(std::log10(p));
    }
  }
  if (xs.size() < 4) {
    throw DomainError("diversity fit needs at least 4 positive points in the window, got " +
                      std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return -sxy / sxx;
}

double fit_diversity_slope(const OutageCurve& curve, double lo_db, double hi_db) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : curve.points) pts.emplace_back(p.snr_db, p.p_out);
  return fit_diversity_slope(pts, lo_db, hi_db);
}

}  // namespace relaysel
