#include "relaysel/types.hpp"

#include <cmath>
#include <string>

#include "relaysel/csi_models.hpp"
#include "relaysel/errors.hpp"

namespace relaysel {

void validate(const SystemConfig& cfg) {
  if (cfg.relays == 0) throw DomainError("relay count N must be >= 1");
  if (!(cfg.threshold > 0.0) || !std::isfinite(cfg.threshold)) throw DomainError("threshold T must be positive");
  if (cfg.channel.m == 0) throw DomainError("Nakagami m must be >= 1");
  if (!(cfg.channel.omega > 0.0)) throw DomainError("Omega_h must be positive");
  if (!(cfg.estimated_snr_scale > 0.0)) throw DomainError("estimated SNR scale must be positive");
  for (double d : cfg.channel.snr_db) {
    if (!std::isfinite(d)) throw DomainError("SNR grid contains a non-finite value");
  }
  validate(cfg.estimator);
}

}  // namespace relaysel
