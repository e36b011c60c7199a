#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relaysel/types.hpp"

namespace relaysel::cli {

/// Malformed or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SnrRange {
  double lo = 0.0;
  double hi = 30.0;
  double step = 2.0;
};

/// Outer sweep. axis "snr" means the SNR grid is the only axis.
struct SweepAxis {
  std::string axis = "snr";
  std::vector<double> values;
};

struct DiversityGrid {
  std::vector<unsigned> m{1, 2, 3};
  std::vector<unsigned> relays{1, 2, 4};
  SnrRange a{0.0, 2.0, 0.25};  // reuses lo/hi/step for the a grid
};

struct Request {
  std::string command = "outage";
  SystemConfig system;
  SnrRange snr;
  SweepAxis sweep;
  std::vector<std::string> engines{"exact"};
  std::uint64_t mc_trials = 100000;
  std::uint64_t seed = 1;
  std::string output;
  std::string format = "csv";
  unsigned workers = 1;
  DiversityGrid diversity;
};

/// lo, lo+step, ... up to hi inclusive (within 1e-9 step).
std::vector<double> make_grid(const SnrRange& r);

/// Strict parse: unknown keys and wrong types raise ConfigError naming the field.
Request parse_request(const nlohmann::json& doc);
nlohmann::json to_json(const Request& req);

/// Built-in presets as config documents.
nlohmann::json preset_document(const std::string& name);
std::vector<std::string> preset_names();

/// Config with the sweep value applied.
SystemConfig apply_sweep(const SystemConfig& base, const std::string& axis, double value);

/// Entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace relaysel::cli
