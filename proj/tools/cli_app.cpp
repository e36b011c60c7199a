#include "cli_app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "relaysel/csi_models.hpp"
#include "relaysel/errors.hpp"
#include "relaysel/monte_carlo.hpp"
#include "relaysel/outage_analytic.hpp"

namespace relaysel::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
const std::set<std::string> kAxes{"snr", "rho", "N", "m", "T_d", "L", "alpha", "beta"};
const std::set<std::string> kEngines{"exact", "high_snr", "monte_carlo"};
const std::set<std::string> kCommands{"rho", "outage", "simulate", "diversity"};

// ---------------------------------------------------------------------------
// Strict JSON reading

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + "expected a number");
    return v.get<double>();
  }

  std::uint64_t integer(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    return as_integer(j_.at(key), key);
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<unsigned> integers(const std::string& key, std::vector<unsigned> def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + "expected an array of integers");
    std::vector<unsigned> out;
    for (const auto& e : v) out.push_back(static_cast<unsigned>(as_integer(e, key)));
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError(where(key) + "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  const json& child(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const {
    std::string p = path_;
    if (!key.empty()) p += (p.empty() ? "" : ".") + key;
    return "config field '" + (p.empty() ? std::string("<root>") : p) + "': ";
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + "unknown field");
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::uint64_t as_integer(const json& v, const std::string& key) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ConfigError(where(key) + "expected a non-negative integer");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && std::floor(d) == d && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(where(key) + "expected a non-negative integer");
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

SnrRange read_range(Reader& parent, const std::string& key, SnrRange def) {
  if (!parent.has(key)) return def;
  Reader r(parent.child(key), parent.path().empty() ? key : parent.path() + "." + key);
  SnrRange out{r.number("lo", def.lo), r.number("hi", def.hi), r.number("step", def.step)};
  r.finish();
  if (!(out.step > 0.0)) throw ConfigError(r.where("step") + "must be positive");
  if (!(out.lo <= out.hi)) throw ConfigError(r.where("lo") + "must not exceed hi");
  return out;
}

EstimatorSpec read_estimator(const json& j) {
  Reader r(j, "estimator");
  const std::string type = r.string("type", "");
  EstimatorSpec spec;
  if (type == "noisy_static") {
    NoisyStatic s;
    s.alpha = r.number("alpha", s.alpha);
    s.beta = r.number("beta", s.beta);
    s.pilots = static_cast<unsigned>(r.integer("pilots", s.pilots));
    spec = s;
  } else if (type == "outdated") {
    Outdated s;
    s.doppler_hz = r.number("doppler_hz", s.doppler_hz);
    s.update_interval_s = r.number("update_interval_s", s.update_interval_s);
    spec = s;
  } else if (type == "fir") {
    FirPrediction s;
    s.taps = static_cast<unsigned>(r.integer("taps", s.taps));
    s.doppler_hz = r.number("doppler_hz", s.doppler_hz);
    s.update_interval_s = r.number("update_interval_s", s.update_interval_s);
    s.alpha = r.number("alpha", s.alpha);
    s.beta = r.number("beta", s.beta);
    s.noiseless = r.boolean("noiseless", s.noiseless);
    spec = s;
  } else if (type == "iir") {
    IirPrediction s;
    s.doppler_hz = r.number("doppler_hz", s.doppler_hz);
    s.update_interval_s = r.number("update_interval_s", s.update_interval_s);
    s.alpha = r.number("alpha", s.alpha);
    s.beta = r.number("beta", s.beta);
    spec = s;
  } else if (type == "fixed_rho") {
    FixedRho s;
    s.rho = r.number("rho", s.rho);
    const std::string branch = r.string("branch", "gamma");
    if (branch == "gamma") {
      s.branch = EstimateBranch::GammaEstimate;
    } else if (branch == "gaussian") {
      s.branch = EstimateBranch::GaussianEstimate;
    } else {
      throw ConfigError(r.where("branch") + "expected \"gamma\" or \"gaussian\"");
    }
    spec = s;
  } else {
    throw ConfigError(r.where("type") + "expected one of noisy_static, outdated, fir, iir, fixed_rho");
  }
  r.finish();
  return spec;
}

json estimator_json(const EstimatorSpec& spec) {
  json j;
  j["type"] = estimator_name(spec);
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, NoisyStatic>) {
          j["alpha"] = s.alpha;
          j["beta"] = s.beta;
          j["pilots"] = s.pilots;
        } else if constexpr (std::is_same_v<S, Outdated>) {
          j["doppler_hz"] = s.doppler_hz;
          j["update_interval_s"] = s.update_interval_s;
        } else if constexpr (std::is_same_v<S, FirPrediction>) {
          j["taps"] = s.taps;
          j["doppler_hz"] = s.doppler_hz;
          j["update_interval_s"] = s.update_interval_s;
          j["alpha"] = s.alpha;
          j["beta"] = s.beta;
          j["noiseless"] = s.noiseless;
        } else if constexpr (std::is_same_v<S, IirPrediction>) {
          j["doppler_hz"] = s.doppler_hz;
          j["update_interval_s"] = s.update_interval_s;
          j["alpha"] = s.alpha;
          j["beta"] = s.beta;
        } else {
          j["rho"] = s.rho;
          j["branch"] = s.branch == EstimateBranch::GammaEstimate ? "gamma" : "gaussian";
        }
      },
      spec);
  return j;
}

json range_json(const SnrRange& r) { return json{{"lo", r.lo}, {"hi", r.hi}, {"step", r.step}}; }

// ---------------------------------------------------------------------------
// Formatting and output

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fmt_db(double v) { return fmt("%.2f", v); }
std::string fmt_p(double v) { return fmt("%.5e", v); }
std::string fmt_sweep(double v) { return fmt("%.6g", v); }

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file " + path);
  os << text;
}

std::string render(const Table& t, const std::string& format) {
  std::ostringstream os;
  if (format == "csv") {
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
      os << '\n';
    }
    return os.str();
  }
  // JSON rows keep the CSV text of each cell so both formats carry the same digits.
  json rows = json::array();
  for (const auto& row : t.rows) {
    json obj = json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c].empty()) {
        obj[t.columns[c]] = nullptr;
      } else if (row[c] == "true" || row[c] == "false") {
        obj[t.columns[c]] = row[c] == "true";
      } else if (t.columns[c] == "engine") {
        obj[t.columns[c]] = row[c];
      } else {
        obj[t.columns[c]] = json::parse(row[c]);
      }
    }
    rows.push_back(obj);
  }
  return json{{"columns", t.columns}, {"rows", rows}}.dump(2) + "\n";
}

void emit(const Table& t, const Request& req, const std::string& suffix) {
  const std::string text = render(t, req.format);
  if (req.output.empty()) {
    std::cout << text;
  } else {
    write_text(req.output + "." + suffix + "." + req.format, text);
  }
}

void write_manifest(const Request& req) {
  if (req.output.empty()) return;
  write_text(req.output + ".manifest.json", to_json(req).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Parallel helper: results land in index order regardless of worker count.

template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) body(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Commands

std::vector<double> sweep_values(const Request& req) {
  if (req.sweep.axis == "snr") return {std::nan("")};
  return req.sweep.values;
}

int cmd_rho(const Request& req) {
  const auto grid = make_grid(req.snr);
  const CorrelationProfile profile(req.system.estimator, req.system.channel.m, req.system.channel.omega);
  const Asymptote asym = profile.asymptote();
  Table t{{"snr_db", "rho", "a", "b"}, {}};
  for (double db : grid) {
    const Correlation c = profile.at(db_to_linear(db));
    t.rows.push_back({fmt_db(db), fmt("%.9e", c.rho), fmt("%.9e", asym.a), fmt("%.9e", asym.b)});
  }
  emit(t, req, "rho");
  write_manifest(req);
  return 0;
}

int cmd_diversity(const Request& req) {
  Table t{{"m", "N", "a", "diversity"}, {}};
  const auto grid = make_grid(req.diversity.a);
  for (unsigned m : req.diversity.m) {
    for (unsigned n : req.diversity.relays) {
      for (double a : grid) {
        t.rows.push_back({std::to_string(m), std::to_string(n), fmt("%.4f", a), fmt("%.6g", diversity_order(m, n, a))});
      }
    }
  }
  emit(t, req, "diversity");
  write_manifest(req);
  return 0;
}

struct Cell {
  double p = 0.0;
  std::optional<double> std_err;
  std::optional<unsigned> terms;
  std::uint64_t trials = 0;
};

int cmd_outage(const Request& req) {
  if (req.output.empty()) throw ConfigError("outage output requires --out or the 'output' field");
  const auto grid = make_grid(req.snr);
  const auto values = sweep_values(req);
  const bool has_sweep = req.sweep.axis != "snr";
  const std::size_t n_pts = grid.size();

  std::vector<SystemConfig> cfgs;
  for (double v : values) cfgs.push_back(has_sweep ? apply_sweep(req.system, req.sweep.axis, v) : req.system);

  std::map<std::string, std::vector<Cell>> results;
  for (const auto& engine : req.engines) results[engine].resize(values.size() * n_pts);

  // rho per point is shared by the exact and Monte-Carlo engines.
  std::vector<Correlation> rho(values.size() * n_pts);
  for (std::size_t s = 0; s < values.size(); ++s) {
    const CorrelationProfile profile(cfgs[s].estimator, cfgs[s].channel.m, cfgs[s].channel.omega);
    for (std::size_t k = 0; k < n_pts; ++k) rho[s * n_pts + k] = profile.at(db_to_linear(grid[k]));
  }

  if (results.count("exact")) {
    auto& out = results["exact"];
    parallel_for(out.size(), req.workers, [&](std::size_t idx) {
      const std::size_t s = idx / n_pts;
      const double db = grid[idx % n_pts];
      try {
        const OutagePoint pt = outage_at(cfgs[s], db, rho[idx]);
        out[idx].p = pt.p_out;
        out[idx].terms = pt.truncation.terms_used;
      } catch (const NumericError& e) {
        throw NumericError("at SNR " + fmt_db(db) + " dB: " + e.what());
      }
    });
  }
  if (results.count("high_snr")) {
    auto& out = results["high_snr"];
    for (std::size_t s = 0; s < values.size(); ++s) {
      SystemConfig c = cfgs[s];
      c.channel.snr_db = grid;
      const CorrelationProfile profile(c.estimator, c.channel.m, c.channel.omega);
      const OutageCurve curve = outage_high_snr(c, profile.asymptote());
      for (std::size_t k = 0; k < n_pts; ++k) out[s * n_pts + k].p = std::clamp(curve.points[k].p_out, 0.0, 1.0);
    }
  }
  if (results.count("monte_carlo")) {
    auto& out = results["monte_carlo"];
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
      McOptions opt;
      opt.trials = req.mc_trials;
      opt.seed = derive_seed(req.seed, idx / n_pts, idx % n_pts);
      opt.workers = req.workers;
      const McEstimate e = simulate_outage(cfgs[idx / n_pts], grid[idx % n_pts], rho[idx], opt);
      out[idx].p = e.p_hat;
      out[idx].std_err = e.std_err;
      out[idx].trials = e.trials;
    }
  }

  auto sweep_cell = [&](std::size_t idx) { return has_sweep ? fmt_sweep(values[idx / n_pts]) : std::string(); };
  for (const auto& engine : req.engines) {
    Table t{{"sweep", "snr_db", "p_out", "std_err", "terms_used", "engine"}, {}};
    const auto& cells = results[engine];
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
      const Cell& c = cells[idx];
      t.rows.push_back({sweep_cell(idx), fmt_db(grid[idx % n_pts]), fmt_p(c.p),
                        c.std_err ? fmt_p(*c.std_err) : std::string(),
                        c.terms ? std::to_string(*c.terms) : std::string(), engine});
    }
    emit(t, req, engine);
  }
  if (results.count("exact") && results.count("monte_carlo")) {
    Table t{{"sweep", "snr_db", "exact", "monte_carlo", "std_err", "agree"}, {}};
    const auto& ex = results["exact"];
    const auto& mc = results["monte_carlo"];
    for (std::size_t idx = 0; idx < ex.size(); ++idx) {
      // With zero observed outages the empirical error is degenerate; use the
      // binomial error at the exact value instead.
      const double se_exact = std::sqrt(ex[idx].p * (1.0 - ex[idx].p) / static_cast<double>(mc[idx].trials));
      const double se = std::max(*mc[idx].std_err, se_exact);
      const bool agree = std::fabs(ex[idx].p - mc[idx].p) <= 4.0 * se;
      t.rows.push_back({sweep_cell(idx), fmt_db(grid[idx % n_pts]), fmt_p(ex[idx].p), fmt_p(mc[idx].p),
                        fmt_p(*mc[idx].std_err), agree ? "true" : "false"});
    }
    emit(t, req, "agreement");
  }
  write_manifest(req);
  return 0;
}

int dispatch(const Request& req) {
  if (req.command == "rho") return cmd_rho(req);
  if (req.command == "diversity") return cmd_diversity(req);
  return cmd_outage(req);
}

// ---------------------------------------------------------------------------

json preset_base(unsigned relays, double threshold, unsigned m, json estimator, SnrRange snr, std::string axis,
                 std::vector<double> values) {
  json j;
  j["command"] = "outage";
  j["relays"] = relays;
  j["threshold"] = threshold;
  j["m"] = m;
  j["estimator"] = std::move(estimator);
  j["snr_db"] = range_json(snr);
  j["sweep"] = json{{"axis", std::move(axis)}, {"values", std::move(values)}};
  j["engines"] = json::array({"exact", "monte_carlo"});
  j["mc_trials"] = 1000000;
  j["seed"] = 20100501;
  return j;
}

}  // namespace

std::vector<double> make_grid(const SnrRange& r) {
  if (!(r.step > 0.0)) throw ConfigError("grid step must be positive");
  if (!(r.lo <= r.hi)) throw ConfigError("grid lower bound exceeds upper bound");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((r.hi - r.lo) / r.step + 1e-9));
  if (n > 100000) throw ConfigError("grid has more than 100000 points");
  for (std::size_t k = 0; k <= n; ++k) out.push_back(r.lo + k * r.step);
  return out;
}

SystemConfig apply_sweep(const SystemConfig& base, const std::string& axis, double value) {
  SystemConfig c = base;
  auto as_count = [&](const char* what) {
    if (!(value >= 1.0) || std::floor(value) != value) {
      throw ConfigError("sweep value " + fmt_sweep(value) + " for axis '" + axis + "' must be a positive integer (" +
                        what + ")");
    }
    return static_cast<unsigned>(value);
  };
  auto mismatch = [&]() {
    return ConfigError("sweep axis '" + axis + "' does not apply to estimator '" + estimator_name(c.estimator) + "'");
  };
  if (axis == "snr") return c;
  if (axis == "N") {
    c.relays = as_count("relay count");
  } else if (axis == "m") {
    c.channel.m = as_count("Nakagami m");
  } else if (axis == "rho") {
    auto* f = std::get_if<FixedRho>(&c.estimator);
    if (!f) throw mismatch();
    f->rho = value;
  } else if (axis == "T_d") {
    if (auto* s = std::get_if<Outdated>(&c.estimator)) {
      s->update_interval_s = value;
    } else if (auto* s = std::get_if<FirPrediction>(&c.estimator)) {
      s->update_interval_s = value;
    } else if (auto* s = std::get_if<IirPrediction>(&c.estimator)) {
      s->update_interval_s = value;
    } else {
      throw mismatch();
    }
  } else if (axis == "L") {
    if (auto* s = std::get_if<NoisyStatic>(&c.estimator)) {
      s->pilots = as_count("pilot count");
    } else if (auto* s = std::get_if<FirPrediction>(&c.estimator)) {
      s->taps = as_count("tap count");
    } else {
      throw mismatch();
    }
  } else if (axis == "alpha" || axis == "beta") {
    const bool is_alpha = axis == "alpha";
    auto set = [&](auto& s) { (is_alpha ? s.alpha : s.beta) = value; };
    if (auto* s = std::get_if<NoisyStatic>(&c.estimator)) {
      set(*s);
    } else if (auto* s = std::get_if<FirPrediction>(&c.estimator)) {
      set(*s);
    } else if (auto* s = std::get_if<IirPrediction>(&c.estimator)) {
      set(*s);
    } else {
      throw mismatch();
    }
  } else {
    throw ConfigError("unknown sweep axis '" + axis + "'");
  }
  return c;
}

Request parse_request(const json& doc) {
  Reader r(doc, "");
  Request req;
  req.command = r.string("command", req.command);
  if (!kCommands.count(req.command)) throw ConfigError(r.where("command") + "unknown command '" + req.command + "'");
  r.string("version", kVersion);

  req.system.relays = static_cast<unsigned>(r.integer("relays", 3));
  const bool has_t = r.has("threshold");
  const bool has_rate = r.has("rate");
  if (has_t && has_rate) throw ConfigError(r.where("rate") + "give either threshold or rate, not both");
  req.system.threshold = has_rate ? threshold_from_rate(r.number("rate", 0.5)) : r.number("threshold", 1.0);
  if (r.has("m")) {
    const auto& mv = r.child("m");
    if (!mv.is_number() || mv.get<double>() < 1.0 || std::floor(mv.get<double>()) != mv.get<double>()) {
      throw ConfigError(r.where("m") + "only positive integer m is supported");
    }
    req.system.channel.m = static_cast<unsigned>(mv.get<double>());
  }
  req.system.channel.omega = r.number("omega", 1.0);
  req.system.estimated_snr_scale = r.number("estimated_snr_scale", 1.0);
  if (r.has("estimator")) req.system.estimator = read_estimator(r.child("estimator"));

  req.snr = read_range(r, "snr_db", req.snr);
  req.system.channel.snr_db = make_grid(req.snr);

  if (r.has("sweep")) {
    Reader s(r.child("sweep"), "sweep");
    req.sweep.axis = s.string("axis", "snr");
    req.sweep.values = s.numbers("values", {});
    s.finish();
    if (!kAxes.count(req.sweep.axis)) throw ConfigError(s.where("axis") + "unknown axis '" + req.sweep.axis + "'");
    if (req.sweep.axis != "snr" && req.sweep.values.empty()) throw ConfigError(s.where("values") + "must not be empty");
    if (req.sweep.axis == "snr" && !req.sweep.values.empty()) {
      throw ConfigError(s.where("values") + "must be empty for the snr axis (use snr_db)");
    }
  }

  req.engines = r.strings("engines", req.engines);
  if (req.engines.empty()) throw ConfigError(r.where("engines") + "must not be empty");
  std::set<std::string> seen;
  for (const auto& e : req.engines) {
    if (!kEngines.count(e)) throw ConfigError(r.where("engines") + "unknown engine '" + e + "'");
    if (!seen.insert(e).second) throw ConfigError(r.where("engines") + "duplicate engine '" + e + "'");
  }
  if (req.command == "simulate") req.engines = {"monte_carlo"};

  req.mc_trials = r.integer("mc_trials", req.mc_trials);
  if (req.mc_trials == 0) throw ConfigError(r.where("mc_trials") + "must be >= 1");
  req.seed = r.integer("seed", req.seed);
  req.output = r.string("output", req.output);
  req.format = r.string("format", req.format);
  if (req.format != "csv" && req.format != "json") throw ConfigError(r.where("format") + "expected csv or json");
  req.workers = static_cast<unsigned>(r.integer("workers", req.workers));
  if (req.workers == 0 || req.workers > 1024) throw ConfigError(r.where("workers") + "must be in 1..1024");

  if (r.has("diversity")) {
    Reader d(r.child("diversity"), "diversity");
    req.diversity.m = d.integers("m", req.diversity.m);
    req.diversity.relays = d.integers("relays", req.diversity.relays);
    req.diversity.a = read_range(d, "a", req.diversity.a);
    d.finish();
  }
  r.finish();

  // Surface domain errors of every swept configuration at parse time.
  try {
    for (double v : sweep_values(req)) {
      const SystemConfig c = req.sweep.axis == "snr" ? req.system : apply_sweep(req.system, req.sweep.axis, v);
      validate(c);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return req;
}

json to_json(const Request& req) {
  json j;
  j["version"] = kVersion;
  j["command"] = req.command;
  j["relays"] = req.system.relays;
  j["threshold"] = req.system.threshold;
  j["m"] = req.system.channel.m;
  j["omega"] = req.system.channel.omega;
  j["estimated_snr_scale"] = req.system.estimated_snr_scale;
  j["estimator"] = estimator_json(req.system.estimator);
  j["snr_db"] = range_json(req.snr);
  j["sweep"] = json{{"axis", req.sweep.axis}, {"values", req.sweep.values}};
  j["engines"] = req.engines;
  j["mc_trials"] = req.mc_trials;
  j["seed"] = req.seed;
  j["output"] = req.output;
  j["format"] = req.format;
  j["workers"] = req.workers;
  j["diversity"] =
      json{{"m", req.diversity.m}, {"relays", req.diversity.relays}, {"a", range_json(req.diversity.a)}};
  return j;
}

std::vector<std::string> preset_names() {
  return {"fig-static-alpha", "fig-static-beta", "fig-outdated", "fig-nakagami", "fig-fir", "fig-iir", "fig-divorder"};
}

json preset_document(const std::string& name) {
  const SnrRange snr{0.0, 40.0, 2.0};
  if (name == "fig-static-alpha") {
    return preset_base(3, 1.0, 1, {{"type", "noisy_static"}, {"alpha", 0.0}, {"beta", 1.0}, {"pilots", 1}}, snr,
                       "alpha", {-0.5, -0.25, 0.0, 0.5});
  }
  if (name == "fig-static-beta") {
    return preset_base(3, 1.0, 1, {{"type", "noisy_static"}, {"alpha", 0.0}, {"beta", 1.0}, {"pilots", 1}}, snr,
                       "beta", {0.1, 1.0, 10.0});
  }
  if (name == "fig-outdated") {
    return preset_base(5, 1.0, 1, {{"type", "outdated"}, {"doppler_hz", 100.0}, {"update_interval_s", 1e-3}}, snr,
                       "T_d", {1e-3, 1.5e-3, 2e-3, 2.5e-3, 3e-3});
  }
  if (name == "fig-nakagami") {
    return preset_base(5, 3.0, 1, {{"type", "fixed_rho"}, {"rho", 0.5}, {"branch", "gamma"}}, snr, "m",
                       {1, 2, 3, 4});
  }
  if (name == "fig-fir") {
    return preset_base(5, 1.0, 1,
                       {{"type", "fir"},
                        {"taps", 1},
                        {"doppler_hz", 100.0},
                        {"update_interval_s", 3e-3},
                        {"alpha", 0.0},
                        {"beta", 1.0},
                        {"noiseless", false}},
                       snr, "L", {1, 2, 4, 8});
  }
  if (name == "fig-iir") {
    return preset_base(5, 1.0, 1,
                       {{"type", "iir"}, {"doppler_hz", 100.0}, {"update_interval_s", 1e-3}, {"alpha", 0.0},
                        {"beta", 1.0}},
                       snr, "T_d", {0.5e-3, 1e-3, 2e-3, 3e-3});
  }
  if (name == "fig-divorder") {
    json j;
    j["command"] = "diversity";
    j["diversity"] = json{{"m", {1, 2, 3}}, {"relays", {1, 2, 4, 8}}, {"a", range_json({0.0, 2.0, 0.1})}};
    return j;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"Outage probability and diversity of relay selection with imperfect CSI"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, snr, out, format, engines;
    std::optional<std::uint64_t> trials, seed;
    std::optional<unsigned> workers, relays, m;
    std::optional<double> threshold;
    std::vector<unsigned> div_m, div_relays;
    std::string div_a;
    std::string preset;
  } flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config or run manifest");
    sub->add_option("--snr", flags.snr, "SNR grid lo:hi:step in dB");
    sub->add_option("--out", flags.out, "output path prefix");
    sub->add_option("--format", flags.format, "csv or json");
    sub->add_option("--workers", flags.workers, "parallel workers");
    sub->add_option("--relays", flags.relays, "relay count N");
    sub->add_option("--m", flags.m, "Nakagami shape m");
    sub->add_option("--threshold", flags.threshold, "outage threshold T (linear)");
  };
  auto add_engine_opts = [&](CLI::App* sub) {
    sub->add_option("--trials", flags.trials, "Monte-Carlo trials per point");
    sub->add_option("--seed", flags.seed, "Monte-Carlo seed");
    sub->add_option("--engines", flags.engines, "comma list of exact,high_snr,monte_carlo");
  };

  auto* rho = app.add_subcommand("rho", "correlation coefficient and (a, b) per SNR");
  add_common(rho);
  auto* outage = app.add_subcommand("outage", "outage curves");
  add_common(outage);
  add_engine_opts(outage);
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo outage only");
  add_common(simulate);
  add_engine_opts(simulate);
  auto* diversity = app.add_subcommand("diversity", "diversity order table");
  add_common(diversity);
  diversity->add_option("--m-list", flags.div_m, "m values");
  diversity->add_option("--relays-list", flags.div_relays, "N values");
  diversity->add_option("--a", flags.div_a, "a grid lo:hi:step");
  auto* preset = app.add_subcommand("preset", "run a named preset");
  preset->add_option("name", flags.preset, "preset name")->required()->check(CLI::IsMember(preset_names()));
  add_common(preset);
  add_engine_opts(preset);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json doc = json::object();
    std::string command;
    if (preset->parsed()) {
      doc = preset_document(flags.preset);
      command = doc.value("command", "outage");
    } else {
      for (auto* sub : {rho, outage, simulate, diversity}) {
        if (sub->parsed()) command = sub->get_name();
      }
    }
    if (!flags.config.empty()) {
      std::ifstream is(flags.config);
      if (!is) throw ConfigError("cannot read config file " + flags.config);
      try {
        json file = json::parse(is);
        if (!file.is_object()) throw ConfigError("config file must contain a JSON object");
        doc.merge_patch(file);
      } catch (const json::parse_error& e) {
        throw ConfigError(flags.config + ": " + e.what());
      }
    }
    doc["command"] = command;
    doc.erase("version");
    auto parse_range = [](const std::string& s, const char* what) {
      double lo = 0, hi = 0, step = 0;
      char c1 = 0, c2 = 0;
      std::istringstream is(s);
      if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(is >> std::ws).eof()) {
        throw ConfigError(std::string("--") + what + " expects lo:hi:step, got '" + s + "'");
      }
      return json{{"lo", lo}, {"hi", hi}, {"step", step}};
    };
    if (!flags.snr.empty()) doc["snr_db"] = parse_range(flags.snr, "snr");
    if (!flags.out.empty()) doc["output"] = flags.out;
    if (!flags.format.empty()) doc["format"] = flags.format;
    if (flags.workers) doc["workers"] = *flags.workers;
    if (flags.relays) doc["relays"] = *flags.relays;
    if (flags.m) doc["m"] = *flags.m;
    if (flags.threshold) {
      doc.erase("rate");
      doc["threshold"] = *flags.threshold;
    }
    if (flags.trials) doc["mc_trials"] = *flags.trials;
    if (flags.seed) doc["seed"] = *flags.seed;
    if (!flags.engines.empty()) {
      json list = json::array();
      std::stringstream ss(flags.engines);
      std::string item;
      while (std::getline(ss, item, ',')) list.push_back(item);
      doc["engines"] = list;
    }
    if (!flags.div_m.empty()) doc["diversity"]["m"] = flags.div_m;
    if (!flags.div_relays.empty()) doc["diversity"]["relays"] = flags.div_relays;
    if (!flags.div_a.empty()) doc["diversity"]["a"] = parse_range(flags.div_a, "a");

    const Request req = parse_request(doc);
    return dispatch(req);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedParameter& e) {
    std::cerr << "unsupported parameter: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace relaysel::cli
