#include "rbda/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rbda/error.hpp"
#include "rbda/metrics.hpp"

namespace rbda {

std::string_view to_string(Profile p) { return p == Profile::desk ? "desk" : "paper"; }

Profile parse_profile(std::string_view text) {
  if (text == "desk") return Profile::desk;
  if (text == "paper") return Profile::paper;
  throw ConfigError("unknown profile '" + std::string(text) + "' (expected desk or paper)");
}

ExperimentConfig ExperimentConfig::desk() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::paper(Algorithm algorithm) {
  ExperimentConfig c;
  c.ra = 2.0e8;
  c.pr = 0.7;
  c.nx = 1200;
  c.ny = 400;
  c.lx = 3.0;
  c.dt = 5.0e-4;
  c.spinup = 0.0;
  c.algorithm = algorithm;
  c.mu_u = c.mu_theta = c.mu_for(algorithm);
  c.horizon = algorithm == Algorithm::dda ? 49.9 : 15.0;
  c.r = 5;
  c.s = 10;
  c.sigma_theta = 0.1;
  c.sigma_u = 0.05;
  c.members = 50;
  c.metric_stride = 200;
  c.field_stride = 2000;
  c.log_stride = 2000;
  c.sweep_r = {5, 10, 15, 20, 25};
  c.sweep_s = {1, 5, 10, 20, 50};
  return c;
}

ExperimentConfig ExperimentConfig::for_profile(Profile p) {
  return p == Profile::desk ? desk() : paper();
}

namespace {

std::int64_t whole_steps(double span, double dt, std::string_view what) {
  const double n = span / dt;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
    throw ConfigError(std::string(what) + "/dt must be an integer (got " + format_real(n) + ")");
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

std::int64_t ExperimentConfig::steps() const { return whole_steps(horizon, dt, "time.horizon"); }

std::int64_t ExperimentConfig::spinup_steps() const {
  return whole_steps(spinup, dt, "time.spinup");
}

void ExperimentConfig::validate() const {
  physics().validate();
  (void)grid();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time.dt must be positive");
  if (!(horizon > 0.0)) throw ConfigError("time.horizon must be positive");
  if (!(spinup >= 0.0)) throw ConfigError("time.spinup must be non-negative");
  (void)steps();
  (void)spinup_steps();
  if (!(cfl_limit > 0.0)) throw ConfigError("time.cfl_limit must be positive");
  if (snapshot_stride < 0) throw ConfigError("output.snapshot_stride must be >= 0");
  if (metric_stride < 1 || field_stride < 1 || log_stride < 1) {
    throw ConfigError("output strides must be >= 1");
  }
  if (field_stride % metric_stride != 0) {
    throw ConfigError("output.field_stride must be a multiple of output.metric_stride");
  }
  if (steps() % metric_stride != 0) {
    throw ConfigError("horizon must be a whole number of metric strides");
  }
  nudging().validate();
  noise().validate();
  ObservationGrid(grid(), r);
  if (members < 1) throw ConfigError("obs.members must be >= 1");
  if (bootstrap_resamples < 1) throw ConfigError("stats.bootstrap_resamples must be >= 1");
  for (double x : sweep_sigma) {
    if (!(x >= 0.0)) throw ConfigError("sweep.sigma values must be non-negative");
  }
  for (int x : sweep_r) {
    if (x < 1) throw ConfigError("sweep.r values must be >= 1");
  }
  for (int x : sweep_s) {
    if (x < 1) throw ConfigError("sweep.s values must be >= 1");
  }
  if (!(plateau_fraction >= 0.0 && plateau_fraction < 1.0)) {
    throw ConfigError("stats.plateau_fraction must lie in [0, 1)");
  }
  if (!(mu_cda >= 0.0) || !(mu_dda >= 0.0)) throw ConfigError("sweep.mu_* must be >= 0");
  if (relevance_r < 1 || relevance_s < 1) throw ConfigError("sweep.relevance_r/s must be >= 1");
  for (double x : relevance_sigma) {
    if (!(x >= 0.0)) throw ConfigError("sweep.relevance_sigma values must be non-negative");
  }
  for (double x : sweep_mu) {
    if (!(x >= 0.0)) throw ConfigError("sweep.mu values must be non-negative");
  }
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view key, std::string_view v) {
  std::string buf(v);
  char* end = nullptr;
  const double x = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(x)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + buf + "'");
  }
  return x;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int x{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
  return x;
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

struct Key {
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class M>
Key real_key(M member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            c.*member = parse_double(k, v);
          },
          [member](const ExperimentConfig& c) { return format_real(c.*member); }};
}

template <class M>
Key int_key(M member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            c.*member = parse_int<std::remove_reference_t<decltype(c.*member)>>(k, v);
          },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

// Order defines the canonical serialization.
const std::vector<std::pair<std::string, Key>>& keys() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Key>> table = {
      {"physics.ra", real_key(&C::ra)},
      {"physics.pr", real_key(&C::pr)},
      {"grid.nx", int_key(&C::nx)},
      {"grid.ny", int_key(&C::ny)},
      {"grid.lx", real_key(&C::lx)},
      {"time.dt", real_key(&C::dt)},
      {"time.horizon", real_key(&C::horizon)},
      {"time.spinup", real_key(&C::spinup)},
      {"time.cfl_limit", real_key(&C::cfl_limit)},
      {"output.snapshot_stride", int_key(&C::snapshot_stride)},
      {"output.metric_stride", int_key(&C::metric_stride)},
      {"output.field_stride", int_key(&C::field_stride)},
      {"output.log_stride", int_key(&C::log_stride)},
      {"output.dir",
       {[](C& c, std::string_view, std::string_view v) { c.out_dir = std::string(v); },
        [](const C& c) { return c.out_dir; }}},
      {"nudging.algorithm",
       {[](C& c, std::string_view, std::string_view v) { c.algorithm = parse_algorithm(v); },
        [](const C& c) { return std::string(to_string(c.algorithm)); }}},
      {"nudging.mu_u", real_key(&C::mu_u)},
      {"nudging.mu_theta", real_key(&C::mu_theta)},
      {"obs.r", int_key(&C::r)},
      {"obs.s", int_key(&C::s)},
      {"obs.sigma_theta", real_key(&C::sigma_theta)},
      {"obs.sigma_u", real_key(&C::sigma_u)},
      {"obs.members", int_key(&C::members)},
      {"seeds.reference", int_key(&C::seed_reference)},
      {"seeds.noise", int_key(&C::seed_noise)},
      {"seeds.initial", int_key(&C::seed_initial)},
      {"stats.ks_method",
       {[](C& c, std::string_view, std::string_view v) { c.ks_method = parse_ks_method(v); },
        [](const C& c) { return std::string(to_string(c.ks_method)); }}},
      {"stats.bootstrap_resamples", int_key(&C::bootstrap_resamples)},
      {"stats.plateau_fraction", real_key(&C::plateau_fraction)},
      {"preset.name",
       {[](C& c, std::string_view, std::string_view v) { c.preset = std::string(v); },
        [](const C& c) { return c.preset; }}},
      {"sweep.sigma",
       {[](C& c, std::string_view k, std::string_view v) {
          c.sweep_sigma.clear();
          for (auto item : split_list(v)) c.sweep_sigma.push_back(parse_double(k, item));
        },
        [](const C& c) { return join(c.sweep_sigma, format_real); }}},
      {"sweep.r",
       {[](C& c, std::string_view k, std::string_view v) {
          c.sweep_r.clear();
          for (auto item : split_list(v)) c.sweep_r.push_back(parse_int<int>(k, item));
        },
        [](const C& c) { return join(c.sweep_r, [](int x) { return std::to_string(x); }); }}},
      {"sweep.s",
       {[](C& c, std::string_view k, std::string_view v) {
          c.sweep_s.clear();
          for (auto item : split_list(v)) c.sweep_s.push_back(parse_int<int>(k, item));
        },
        [](const C& c) { return join(c.sweep_s, [](int x) { return std::to_string(x); }); }}},
      {"sweep.mu",
       {[](C& c, std::string_view k, std::string_view v) {
          c.sweep_mu.clear();
          for (auto item : split_list(v)) c.sweep_mu.push_back(parse_double(k, item));
        },
        [](const C& c) { return join(c.sweep_mu, format_real); }}},
      {"sweep.algorithms",
       {[](C& c, std::string_view, std::string_view v) {
          c.sweep_algorithms.clear();
          for (auto item : split_list(v)) c.sweep_algorithms.push_back(parse_algorithm(item));
        },
        [](const C& c) {
          return join(c.sweep_algorithms,
                      [](Algorithm a) { return std::string(to_string(a)); });
        }}},
      {"sweep.mu_cda", real_key(&C::mu_cda)},
      {"sweep.mu_dda", real_key(&C::mu_dda)},
      {"sweep.relevance_sigma",
       {[](C& c, std::string_view k, std::string_view v) {
          c.relevance_sigma.clear();
          for (auto item : split_list(v)) c.relevance_sigma.push_back(parse_double(k, item));
        },
        [](const C& c) { return join(c.relevance_sigma, format_real); }}},
      {"sweep.relevance_r", int_key(&C::relevance_r)},
      {"sweep.relevance_s", int_key(&C::relevance_s)},
  };
  return table;
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  for (const auto& [name, k] : keys()) {
    if (name == key) {
      k.set(*this, key, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  for (const auto& [name, k] : keys()) out += name + "=" + k.get(*this) + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(serialize()); }

ExperimentConfig parse_config(std::string_view text, const std::string& source,
                              ExperimentConfig base) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    try {
      base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw MissingInput("config file not found: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string(), std::move(base));
}

}  // namespace rbda
