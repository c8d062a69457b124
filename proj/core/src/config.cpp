#include "wglab/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "wglab/errors.hpp"

namespace wglab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw ConfigurationError(fmt::format("config key '{}': {} (got '{}')", key, why, value));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const std::string t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) bad(key, v, "expected a number");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const std::string t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) bad(key, v, "expected an integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  const std::string t = trim(v);
  if (t.empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  return out;
}

std::string list_text(const std::vector<double>& v) { return fmt::format("{}", fmt::join(v, ",")); }

struct Entry {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

#define WG_DOUBLE(name)                                                                          \
  Entry {                                                                                        \
    #name, [](const ExperimentConfig& c) { return fmt::format("{}", c.name); },                 \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.name = to_double(k, v); } \
  }
#define WG_INT(name)                                                                             \
  Entry {                                                                                        \
    #name, [](const ExperimentConfig& c) { return fmt::format("{}", c.name); },                 \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                   \
          c.name = static_cast<decltype(c.name)>(to_int(k, v));                                  \
        }                                                                                        \
  }
#define WG_LIST(name)                                                                            \
  Entry {                                                                                        \
    #name, [](const ExperimentConfig& c) { return list_text(c.name); },                         \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.name = to_list(k, v); } \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      Entry{"experiment", [](const ExperimentConfig& c) { return c.experiment; },
            [](ExperimentConfig& c, const std::string&, const std::string& v) { c.experiment = trim(v); }},
      Entry{"output_dir", [](const ExperimentConfig& c) { return c.output_dir; },
            [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = trim(v); }},
      WG_INT(n),
      WG_DOUBLE(m),
      Entry{"bc", [](const ExperimentConfig& c) { return to_string(c.bc); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              try {
                c.bc = parse_boundary_condition(trim(v));
              } catch (const Error&) {
                bad(k, v, "expected dirichlet or neumann");
              }
            }},
      Entry{"section", [](const ExperimentConfig& c) { return c.section; },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              const std::string t = trim(v);
              if (t != "interval" && t != "rectangle") bad(k, v, "expected interval or rectangle");
              c.section = t;
            }},
      WG_DOUBLE(length),
      WG_DOUBLE(length_y),
      WG_INT(resolution),
      Entry{"backend", [](const ExperimentConfig& c) { return c.backend; },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              const std::string t = trim(v);
              if (t != "closed" && t != "fd") bad(k, v, "expected closed or fd");
              c.backend = t;
            }},
      WG_INT(j_max),
      WG_DOUBLE(support),
      WG_LIST(epsilons),
      WG_LIST(mus),
      WG_LIST(horizons),
      WG_LIST(radii),
      WG_DOUBLE(horizon),
      WG_DOUBLE(fit_begin),
      WG_DOUBLE(fit_end),
      WG_DOUBLE(h),
      WG_DOUBLE(dt),
      WG_DOUBLE(output_interval),
      WG_DOUBLE(sigma),
      WG_DOUBLE(amplitude),
      WG_INT(y_points),
      WG_INT(k_max),
      WG_DOUBLE(rho),
      WG_INT(budget.tx),
      WG_INT(budget.rotations),
      WG_INT(budget.y),
      WG_INT(budget.total),
      WG_INT(seed),
  };
  return table;
}

#undef WG_DOUBLE
#undef WG_INT
#undef WG_LIST

const std::vector<std::string> kExperiments = {"eigen", "decouple", "decay",   "kss",       "ks-sobolev",
                                               "energy", "check-q", "compat", "lifespan", "iterate"};

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

CrossSectionSpec ExperimentConfig::cross_section() const {
  CrossSectionSpec s;
  if (section == "rectangle") {
    s.shape = Rectangle{length, length_y};
  } else {
    s.shape = Interval{length};
  }
  s.bc = bc;
  s.resolution = resolution;
  return s;
}

ExperimentConfig default_config(const std::string& experiment) {
  if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end()) {
    throw ConfigurationError("unknown experiment '" + experiment + "'");
  }
  ExperimentConfig c;
  c.experiment = experiment;
  c.output_dir = "out/" + experiment;
  if (experiment == "eigen") {
    c.resolution = 64;
    c.j_max = 32;
  } else if (experiment == "decouple") {
    c.h = 0.05;
    c.dt = 0.005;
    c.horizon = 10.0;
    c.output_interval = 1.0;
    c.y_points = 257;
    c.resolution = 33;
  } else if (experiment == "decay") {
    c.mus = {1, 2, 4, 8};
    c.h = 0.0125;
    c.dt = 0.00625;
    c.horizon = 160.0;
    c.output_interval = 1.0;
  } else if (experiment == "kss") {
    c.mus = {0, 1, 4};
    c.horizons = {20, 40, 80, 160};
    c.h = 0.05;
    c.dt = 0.025;
    c.output_interval = 0.1;
  } else if (experiment == "ks-sobolev") {
    c.radii = {8, 16};
    c.mus = {0, 1, 5};
    c.h = 0.25;
  } else if (experiment == "energy") {
    c.horizon = 100.0;
    c.h = 0.05;
    c.dt = 0.025;
    c.output_interval = 1.0;
    c.j_max = 8;
    c.resolution = 32;
  } else if (experiment == "check-q") {
    c.resolution = 16;
    c.j_max = 4;
  } else if (experiment == "compat") {
    c.resolution = 16;
    c.j_max = 4;
  } else if (experiment == "lifespan") {
    c.epsilons = {0.6, 0.52, 0.47, 0.44};
    c.amplitude = 2.5;
    c.h = 0.0125;
    c.dt = 0.00625;
    c.horizon = 70.0;
    c.resolution = 8;
    c.j_max = 4;
  } else if (experiment == "iterate") {
    c.epsilons = {0.05};
    c.amplitude = 1.0;
    c.h = 0.025;
    c.dt = 0.00625;  // the reduction residual is a second difference in time
    c.horizon = 20.0;
    c.output_interval = 0.25;
    c.resolution = 8;
    c.j_max = 4;
  }
  return c;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& e : entries()) {
    if (e.key == key) {
      e.set(cfg, key, value);
      return;
    }
  }
  throw ConfigurationError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  std::string experiment;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigurationError(fmt::format("config line {}: expected key = value", lineno));
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "experiment") experiment = value;
    kv.emplace_back(std::move(key), std::move(value));
  }
  if (experiment.empty()) throw ConfigurationError("config key 'experiment' is missing");
  ExperimentConfig cfg = default_config(experiment);
  for (const auto& [k, v] : kv) set_config_value(cfg, k, v);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) out += e.key + " = " + e.get(cfg) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigurationError("config key '" + key + "': " + why);
  };
  if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end()) {
    fail("experiment", "unknown experiment '" + experiment + "'");
  }
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  if (n < 3 || n > 5) fail("n", "must be 3, 4 or 5");
  if (!(m >= 0.0)) fail("m", "must be >= 0");
  if (!(length > 0.0)) fail("length", "must be positive");
  if (!(length_y > 0.0)) fail("length_y", "must be positive");
  if (resolution < 8) fail("resolution", "must be >= 8");
  if (j_max < 1) fail("j_max", "must be >= 1");
  if (j_max > resolution / 2) fail("j_max", "must be <= resolution / 2");
  if (!(support > 0.0)) fail("support", "must be positive");
  if (!(horizon > 0.0)) fail("horizon", "must be positive");
  if (!(h > 0.0)) fail("h", "must be positive");
  if (!(dt > 0.0)) fail("dt", "must be positive");
  if (dt > 0.5 * h * (1.0 + 1e-12)) fail("dt", "CFL requires dt <= h / 2");
  if (!(output_interval > 0.0)) fail("output_interval", "must be positive");
  if (!(sigma > 0.0)) fail("sigma", "must be positive");
  if (!(amplitude >= 0.0)) fail("amplitude", "must be >= 0");
  if (y_points < 9) fail("y_points", "must be >= 9");
  if (k_max < 3) fail("k_max", "must be >= 3");
  if (!(rho > 0.0 && rho < 1.0)) fail("rho", "must lie in (0, 1)");
  try {
    budget.validate();
  } catch (const ValidationError& e) {
    fail("budget", e.what());
  }
  for (double e : epsilons) {
    if (!(e > 0.0)) fail("epsilons", "entries must be positive");
  }
  for (double mu : mus) {
    if (!(mu >= 0.0)) fail("mus", "entries must be >= 0");
  }
  for (double t : horizons) {
    if (!(t > 0.0)) fail("horizons", "entries must be positive");
  }
  for (double r : radii) {
    if (!(r >= 1.0)) fail("radii", "entries must be >= 1");
  }
  if (experiment == "decay") {
    if (mus.empty()) fail("mus", "decay needs at least one mass");
    if (!(fit_begin > 0.0 && fit_begin < fit_end)) fail("fit_begin", "need 0 < fit_begin < fit_end");
    if (fit_end > horizon + 1e-9) fail("fit_end", "must not exceed horizon");
  }
  if (experiment == "kss") {
    if (mus.empty()) fail("mus", "kss needs at least one mass");
    if (horizons.size() < 2) fail("horizons", "kss needs at least two horizons");
  }
  if (experiment == "ks-sobolev" && radii.empty()) fail("radii", "ks-sobolev needs at least one radius");
  if (experiment == "decouple" && section != "interval") fail("section", "the full-grid oracle needs an interval");
  if (experiment == "decouple" && resolution > 1 && (y_points - 1) % (resolution - 1) != 0) {
    fail("y_points", "y_points - 1 must be a multiple of resolution - 1 so the mode grid sits on the full grid");
  }
  if (experiment == "lifespan") {
    if (n != 3) fail("n", "lifespan runs need n = 3");
    if (epsilons.size() < 4) fail("epsilons", "lifespan needs at least 4 values");
    for (std::size_t i = 1; i < epsilons.size(); ++i) {
      if (!(epsilons[i] < epsilons[i - 1])) fail("epsilons", "must be strictly decreasing");
    }
  }
  if (experiment == "iterate") {
    if (n != 3) fail("n", "the iteration runs need n = 3");
    if (epsilons.empty()) fail("epsilons", "iterate needs at least one epsilon");
  }
}

}  // namespace wglab
