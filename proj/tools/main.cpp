// wglab command line driver: one subcommand per catalog experiment.
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wglab/errors.hpp"
#include "wglab/experiments.hpp"

namespace {

void print_catalog(std::ostream& os) {
  os << "experiments:\n";
  for (const auto& e : wglab::list_experiments()) os << fmt::format("  {:<12} {}\n", e.id, e.description);
  os << "run `wglab <experiment> --help` for the options of one experiment\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw wglab::ConfigurationError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Overrides {
  std::string config_file;
  std::map<std::string, std::string> values;
};

std::string flag_for(const std::string& key) {
  std::string dashed = key;
  for (char& ch : dashed) {
    if (ch == '_' || ch == '.') ch = '-';
  }
  std::string flags = "--" + key;
  if (dashed != key) flags += ",--" + dashed;
  if (key == "mus") flags += ",--mu";
  if (key == "epsilons") flags += ",--eps";
  return flags;
}

int execute(const std::string& id, const Overrides& o, bool quiet) {
  wglab::ExperimentConfig cfg;
  try {
    if (!o.config_file.empty()) {
      const std::string text = read_file(o.config_file);
      // A file without an experiment key takes the subcommand's.
      if (text.find("experiment") == std::string::npos) {
        cfg = wglab::parse_config("experiment = " + id + "\n" + text);
      } else {
        cfg = wglab::parse_config(text);
      }
      if (cfg.experiment != id) {
        throw wglab::ConfigurationError("config file is for '" + cfg.experiment + "', not '" + id + "'");
      }
    } else {
      cfg = wglab::default_config(id);
    }
    for (const auto& [k, v] : o.values) wglab::set_config_value(cfg, k, v);
  } catch (const wglab::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return wglab::kExitValidation;
  }

  const auto res = wglab::run(cfg);
  if (res.exit_code == wglab::kExitValidation) {
    std::cerr << "error: " << res.message << "\n";
    return res.exit_code;
  }
  if (!quiet) {
    for (const auto& r : res.reports) {
      std::cout << fmt::format("{:<4} {:<48} lhs={:.6g} rhs={:.6g}", r.pass ? "ok" : "FAIL", r.name, r.lhs, r.rhs);
      if (r.slope) std::cout << fmt::format(" slope={:.4f}", *r.slope);
      if (r.r_squared) std::cout << fmt::format(" r2={:.4f}", *r.r_squared);
      std::cout << "\n";
    }
    for (const auto& f : res.files) std::cout << "wrote " << f.string() << "\n";
  }
  if (res.exit_code == wglab::kExitInstability) std::cerr << "instability: " << res.message << "\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Klein-Gordon waveguide experiments"};
  app.set_version_flag("--version", wglab::software_version());
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only report through the exit code");

  app.add_subcommand("list", "print the experiment catalog");
  std::map<std::string, Overrides> overrides;
  for (const auto& e : wglab::list_experiments()) {
    auto* sub = app.add_subcommand(e.id, e.description);
    sub->set_help_flag("--help", "print this help message and exit");
    auto& o = overrides[e.id];
    sub->add_option("-c,--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
    for (const auto& key : wglab::config_keys()) {
      if (key == "experiment") continue;
      sub->add_option_function<std::string>(
          flag_for(key), [&o, key](const std::string& v) { o.values[key] = v; }, "override '" + key + "'");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wglab::kExitValidation;
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->get_name() == "list") {
      print_catalog(std::cout);
      return 0;
    }
    return execute(sub->get_name(), overrides[sub->get_name()], quiet);
  }
  print_catalog(std::cout);
  return 0;
}
