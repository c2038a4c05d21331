#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "harvex/run.hpp"

namespace harvex::cli {

inline int dispatch(const std::string& subcommand, const std::string& scenario_path,
                    const std::string& out_dir, const std::vector<std::string>& tolerance_args,
                    const std::string& variant, bool no_aversion) {
  RunOptions options;
  if (!variant.empty()) {
    options.variant_override =
        variant == "foc" ? RateVariant::FocDerived : RateVariant::AlphaWeighted;
  }
  options.no_aversion_override = no_aversion;
  for (const std::string& kv : tolerance_args) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size()) {
      std::fprintf(stderr, "error: --tolerance expects key=value, got '%s'\n", kv.c_str());
      return 64;
    }
    try {
      options.tolerance_overrides[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: --tolerance value in '%s' is not a number\n", kv.c_str());
      return 64;
    }
  }
  const int code = run_catching(subcommand, scenario_path, out_dir, options);
  if (code == 0) {
    std::printf("%s: ok, reports written to %s\n", subcommand.c_str(), out_dir.c_str());
  }
  return code;
}

inline int main(int argc, const char* const* argv) {
  CLI::App app{"harvex: closed-form harvest control and model-uncertainty risk on graphs"};
  app.require_subcommand(1);

  static const std::vector<std::string> names = {"spectral", "solve",  "simulate",  "risk",
                                                 "allocate", "robust", "barycenter", "verify"};
  struct Args {
    std::string scenario;
    std::string out;
    std::vector<std::string> tolerances;
    std::string variant;
    bool no_aversion = false;
  };
  std::map<std::string, Args> args;
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    Args& a = args[name];
    sub->add_option("--scenario", a.scenario, "scenario JSON file")->required();
    sub->add_option("--out", a.out, "output directory")->required();
    sub->add_option("--tolerance", a.tolerances, "override a tolerance, key=value (repeatable)");
    sub->add_option("--variant", a.variant, "harvest-rate formula")
        ->check(CLI::IsMember({"paper", "foc"}));
    sub->add_flag("--no-aversion", a.no_aversion, "use the gamma -> 0 limit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    (void)app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);  // prints usage to stderr
    return 64;
  }

  for (const std::string& name : names) {
    if (app.got_subcommand(name)) {
      const Args& a = args[name];
      return dispatch(name, a.scenario, a.out, a.tolerances, a.variant, a.no_aversion);
    }
  }
  return 64;
}

}  // namespace harvex::cli
