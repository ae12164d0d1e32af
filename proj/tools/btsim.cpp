#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bt/config.hpp"
#include "bt/experiment.hpp"
#include "bt/version.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  unsigned workers = 0;  // 0 keeps the config's value
  bool workers_given = false;
};

int run_subcommand(const std::string& name, const Options& opt) {
  std::ifstream in(opt.config_path);
  if (!in) {
    std::cerr << "error: cannot read config " << opt.config_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  bt::ExperimentSpec spec;
  try {
    spec = bt::parse_config(buf.str());
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const std::string kind = bt::to_string(spec.kind);
  const bool matches = name == "experiment"
                           ? (kind == "theorem1" || kind == "theorem2" || kind == "theorem3" ||
                              kind == "bounds")
                           : kind == name;
  if (!matches) {
    std::cerr << "config error: experiment = " << kind << " does not belong to the '" << name
              << "' subcommand\n";
    return 2;
  }
  if (opt.workers_given) {
    spec.workers = opt.workers;
    spec.echo["workers"] = opt.workers == 0 ? "auto" : std::to_string(opt.workers);
  }

  bt::RunResult result;
  try {
    result = bt::run(spec, opt.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  for (const auto& file : result.files) std::cout << "wrote " << (std::filesystem::path(opt.out_dir) / file).string() << "\n";
  for (const auto& [check, pass] : result.verdicts)
    std::cout << (pass ? "PASS" : "FAIL") << "  " << check << "\n";
  if (result.exit_code == 2) std::cerr << "error: could not write results to " << opt.out_dir << "\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bradley-Terry tournaments in random environment"};
  app.set_version_flag("--version", bt::kVersion);
  app.require_subcommand(1);

  Options opt;
  for (const auto* name : {"simulate", "schedule", "experiment", "oracle", "bounds"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "experiment config file")->required();
    sub->add_option("--out", opt.out_dir, "output directory (default: out)");
    sub->add_option("--workers", opt.workers, "worker threads (overrides config; 0 = auto)")
        ->each([&](const std::string&) { opt.workers_given = true; });
  }

  CLI11_PARSE(app, argc, argv);
  return run_subcommand(app.get_subcommands().front()->get_name(), opt);
}
