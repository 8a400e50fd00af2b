// pbart: generate data, fit (serial, in-process cluster, or TCP master and
// workers), predict, run sensitivity analysis and benchmark.

#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>

#include "pbart/cli/commands.hpp"
#include "pbart/cli/config.hpp"
#include "pbart/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed Bayesian additive regression trees"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> flags;
  std::map<std::string, std::string> config_paths;
  for (const auto& name : pbart::subcommand_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_paths[name], "flat key = value file; flags override it");
    auto& values = flags[name];
    for (const auto& key : pbart::config_keys()) {
      // Store raw text; parse_config does the typed validation so that file
      // values and flags get identical checks.
      sub->add_option_function<std::string>(
          std::string("--") + key.name, [&values, k = std::string(key.name)](const std::string& v) { values[k] = v; },
          key.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    std::map<std::string, std::string> file;
    if (!config_paths[name].empty()) file = pbart::read_config_file(config_paths[name]);
    const pbart::RunConfig config = pbart::parse_config(flags[name], file);
    pbart::run_subcommand(name, config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "pbart " << name << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
