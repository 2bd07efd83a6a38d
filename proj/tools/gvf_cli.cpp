#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gvf/scenario.hpp"
#include "gvf/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gvfilter: optimal filtering of spectral Gaussian signals observed through "
               "finitely many point functionals"};
  app.require_subcommand(1);

  std::string run_config, validate_config;
  CLI::App* run = app.add_subcommand("run", "run a scenario config and write report files");
  run->add_option("config", run_config, "path to a flat key = value scenario config")->required();
  CLI::App* validate = app.add_subcommand(
      "validate", "parse a config and apply the regularity gate without running anything");
  validate->add_option("config", validate_config, "path to a flat key = value scenario config")
      ->required();
  app.add_subcommand("version", "print the tool name and version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gvf::kExitConfigError;
  }

  if (run->parsed()) return gvf::run_scenario(run_config, std::cerr);
  if (validate->parsed()) return gvf::validate_scenario(validate_config, std::cout);
  std::cout << gvf::kProjectName << ' ' << gvf::kProjectVersion << '\n';
  return gvf::kExitOk;
}
