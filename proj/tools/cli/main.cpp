#include <iostream>
#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "json_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Worker error-rate estimation with confidence intervals for crowdsourced binary tasks.", "crowdconf"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", CROWDCONF_VERSION);
  app.config_formatter(std::make_shared<cli::JsonConfig>());
  app.set_config("--config", "", "JSON config file; explicit flags override its values");

  cli::Globals globals;
  app.add_option("--seed", globals.seed, "Seed for every random stream (sub-seeds are derived per purpose)");

  std::vector<cli::Command> commands;
  cli::add_estimate(app, globals, commands);
  cli::add_aggregate(app, globals, commands);
  cli::add_experiment(app, globals, commands);
  cli::add_simulate(app, globals, commands);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (const auto& cmd : commands)
      if (cmd.app->parsed()) cmd.run();
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  } catch (const crowdconf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 3;
  } catch (const crowdconf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 5;
  }
  return 0;
}
