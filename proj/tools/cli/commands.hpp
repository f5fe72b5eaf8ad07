#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <CLI11.hpp>

namespace cli {

struct Globals {
  std::uint64_t seed = 0;
};

struct Command {
  CLI::App* app;
  std::function<void()> run;
};

void add_estimate(CLI::App& root, const Globals& globals, std::vector<Command>& out);
void add_aggregate(CLI::App& root, const Globals& globals, std::vector<Command>& out);
void add_experiment(CLI::App& root, const Globals& globals, std::vector<Command>& out);
void add_simulate(CLI::App& root, const Globals& globals, std::vector<Command>& out);

}  // namespace cli
