#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"

namespace cli {
namespace {

using namespace crowdconf;

struct SimulateOptions {
  std::string rates;
  std::size_t tasks = 500;
  double selectivity = 0.5;
  std::string output;
  std::string gold;
  bool gold_column = false;
};

void run_simulate(const SimulateOptions& o, const Globals& g) {
  const auto rates = parse_doubles(o.rates, "--rates");
  const auto data = gen_matrix(rates, Selectivity(o.selectivity), o.tasks, derive_seed(g.seed, "simulate"));
  std::ostringstream out;
  if (o.gold_column) {
    out << "task_id,worker_id,answer,gold\n";
    for (std::size_t t = 0; t < data.matrix.task_count(); ++t)
      for (std::size_t w = 0; w < data.matrix.worker_count(); ++w)
        out << data.matrix.tasks()[t] << ',' << data.matrix.workers()[w] << ',' << to_string(*data.matrix.at(t, w))
            << ',' << to_string(data.truth[t]) << '\n';
  } else {
    write_responses_csv(out, data.matrix);
  }
  write_output(o.output, out.str());
  if (!o.gold.empty()) {
    std::ostringstream gold;
    write_gold_csv(gold, data.matrix.tasks(), data.truth);
    write_output(o.gold, gold.str());
  }
}

}  // namespace

void add_simulate(CLI::App& root, const Globals& globals, std::vector<Command>& out) {
  auto opts = std::make_shared<SimulateOptions>();
  CLI::App* sub = root.add_subcommand("simulate", "Generate synthetic responses (workers w1.., tasks t1..)");
  sub->add_option("--rates", opts->rates, "Comma-separated true error rates, one per worker")->required();
  sub->add_option("--tasks", opts->tasks, "Tasks");
  sub->add_option("--selectivity", opts->selectivity, "P(truth = Y)");
  sub->add_option("--output", opts->output, "Responses CSV path (default: standard output)");
  sub->add_option("--gold", opts->gold, "Also write the latent truth as task_id,answer");
  sub->add_flag("--gold-column", opts->gold_column, "Add the truth as a 'gold' column");
  out.push_back({sub, [opts, &globals] { run_simulate(*opts, globals); }});
}

}  // namespace cli
