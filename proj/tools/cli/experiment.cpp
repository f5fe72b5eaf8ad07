#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"

namespace cli {
namespace {

using namespace crowdconf;
using Clock = std::chrono::steady_clock;

struct Output {
  std::string out_dir = ".";
};

// Writes <name>.csv and <name>.json (summary) into the output directory.
void write_artifacts(const CLI::App& app, const Globals& globals, const Output& out, const std::string& name,
                     const std::string& csv, Json results, Clock::time_point start,
                     const std::vector<std::pair<std::string, std::string>>& extra_csv = {}) {
  std::filesystem::create_directories(out.out_dir);
  const auto dir = std::filesystem::path(out.out_dir);
  write_output((dir / (name + ".csv")).string(), csv);
  for (const auto& [file, text] : extra_csv) write_output((dir / file).string(), text);

  Json summary = report_header("experiment " + name);
  Json config = effective_config(app);
  config.erase("out-dir");
  config["seed"] = std::to_string(globals.seed);
  summary["config"] = config;
  summary["results"] = std::move(results);
  summary["timing"] = {{"seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
  write_output((dir / (name + ".json")).string(), summary.dump(2) + "\n");
  std::cerr << "wrote " << (dir / (name + ".csv")).string() << " and " << (dir / (name + ".json")).string() << '\n';
}

// ---------------------------------------------------------------------------

struct CoverageOptions : Output {
  std::size_t workers = 3;
  std::size_t trials = 1000;
  std::size_t tasks = 500;
  std::string levels = "0.05:0.95:0.05";
  std::string strategy = "greedy";
  double rate_low = 0.05;
  double rate_high = 0.45;
  double selectivity = 0.5;
  std::string input;
  std::string format = "auto";
  std::string gold;
};

void run_coverage(const CLI::App& app, const CoverageOptions& o, const Globals& g) {
  const auto start = Clock::now();
  if (!o.input.empty())
    for (const char* n : {"tasks", "rate-low", "rate-high", "selectivity"})
      if (was_given(app, n)) throw UsageError(std::string("--") + n + " only applies to synthetic coverage (no --input)");
  if (o.input.empty() && !o.gold.empty()) throw UsageError("--gold needs --input");

  CoverageConfig cfg;
  cfg.workers = o.workers;
  cfg.trials = o.trials;
  cfg.tasks = o.tasks;
  cfg.levels = parse_double_range(o.levels, "--levels");
  cfg.strategy.kind = parse_strategy(o.strategy);
  cfg.seed = g.seed;
  cfg.rate_low = o.rate_low;
  cfg.rate_high = o.rate_high;
  cfg.selectivity = o.selectivity;

  CoverageResult result;
  Json source;
  if (o.input.empty()) {
    result = coverage_experiment(cfg);
    source = {{"kind", "synthetic"}};
  } else {
    const std::string bytes = read_file(o.input);
    std::istringstream in(bytes);
    auto loaded = load_responses(in, resolve_format(o.format, o.input));
    GoldLabels gold;
    source = {{"kind", "observed"}, {"input", o.input}, {"digest", digest(bytes)}};
    if (!o.gold.empty()) {
      const std::string gold_bytes = read_file(o.gold);
      std::istringstream gin(gold_bytes);
      gold = load_gold(gin);
      source["gold"] = o.gold;
      source["gold_digest"] = digest(gold_bytes);
    } else if (loaded.gold) {
      gold = *loaded.gold;
    } else {
      throw DomainError("observed coverage needs gold labels: a 'gold' column or --gold");
    }
    result = coverage_experiment(loaded.matrix, gold, cfg);
  }

  std::ostringstream csv;
  csv << "level,covered,total,coverage,degenerate\n";
  Json rows = Json::array();
  for (const auto& r : result.rows) {
    csv << num(r.level) << ',' << r.covered << ',' << r.total << ',' << num(r.coverage) << ',' << r.degenerate << '\n';
    rows.push_back({{"level", r.level}, {"covered", r.covered}, {"total", r.total}, {"coverage", r.coverage},
                    {"degenerate", r.degenerate}});
  }
  Json results{{"source", source},
               {"trials_run", result.trials_run},
               {"trials_skipped", result.trials_skipped},
               {"rows", rows}};
  write_artifacts(app, g, o, "coverage", csv.str(), results, start);
}

// ---------------------------------------------------------------------------

struct Table1Options : Output {
  std::size_t tasks = 400;
  std::size_t workers = 3;
  std::size_t reps = 500;
  std::string rates = "0.2:0.5,0.3:0.5";
  double selectivity = 0.5;
  double confidence = 0.9;
  std::string strategy = "exhaustive";
};

void run_table1(const CLI::App& app, const Table1Options& o, const Globals& g) {
  const auto start = Clock::now();
  ComparisonConfig cfg;
  cfg.tasks = o.tasks;
  cfg.workers = o.workers;
  cfg.reps = o.reps;
  cfg.seed = g.seed;
  cfg.rates = parse_rate_distribution(o.rates, "--rates");
  cfg.selectivity = o.selectivity;
  cfg.confidence = o.confidence;
  cfg.strategy = parse_strategy(o.strategy);
  const auto row = comparison_experiment(cfg);

  std::ostringstream csv;
  csv << "tasks,workers,reps,ours,em,majority,degenerate\n";
  csv << row.tasks << ',' << row.workers << ',' << row.reps << ',' << num(row.ours) << ',' << num(row.em) << ','
      << num(row.majority) << ',' << row.degenerate << '\n';
  Json results{{"tasks", row.tasks}, {"workers", row.workers}, {"reps", row.reps},
               {"mean_abs_error", {{"ours", row.ours}, {"em", row.em}, {"majority", row.majority}}},
               {"degenerate_estimates", row.degenerate}};
  write_artifacts(app, g, o, "table1", csv.str(), results, start);
}

// ---------------------------------------------------------------------------

struct Fig3Options : Output {
  std::size_t workers = 9;
  double good_rate = 0.1;
  double bad_rate = 0.3;
  long bad = -1;
  double selectivity = 0.5;
};

void run_fig3(const CLI::App& app, const Fig3Options& o, const Globals& g) {
  const auto start = Clock::now();
  if (o.bad >= 0 && static_cast<std::size_t>(o.bad) > o.workers) throw UsageError("--bad cannot exceed --workers");
  auto rows = decision_error_curve(o.workers, o.good_rate, o.bad_rate, Selectivity(o.selectivity));
  if (o.bad >= 0) rows = {rows[static_cast<std::size_t>(o.bad)]};

  std::ostringstream csv;
  csv << "workers,bad,simple,weighted\n";
  Json out = Json::array();
  for (const auto& r : rows) {
    csv << o.workers << ',' << r.bad << ',' << num(r.simple) << ',' << num(r.weighted) << '\n';
    out.push_back({{"bad", r.bad}, {"simple", r.simple}, {"weighted", r.weighted}});
  }
  write_artifacts(app, g, o, "fig3", csv.str(), Json{{"rows", out}}, start);
}

// ---------------------------------------------------------------------------

struct PriceOptions : Output {
  std::string sweep = "tasks";
  double target = 0.9;
  std::string levels = "0.5,0.6,0.7,0.8,0.9,0.95";
  double tradeoff_level = 0.9;
  std::size_t fixed_tasks = 500;
  std::size_t fixed_workers = 3;
  std::string worker_grid = "3:41:2";
  std::string task_grid = "25:1000:25";
  std::string rates = "0.2:0.5,0.3:0.5";
  std::size_t reps = 20;
  std::string strategy = "greedy";
  double selectivity = 0.5;
  bool strict_worst_case = false;
};

void run_price(const CLI::App& app, const PriceOptions& o, const Globals& g) {
  const auto start = Clock::now();
  PriceConfig cfg;
  if (o.sweep == "tasks") cfg.sweep = PriceSweep::tasks;
  else if (o.sweep == "workers") cfg.sweep = PriceSweep::workers;
  else if (o.sweep == "tradeoff") cfg.sweep = PriceSweep::tradeoff;
  else throw UsageError("--sweep must be tasks, workers or tradeoff");
  cfg.target_accuracy = o.target;
  cfg.levels = parse_double_range(o.levels, "--levels");
  cfg.tradeoff_level = o.tradeoff_level;
  cfg.fixed_tasks = o.fixed_tasks;
  cfg.fixed_workers = o.fixed_workers;
  cfg.worker_grid = parse_size_range(o.worker_grid, "--worker-grid");
  cfg.task_grid = parse_size_range(o.task_grid, "--task-grid");
  cfg.rates = parse_rate_distribution(o.rates, "--rates");
  cfg.reps = o.reps;
  cfg.strategy.kind = parse_strategy(o.strategy);
  cfg.seed = g.seed;
  cfg.selectivity = o.selectivity;
  cfg.mode = o.strict_worst_case ? WorstCaseMode::sign_aware : WorstCaseMode::inflate_all;
  const auto rows = price_experiment(cfg);

  std::ostringstream csv;
  csv << "sweep,level,workers,tasks,mean_worst_case,saturated,cost\n";
  Json out = Json::array();
  for (const auto& r : rows) {
    csv << o.sweep << ',' << num(r.level) << ',' << r.workers << ',' << r.tasks << ',' << num(r.worst_case) << ','
        << (r.saturated ? "true" : "false") << ',' << r.cost << '\n';
    out.push_back({{"level", r.level}, {"workers", r.workers}, {"tasks", r.tasks}, {"mean_worst_case", r.worst_case},
                   {"saturated", r.saturated}, {"cost", r.cost}});
  }
  write_artifacts(app, g, o, "price", csv.str(), Json{{"sweep", o.sweep}, {"rows", out}}, start);
}

// ---------------------------------------------------------------------------

struct EvictionOptions : Output {
  std::string rule = "both";
  std::string thresholds = "-0.4:0.4:0.05";
  std::string alpha = "1";
  std::size_t phases = 30;
  std::size_t tasks = 25;
  std::size_t team_size = 7;
  double confidence = 0.35;
  std::size_t runs = 200;
  std::string strategy = "greedy";
  std::string pool = "0.3:0.3:3:0,0.2:0.4:1:0,0.1:0.3:0:5";
  double selectivity = 0.5;
};

WorkerPool parse_pool(const std::string& text) {
  WorkerPool pool;
  for (const auto& item : split(text, ',')) {
    auto p = split(item, ':');
    if (p.size() != 4) throw UsageError("--pool expects rate:probability:keep_cost:evict_cost entries");
    pool.entries.push_back({parse_double(p[0], "--pool"), parse_double(p[1], "--pool"), parse_double(p[2], "--pool"),
                            parse_double(p[3], "--pool")});
  }
  pool.validate();
  return pool;
}

void run_eviction(const CLI::App& app, const EvictionOptions& o, const Globals& g) {
  const auto start = Clock::now();
  std::vector<EvictionRule> rules;
  if (o.rule == "both") rules = {EvictionRule::normal, EvictionRule::conservative};
  else if (o.rule == "normal") rules = {EvictionRule::normal};
  else if (o.rule == "conservative") rules = {EvictionRule::conservative};
  else throw UsageError("--rule must be normal, conservative or both");
  const auto thresholds = parse_double_range(o.thresholds, "--thresholds");
  const auto alphas = parse_doubles(o.alpha, "--alpha");

  SimConfig base;
  base.phases = o.phases;
  base.tasks = o.tasks;
  base.team_size = o.team_size;
  base.confidence = o.confidence;
  base.runs = o.runs;
  base.estimator.kind = parse_strategy(o.strategy);
  base.pool = parse_pool(o.pool);
  base.seed = g.seed;
  base.selectivity = o.selectivity;
  for (double a : alphas)
    if (!(a > 0.0)) throw UsageError("--alpha values must be positive");

  // alpha only weighs c2 against c1; the simulated runs do not depend on it.
  struct Cell {
    EvictionRule rule;
    double threshold;
    CostReport report;
  };
  std::vector<Cell> cells;
  for (EvictionRule rule : rules)
    for (double t : thresholds) {
      SimConfig cfg = base;
      cfg.rule = rule;
      cfg.threshold = t;
      cells.push_back({rule, t, run_eviction_sim(cfg)});
    }

  std::ostringstream csv, phases_csv;
  csv << "alpha,rule,threshold,mean_c1,mean_c2,mean_cost,evictions";
  for (const auto& e : base.pool.entries) csv << ",evicted_" << num(e.rate);
  csv << ",dominance_violations\n";
  phases_csv << "alpha,rule,threshold,phase,c1,c2,cost\n";
  Json by_alpha = Json::array();
  for (double a : alphas) {
    Json rows = Json::array();
    for (const auto& c : cells) {
      const double cost = c.report.mean_c1 + a * c.report.mean_c2;
      csv << num(a) << ',' << to_string(c.rule) << ',' << num(c.threshold) << ',' << num(c.report.mean_c1) << ','
          << num(c.report.mean_c2) << ',' << num(cost) << ',' << c.report.evictions;
      for (std::size_t n : c.report.evictions_by_entry) csv << ',' << n;
      csv << ',' << c.report.dominance_violations << '\n';
      for (std::size_t p = 0; p < c.report.per_phase.size(); ++p) {
        const auto& ph = c.report.per_phase[p];
        phases_csv << num(a) << ',' << to_string(c.rule) << ',' << num(c.threshold) << ',' << p + 1 << ','
                   << num(ph.c1) << ',' << num(ph.c2) << ',' << num(ph.c1 + a * ph.c2) << '\n';
      }
      rows.push_back({{"rule", to_string(c.rule)}, {"threshold", c.threshold}, {"mean_c1", c.report.mean_c1},
                      {"mean_c2", c.report.mean_c2}, {"mean_cost", cost}, {"evictions", c.report.evictions},
                      {"evictions_by_rate", c.report.evictions_by_entry},
                      {"dominance_violations", c.report.dominance_violations},
                      {"phases_checked", c.report.phases_checked}});
    }
    Json entry{{"alpha", a}, {"rows", rows}};
    if (rules.size() == 2) {
      std::size_t wins = 0;
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        const auto& n = cells[i].report;
        const auto& c = cells[thresholds.size() + i].report;
        wins += c.mean_c1 + a * c.mean_c2 <= n.mean_c1 + a * n.mean_c2 ? 1 : 0;
      }
      entry["conservative_not_worse"] = wins;
      entry["thresholds"] = thresholds.size();
    }
    by_alpha.push_back(entry);
  }
  Json pool = Json::array();
  for (const auto& e : base.pool.entries)
    pool.push_back({{"rate", e.rate}, {"probability", e.probability}, {"keep_cost", e.keep_cost},
                    {"evict_cost", e.evict_cost}});
  write_artifacts(app, g, o, "eviction", csv.str(), Json{{"pool", pool}, {"by_alpha", by_alpha}}, start,
                  {{"eviction_phases.csv", phases_csv.str()}});
}

template <typename Opts>
CLI::App* leaf(CLI::App* parent, const char* name, const char* help, std::shared_ptr<Opts> opts) {
  CLI::App* sub = parent->add_subcommand(name, help);
  sub->add_option("--out-dir", opts->out_dir, "Directory for the CSV and JSON summary");
  return sub;
}

}  // namespace

void add_experiment(CLI::App& root, const Globals& globals, std::vector<Command>& out) {
  CLI::App* exp = root.add_subcommand("experiment", "Seeded Monte-Carlo experiments (CSV + JSON summary)");
  exp->require_subcommand(1);

  {
    auto o = std::make_shared<CoverageOptions>();
    auto* s = leaf(exp, "coverage", "Interval coverage. CSV: level,covered,total,coverage,degenerate", o);
    s->add_option("--workers", o->workers, "Workers per trial (3 uses the three-worker scheme)");
    s->add_option("--trials", o->trials, "Trials");
    s->add_option("--tasks", o->tasks, "Synthetic tasks per trial");
    s->add_option("--levels", o->levels, "Confidence levels: from:to:step or a comma list");
    s->add_option("--strategy", o->strategy, "Partition search for more than 3 workers");
    s->add_option("--rate-low", o->rate_low, "Synthetic rates ~ U[rate-low, rate-high]");
    s->add_option("--rate-high", o->rate_high, "Synthetic rates ~ U[rate-low, rate-high]");
    s->add_option("--selectivity", o->selectivity, "Synthetic P(truth = Y)");
    s->add_option("--input", o->input, "Observed responses instead of synthetic data");
    s->add_option("--format", o->format, "Input format: auto|csv|json");
    s->add_option("--gold", o->gold, "Gold labels (task_id,answer); else a 'gold' input column");
    out.push_back({s, [s, o, &globals] { run_coverage(*s, *o, globals); }});
  }
  {
    auto o = std::make_shared<Table1Options>();
    auto* s = leaf(exp, "table1", "Mean |p - p_hat| of ours, EM and majority. CSV: tasks,workers,reps,ours,em,majority,degenerate", o);
    s->add_option("--tasks", o->tasks, "Tasks per repetition");
    s->add_option("--workers", o->workers, "Workers per repetition");
    s->add_option("--reps", o->reps, "Repetitions");
    s->add_option("--rates", o->rates, "Worker rate distribution rate:probability,...");
    s->add_option("--selectivity", o->selectivity, "P(truth = Y)");
    s->add_option("--confidence", o->confidence, "Interval level steering the partition search");
    s->add_option("--strategy", o->strategy, "Partition search for more than 3 workers");
    out.push_back({s, [s, o, &globals] { run_table1(*s, *o, globals); }});
  }
  {
    auto o = std::make_shared<Fig3Options>();
    auto* s = leaf(exp, "fig3", "Exact decision error, simple vs weighted majority. CSV: workers,bad,simple,weighted", o);
    s->add_option("--workers", o->workers, "Workers");
    s->add_option("--good-rate", o->good_rate, "Error rate of good workers");
    s->add_option("--bad-rate", o->bad_rate, "Error rate of bad workers");
    s->add_option("--bad", o->bad, "Only this number of bad workers (-1: every count)");
    s->add_option("--selectivity", o->selectivity, "P(truth = Y)");
    out.push_back({s, [s, o, &globals] { run_fig3(*s, *o, globals); }});
  }
  {
    auto o = std::make_shared<PriceOptions>();
    auto* s = leaf(exp, "price", "Cost of reaching a worst-case accuracy. CSV: sweep,level,workers,tasks,mean_worst_case,saturated,cost", o);
    s->add_option("--sweep", o->sweep, "tasks|workers|tradeoff");
    s->add_option("--target", o->target, "Target mean worst-case accuracy");
    s->add_option("--levels", o->levels, "Confidence levels (tasks/workers sweeps)");
    s->add_option("--tradeoff-level", o->tradeoff_level, "Confidence level for the tradeoff sweep");
    s->add_option("--fixed-tasks", o->fixed_tasks, "Tasks when sweeping workers");
    s->add_option("--fixed-workers", o->fixed_workers, "Workers when sweeping tasks");
    s->add_option("--worker-grid", o->worker_grid, "Worker counts: from:to:step or a comma list");
    s->add_option("--task-grid", o->task_grid, "Task counts: from:to:step or a comma list");
    s->add_option("--rates", o->rates, "Worker rate distribution rate:probability,...");
    s->add_option("--reps", o->reps, "Repetitions per grid point");
    s->add_option("--strategy", o->strategy, "Partition search for more than 3 workers");
    s->add_option("--selectivity", o->selectivity, "P(truth = Y)");
    s->add_flag("--strict-worst-case", o->strict_worst_case, "Disagreeing workers at p_hat - eps");
    out.push_back({s, [s, o, &globals] { run_price(*s, *o, globals); }});
  }
  {
    auto o = std::make_shared<EvictionOptions>();
    auto* s = leaf(exp, "eviction", "Multi-phase eviction costs. CSV: alpha,rule,threshold,mean_c1,mean_c2,mean_cost,evictions,evicted_<rate>...,dominance_violations", o);
    s->add_option("--rule", o->rule, "normal|conservative|both");
    s->add_option("--thresholds", o->thresholds, "Eviction thresholds: from:to:step or a comma list");
    s->add_option("--alpha", o->alpha, "Comma list of c2 multipliers");
    s->add_option("--phases", o->phases, "Phases per run");
    s->add_option("--tasks", o->tasks, "Tasks per phase");
    s->add_option("--team-size", o->team_size, "Workers on the team");
    s->add_option("--confidence", o->confidence, "Interval level for eps");
    s->add_option("--runs", o->runs, "Monte-Carlo runs");
    s->add_option("--strategy", o->strategy, "Partition search");
    s->add_option("--pool", o->pool, "Hiring pool rate:probability:keep_cost:evict_cost,...");
    s->add_option("--selectivity", o->selectivity, "P(truth = Y)");
    out.push_back({s, [s, o, &globals] { run_eviction(*s, *o, globals); }});
  }
}

}  // namespace cli
