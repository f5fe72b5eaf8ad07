#pragma once

// Seeded synthetic crowds and the experiments built on them: interval
// coverage, estimator comparison, exact decision-error curves, the price of
// accuracy, and multi-phase worker eviction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crowdconf/aggregation.hpp"
#include "crowdconf/baselines.hpp"
#include "crowdconf/core.hpp"
#include "crowdconf/diff3.hpp"
#include "crowdconf/diffgen.hpp"
#include "crowdconf/parallel.hpp"
#include "crowdconf/random.hpp"

namespace crowdconf {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct SyntheticData {
  ResponseMatrix matrix;
  std::vector<Answer> truth;
  std::vector<double> rates;
};

inline std::vector<std::string> numbered_ids(char prefix, std::size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Truth ~ Bernoulli(s) per task; worker i flips it with probability rates[i].
// The truth and every worker column draw from their own sub-stream, so
// generating more tasks or workers extends a run without changing its prefix.
inline SyntheticData gen_matrix(std::span<const double> rates, Selectivity s, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("need at least one task");
  if (rates.size() < 2) throw DomainError("need at least two workers");
  for (double p : rates)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("error rates must lie in [0, 1]");
  Rng truth_rng(derive_seed(seed, "truth"));
  std::vector<Answer> truth(n);
  for (auto& t : truth) t = truth_rng.bernoulli(s.value()) ? Answer::yes : Answer::no;

  std::vector<Cell> cells;
  cells.reserve(n * rates.size());
  for (std::size_t w = 0; w < rates.size(); ++w) {
    Rng rng(derive_seed(seed, "worker", w));
    for (std::size_t t = 0; t < n; ++t) {
      Answer a = rng.bernoulli(rates[w]) ? flip(truth[t]) : truth[t];
      cells.push_back(static_cast<Cell>(to_int(a)));
    }
  }
  return {ResponseMatrix(numbered_ids('t', n), numbered_ids('w', rates.size()), std::move(cells)), std::move(truth),
          std::vector<double>(rates.begin(), rates.end())};
}

inline SyntheticData gen_matrix(std::initializer_list<double> rates, Selectivity s, std::size_t n, std::uint64_t seed) {
  return gen_matrix(std::span<const double>(rates.begin(), rates.size()), s, n, seed);
}

// Discrete distribution over error rates.
struct RateDistribution {
  std::vector<std::pair<double, double>> entries;  // (rate, probability)

  static RateDistribution two_point() { return {{{0.2, 0.5}, {0.3, 0.5}}}; }

  void validate() const {
    if (entries.empty()) throw DomainError("rate distribution is empty");
    double total = 0.0;
    for (auto [rate, prob] : entries) {
      if (!(rate > 0.0 && rate < 0.5)) throw DomainError("pool rates must lie in (0, 0.5)");
      if (!(prob >= 0.0)) throw DomainError("pool probabilities must be non-negative");
      total += prob;
    }
    if (std::fabs(total - 1.0) > 1e-12) throw DomainError("pool probabilities must sum to 1");
  }

  std::size_t draw_index(Rng& rng) const {
    double u = rng.uniform();
    for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
      if (u < entries[i].second) return i;
      u -= entries[i].second;
    }
    return entries.size() - 1;
  }
  double draw(Rng& rng) const { return entries[draw_index(rng)].first; }
};

inline std::vector<double> default_level_grid() {
  std::vector<double> out;
  for (int i = 1; i <= 19; ++i) out.push_back(i * 0.05);
  return out;
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

struct CoverageConfig {
  std::size_t workers = 3;
  std::size_t trials = 1000;
  std::vector<double> levels = default_level_grid();
  StrategyConfig strategy{Strategy::greedy};  // used when workers > 3
  std::uint64_t seed = 0;
  // synthetic source
  std::size_t tasks = 500;
  double rate_low = 0.05;
  double rate_high = 0.45;
  double selectivity = 0.5;
};

struct CoverageRow {
  double level = 0.0;
  std::size_t covered = 0;
  std::size_t total = 0;
  std::size_t degenerate = 0;
  double coverage = 0.0;
};

struct CoverageResult {
  std::vector<CoverageRow> rows;
  std::size_t trials_run = 0;
  std::size_t trials_skipped = 0;  // observed data: no shared or gold tasks
};

namespace detail {

struct TrialOutcome {
  std::vector<std::size_t> covered, total, degenerate;
  bool skipped = false;
};

inline TrialOutcome score_trial(const ResponseMatrix& matrix, const std::vector<double>& true_rates,
                                const CoverageConfig& cfg, std::uint64_t trial_seed) {
  TrialOutcome out;
  out.covered.assign(cfg.levels.size(), 0);
  out.total.assign(cfg.levels.size(), 0);
  out.degenerate.assign(cfg.levels.size(), 0);
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    StrategyConfig strat = cfg.strategy;
    strat.diff3.confidence = cfg.levels[l];
    strat.seed = trial_seed;
    auto estimates = estimate_all_workers(matrix, strat);
    for (std::size_t w = 0; w < estimates.size(); ++w) {
      ++out.total[l];
      out.covered[l] += estimates[w].interval->contains(true_rates[w]) ? 1 : 0;
      out.degenerate[l] += estimates[w].degenerate ? 1 : 0;
    }
  }
  return out;
}

inline CoverageResult collect(const std::vector<TrialOutcome>& outcomes, const std::vector<double>& levels) {
  CoverageResult result;
  for (double l : levels) result.rows.push_back({l, 0, 0, 0, 0.0});
  for (const auto& o : outcomes) {
    if (o.skipped) {
      ++result.trials_skipped;
      continue;
    }
    ++result.trials_run;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      result.rows[l].covered += o.covered[l];
      result.rows[l].total += o.total[l];
      result.rows[l].degenerate += o.degenerate[l];
    }
  }
  for (auto& r : result.rows)
    r.coverage = r.total ? static_cast<double>(r.covered) / static_cast<double>(r.total) : 0.0;
  return result;
}

inline void check_coverage_config(const CoverageConfig& cfg) {
  if (cfg.workers < 3) throw DomainError("coverage needs at least 3 workers per trial");
  if (cfg.trials == 0) throw DomainError("coverage needs at least one trial");
  if (cfg.levels.empty()) throw DomainError("coverage needs at least one confidence level");
  for (double c : cfg.levels)
    if (!(c > 0.0 && c < 1.0)) throw DomainError("confidence levels must lie in (0, 1)");
}

}  // namespace detail

// Synthetic model-conforming crowds: rates ~ U[rate_low, rate_high]; a
// worker is covered when its true rate lies in its interval.
inline CoverageResult coverage_experiment(const CoverageConfig& cfg) {
  detail::check_coverage_config(cfg);
  if (!(cfg.rate_low >= 0.0 && cfg.rate_low <= cfg.rate_high && cfg.rate_high < 0.5))
    throw DomainError("synthetic rate range must lie inside [0, 0.5)");
  auto outcomes = parallel_map(cfg.trials, [&](std::size_t trial) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, "coverage", trial);
    Rng rng(derive_seed(trial_seed, "rates"));
    std::vector<double> rates(cfg.workers);
    for (auto& r : rates) r = rng.uniform(cfg.rate_low, cfg.rate_high);
    auto data = gen_matrix(rates, Selectivity(cfg.selectivity), cfg.tasks, derive_seed(trial_seed, "data"));
    return detail::score_trial(data.matrix, rates, cfg, trial_seed);
  });
  return detail::collect(outcomes, cfg.levels);
}

// Observed crowd with gold labels: each trial picks `workers` random
// workers, restricts to their shared tasks and uses each worker's error
// fraction against the gold labels as its true rate.
inline CoverageResult coverage_experiment(const ResponseMatrix& matrix, const GoldLabels& gold,
                                          const CoverageConfig& cfg) {
  detail::check_coverage_config(cfg);
  if (matrix.worker_count() < cfg.workers)
    throw DomainError("input has " + std::to_string(matrix.worker_count()) + " workers, trials need " +
                      std::to_string(cfg.workers));
  gold.validate_against(matrix);
  auto outcomes = parallel_map(cfg.trials, [&](std::size_t trial) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, "coverage", trial);
    Rng rng(derive_seed(trial_seed, "pick"));
    std::vector<std::size_t> all(matrix.worker_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    for (std::size_t i = 0; i < cfg.workers; ++i) std::swap(all[i], all[i + rng.below(all.size() - i)]);
    std::vector<std::string> chosen;
    for (std::size_t i = 0; i < cfg.workers; ++i) chosen.push_back(matrix.workers()[all[i]]);

    detail::TrialOutcome skipped;
    skipped.skipped = true;
    std::optional<ResponseMatrix> sub;
    try {
      sub = restrict_to(matrix, std::span<const std::string>(chosen));
    } catch (const DegenerateInputError&) {
      return skipped;
    }
    std::vector<double> proxy(cfg.workers, 0.0);
    std::size_t graded = 0;
    for (std::size_t t = 0; t < sub->task_count(); ++t) {
      auto it = gold.labels.find(sub->tasks()[t]);
      if (it == gold.labels.end()) continue;
      ++graded;
      for (std::size_t w = 0; w < cfg.workers; ++w) proxy[w] += *sub->at(t, w) != it->second ? 1.0 : 0.0;
    }
    if (graded == 0) return skipped;
    for (auto& p : proxy) p /= static_cast<double>(graded);
    return detail::score_trial(*sub, proxy, cfg, trial_seed);
  });
  return detail::collect(outcomes, cfg.levels);
}

// ---------------------------------------------------------------------------
// Estimator comparison
// ---------------------------------------------------------------------------

struct ComparisonConfig {
  std::size_t tasks = 400;
  std::size_t workers = 3;
  std::size_t reps = 500;
  std::uint64_t seed = 0;
  RateDistribution rates = RateDistribution::two_point();
  double selectivity = 0.5;
  double confidence = 0.9;  // interval level steering the partition search
  Strategy strategy = Strategy::exhaustive;
  EmConfig em{};
};

struct ComparisonRow {
  std::size_t tasks = 0;
  std::size_t workers = 0;
  std::size_t reps = 0;
  double ours = 0.0;  // mean |p - p_hat|, differences scheme
  double em = 0.0;
  double majority = 0.0;
  std::size_t degenerate = 0;  // estimates flagged degenerate
};

// Mean absolute error of the three estimators over `reps` synthetic crowds.
inline ComparisonRow comparison_experiment(const ComparisonConfig& cfg) {
  cfg.rates.validate();
  if (cfg.workers < 3) throw DomainError("comparison needs at least 3 workers");
  if (cfg.reps == 0 || cfg.tasks == 0) throw DomainError("comparison needs reps and tasks");
  struct RepError {
    double ours = 0, em = 0, majority = 0;
    std::size_t degenerate = 0;
  };
  auto reps = parallel_map(cfg.reps, [&](std::size_t rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, "comparison", rep);
    Rng rng(derive_seed(rep_seed, "rates"));
    std::vector<double> rates(cfg.workers);
    for (auto& r : rates) r = cfg.rates.draw(rng);
    auto data = gen_matrix(rates, Selectivity(cfg.selectivity), cfg.tasks, derive_seed(rep_seed, "data"));

    StrategyConfig strat{cfg.strategy};
    strat.seed = rep_seed;
    strat.diff3.confidence = cfg.confidence;
    auto ours = estimate_all_workers(data.matrix, strat);
    EmConfig em_cfg = cfg.em;
    em_cfg.seed = derive_seed(rep_seed, "em");
    auto em = em_estimate(data.matrix, em_cfg);
    auto maj = majority_estimate(data.matrix);

    RepError e;
    for (std::size_t w = 0; w < cfg.workers; ++w) {
      // A clamped agreement can push the raw estimate far outside [0, 1/2];
      // the error is scored on the displayed value.
      e.ours += std::fabs(rates[w] - ours[w].display_p_hat());
      e.em += std::fabs(rates[w] - em.p_hat[w]);
      e.majority += std::fabs(rates[w] - maj[w]);
      e.degenerate += ours[w].degenerate ? 1 : 0;
    }
    return e;
  });
  ComparisonRow row{cfg.tasks, cfg.workers, cfg.reps};
  for (const auto& e : reps) {
    row.ours += e.ours;
    row.em += e.em;
    row.majority += e.majority;
    row.degenerate += e.degenerate;
  }
  const double count = static_cast<double>(cfg.reps * cfg.workers);
  row.ours /= count;
  row.em /= count;
  row.majority /= count;
  return row;
}

// ---------------------------------------------------------------------------
// Exact decision error, simple vs weighted majority
// ---------------------------------------------------------------------------

struct DecisionErrorRow {
  std::size_t bad = 0;
  double simple = 0.0;
  double weighted = 0.0;
};

// For each number of bad workers 0..workers: exact error of both rules.
inline std::vector<DecisionErrorRow> decision_error_curve(std::size_t workers, double good_rate, double bad_rate,
                                                          Selectivity s) {
  std::vector<DecisionErrorRow> out;
  for (std::size_t bad = 0; bad <= workers; ++bad) {
    std::vector<double> rates(workers, good_rate);
    std::fill(rates.begin(), rates.begin() + static_cast<std::ptrdiff_t>(bad), bad_rate);
    out.push_back({bad, decision_error_probability(rates, s, DecisionRule::simple_majority),
                   decision_error_probability(rates, s, DecisionRule::weighted)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Price of accuracy
// ---------------------------------------------------------------------------

enum class PriceSweep { workers, tasks, tradeoff };

inline const char* to_string(PriceSweep s) noexcept {
  switch (s) {
    case PriceSweep::workers: return "workers";
    case PriceSweep::tasks: return "tasks";
    case PriceSweep::tradeoff: return "tradeoff";
  }
  return "?";
}

inline std::vector<std::size_t> stepped(std::size_t from, std::size_t to, std::size_t step) {
  std::vector<std::size_t> out;
  for (std::size_t v = from; v <= to; v += step) out.push_back(v);
  return out;
}

struct PriceConfig {
  double target_accuracy = 0.9;
  std::vector<double> levels = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  double tradeoff_level = 0.9;
  PriceSweep sweep = PriceSweep::tasks;
  std::size_t fixed_tasks = 500;
  std::size_t fixed_workers = 3;
  std::vector<std::size_t> worker_grid = stepped(3, 41, 2);
  std::vector<std::size_t> task_grid = stepped(25, 1000, 25);
  RateDistribution rates = RateDistribution::two_point();
  std::size_t reps = 20;
  StrategyConfig strategy{Strategy::greedy};
  std::uint64_t seed = 0;
  double selectivity = 0.5;
  WorstCaseMode mode = WorstCaseMode::inflate_all;
};

struct PriceRow {
  double level = 0.0;
  std::size_t workers = 0;   // fixed or required
  std::size_t tasks = 0;     // fixed or required
  double worst_case = 0.0;   // mean worst-case accuracy at the reported point
  bool saturated = false;    // target not reached within the grid
  std::size_t cost = 0;      // tasks x workers
};

// Mean (over reps and tasks) worst-case accuracy of weighted decisions for
// `workers` workers, `tasks` tasks and interval level `level`. Rep r uses the
// same rate draws and data stream for every grid point, so neighbouring grid
// points see nested crowds.
inline double mean_worst_case_accuracy(const PriceConfig& cfg, std::size_t workers, std::size_t tasks,
                                       double level) {
  auto per_rep = parallel_map(cfg.reps, [&](std::size_t rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, "price", rep);
    Rng rng(derive_seed(rep_seed, "rates"));
    std::vector<double> rates(workers);
    for (auto& r : rates) r = cfg.rates.draw(rng);
    auto data = gen_matrix(rates, Selectivity(cfg.selectivity), tasks, derive_seed(rep_seed, "data"));
    StrategyConfig strat = cfg.strategy;
    strat.seed = rep_seed;
    strat.diff3.confidence = level;
    auto est = estimate_all_workers(data.matrix, strat);
    std::vector<EstimatedVote> votes(workers);
    double total = 0.0;
    for (std::size_t t = 0; t < tasks; ++t) {
      for (std::size_t w = 0; w < workers; ++w)
        votes[w] = {*data.matrix.at(t, w), est[w].p_hat, est[w].interval->half_size()};
      total += *worst_case_accuracy(votes, Selectivity(cfg.selectivity), level, cfg.mode).worst_case;
    }
    return total / static_cast<double>(tasks);
  });
  double sum = 0.0;
  for (double v : per_rep) sum += v;
  return sum / static_cast<double>(per_rep.size());
}

// Smallest grid value of workers (or tasks) whose mean worst-case accuracy
// reaches the target; saturated rows report the last grid point.
inline std::vector<PriceRow> price_experiment(const PriceConfig& cfg) {
  if (!(cfg.target_accuracy > 0.0 && cfg.target_accuracy < 1.0))
    throw DomainError("target accuracy must lie in (0, 1)");
  cfg.rates.validate();
  if (cfg.reps == 0) throw DomainError("price experiment needs at least one rep");
  for (std::size_t w : cfg.worker_grid)
    if (w < 3) throw DomainError("worker grid values must be at least 3");
  if (cfg.worker_grid.empty() || cfg.task_grid.empty()) throw DomainError("price grids must be nonempty");

  auto scan = [&](double level, auto point) {
    PriceRow row{level};
    const std::size_t count = cfg.sweep == PriceSweep::workers ? cfg.worker_grid.size() : cfg.task_grid.size();
    for (std::size_t i = 0; i < count; ++i) {
      auto [w, n] = point(i);
      row.workers = w;
      row.tasks = n;
      row.worst_case = mean_worst_case_accuracy(cfg, w, n, level);
      row.cost = w * n;
      if (row.worst_case >= cfg.target_accuracy) return row;
    }
    row.saturated = true;
    return row;
  };

  std::vector<PriceRow> rows;
  switch (cfg.sweep) {
    case PriceSweep::workers:
      for (double level : cfg.levels)
        rows.push_back(scan(level, [&](std::size_t i) { return std::pair{cfg.worker_grid[i], cfg.fixed_tasks}; }));
      break;
    case PriceSweep::tasks:
      for (double level : cfg.levels)
        rows.push_back(scan(level, [&](std::size_t i) { return std::pair{cfg.fixed_workers, cfg.task_grid[i]}; }));
      break;
    case PriceSweep::tradeoff:
      for (std::size_t w : cfg.worker_grid)
        rows.push_back(scan(cfg.tradeoff_level, [&](std::size_t i) { return std::pair{w, cfg.task_grid[i]}; }));
      break;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Multi-phase eviction
// ---------------------------------------------------------------------------

struct PoolEntry {
  double rate = 0.0;
  double probability = 0.0;
  double keep_cost = 0.0;   // charged per phase while on the team
  double evict_cost = 0.0;  // charged when evicted
};

struct WorkerPool {
  std::vector<PoolEntry> entries;

  // Newly hired workers: rate 0.3 w.p. 0.3, 0.2 w.p. 0.4, 0.1 w.p. 0.3.
  // Keeping a 0.2 / 0.3 worker costs 1 / 3; evicting a 0.1 worker costs 5.
  static WorkerPool standard() {
    return {{{0.3, 0.3, 3.0, 0.0}, {0.2, 0.4, 1.0, 0.0}, {0.1, 0.3, 0.0, 5.0}}};
  }

  RateDistribution distribution() const {
    RateDistribution d;
    for (const auto& e : entries) d.entries.emplace_back(e.rate, e.probability);
    return d;
  }

  void validate() const {
    distribution().validate();
    for (const auto& e : entries)
      if (e.keep_cost < 0.0 || e.evict_cost < 0.0) throw DomainError("pool costs must be non-negative");
  }
};

enum class EvictionRule { normal, conservative };

inline const char* to_string(EvictionRule r) noexcept {
  return r == EvictionRule::normal ? "normal" : "conservative";
}

struct SimConfig {
  std::size_t phases = 30;
  std::size_t tasks = 25;
  std::size_t team_size = 7;
  WorkerPool pool = WorkerPool::standard();
  double threshold = 0.0;
  double confidence = 0.35;
  double alpha = 1.0;
  EvictionRule rule = EvictionRule::conservative;
  StrategyConfig estimator{Strategy::greedy};
  std::uint64_t seed = 0;
  std::size_t runs = 200;
  double selectivity = 0.5;

  void validate() const {
    if (phases == 0 || tasks == 0 || runs == 0) throw DomainError("phases, tasks and runs must be at least 1");
    if (team_size < 3) throw DomainError("team size must be at least 3 to estimate error rates");
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0, 1)");
    pool.validate();
  }
};

struct PhaseCost {
  double c1 = 0.0;
  double c2 = 0.0;
  double cost = 0.0;  // c1 + alpha * c2
};

struct CostReport {
  std::vector<PhaseCost> per_phase;  // averaged over runs
  double mean_c1 = 0.0;
  double mean_c2 = 0.0;
  double mean_cost = 0.0;
  std::vector<std::size_t> evictions_by_entry;  // indexed like pool.entries
  std::size_t evictions = 0;
  // Phases where the conservative rule would evict someone the normal rule
  // keeps, checked on the same state. Always 0.
  std::size_t dominance_violations = 0;
  std::size_t phases_checked = 0;
};

namespace detail {

struct TeamMember {
  std::size_t entry;
  double sum_p = 0.0;
  double sum_eps2 = 0.0;
  std::size_t phases = 0;

  double mean_p() const { return sum_p / static_cast<double>(phases); }
  // Half-width of the mean of independent per-phase estimates.
  double mean_eps() const { return std::sqrt(sum_eps2) / static_cast<double>(phases); }
};

struct RunResult {
  std::vector<PhaseCost> phases;
  std::vector<std::size_t> evictions_by_entry;
  std::size_t violations = 0;
};

inline RunResult eviction_run(const SimConfig& cfg, std::size_t run) {
  const auto dist = cfg.pool.distribution();
  Rng rng(derive_seed(cfg.seed, "eviction-run", run));
  std::vector<TeamMember> team;
  for (std::size_t i = 0; i < cfg.team_size; ++i) team.push_back({dist.draw_index(rng)});

  RunResult out;
  out.evictions_by_entry.assign(cfg.pool.entries.size(), 0);
  StrategyConfig strat = cfg.estimator;
  strat.diff3.confidence = cfg.confidence;
  std::vector<double> rates(cfg.team_size);
  for (std::size_t phase = 0; phase < cfg.phases; ++phase) {
    for (std::size_t i = 0; i < team.size(); ++i) rates[i] = cfg.pool.entries[team[i].entry].rate;
    auto data = gen_matrix(rates, Selectivity(cfg.selectivity), cfg.tasks, rng.next());
    strat.seed = rng.next();
    auto est = estimate_all_workers(data.matrix, strat);

    PhaseCost cost;
    for (std::size_t i = 0; i < team.size(); ++i) {
      auto& member = team[i];
      const double eps = est[i].interval->half_size();
      member.sum_p += est[i].p_hat;
      member.sum_eps2 += eps * eps;
      ++member.phases;
      const bool normal = member.mean_p() > cfg.threshold;
      const bool conservative = member.mean_p() - member.mean_eps() > cfg.threshold;
      if (conservative && !normal) ++out.violations;
      const bool evict = cfg.rule == EvictionRule::normal ? normal : conservative;
      if (evict) {
        cost.c2 += cfg.pool.entries[member.entry].evict_cost;
        ++out.evictions_by_entry[member.entry];
        member = TeamMember{dist.draw_index(rng)};
      }
    }
    for (const auto& member : team) cost.c1 += cfg.pool.entries[member.entry].keep_cost;
    cost.cost = cost.c1 + cfg.alpha * cost.c2;
    out.phases.push_back(cost);
  }
  return out;
}

}  // namespace detail

// Runs the phase loop `runs` times: estimate the team, update each worker's
// running mean rate and half-width, evict by rule, refill from the pool and
// charge c1 (team kept) and c2 (good workers evicted).
inline CostReport run_eviction_sim(const SimConfig& cfg) {
  cfg.validate();
  auto runs = parallel_map(cfg.runs, [&](std::size_t run) { return detail::eviction_run(cfg, run); });
  CostReport report;
  report.per_phase.assign(cfg.phases, PhaseCost{});
  report.evictions_by_entry.assign(cfg.pool.entries.size(), 0);
  for (const auto& r : runs) {
    for (std::size_t p = 0; p < cfg.phases; ++p) {
      report.per_phase[p].c1 += r.phases[p].c1;
      report.per_phase[p].c2 += r.phases[p].c2;
    }
    for (std::size_t e = 0; e < r.evictions_by_entry.size(); ++e) {
      report.evictions_by_entry[e] += r.evictions_by_entry[e];
      report.evictions += r.evictions_by_entry[e];
    }
    report.dominance_violations += r.violations;
    report.phases_checked += cfg.phases;
  }
  const double run_count = static_cast<double>(cfg.runs);
  for (auto& p : report.per_phase) {
    p.c1 /= run_count;
    p.c2 /= run_count;
    p.cost = p.c1 + cfg.alpha * p.c2;
    report.mean_c1 += p.c1;
    report.mean_c2 += p.c2;
  }
  report.mean_c1 /= static_cast<double>(cfg.phases);
  report.mean_c2 /= static_cast<double>(cfg.phases);
  report.mean_cost = report.mean_c1 + cfg.alpha * report.mean_c2;
  return report;
}

}  // namespace crowdconf
