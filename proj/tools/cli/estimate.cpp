#include <chrono>
#include <memory>
#include <optional>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"

namespace cli {
namespace {

using namespace crowdconf;

struct EstimateOptions {
  std::string input;
  std::string format = "auto";
  std::string method = "diffgen";
  double confidence = 0.9;
  std::string mode = "linearized";
  bool approx = false;
  std::string strategy = "exhaustive";
  double pruning_threshold = 0.35;
  std::string tie_break = "hashed";
  std::string stratify;
  std::string selectivity;
  bool categorical = false;
  std::string workers;
  std::string output;
  std::string per_worker_csv;
  bool list_candidates = false;
  std::size_t em_max_iter = 1000;
  double em_tol = 1e-6;
  std::size_t em_restarts = 1;
};

struct Group {
  Group(std::string kind, std::string label) : kind(std::move(kind)), label(std::move(label)) {}
  std::string kind;  // all | stratum | bit
  std::string label;
  Json extra = Json::object();
  std::optional<ResponseMatrix> matrix;  // what was estimated
  std::size_t tasks_in = 0;
  std::string skipped;  // reason, when nothing could be estimated
};

void check_conflicts(const CLI::App& app, const EstimateOptions& o) {
  auto given = [&](const char* name) { return was_given(app, name); };
  auto forbid = [&](std::initializer_list<const char*> names, const std::string& why) {
    for (const char* n : names)
      if (given(n)) throw UsageError(std::string("--") + n + " " + why);
  };
  const bool interval_method = o.method == "diff3" || o.method == "diffgen";
  if (!interval_method && o.method != "em" && o.method != "majority")
    throw UsageError("--method must be diff3, diffgen, em or majority");
  if (!interval_method)
    forbid({"confidence", "mode", "approx", "strategy", "pruning-threshold", "tie-break", "list-candidates"},
           "does not apply to --method " + o.method);
  if (o.method == "diff3")
    forbid({"strategy", "pruning-threshold", "tie-break", "list-candidates"}, "only applies to --method diffgen");
  if (o.method != "em") forbid({"em-max-iter", "em-tol", "em-restarts"}, "only applies to --method em");
  if (given("pruning-threshold") && o.strategy != "pruning")
    throw UsageError("--pruning-threshold only applies to --strategy pruning");
  if (o.categorical) forbid({"selectivity", "stratify"}, "cannot be combined with --categorical");
  if (o.mode != "linearized" && o.mode != "conservative")
    throw UsageError("--mode must be linearized or conservative");
  if (o.tie_break != "hashed" && o.tie_break != "yes") throw UsageError("--tie-break must be hashed or yes");
  parse_strategy(o.strategy);
}

StratificationRule parse_stratify(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--stratify expects type:<column> or difficulty:<threshold>");
  const std::string kind = text.substr(0, colon), arg = text.substr(colon + 1);
  if (kind == "type" && !arg.empty()) return StratificationRule::by_type(arg);
  if (kind == "difficulty") return StratificationRule::by_agreement(parse_double(arg, "--stratify"));
  throw UsageError("--stratify expects type:<column> or difficulty:<threshold>");
}

class Estimator {
 public:
  Estimator(const EstimateOptions& o, std::uint64_t seed) : o_(o) {
    strat_.kind = parse_strategy(o.strategy);
    strat_.pruning_threshold = o.pruning_threshold;
    strat_.seed = seed;
    strat_.diff3.confidence = o.confidence;
    strat_.diff3.mode = o.mode == "conservative" ? IntervalMode::conservative : IntervalMode::linearized;
    strat_.diff3.approx_intervals = o.approx;
    strat_.tie_break = o.tie_break == "yes" ? TieBreak::yes : TieBreak::hashed;
    strat_.record_candidates = o.list_candidates;
    em_.max_iter = o.em_max_iter;
    em_.tol = o.em_tol;
    em_.restarts = o.em_restarts;
    em_.seed = derive_seed(seed, "em");
  }

  // Estimates for one complete matrix. `pseudo` names a pseudo-worker whose
  // declared rate is echoed next to its estimate.
  Json run(const ResponseMatrix& matrix, const std::optional<SelectivityWorker>& pseudo) const {
    Json out;
    Json estimates = Json::array();
    auto annotate = [&](Json e) {
      if (pseudo && e["worker"] == pseudo->worker) {
        e["pseudo_worker"] = true;
        e["declared_rate"] = pseudo->declared_rate;
      }
      return e;
    };
    if (o_.method == "diff3") {
      if (matrix.worker_count() != 3)
        throw DomainError("--method diff3 needs exactly 3 workers, got " + std::to_string(matrix.worker_count()) +
                          "; use --workers or --method diffgen");
      auto triple = estimate_three(matrix, strat_.diff3);
      for (const auto& e : triple.estimates) estimates.push_back(annotate(to_json(e, matrix)));
      Json q = Json::array();
      for (const auto& a : triple.agreements)
        q.push_back({{"pair", {matrix.workers()[a.i], matrix.workers()[a.j]}},
                     {"agree", a.agree_count},
                     {"n", a.n},
                     {"q_hat", a.q_hat}});
      out["agreements"] = q;
      out["c_nominal"] = triple.c_nominal;
      out["c_reported"] = triple.c_reported;
    } else if (o_.method == "diffgen") {
      auto results = parallel_map(matrix.worker_count(), [&](std::size_t w) {
        return estimate_general(matrix, w, strat_);
      });
      for (const auto& g : results) {
        Json e = annotate(to_json(g.estimate, matrix));
        e["candidates_considered"] = g.candidates_considered;
        if (o_.list_candidates) {
          Json list = Json::array();
          for (const auto& c : g.candidates) {
            Json s = Json::array(), t = Json::array();
            for (std::size_t w : c.partition.s) s.push_back(matrix.workers()[w]);
            for (std::size_t w : c.partition.t) t.push_back(matrix.workers()[w]);
            list.push_back({{"s", s}, {"t", t}, {"p_hat", c.p_hat}, {"half_size", c.half_size},
                            {"degenerate", c.degenerate}});
          }
          e["candidates"] = list;
        }
        estimates.push_back(e);
      }
      out["c_reported"] = results.front().triple.c_reported;
    } else if (o_.method == "em") {
      auto r = em_estimate(matrix, em_);
      for (std::size_t w = 0; w < matrix.worker_count(); ++w) {
        WorkerEstimate e{matrix.workers()[w], r.p_hat[w], std::nullopt, Method::em, false, std::nullopt};
        estimates.push_back(annotate(to_json(e, matrix)));
      }
      out["em"] = {{"iterations", r.iterations}, {"converged", r.converged},
                   {"log_likelihood", r.log_likelihood.back()}};
    } else {
      auto p = majority_estimate(matrix);
      for (std::size_t w = 0; w < matrix.worker_count(); ++w) {
        WorkerEstimate e{matrix.workers()[w], p[w], std::nullopt, Method::majority, false, std::nullopt};
        estimates.push_back(annotate(to_json(e, matrix)));
      }
    }
    out["estimates"] = estimates;
    return out;
  }

 private:
  const EstimateOptions& o_;
  StrategyConfig strat_;
  EmConfig em_;
};

ResponseMatrix prepare(const ResponseMatrix& matrix, const std::vector<std::string>& subset) {
  if (subset.empty()) return complete_part(matrix);
  return restrict_to(matrix, std::span<const std::string>(subset));
}

void write_per_worker_csv(const std::string& path, const Json& groups) {
  std::ostringstream out;
  out << "group,worker,method,p_hat,lo,hi,half_size,level,degenerate\n";
  for (const auto& g : groups) {
    if (!g.contains("estimates")) continue;
    for (const auto& e : g["estimates"]) {
      out << csv_escape(g["label"].get<std::string>()) << ',' << csv_escape(e["worker"].get<std::string>()) << ','
          << e["method"].get<std::string>() << ',' << num(e["p_hat"].get<double>()) << ',';
      if (e["interval"].is_null()) {
        out << ",,,";
      } else {
        const auto& iv = e["interval"];
        out << num(iv["lo"].get<double>()) << ',' << num(iv["hi"].get<double>()) << ','
            << num(iv["half_size"].get<double>()) << ',' << num(iv["level"].get<double>());
      }
      out << ',' << (e["degenerate"].get<bool>() ? "true" : "false") << '\n';
    }
  }
  write_output(path, out.str());
}

void run_estimate(const CLI::App& app, const EstimateOptions& o, const Globals& globals) {
  const auto start = std::chrono::steady_clock::now();
  check_conflicts(app, o);
  const auto subset = split(o.workers, ',');
  const std::string bytes = read_file(o.input);
  const auto format = resolve_format(o.format, o.input);
  Estimator estimator(o, globals.seed);

  std::optional<Selectivity> selectivity;
  if (!o.selectivity.empty()) selectivity = Selectivity(parse_double(o.selectivity, "--selectivity"));

  std::vector<Group> groups;
  Json categories;
  if (o.categorical) {
    std::istringstream in(bytes);
    auto responses = load_categorical(in, format);
    CategoricalScheme scheme(responses.categories);
    categories = scheme.categories();
    auto bits = categorical_reduce(responses, scheme);
    for (std::size_t b = 0; b < bits.size(); ++b) {
      Group g("bit", "bit" + std::to_string(b));
      g.extra["yes_side"] = scheme.yes_side(b);
      g.tasks_in = bits[b].task_count();
      g.matrix = prepare(bits[b], subset);
      groups.push_back(std::move(g));
    }
  } else {
    std::istringstream in(bytes);
    auto loaded = load_responses(in, format);
    if (o.stratify.empty()) {
      Group g("all", "all");
      g.tasks_in = loaded.matrix.task_count();
      g.matrix = prepare(loaded.matrix, subset);
      groups.push_back(std::move(g));
    } else {
      auto strata = stratify(loaded.matrix, parse_stratify(o.stratify));
      for (auto& [label, sub] : strata.strata) {
        Group g("stratum", label);
        g.tasks_in = sub.task_count();
        try {
          g.matrix = prepare(sub, subset);
        } catch (const DegenerateInputError& e) {
          g.skipped = e.what();
        }
        groups.push_back(std::move(g));
      }
      for (const auto& label : strata.omitted) {
        Group g("stratum", label);
        g.skipped = "no tasks";
        groups.push_back(std::move(g));
      }
    }
  }

  Json report = report_header("estimate");
  report["input"] = {{"path", o.input}, {"format", format == InputFormat::json ? "json" : "csv"},
                     {"digest", digest(bytes)}};
  Json config = effective_config(app);
  config["seed"] = std::to_string(globals.seed);
  report["config"] = config;
  if (o.categorical) report["categories"] = categories;

  Json out_groups = Json::array();
  for (auto& g : groups) {
    Json j;
    j["kind"] = g.kind;
    j["label"] = g.label;
    for (const auto& [k, v] : g.extra.items()) j[k] = v;
    j["tasks_in"] = g.tasks_in;
    if (!g.skipped.empty()) {
      j["skipped"] = g.skipped;
      out_groups.push_back(j);
      continue;
    }
    std::optional<SelectivityWorker> pseudo;
    const ResponseMatrix* matrix = &*g.matrix;
    if (selectivity) {
      pseudo = with_selectivity_worker(*g.matrix, *selectivity);
      matrix = &pseudo->matrix;
    }
    j["tasks_used"] = matrix->task_count();
    j["workers"] = matrix->workers();
    const Json result = estimator.run(*matrix, pseudo);
    for (const auto& [k, v] : result.items()) j[k] = v;
    out_groups.push_back(j);
  }
  report["groups"] = out_groups;
  report["timing"] = {
      {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};

  if (!o.per_worker_csv.empty()) write_per_worker_csv(o.per_worker_csv, out_groups);
  write_output(o.output, report.dump(2) + "\n");
}

}  // namespace

void add_estimate(CLI::App& root, const Globals& globals, std::vector<Command>& out) {
  auto opts = std::make_shared<EstimateOptions>();
  CLI::App* sub = root.add_subcommand("estimate", "Estimate worker error rates (JSON report)");
  sub->add_option("--input", opts->input, "Responses file (task_id,worker_id,answer)")->required();
  sub->add_option("--format", opts->format, "Input format: auto|csv|json");
  sub->add_option("--method", opts->method, "diff3|diffgen|em|majority");
  sub->add_option("--confidence", opts->confidence, "Interval confidence level c in (0,1)");
  sub->add_option("--mode", opts->mode, "Interval mode: linearized (level c) or conservative (level 3c-2)");
  sub->add_flag("--approx", opts->approx, "Normal-approximation half-sizes for agreement rates");
  sub->add_option("--strategy", opts->strategy, "diffgen partition search: exhaustive|pruning|greedy");
  sub->add_option("--pruning-threshold", opts->pruning_threshold, "Peers kept by pruning have preliminary rate below this");
  sub->add_option("--tie-break", opts->tie_break, "Super-worker ties: hashed|yes");
  sub->add_option("--stratify", opts->stratify, "type:<column> or difficulty:<threshold>");
  sub->add_option("--selectivity", opts->selectivity, "Known P(answer = Y); adds a constant pseudo-worker");
  sub->add_flag("--categorical", opts->categorical, "Answers are arbitrary categories, reduced to binary questions per code bit");
  sub->add_option("--workers", opts->workers, "Comma-separated worker subset (tasks all of them answered)");
  sub->add_option("--output", opts->output, "Report path (default: standard output)");
  sub->add_option("--per-worker-csv", opts->per_worker_csv, "Also write per-worker estimates as CSV");
  sub->add_flag("--list-candidates", opts->list_candidates, "diffgen: list every partition evaluated");
  sub->add_option("--em-max-iter", opts->em_max_iter, "EM iteration cap");
  sub->add_option("--em-tol", opts->em_tol, "EM stops when no rate moves by more than this");
  sub->add_option("--em-restarts", opts->em_restarts, "EM random starts (best likelihood wins)");
  out.push_back({sub, [sub, opts, &globals] { run_estimate(*sub, *opts, globals); }});
}

}  // namespace cli
