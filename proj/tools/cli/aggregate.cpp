#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"

namespace cli {
namespace {

using namespace crowdconf;

struct AggregateOptions {
  std::string input;
  std::string format = "auto";
  std::string estimates;
  std::vector<std::string> rates;
  double selectivity = 0.5;
  bool worst_case = false;
  bool strict_worst_case = false;
  std::string rule = "weighted";
  double confidence = 0.9;
  std::string output;
  std::string report;
};

struct Rate {
  double p_hat = 0.0;
  std::optional<double> half_size;
  std::optional<double> level;
};

std::map<std::string, Rate> rates_from_report(const std::string& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw crowdconf::ParseError(0, "'" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.contains("groups") || !doc["groups"].is_array())
    throw ConsistencyError("'" + path + "' is not an estimate report");
  const auto& groups = doc["groups"];
  if (groups.size() != 1 || groups[0].value("kind", "") != "all")
    throw ConsistencyError("aggregation needs an unstratified binary estimate report");
  if (!groups[0].contains("estimates")) throw ConsistencyError("estimate report has no estimates");
  std::map<std::string, Rate> out;
  for (const auto& e : groups[0]["estimates"]) {
    if (e.value("pseudo_worker", false)) continue;
    Rate r;
    r.p_hat = e.at("p_hat").get<double>();
    if (!e.at("interval").is_null()) {
      r.half_size = e["interval"].at("half_size").get<double>();
      r.level = e["interval"].at("level").get<double>();
    }
    out[e.at("worker").get<std::string>()] = r;
  }
  return out;
}

std::map<std::string, Rate> rates_from_flags(const std::vector<std::string>& items, std::optional<double> level) {
  std::map<std::string, Rate> out;
  for (const auto& raw : items)
    for (const auto& item : split(raw, ',')) {
      const auto eq = item.rfind('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--rates expects worker=p or worker=p:eps, got '" + item + "'");
      const std::string worker = item.substr(0, eq);
      auto parts = split(item.substr(eq + 1), ':');
      if (parts.empty() || parts.size() > 2) throw UsageError("--rates expects worker=p or worker=p:eps");
      Rate r;
      r.p_hat = parse_double(parts[0], "--rates");
      if (parts.size() == 2) {
        r.half_size = parse_double(parts[1], "--rates");
        r.level = level;
      }
      if (!out.emplace(worker, r).second) throw UsageError("--rates lists worker '" + worker + "' twice");
    }
  return out;
}

void run_aggregate(const CLI::App& app, const AggregateOptions& o, const Globals& globals) {
  const auto start = std::chrono::steady_clock::now();
  const bool from_report = !o.estimates.empty();
  if (from_report == !o.rates.empty()) throw UsageError("give exactly one of --estimates and --rates");
  if (o.rule != "weighted" && o.rule != "majority") throw UsageError("--rule must be weighted or majority");
  const bool worst = o.worst_case || o.strict_worst_case;
  if (worst && o.rule != "weighted") throw UsageError("--worst-case needs --rule weighted");
  if (from_report && was_given(app, "confidence"))
    throw UsageError("--confidence comes from the estimate report; drop it or use --rates");

  const std::string bytes = read_file(o.input);
  std::istringstream in(bytes);
  const auto matrix = load_responses(in, resolve_format(o.format, o.input)).matrix;
  auto rates = from_report ? rates_from_report(o.estimates) : rates_from_flags(o.rates, o.confidence);

  std::set<std::string> missing, extra;
  for (const auto& w : matrix.workers())
    if (!rates.count(w)) missing.insert(w);
  for (const auto& [w, r] : rates)
    if (!matrix.find_worker(w)) extra.insert(w);
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "estimates do not match the responses' workers";
    for (const auto& w : missing) msg += "; no estimate for '" + w + "'";
    for (const auto& w : extra) msg += "; estimate for unknown worker '" + w + "'";
    throw ConsistencyError(msg);
  }

  std::optional<double> level;
  if (worst) {
    for (const auto& [w, r] : rates) {
      if (!r.half_size) throw DomainError("--worst-case needs an interval for every worker; '" + w + "' has none");
      if (level && *level != *r.level) throw ConsistencyError("estimate intervals carry different confidence levels");
      level = r.level;
    }
  }

  const Selectivity s(o.selectivity);
  const auto mode = o.strict_worst_case ? WorstCaseMode::sign_aware : WorstCaseMode::inflate_all;
  std::ostringstream csv;
  csv << "task_id,answer,accuracy,worst_case_accuracy,combined_error_bound\n";
  Json decisions = Json::array();
  for (std::size_t t = 0; t < matrix.task_count(); ++t) {
    std::vector<Vote> votes;
    std::vector<EstimatedVote> estimated;
    for (std::size_t w = 0; w < matrix.worker_count(); ++w) {
      auto a = matrix.at(t, w);
      if (!a) continue;
      const Rate& r = rates.at(matrix.workers()[w]);
      votes.push_back({*a, clamp_rate(r.p_hat)});
      if (worst) estimated.push_back({*a, r.p_hat, *r.half_size});
    }
    TaskDecision d = worst ? worst_case_accuracy(estimated, s, *level, mode)
                           : o.rule == "weighted" ? weighted_decision(votes, s)
                                                  : simple_majority_decision(votes, s);
    csv << csv_escape(matrix.tasks()[t]) << ',' << to_string(d.answer) << ',' << num(d.accuracy) << ','
        << (d.worst_case ? num(*d.worst_case) : "") << ','
        << (d.combined_error_bound ? num(*d.combined_error_bound) : "") << '\n';
    Json j{{"task", matrix.tasks()[t]}, {"answer", to_string(d.answer)}, {"alpha", d.alpha}, {"beta", d.beta},
           {"accuracy", d.accuracy}};
    if (d.worst_case) {
      j["worst_case_accuracy"] = *d.worst_case;
      j["combined_error_bound"] = *d.combined_error_bound;
      j["confidence"] = *d.confidence;
    }
    decisions.push_back(j);
  }
  write_output(o.output, csv.str());

  if (!o.report.empty()) {
    Json report = report_header("aggregate");
    report["input"] = {{"path", o.input}, {"digest", digest(bytes)}};
    if (from_report) report["estimates_digest"] = digest(read_file(o.estimates));
    Json config = effective_config(app);
    config["seed"] = std::to_string(globals.seed);
    report["config"] = config;
    report["decisions"] = decisions;
    report["timing"] = {
        {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    write_output(o.report, report.dump(2) + "\n");
  }
}

}  // namespace

void add_aggregate(CLI::App& root, const Globals& globals, std::vector<Command>& out) {
  auto opts = std::make_shared<AggregateOptions>();
  CLI::App* sub = root.add_subcommand(
      "aggregate", "Decide each task from worker answers (CSV: task_id,answer,accuracy,worst_case_accuracy,combined_error_bound)");
  sub->add_option("--input", opts->input, "Responses file")->required();
  sub->add_option("--format", opts->format, "Input format: auto|csv|json");
  sub->add_option("--estimates", opts->estimates, "Estimate report from `crowdconf estimate`");
  sub->add_option("--rates", opts->rates, "Inline rates: worker=p or worker=p:eps, comma-separated");
  sub->add_option("--selectivity", opts->selectivity, "Prior P(answer = Y)");
  sub->add_flag("--worst-case", opts->worst_case, "Add worst-case accuracy (every rate at p_hat + eps) and the combined error bound");
  sub->add_flag("--strict-worst-case", opts->strict_worst_case, "Worst case with disagreeing workers at p_hat - eps (implies --worst-case)");
  sub->add_option("--rule", opts->rule, "weighted|majority");
  sub->add_option("--confidence", opts->confidence, "Interval level for --rates with eps");
  sub->add_option("--output", opts->output, "Decisions CSV path (default: standard output)");
  sub->add_option("--report", opts->report, "Also write a JSON run report");
  out.push_back({sub, [sub, opts, &globals] { run_aggregate(*sub, *opts, globals); }});
}

}  // namespace cli
