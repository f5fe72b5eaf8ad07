#pragma once

// Turning worker answers into task results: posterior accuracy of a chosen
// answer, the maximum-likelihood weighted vote, and worst-case accuracy when
// the rates are only known up to confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "crowdconf/core.hpp"

namespace crowdconf {

// Prior probability that a task's true answer is Y.
class Selectivity {
 public:
  explicit Selectivity(double s = 0.5) : s_(s) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("selectivity must lie in (0, 1)");
  }
  double value() const noexcept { return s_; }

 private:
  double s_;
};

// Rates entering log-weights are clamped to [kWeightFloor, 1 - kWeightFloor].
inline constexpr double kWeightFloor = 1e-9;

inline double clamp_rate(double p) noexcept { return std::clamp(p, kWeightFloor, 1.0 - kWeightFloor); }

struct Vote {
  Answer answer;
  double rate;  // the worker's error probability
};

// A vote whose rate is an estimate with interval half-size `half_size`.
struct EstimatedVote {
  Answer answer;
  double p_hat;
  double half_size;
};

struct TaskDecision {
  Answer answer = Answer::no;
  double alpha = 0.0;     // log(s / (1 - s))
  double beta = 0.0;      // sum of x_i log((1 - p_i) / p_i)
  double accuracy = 0.0;  // posterior probability that `answer` is correct
  std::optional<double> worst_case;
  std::optional<double> combined_error_bound;
  std::optional<double> confidence;
};

enum class WorstCaseMode {
  inflate_all,  // every rate moves to p_hat + eps
  sign_aware,   // agreeing workers to p_hat + eps, disagreeing to p_hat - eps
};

namespace detail {

inline void check_votes(std::span<const Vote> votes) {
  for (const auto& v : votes)
    if (!(v.rate > 0.0 && v.rate < 1.0)) throw DomainError("error rates used for aggregation must lie in (0, 1)");
}

// log P[X = +1, evidence] and log P[X = -1, evidence].
inline std::pair<double, double> joint_logs(std::span<const Vote> votes, double s) {
  double log_yes = std::log(s);
  double log_no = std::log1p(-s);
  for (const auto& v : votes) {
    const double lp = std::log(v.rate);
    const double lq = std::log1p(-v.rate);
    if (v.answer == Answer::yes) {
      log_yes += lq;
      log_no += lp;
    } else {
      log_yes += lp;
      log_no += lq;
    }
  }
  return {log_yes, log_no};
}

}  // namespace detail

// Posterior probability that the true answer equals `candidate`.
inline double task_posterior(std::span<const Vote> votes, Selectivity s, Answer candidate) {
  detail::check_votes(votes);
  auto [log_yes, log_no] = detail::joint_logs(votes, s.value());
  const double mine = candidate == Answer::yes ? log_yes : log_no;
  const double other = candidate == Answer::yes ? log_no : log_yes;
  return 1.0 / (1.0 + std::exp(other - mine));
}

// Maximum-likelihood answer: Y iff alpha + beta > 0 (an exact tie gives N).
inline TaskDecision weighted_decision(std::span<const Vote> votes, Selectivity s) {
  detail::check_votes(votes);
  TaskDecision d;
  d.alpha = std::log(s.value() / (1.0 - s.value()));
  for (const auto& v : votes) d.beta += to_int(v.answer) * std::log((1.0 - v.rate) / v.rate);
  d.answer = d.alpha + d.beta > 0.0 ? Answer::yes : Answer::no;
  d.accuracy = task_posterior(votes, s, d.answer);
  return d;
}

// Unweighted vote, tie -> N. Accuracy is the posterior under the given rates.
inline TaskDecision simple_majority_decision(std::span<const Vote> votes, Selectivity s = Selectivity{}) {
  detail::check_votes(votes);
  int sum = 0;
  for (const auto& v : votes) sum += to_int(v.answer);
  TaskDecision d;
  d.answer = sum > 0 ? Answer::yes : Answer::no;
  d.alpha = std::log(s.value() / (1.0 - s.value()));
  for (const auto& v : votes) d.beta += to_int(v.answer) * std::log((1.0 - v.rate) / v.rate);
  d.accuracy = task_posterior(votes, s, d.answer);
  return d;
}

// Answers only, no rates known: the decision without an accuracy figure.
inline Answer simple_majority_answer(std::span<const Answer> answers) {
  int sum = 0;
  for (Answer a : answers) sum += to_int(a);
  return sum > 0 ? Answer::yes : Answer::no;
}

// (1 - c) + c (1 - worst_case): error probability when the accuracy bound
// itself only holds with confidence c.
inline double combined_error_bound(double worst_case, double c) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("confidence must lie in (0, 1)");
  return (1.0 - c) + c * (1.0 - worst_case);
}

// Decides with the point estimates, then re-evaluates the posterior of that
// answer with every rate moved to the pessimistic end of its interval.
inline TaskDecision worst_case_accuracy(std::span<const EstimatedVote> votes, Selectivity s, double c,
                                        WorstCaseMode mode = WorstCaseMode::inflate_all) {
  std::vector<Vote> point;
  point.reserve(votes.size());
  for (const auto& v : votes) {
    if (!(v.half_size >= 0.0)) throw DomainError("interval half-size must be non-negative");
    point.push_back({v.answer, clamp_rate(v.p_hat)});
  }
  TaskDecision d = weighted_decision(point, s);

  std::vector<Vote> pessimistic;
  pessimistic.reserve(votes.size());
  for (const auto& v : votes) {
    const bool agrees = v.answer == d.answer;
    const double shifted = mode == WorstCaseMode::sign_aware && !agrees ? v.p_hat - v.half_size : v.p_hat + v.half_size;
    pessimistic.push_back({v.answer, clamp_rate(shifted)});
  }
  d.worst_case = task_posterior(pessimistic, s, d.answer);
  d.combined_error_bound = combined_error_bound(*d.worst_case, c);
  d.confidence = c;
  return d;
}

enum class DecisionRule { weighted, simple_majority };

// Exact probability that `rule` returns the wrong answer for workers with
// the given true rates, summing over the truth and all 2^m correctness
// patterns.
inline double decision_error_probability(std::span<const double> rates, Selectivity s, DecisionRule rule) {
  if (rates.empty() || rates.size() > 24) throw DomainError("exact enumeration needs 1..24 workers");
  std::vector<Vote> votes(rates.size());
  double error = 0.0;
  for (Answer truth : {Answer::yes, Answer::no}) {
    const double prior = truth == Answer::yes ? s.value() : 1.0 - s.value();
    for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << rates.size()); ++pattern) {
      double prob = prior;
      for (std::size_t i = 0; i < rates.size(); ++i) {
        const bool wrong = (pattern >> i) & 1U;
        prob *= wrong ? rates[i] : 1.0 - rates[i];
        votes[i] = {wrong ? flip(truth) : truth, rates[i]};
      }
      const TaskDecision d =
          rule == DecisionRule::weighted ? weighted_decision(votes, s) : simple_majority_decision(votes, s);
      if (d.answer != truth) error += prob;
    }
  }
  return error;
}

}  // namespace crowdconf
