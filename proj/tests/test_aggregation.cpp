#include <gtest/gtest.h>

#include <cmath>

#include "crowdconf/aggregation.hpp"
#include "crowdconf/random.hpp"

using namespace crowdconf;

namespace {

constexpr Answer Y = Answer::yes;
constexpr Answer N = Answer::no;

// Three unreliable workers say Y, two reliable ones say N.
std::vector<Vote> five_workers() { return {{Y, 0.4}, {Y, 0.4}, {Y, 0.4}, {N, 0.1}, {N, 0.1}}; }

// Oracle: exact error of a rule by brute force over the truth and every answer vector.
double brute_force_error(const std::vector<double>& rates, double s, bool weighted) {
  const std::size_t m = rates.size();
  double error = 0.0;
  for (int truth : {1, -1})
    for (std::uint64_t bits = 0; bits < (1u << m); ++bits) {
      double prob = truth == 1 ? s : 1 - s;
      double score = std::log(s / (1 - s));
      int votes = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const int x = (bits >> i) & 1U ? 1 : -1;
        prob *= x == truth ? 1 - rates[i] : rates[i];
        score += x * std::log((1 - rates[i]) / rates[i]);
        votes += x;
      }
      const int decided = weighted ? (score > 0 ? 1 : -1) : (votes > 0 ? 1 : -1);
      if (decided != truth) error += prob;
    }
  return error;
}

}  // namespace

TEST(Posterior, SingleWorker) {
  std::vector<Vote> v = {{Y, 0.1}};
  EXPECT_NEAR(task_posterior(v, Selectivity(0.5), Y), 0.9, 1e-12);
  EXPECT_NEAR(task_posterior(v, Selectivity(0.5), N), 0.1, 1e-12);
}

TEST(Posterior, TwoDisagreeingEqualWorkers) {
  std::vector<Vote> v = {{Y, 0.3}, {N, 0.3}};
  EXPECT_NEAR(task_posterior(v, Selectivity(0.5), Y), 0.5, 1e-12);
  EXPECT_NEAR(task_posterior(v, Selectivity(0.5), N), 0.5, 1e-12);
}

TEST(Posterior, FiveWorkerScenario) {
  const double yes = std::pow(0.6, 3) * 0.01, no = std::pow(0.4, 3) * 0.81;
  auto v = five_workers();
  EXPECT_NEAR(task_posterior(v, Selectivity(0.5), N), no / (yes + no), 1e-12);
  EXPECT_NEAR(task_posterior(v, Selectivity(0.5), N), 0.96, 1e-12);
}

TEST(Posterior, SumsToOne) {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    std::vector<Vote> v(1 + rng.below(9));
    for (auto& x : v) x = {rng.bernoulli(0.5) ? Y : N, rng.uniform(0.01, 0.99)};
    Selectivity s(rng.uniform(0.05, 0.95));
    EXPECT_NEAR(task_posterior(v, s, Y) + task_posterior(v, s, N), 1.0, 1e-12);
  }
}

TEST(Decision, WeightedOverridesTheCount) {
  auto v = five_workers();
  auto w = weighted_decision(v, Selectivity(0.5));
  EXPECT_EQ(w.answer, N);
  EXPECT_NEAR(w.accuracy, 0.96, 1e-12);
  EXPECT_EQ(simple_majority_decision(v).answer, Y);
  std::vector<Answer> answers = {Y, Y, Y, N, N};
  EXPECT_EQ(simple_majority_answer(answers), Y);
}

TEST(Decision, EqualRatesReduceToCounting) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const std::size_t m = 1 + 2 * rng.below(5);
    std::vector<Vote> v(m);
    std::vector<Answer> answers(m);
    for (std::size_t k = 0; k < m; ++k) {
      answers[k] = rng.bernoulli(0.5) ? Y : N;
      v[k] = {answers[k], 0.3};
    }
    EXPECT_EQ(weighted_decision(v, Selectivity(0.5)).answer, simple_majority_answer(answers));
  }
}

TEST(Decision, PriorCanDominate) {
  std::vector<Vote> v = {{N, 0.4}};
  auto d = weighted_decision(v, Selectivity(0.9));
  EXPECT_NEAR(d.alpha, std::log(9.0), 1e-12);
  EXPECT_NEAR(d.beta, -std::log(1.5), 1e-12);
  EXPECT_EQ(d.answer, Y);
}

TEST(Decision, ExactTieGoesToNo) {
  std::vector<Vote> v = {{Y, 0.2}, {N, 0.2}};
  EXPECT_EQ(weighted_decision(v, Selectivity(0.5)).answer, N);
  EXPECT_EQ(simple_majority_decision(v).answer, N);
}

TEST(Decision, ScalingWeightsKeepsTheAnswer) {
  // Rates p and p' with log((1-p')/p') = k log((1-p)/p).
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const double k = rng.uniform(0.2, 3.0);
    std::vector<Vote> a(5), b(5);
    for (std::size_t j = 0; j < 5; ++j) {
      const double p = rng.uniform(0.05, 0.45);
      const double w = k * std::log((1 - p) / p);
      a[j] = {rng.bernoulli(0.5) ? Y : N, p};
      b[j] = {a[j].answer, 1.0 / (1.0 + std::exp(w))};
    }
    EXPECT_EQ(weighted_decision(a, Selectivity(0.5)).answer, weighted_decision(b, Selectivity(0.5)).answer);
  }
}

TEST(Decision, RejectsRatesOutsideTheOpenInterval) {
  std::vector<Vote> v = {{Y, 0.0}};
  EXPECT_THROW(weighted_decision(v, Selectivity(0.5)), DomainError);
  EXPECT_THROW(Selectivity(1.0), DomainError);
  EXPECT_EQ(clamp_rate(-0.2), kWeightFloor);
}

TEST(WorstCase, CombinedBound) {
  EXPECT_NEAR(combined_error_bound(0.95, 0.9), 0.145, 1e-12);
  EXPECT_THROW(combined_error_bound(0.95, 1.0), DomainError);
}

TEST(WorstCase, ZeroHalfSizesChangeNothing) {
  std::vector<EstimatedVote> v = {{Y, 0.4, 0}, {Y, 0.4, 0}, {Y, 0.4, 0}, {N, 0.1, 0}, {N, 0.1, 0}};
  auto d = worst_case_accuracy(v, Selectivity(0.5), 0.9);
  EXPECT_DOUBLE_EQ(*d.worst_case, d.accuracy);
  EXPECT_NEAR(*d.combined_error_bound, 0.1 + 0.9 * (1 - d.accuracy), 1e-12);
  EXPECT_DOUBLE_EQ(*d.confidence, 0.9);
}

TEST(WorstCase, InflatingLowersTheScenarioAccuracy) {
  std::vector<EstimatedVote> v = {{Y, 0.4, 0.05}, {Y, 0.4, 0.05}, {Y, 0.4, 0.05}, {N, 0.1, 0.05}, {N, 0.1, 0.05}};
  auto d = worst_case_accuracy(v, Selectivity(0.5), 0.9);
  EXPECT_EQ(d.answer, N);
  EXPECT_LE(*d.worst_case, d.accuracy);
  auto strict = worst_case_accuracy(v, Selectivity(0.5), 0.9, WorstCaseMode::sign_aware);
  EXPECT_LE(*strict.worst_case, *d.worst_case);
}

TEST(WorstCase, SignAwareIsALowerBoundOverTheBox) {
  // The sign-aware value is the minimum posterior over the interval box.
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    std::vector<EstimatedVote> v(4);
    for (auto& x : v) x = {rng.bernoulli(0.5) ? Y : N, rng.uniform(0.1, 0.35), rng.uniform(0.0, 0.08)};
    auto d = worst_case_accuracy(v, Selectivity(0.5), 0.9, WorstCaseMode::sign_aware);
    for (int probe = 0; probe < 50; ++probe) {
      std::vector<Vote> inside(v.size());
      for (std::size_t k = 0; k < v.size(); ++k)
        inside[k] = {v[k].answer, rng.uniform(v[k].p_hat - v[k].half_size, v[k].p_hat + v[k].half_size)};
      EXPECT_GE(task_posterior(inside, Selectivity(0.5), d.answer), *d.worst_case - 1e-12);
    }
  }
}

TEST(Optimality, WeightedNeverLosesToMajority) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const std::size_t m = 1 + rng.below(9);
    std::vector<double> rates(m);
    for (auto& r : rates) r = rng.uniform(0.02, 0.48);
    const Selectivity s(rng.uniform(0.1, 0.9));
    const double w = decision_error_probability(rates, s, DecisionRule::weighted);
    const double sm = decision_error_probability(rates, s, DecisionRule::simple_majority);
    EXPECT_LE(w, sm + 1e-12);
    EXPECT_NEAR(w, brute_force_error(rates, s.value(), true), 1e-12);
    EXPECT_NEAR(sm, brute_force_error(rates, s.value(), false), 1e-12);
  }
}

TEST(Optimality, SixBadOfNine) {
  std::vector<double> rates(9, 0.1);
  for (std::size_t i = 0; i < 6; ++i) rates[i] = 0.3;
  const double w = decision_error_probability(rates, Selectivity(0.5), DecisionRule::weighted);
  const double sm = decision_error_probability(rates, Selectivity(0.5), DecisionRule::simple_majority);
  EXPECT_LE(w, 0.6 * sm);
  EXPECT_NEAR(sm, 0.02, 0.015);
  EXPECT_NEAR(w, 0.01, 0.012);
}
