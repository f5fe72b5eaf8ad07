#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "crowdconf/diffgen.hpp"
#include "crowdconf/simulator.hpp"

using namespace crowdconf;

namespace {

ResponseMatrix columns(std::vector<std::vector<Answer>> cols) {
  std::vector<std::string> workers;
  for (std::size_t w = 0; w < cols.size(); ++w) workers.push_back("w" + std::to_string(w + 1));
  return ResponseMatrix::from_columns(numbered_ids('t', cols[0].size()), workers, cols);
}

constexpr Answer Y = Answer::yes;
constexpr Answer N = Answer::no;

// Brute-force enumeration of unordered disjoint nonempty pairs over k items.
std::size_t count_pairs_by_hand(std::size_t k) {
  std::size_t ordered = 0;
  const std::size_t total = static_cast<std::size_t>(std::pow(3, k));
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code, s = 0, t = 0;
    for (std::size_t i = 0; i < k; ++i, c /= 3) {
      s += c % 3 == 1;
      t += c % 3 == 2;
    }
    ordered += s > 0 && t > 0;
  }
  return ordered / 2;
}

}  // namespace

TEST(SuperWorker, MajorityExamples) {
  auto m = columns({{Y, N, Y}, {Y, Y, N}, {N, Y, N}, {Y, N, N}});
  std::vector<std::size_t> one = {2};
  EXPECT_EQ(super_majority(m, one), (std::vector<Answer>{N, Y, N}));
  std::vector<std::size_t> three = {0, 1, 2};
  EXPECT_EQ(super_majority(m, three), (std::vector<Answer>{Y, Y, N}));
  std::vector<std::size_t> two = {0, 1};  // tasks 2 and 3 tie
  EXPECT_EQ(super_majority(m, two), (std::vector<Answer>{Y, Y, Y}));
  std::vector<std::size_t> none;
  EXPECT_THROW(super_majority(m, none), DomainError);
}

TEST(SuperWorker, HashedTiesDependOnTheMemberSet) {
  const std::size_t n = 400;
  std::vector<Answer> yes(n, Y), no(n, N);
  auto m = columns({yes, no, yes, no, yes});
  std::vector<std::size_t> a = {0, 1}, a_rev = {1, 0}, b = {2, 3};
  auto ta = super_majority(m, a, TieBreak::hashed);
  EXPECT_EQ(ta, super_majority(m, a_rev, TieBreak::hashed));
  auto tb = super_majority(m, b, TieBreak::hashed);
  std::size_t yes_count = 0, same = 0;
  for (std::size_t t = 0; t < n; ++t) {
    yes_count += ta[t] == Y;
    same += ta[t] == tb[t];
  }
  // Roughly fair coins that differ between disjoint sets.
  EXPECT_GT(yes_count, 140u);
  EXPECT_LT(yes_count, 260u);
  EXPECT_LT(same, 260u);
  EXPECT_EQ(majority_cell(3, TieBreak::hashed, 1, 0), 1);
  EXPECT_EQ(majority_cell(-1, TieBreak::hashed, 1, 0), -1);
  EXPECT_EQ(majority_cell(0, TieBreak::yes, 1, 0), 1);
}

TEST(SuperWorker, ErrorRateExamples) {
  EXPECT_NEAR(super_error_rate({0.1, 0.4, 0.4}), 0.208, 1e-12);
  EXPECT_NEAR(super_error_rate({0.1, 0.1, 0.1}), 3 * 0.9 * 0.01 + 0.001, 1e-12);
  EXPECT_NEAR(super_error_rate({0.1, 0.1, 0.1}), 0.028, 1e-12);
  EXPECT_DOUBLE_EQ(super_error_rate({0.27}), 0.27);
  EXPECT_GT(super_error_rate({0.1, 0.4, 0.4}), 0.1);
  // Even sizes: a tie is a coin flip.
  EXPECT_NEAR(super_error_rate({0.2, 0.3}), 0.2 * 0.3 + 0.5 * (0.2 * 0.7 + 0.8 * 0.3), 1e-12);
  EXPECT_THROW(super_error_rate({1.5}), DomainError);
}

TEST(SuperWorker, ErrorRateMatchesSimulation) {
  const std::vector<double> rates = {0.1, 0.3, 0.35, 0.2, 0.4};
  auto data = gen_matrix(rates, Selectivity(0.5), 200000, 8);
  std::vector<std::size_t> all = {0, 1, 2, 3, 4};
  auto maj = super_majority(data.matrix, all);
  std::size_t wrong = 0;
  for (std::size_t t = 0; t < maj.size(); ++t) wrong += maj[t] != data.truth[t];
  EXPECT_NEAR(static_cast<double>(wrong) / 200000.0, super_error_rate(rates), 0.004);
}

TEST(Exhaustive, CandidateCount) {
  for (std::size_t k = 2; k <= 7; ++k) EXPECT_EQ(exhaustive_candidate_count(k), count_pairs_by_hand(k)) << k;
  EXPECT_EQ(exhaustive_candidate_count(4), 25u);

  auto data = gen_matrix({0.1, 0.2, 0.3, 0.25, 0.15}, Selectivity(0.5), 300, 2);
  StrategyConfig cfg;
  cfg.record_candidates = true;
  auto est = estimate_general(data.matrix, 0, cfg);
  EXPECT_EQ(est.candidates_considered, 25u);
  ASSERT_EQ(est.candidates.size(), 25u);
  std::set<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> seen;
  double best = 1e9;
  for (const auto& c : est.candidates) {
    auto s = c.partition.s, t = c.partition.t;
    if (t < s) std::swap(s, t);
    EXPECT_TRUE(seen.insert({s, t}).second);
    best = std::min(best, c.half_size);
  }
  EXPECT_EQ(est.estimate.interval->half_size(), best);
  EXPECT_EQ(est.estimate.method, Method::diffgen);
  ASSERT_TRUE(est.estimate.partition_used);
  EXPECT_EQ(est.estimate.partition_used->target, 0u);
}

TEST(Strategies, ThreeWorkersReduceToDiff3) {
  auto data = gen_matrix({0.1, 0.2, 0.3}, Selectivity(0.5), 400, 6);
  auto triple = estimate_three(data.matrix);
  for (Strategy kind : {Strategy::exhaustive, Strategy::pruning, Strategy::greedy})
    for (std::size_t w = 0; w < 3; ++w) {
      StrategyConfig cfg{kind};
      auto est = estimate_general(data.matrix, w, cfg).estimate;
      EXPECT_NEAR(est.p_hat, triple.estimates[w].p_hat, 1e-12);
      EXPECT_NEAR(est.interval->lo, triple.estimates[w].interval->lo, 1e-12);
      EXPECT_NEAR(est.interval->hi, triple.estimates[w].interval->hi, 1e-12);
    }
}

TEST(Partition, SingletonsMatchDiff3) {
  auto data = gen_matrix({0.1, 0.2, 0.3, 0.4}, Selectivity(0.5), 400, 6);
  auto est = estimate_with_partition(data.matrix, {1, {0}, {3}});
  auto triple = estimate_three(restrict_to(data.matrix, {"w2", "w1", "w4"}));
  EXPECT_NEAR(est.p_hat, triple.estimates[0].p_hat, 1e-12);
  EXPECT_EQ(est.worker, "w2");
}

TEST(Partition, InvalidPartitions) {
  auto data = gen_matrix({0.1, 0.2, 0.3, 0.4, 0.2}, Selectivity(0.5), 50, 6);
  EXPECT_THROW(estimate_with_partition(data.matrix, {0, {1, 2}, {2, 3}}), DomainError);
  EXPECT_THROW(estimate_with_partition(data.matrix, {0, {0}, {2}}), DomainError);
  EXPECT_THROW(estimate_with_partition(data.matrix, {0, {}, {2}}), DomainError);
  EXPECT_THROW(estimate_with_partition(data.matrix, {0, {1}, {9}}), DomainError);
}

TEST(Partition, SevenWorkersEvenSplit) {
  auto data = gen_matrix({0.2, 0.1, 0.2, 0.3, 0.1, 0.2, 0.3}, Selectivity(0.5), 10000, 21);
  auto est = estimate_with_partition(data.matrix, {0, {1, 2, 3}, {4, 5, 6}});
  EXPECT_NEAR(est.p_hat, 0.2, 0.03);
}

TEST(Greedy, BeatsTheNaiveSplitMostOfTheTime) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto data = gen_matrix({0.2, 0.1, 0.1, 0.4, 0.4, 0.4, 0.4}, Selectivity(0.5), 500, derive_seed(seed, "data"));
    StrategyConfig cfg{Strategy::greedy};
    cfg.seed = seed;
    const double greedy = estimate_general(data.matrix, 0, cfg).estimate.interval->half_size();
    // Peers split in input order: first three against last three.
    const double naive = estimate_with_partition(data.matrix, {0, {1, 2, 3}, {4, 5, 6}}).interval->half_size();
    wins += greedy <= naive;
  }
  // About 87% over 1000 seeds; a single pass sometimes starts from two bad peers.
  EXPECT_GE(wins, 80) << wins;
}

TEST(Greedy, ConsidersOneCandidatePerPeerAfterTheFirstTwo) {
  auto data = gen_matrix({0.2, 0.1, 0.1, 0.4, 0.4, 0.4, 0.4}, Selectivity(0.5), 300, 1);
  StrategyConfig cfg{Strategy::greedy};
  cfg.record_candidates = true;
  auto est = estimate_general(data.matrix, 3, cfg);
  EXPECT_EQ(est.candidates_considered, 5u);
  EXPECT_EQ(est.candidates.size(), 5u);
  const auto& p = *est.estimate.partition_used;
  EXPECT_TRUE(std::is_sorted(p.s.begin(), p.s.end()));
  EXPECT_TRUE(std::is_sorted(p.t.begin(), p.t.end()));
}

TEST(Pruning, FallsBackWhenTooFewSurvive) {
  auto data = gen_matrix({0.2, 0.1, 0.3, 0.4, 0.4}, Selectivity(0.5), 300, 1);
  StrategyConfig cfg{Strategy::pruning};
  cfg.pruning_threshold = 1e-6;
  EXPECT_EQ(estimate_general(data.matrix, 0, cfg).candidates_considered, 25u);
  cfg.pruning_threshold = 0.0;
  EXPECT_THROW(estimate_general(data.matrix, 0, cfg), DomainError);
}

TEST(Strategies, ExhaustiveDominates) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(derive_seed(seed, "rates"));
    const std::size_t m = 5 + rng.below(3);
    std::vector<double> rates(m);
    for (auto& r : rates) r = rng.uniform(0.05, 0.45);
    auto data = gen_matrix(rates, Selectivity(0.5), 200, derive_seed(seed, "data"));
    for (std::size_t w = 0; w < m; ++w) {
      StrategyConfig ex{Strategy::exhaustive}, gr{Strategy::greedy}, pr{Strategy::pruning};
      gr.seed = seed;
      const double e = estimate_general(data.matrix, w, ex).estimate.interval->half_size();
      EXPECT_LE(e, estimate_general(data.matrix, w, gr).estimate.interval->half_size());
      EXPECT_LE(e, estimate_general(data.matrix, w, pr).estimate.interval->half_size());
    }
  }
}

TEST(Strategies, Deterministic) {
  auto data = gen_matrix({0.2, 0.1, 0.3, 0.4, 0.4, 0.15}, Selectivity(0.5), 250, 3);
  for (Strategy kind : {Strategy::exhaustive, Strategy::pruning, Strategy::greedy}) {
    StrategyConfig cfg{kind};
    cfg.seed = 99;
    auto a = estimate_all_workers(data.matrix, cfg), b = estimate_all_workers(data.matrix, cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].p_hat, b[i].p_hat);
      EXPECT_EQ(a[i].interval->lo, b[i].interval->lo);
      EXPECT_EQ(a[i].partition_used, b[i].partition_used);
    }
  }
}

TEST(Strategies, InputChecks) {
  auto two = gen_matrix({0.1, 0.2}, Selectivity(0.5), 20, 1);
  EXPECT_THROW(estimate_general(two.matrix, 0), DomainError);
  auto many = gen_matrix(std::vector<double>(17, 0.2), Selectivity(0.5), 20, 1);
  EXPECT_THROW(estimate_general(many.matrix, 0), DomainError);
  auto four = gen_matrix({0.1, 0.2, 0.3, 0.2}, Selectivity(0.5), 20, 1);
  EXPECT_THROW(estimate_general(four.matrix, 4), DomainError);
}
