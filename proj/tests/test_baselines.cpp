#include <gtest/gtest.h>

#include <algorithm>

#include "crowdconf/baselines.hpp"
#include "crowdconf/simulator.hpp"

using namespace crowdconf;

namespace {

constexpr Answer Y = Answer::yes;
constexpr Answer N = Answer::no;

ResponseMatrix columns(const std::vector<std::vector<Answer>>& cols) {
  std::vector<std::string> workers;
  for (std::size_t w = 0; w < cols.size(); ++w) workers.push_back("w" + std::to_string(w + 1));
  return ResponseMatrix::from_columns(numbered_ids('t', cols[0].size()), workers, cols);
}

std::vector<Answer> pattern(std::size_t n) {
  std::vector<Answer> col(n);
  for (std::size_t t = 0; t < n; ++t) col[t] = (t * 7 + 3) % 5 < 2 ? Y : N;
  return col;
}

}  // namespace

TEST(Majority, TenOfThirty) {
  auto truth = pattern(30);
  auto odd = truth;
  for (std::size_t t = 0; t < 10; ++t) odd[t] = flip(odd[t]);
  auto p = majority_estimate(columns({truth, truth, odd}));
  EXPECT_DOUBLE_EQ(p[0], 0.0);
  EXPECT_DOUBLE_EQ(p[2], 1.0 / 3.0);
}

TEST(Majority, IdenticalColumnsAndTies) {
  auto c = pattern(12);
  for (double v : majority_estimate(columns({c, c, c, c}))) EXPECT_EQ(v, 0.0);
  std::vector<Answer> a = {Y, N}, b = {N, Y};
  EXPECT_EQ(majority_answers(columns({a, b})), (std::vector<Answer>{Y, Y}));
}

TEST(Majority, PermutationEquivariantAndTaskOrderInvariant) {
  auto data = gen_matrix({0.1, 0.3, 0.2, 0.4, 0.25}, Selectivity(0.5), 200, 1);
  auto base = majority_estimate(data.matrix);
  std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  auto permuted = majority_estimate(data.matrix.select_workers(perm));
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(permuted[i], base[perm[i]]);
  std::vector<std::size_t> rev(200);
  for (std::size_t t = 0; t < 200; ++t) rev[t] = 199 - t;
  EXPECT_EQ(majority_estimate(data.matrix.select_tasks(rev)), base);
}

TEST(Em, IdenticalColumnsSaturate) {
  auto c = pattern(40);
  EmConfig cfg;
  auto r = em_estimate(columns({c, c, c}), cfg);
  EXPECT_TRUE(r.converged);
  for (double p : r.p_hat) EXPECT_LE(p, 1e-6);
}

TEST(Em, LogLikelihoodNeverDecreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto data = gen_matrix({0.1, 0.3, 0.2, 0.4, 0.25}, Selectivity(0.5), 150, seed);
    EmConfig cfg;
    cfg.seed = seed;
    auto r = em_estimate(data.matrix, cfg);
    ASSERT_GE(r.log_likelihood.size(), 2u);
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
      EXPECT_GE(r.log_likelihood[i], r.log_likelihood[i - 1] - 1e-9) << seed << " step " << i;
  }
}

TEST(Em, ComplementWorkerIsFlaggedAsWrong) {
  // w1 and w2 follow the truth on 97% of tasks, w3 answers the complement.
  auto truth = pattern(100);
  auto w1 = truth, w2 = truth;
  w1[4] = flip(w1[4]);
  w2[50] = flip(w2[50]);
  w2[77] = flip(w2[77]);
  std::vector<Answer> w3(truth.size());
  std::transform(truth.begin(), truth.end(), w3.begin(), flip);
  auto r = em_estimate(columns({w1, w2, w3}));
  EXPECT_GE(r.p_hat[2], 0.9);
  EXPECT_LT(r.p_hat[0], 0.1);
  EXPECT_LT(r.p_hat[1], 0.1);
}

TEST(Em, MeanRateEndsAtMostHalf) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto data = gen_matrix({0.3, 0.35, 0.4}, Selectivity(0.5), 60, seed);
    EmConfig cfg;
    cfg.seed = seed;
    auto r = em_estimate(data.matrix, cfg);
    double mean = (r.p_hat[0] + r.p_hat[1] + r.p_hat[2]) / 3;
    EXPECT_LE(mean, 0.5 + 1e-12);
    for (double q : r.posteriors) {
      EXPECT_GE(q, 0.0);
      EXPECT_LE(q, 1.0);
    }
  }
}

TEST(Em, RecoversRatesOnLargeData) {
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.25, 0.15};
  auto data = gen_matrix(p, Selectivity(0.5), 20000, 5);
  auto r = em_estimate(data.matrix);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(r.p_hat[i], p[i], 0.015);
}

TEST(Em, DeterministicAndRestartsKeepTheBest) {
  auto data = gen_matrix({0.1, 0.3, 0.2, 0.4}, Selectivity(0.5), 120, 2);
  EmConfig cfg;
  cfg.seed = 4;
  auto a = em_estimate(data.matrix, cfg), b = em_estimate(data.matrix, cfg);
  EXPECT_EQ(a.p_hat, b.p_hat);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  cfg.restarts = 5;
  auto best = em_estimate(data.matrix, cfg);
  EXPECT_GE(best.log_likelihood.back(), a.log_likelihood.back() - 1e-9);
}

TEST(Em, ConfigValidation) {
  auto data = gen_matrix({0.1, 0.3, 0.2}, Selectivity(0.5), 20, 2);
  EmConfig cfg;
  cfg.tol = 0;
  EXPECT_THROW(em_estimate(data.matrix, cfg), DomainError);
  cfg = {};
  cfg.init_high = 0.6;
  EXPECT_THROW(em_estimate(data.matrix, cfg), DomainError);
  cfg = {};
  cfg.restarts = 0;
  EXPECT_THROW(em_estimate(data.matrix, cfg), DomainError);
  ResponseMatrix sparse({"t1", "t2"}, {"a", "b", "c"}, {1, 1, 1, 0, 1, 1});
  EXPECT_THROW(em_estimate(sparse), DegenerateInputError);
  EXPECT_THROW(majority_estimate(sparse), DegenerateInputError);
}
