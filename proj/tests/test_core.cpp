#include <gtest/gtest.h>

#include <sstream>

#include "crowdconf/io.hpp"
#include "crowdconf/simulator.hpp"

using namespace crowdconf;

namespace {

ResponseMatrix from_csv(const std::string& text) { return load_responses(text, InputFormat::csv).matrix; }

ResponseMatrix two_columns(std::vector<Cell> a, std::vector<Cell> b) {
  std::vector<std::string> tasks;
  for (std::size_t t = 0; t < a.size(); ++t) tasks.push_back("t" + std::to_string(t));
  std::vector<Cell> cells = a;
  cells.insert(cells.end(), b.begin(), b.end());
  return ResponseMatrix(tasks, {"a", "b"}, cells);
}

}  // namespace

TEST(Answer, TokensAreCaseInsensitive) {
  for (const char* t : {"Y", "y", "yes", "YES", " 1 "}) EXPECT_EQ(parse_answer(t), Answer::yes) << t;
  for (const char* t : {"N", "no", "No", "0"}) EXPECT_EQ(parse_answer(t), Answer::no) << t;
  EXPECT_FALSE(parse_answer("maybe"));
  EXPECT_FALSE(parse_answer(""));
}

TEST(Ingest, SingleTaskThreeWorkers) {
  auto m = from_csv("task_id,worker_id,answer\nt1,w1,Y\nt1,w2,N\nt1,w3,Y\n");
  ASSERT_EQ(m.task_count(), 1u);
  ASSERT_EQ(m.worker_count(), 3u);
  EXPECT_EQ(m.column(0)[0], 1);
  EXPECT_EQ(m.column(1)[0], -1);
  EXPECT_EQ(m.column(2)[0], 1);
  EXPECT_EQ(m.workers(), (std::vector<std::string>{"w1", "w2", "w3"}));
}

TEST(Ingest, DuplicateCellIsAnError) {
  EXPECT_THROW(from_csv("task_id,worker_id,answer\nt1,w1,Y\nt1,w2,N\nt1,w1,N\n"), DuplicateError);
}

TEST(Ingest, UnknownTokenIsAnError) {
  EXPECT_THROW(from_csv("task_id,worker_id,answer\nt1,w1,Y\nt1,w2,perhaps\n"), DomainError);
}

TEST(Ingest, MissingColumnAndRaggedRows) {
  EXPECT_THROW(from_csv("task,worker_id,answer\nt1,w1,Y\n"), ParseError);
  EXPECT_THROW(from_csv("task_id,worker_id,answer\nt1,w1\n"), ParseError);
  EXPECT_THROW(from_csv(""), ParseError);
}

TEST(Ingest, QuotedFieldsAndCrlf) {
  auto m = from_csv("task_id,worker_id,answer\r\n\"t,1\",w1,Y\r\n\"t,1\",\"w\"\"2\",N\r\n");
  EXPECT_EQ(m.tasks()[0], "t,1");
  EXPECT_EQ(m.workers()[1], "w\"2");
}

TEST(Ingest, JsonRecordsMatchCsv) {
  auto csv = from_csv("task_id,worker_id,answer\nt1,w1,Y\nt1,w2,N\nt2,w1,N\nt2,w2,N\n");
  auto json = load_responses(
                  R"([{"task":"t1","worker":"w1","answer":"Y"},{"task":"t1","worker":"w2","answer":"N"},)"
                  R"({"task":"t2","worker":"w1","answer":"N"},{"task":"t2","worker":"w2","answer":"N"}])",
                  InputFormat::json)
                  .matrix;
  EXPECT_EQ(csv, json);
  EXPECT_THROW(load_responses("{}", InputFormat::json), ParseError);
}

TEST(Ingest, GoldColumnAndAttributes) {
  auto loaded = load_responses(
      "task_id,worker_id,answer,gold,type\nt1,w1,Y,Y,a\nt1,w2,N,Y,a\nt2,w1,N,,b\nt2,w2,N,,b\n", InputFormat::csv);
  ASSERT_TRUE(loaded.gold);
  EXPECT_EQ(loaded.gold->labels.size(), 1u);
  EXPECT_EQ(loaded.gold->labels.at("t1"), Answer::yes);
  EXPECT_EQ(loaded.matrix.task_attributes().at("type"), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(load_responses("task_id,worker_id,answer,type\nt1,w1,Y,a\nt1,w2,N,b\n", InputFormat::csv),
               ParseError);
}

TEST(Ingest, WriteThenReadRoundTrips) {
  auto data = gen_matrix({0.1, 0.2, 0.3}, Selectivity(0.5), 40, 9);
  std::ostringstream out;
  write_responses_csv(out, data.matrix);
  EXPECT_EQ(from_csv(out.str()), data.matrix);
}

TEST(Matrix, ConstructorChecks) {
  EXPECT_THROW(ResponseMatrix({}, {"a", "b"}, {}), DomainError);
  EXPECT_THROW(ResponseMatrix({"t"}, {"a"}, {1}), DomainError);
  EXPECT_THROW(ResponseMatrix({"t"}, {"a", "b"}, {1}), DomainError);
  EXPECT_THROW(ResponseMatrix({"t"}, {"a", "b"}, {1, 2}), DomainError);
  EXPECT_THROW(ResponseMatrix({"t"}, {"a", "a"}, {1, 1}), DuplicateError);
}

TEST(Agreement, HandCountedExample) {
  auto m = two_columns({1, 1, -1, 1}, {1, -1, -1, -1});
  auto q = agreement_rate(m, 0, 1);
  EXPECT_EQ(q.agree_count, 2u);
  EXPECT_EQ(q.n, 4u);
  EXPECT_DOUBLE_EQ(q.q_hat, 0.5);
}

TEST(Agreement, IdenticalAndComplementaryColumns) {
  std::vector<Cell> a(30), b(30);
  for (std::size_t t = 0; t < 30; ++t) a[t] = t % 3 == 0 ? 1 : -1;
  for (std::size_t t = 0; t < 30; ++t) b[t] = static_cast<Cell>(-a[t]);
  EXPECT_DOUBLE_EQ(agreement_rate(two_columns(a, a), 0, 1).q_hat, 1.0);
  EXPECT_DOUBLE_EQ(agreement_rate(two_columns(a, b), 0, 1).q_hat, 0.0);
}

TEST(Agreement, SymmetricInThePair) {
  auto data = gen_matrix({0.1, 0.25, 0.4, 0.3}, Selectivity(0.5), 200, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) {
        EXPECT_EQ(agreement_rate(data.matrix, i, j).q_hat, agreement_rate(data.matrix, j, i).q_hat);
      }
}

TEST(Agreement, SameWorkerOrNoSharedTasks) {
  auto m = from_csv("task_id,worker_id,answer\nt1,w1,Y\nt2,w2,N\n");
  EXPECT_THROW(agreement_rate(m, 0, 0), DomainError);
  EXPECT_THROW(agreement_rate(m, 0, 1), DegenerateInputError);
}

TEST(Agreement, ConvergesToTheModelRate) {
  // q = p_i p_j + (1 - p_i)(1 - p_j)
  const double pi = 0.15, pj = 0.35;
  const double q = pi * pj + (1 - pi) * (1 - pj);
  int close = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto data = gen_matrix({pi, pj}, Selectivity(0.5), 100000, seed);
    close += std::fabs(agreement_rate(data.matrix, 0, 1).q_hat - q) <= 0.02 ? 1 : 0;
  }
  EXPECT_EQ(close, 20);
}

TEST(Restrict, CompleteInputKeepsTasks) {
  auto data = gen_matrix({0.1, 0.2, 0.3, 0.4}, Selectivity(0.5), 50, 1);
  auto sub = restrict_to(data.matrix, {"w3", "w1"});
  EXPECT_EQ(sub.task_count(), 50u);
  EXPECT_EQ(sub.workers(), (std::vector<std::string>{"w3", "w1"}));
  EXPECT_TRUE(std::equal(sub.column(0).begin(), sub.column(0).end(), data.matrix.column(2).begin()));
}

TEST(Restrict, SparseFixtureSharesTenTasks) {
  // w1 answers t0..t19, w2 answers the even tasks only.
  std::ostringstream csv;
  csv << "task_id,worker_id,answer\n";
  for (int t = 0; t < 20; ++t) {
    csv << "t" << t << ",w1," << (t % 3 ? "Y" : "N") << "\n";
    if (t % 2 == 0) csv << "t" << t << ",w2,Y\n";
  }
  auto m = from_csv(csv.str());
  EXPECT_FALSE(m.complete());
  auto sub = restrict_to(m, {"w1", "w2"});
  EXPECT_EQ(sub.task_count(), 10u);
  EXPECT_TRUE(sub.complete());
  EXPECT_EQ(restrict_to(sub, {"w1", "w2"}), sub);
  EXPECT_EQ(complete_part(m), sub);
}

TEST(Restrict, Errors) {
  auto m = from_csv("task_id,worker_id,answer\nt1,w1,Y\nt1,w2,Y\nt2,w3,N\nt2,w1,N\n");
  EXPECT_THROW(restrict_to(m, {"w2", "w3"}), DegenerateInputError);
  EXPECT_THROW(restrict_to(m, {"w1"}), DomainError);
  EXPECT_THROW(restrict_to(m, {"w1", "w1"}), DomainError);
  EXPECT_THROW(restrict_to(m, {"w1", "nobody"}), DomainError);
}

TEST(Restrict, Idempotent) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto data = gen_matrix({0.1, 0.2, 0.3, 0.4, 0.2}, Selectivity(0.5), 30, seed);
    auto once = restrict_to(data.matrix, {"w5", "w2", "w4"});
    EXPECT_EQ(restrict_to(once, {"w5", "w2", "w4"}), once);
  }
}

TEST(Estimate, DisplayValueIsClamped) {
  WorkerEstimate e;
  e.p_hat = -0.3;
  EXPECT_EQ(e.display_p_hat(), 0.0);
  e.p_hat = 0.7;
  EXPECT_EQ(e.display_p_hat(), 0.5);
  e.p_hat = 0.2;
  EXPECT_EQ(e.display_p_hat(), 0.2);
}

TEST(Random, DerivedSeedsAreStableAndDistinct) {
  static_assert(derive_seed(1, "a") == derive_seed(1, "a"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}

TEST(Parallel, ResultsInIndexOrder) {
  auto v = parallel_map(100, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(v[i], i * i);
  EXPECT_THROW(parallel_map(10, [](std::size_t i) -> int {
                 if (i == 7) throw DomainError("boom");
                 return 0;
               }),
               DomainError);
}
