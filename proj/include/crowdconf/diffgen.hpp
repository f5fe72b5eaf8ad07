#pragma once

// Differences scheme for more than three workers. The target worker is
// paired with two "super-workers", each the majority vote of a disjoint set
// of peers, and the three-worker scheme runs on that triple. Strategies
// differ in how the peer sets are chosen.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "crowdconf/core.hpp"
#include "crowdconf/diff3.hpp"
#include "crowdconf/random.hpp"

namespace crowdconf {

enum class Strategy { exhaustive, pruning, greedy };

inline const char* to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::exhaustive: return "exhaustive";
    case Strategy::pruning: return "pruning";
    case Strategy::greedy: return "greedy";
  }
  return "?";
}

// How a super-worker resolves a tied vote. `yes` always answers Y. `hashed`
// draws a fixed pseudo-random answer per (member set, task), so two disjoint
// super-workers do not tie the same way and stay independent given the truth.
enum class TieBreak { yes, hashed };

inline const char* to_string(TieBreak t) noexcept { return t == TieBreak::yes ? "yes" : "hashed"; }

struct StrategyConfig {
  Strategy kind = Strategy::exhaustive;
  double pruning_threshold = 0.35;
  std::uint64_t seed = 0;
  Diff3Options diff3{};
  TieBreak tie_break = TieBreak::hashed;
  bool record_candidates = false;

  void validate() const {
    if (!(pruning_threshold > 0.0 && pruning_threshold <= 0.5))
      throw DomainError("pruning threshold must lie in (0, 0.5]");
  }
};

// Exhaustive search refuses more peers than this (3^15 candidates).
inline constexpr std::size_t kMaxExhaustivePeers = 15;

// Salt for hashed tie-breaks; depends only on the member set.
inline std::uint64_t subset_salt(std::span<const std::size_t> members) {
  std::vector<std::size_t> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = fnv1a64("super-worker");
  for (std::size_t w : sorted) h = splitmix64(h ^ w);
  return h;
}

inline Cell majority_cell(int sum, TieBreak tie, std::uint64_t salt, std::size_t task) noexcept {
  if (sum != 0) return sum > 0 ? 1 : -1;
  if (tie == TieBreak::yes) return 1;
  return (splitmix64(salt + 0x9E3779B97F4A7C15ULL * (task + 1)) >> 63) ? 1 : -1;
}

// Per-task majority of `subset`; ties resolve per `tie` (Y by default).
inline std::vector<Answer> super_majority(const ResponseMatrix& matrix, std::span<const std::size_t> subset,
                                          TieBreak tie = TieBreak::yes) {
  if (subset.empty()) throw DomainError("super-worker needs at least one member");
  const std::uint64_t salt = subset_salt(subset);
  std::vector<int> sums(matrix.task_count(), 0);
  for (std::size_t w : subset) {
    auto col = matrix.column(w);
    for (std::size_t t = 0; t < col.size(); ++t) {
      if (col[t] == kMissing) throw DegenerateInputError("super-worker member has missing answers");
      sums[t] += col[t];
    }
  }
  std::vector<Answer> out(sums.size());
  for (std::size_t t = 0; t < sums.size(); ++t)
    out[t] = majority_cell(sums[t], tie, salt, t) > 0 ? Answer::yes : Answer::no;
  return out;
}

// Probability that the majority of independent workers with the given error
// rates is wrong, by enumeration of every correctness pattern. A tie (even
// count) is wrong with probability 1/2.
inline double super_error_rate(std::span<const double> rates) {
  if (rates.empty()) throw DomainError("super_error_rate needs at least one rate");
  if (rates.size() > 30) throw DomainError("super_error_rate enumerates 2^k patterns; too many rates");
  for (double p : rates)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("error rates must lie in [0, 1]");
  const std::size_t k = rates.size();
  double total = 0.0;
  for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << k); ++pattern) {
    double prob = 1.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < k; ++i) {
      bool is_wrong = (pattern >> i) & 1U;
      prob *= is_wrong ? rates[i] : 1.0 - rates[i];
      wrong += is_wrong ? 1 : 0;
    }
    if (2 * wrong > k) total += prob;
    else if (2 * wrong == k) total += prob / 2.0;
  }
  return total;
}

inline double super_error_rate(std::initializer_list<double> rates) {
  return super_error_rate(std::span<const double>(rates.begin(), rates.size()));
}

struct CandidateSummary {
  Partition partition;
  double p_hat = 0.0;
  double half_size = 0.0;
  bool degenerate = false;
};

struct GeneralEstimate {
  WorkerEstimate estimate;
  TripleEstimate triple;  // (target, S, T) run that produced `estimate`
  std::size_t candidates_considered = 0;
  std::vector<CandidateSummary> candidates;  // filled when record_candidates
};

namespace detail {

inline void validate_partition(const ResponseMatrix& matrix, const Partition& part) {
  const std::size_t m = matrix.worker_count();
  if (part.target >= m) throw DomainError("partition target out of range");
  if (part.s.empty() || part.t.empty()) throw DomainError("partition sets must be nonempty");
  std::vector<bool> seen(m, false);
  seen[part.target] = true;
  for (const auto* set : {&part.s, &part.t})
    for (std::size_t w : *set) {
      if (w >= m) throw DomainError("partition member out of range");
      if (seen[w]) throw DomainError("partition sets must be disjoint and exclude the target");
      seen[w] = true;
    }
}

inline std::vector<Cell> to_cells(const std::vector<Answer>& answers) {
  std::vector<Cell> out(answers.size());
  for (std::size_t t = 0; t < answers.size(); ++t) out[t] = static_cast<Cell>(to_int(answers[t]));
  return out;
}

inline std::size_t count_equal(std::span<const Cell> a, std::span<const Cell> b) {
  std::size_t agree = 0;
  for (std::size_t t = 0; t < a.size(); ++t) agree += a[t] == b[t] ? 1 : 0;
  return agree;
}

inline PairwiseAgreement make_agreement(std::size_t i, std::size_t j, std::size_t agree, std::size_t n) {
  return {i, j, agree, n, static_cast<double>(agree) / static_cast<double>(n)};
}

inline std::array<std::string, 3> triple_names(const ResponseMatrix& matrix, std::size_t target) {
  return {matrix.workers()[target], "S", "T"};
}

// Majority columns of peer subsets, keyed by bitmask over `peers`.
class SubsetColumns {
 public:
  SubsetColumns(const ResponseMatrix& matrix, std::size_t target, std::vector<std::size_t> peers, TieBreak tie)
      : matrix_(matrix), target_(target), peers_(std::move(peers)), tie_(tie) {}

  const std::vector<std::size_t>& peers() const noexcept { return peers_; }

  const std::vector<Cell>& column(std::uint64_t mask) {
    auto it = cache_.find(mask);
    if (it != cache_.end()) return it->second.column;
    std::vector<Cell> col(matrix_.task_count());
    std::vector<int> sums(matrix_.task_count(), 0);
    for (std::size_t k = 0; k < peers_.size(); ++k) {
      if (!((mask >> k) & 1U)) continue;
      auto src = matrix_.column(peers_[k]);
      for (std::size_t t = 0; t < sums.size(); ++t) sums[t] += src[t];
    }
    const std::uint64_t salt = subset_salt(members(mask));
    for (std::size_t t = 0; t < sums.size(); ++t) col[t] = majority_cell(sums[t], tie_, salt, t);
    std::size_t agree = count_equal(matrix_.column(target_), col);
    auto [pos, _] = cache_.emplace(mask, Entry{std::move(col), agree});
    return pos->second.column;
  }

  std::size_t target_agreement(std::uint64_t mask) {
    column(mask);
    return cache_.at(mask).target_agree;
  }

  std::vector<std::size_t> members(std::uint64_t mask) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < peers_.size(); ++k)
      if ((mask >> k) & 1U) out.push_back(peers_[k]);
    std::sort(out.begin(), out.end());
    return out;
  }

  TripleEstimate evaluate(std::uint64_t s_mask, std::uint64_t t_mask, const Diff3Options& opts) {
    const std::size_t n = matrix_.task_count();
    const auto& s_col = column(s_mask);
    const auto& t_col = column(t_mask);
    const std::array<PairwiseAgreement, 3> q = {
        make_agreement(0, 1, target_agreement(s_mask), n),
        make_agreement(0, 2, target_agreement(t_mask), n),
        make_agreement(1, 2, count_equal(s_col, t_col), n),
    };
    return estimate_from_agreements(q, triple_names(matrix_, target_), opts);
  }

 private:
  struct Entry {
    std::vector<Cell> column;
    std::size_t target_agree;
  };
  const ResponseMatrix& matrix_;
  std::size_t target_;
  std::vector<std::size_t> peers_;
  TieBreak tie_;
  std::unordered_map<std::uint64_t, Entry> cache_;
};

inline std::vector<std::size_t> peers_of(const ResponseMatrix& matrix, std::size_t target) {
  std::vector<std::size_t> peers;
  for (std::size_t w = 0; w < matrix.worker_count(); ++w)
    if (w != target) peers.push_back(w);
  return peers;
}

inline GeneralEstimate finish(const ResponseMatrix& matrix, Partition part, TripleEstimate triple,
                              std::size_t considered) {
  GeneralEstimate out;
  out.estimate = triple.estimates[0];
  out.estimate.worker = matrix.workers()[part.target];
  out.estimate.method = Method::diffgen;
  out.estimate.partition_used = std::move(part);
  out.triple = std::move(triple);
  out.candidates_considered = considered;
  return out;
}

// Ordering key for tie-breaking equal half-sizes: total size, then the
// sorted member list, then S's member list.
inline auto tie_key(const Partition& p) {
  std::vector<std::size_t> all = p.s;
  all.insert(all.end(), p.t.begin(), p.t.end());
  std::sort(all.begin(), all.end());
  return std::make_tuple(all.size(), all, p.s);
}

// Exhaustive search over unordered pairs of disjoint nonempty subsets of
// `peers` (which need not cover all peers).
inline GeneralEstimate exhaustive_over(const ResponseMatrix& matrix, std::size_t target,
                                       std::vector<std::size_t> peers, const StrategyConfig& cfg) {
  if (peers.size() < 2) throw DomainError("exhaustive search needs at least two peers");
  if (peers.size() > kMaxExhaustivePeers)
    throw DomainError("exhaustive search supports at most " + std::to_string(kMaxExhaustivePeers) + " peers");
  SubsetColumns cache(matrix, target, std::move(peers), cfg.tie_break);
  const std::uint64_t full = (std::uint64_t{1} << cache.peers().size()) - 1;

  std::optional<GeneralEstimate> best;
  std::size_t considered = 0;
  std::vector<CandidateSummary> recorded;
  for (std::uint64_t u = 1; u <= full; ++u) {
    if (std::popcount(u) < 2) continue;
    const std::uint64_t low = u & (~u + 1);
    // S holds the lowest member of the union, so each unordered pair appears once.
    for (std::uint64_t s = (u - 1) & u; ; s = (s - 1) & u) {
      if ((s & low) && s != u) {
        const std::uint64_t t = u & ~s;
        auto triple = cache.evaluate(s, t, cfg.diff3);
        Partition part{target, cache.members(s), cache.members(t)};
        ++considered;
        const auto& est = triple.estimates[0];
        if (cfg.record_candidates)
          recorded.push_back({part, est.p_hat, est.interval->half_size(), est.degenerate});
        bool better = !best;
        if (best) {
          const double eps = est.interval->half_size();
          const double best_eps = best->estimate.interval->half_size();
          better = eps < best_eps || (eps == best_eps && tie_key(part) < tie_key(*best->estimate.partition_used));
        }
        if (better) best = finish(matrix, std::move(part), std::move(triple), 0);
      }
      if (s == 0) break;
    }
  }
  best->candidates_considered = considered;
  best->candidates = std::move(recorded);
  return std::move(*best);
}

// Preliminary estimate for `worker`: its peers in input order, alternately
// assigned to S and T (an odd leftover lands in S).
inline TripleEstimate preliminary(const ResponseMatrix& matrix, std::size_t worker, const StrategyConfig& cfg) {
  auto peers = peers_of(matrix, worker);
  std::uint64_t s = 0, t = 0;
  for (std::size_t k = 0; k < peers.size(); ++k) (k % 2 == 0 ? s : t) |= std::uint64_t{1} << k;
  SubsetColumns cache(matrix, worker, std::move(peers), cfg.tie_break);
  return cache.evaluate(s, t, cfg.diff3);
}

inline GeneralEstimate greedy(const ResponseMatrix& matrix, std::size_t target, const StrategyConfig& cfg) {
  auto peers = peers_of(matrix, target);
  Rng rng(derive_seed(cfg.seed, "greedy", target));
  rng.shuffle(std::span<std::size_t>(peers));

  const std::size_t n = matrix.task_count();
  const auto target_col = matrix.column(target);
  std::vector<int> s_sum(n, 0), t_sum(n, 0);
  std::vector<Cell> s_col(n), t_col(n);
  auto add = [&](std::vector<int>& sums, std::size_t w) {
    auto src = matrix.column(w);
    for (std::size_t i = 0; i < n; ++i) sums[i] += src[i];
  };
  auto evaluate = [&](const std::vector<int>& ss, const Partition& p, const std::vector<int>& ts) {
    const std::uint64_t s_salt = subset_salt(p.s), t_salt = subset_salt(p.t);
    for (std::size_t i = 0; i < n; ++i) {
      s_col[i] = majority_cell(ss[i], cfg.tie_break, s_salt, i);
      t_col[i] = majority_cell(ts[i], cfg.tie_break, t_salt, i);
    }
    const std::array<PairwiseAgreement, 3> q = {
        make_agreement(0, 1, count_equal(target_col, s_col), n),
        make_agreement(0, 2, count_equal(target_col, t_col), n),
        make_agreement(1, 2, count_equal(s_col, t_col), n),
    };
    return estimate_from_agreements(q, triple_names(matrix, target), cfg.diff3);
  };

  Partition part{target, {peers[0]}, {peers[1]}};
  add(s_sum, peers[0]);
  add(t_sum, peers[1]);
  TripleEstimate current = evaluate(s_sum, part, t_sum);
  std::size_t considered = 1;
  std::vector<CandidateSummary> recorded;
  auto record = [&](const Partition& p, const TripleEstimate& tr) {
    if (!cfg.record_candidates) return;
    const auto& e = tr.estimates[0];
    Partition sorted = p;
    std::sort(sorted.s.begin(), sorted.s.end());
    std::sort(sorted.t.begin(), sorted.t.end());
    recorded.push_back({std::move(sorted), e.p_hat, e.interval->half_size(), e.degenerate});
  };
  record(part, current);

  for (std::size_t k = 2; k < peers.size(); ++k) {
    const bool into_s = current.estimates[1].p_hat >= current.estimates[2].p_hat;
    std::vector<int> trial = into_s ? s_sum : t_sum;
    add(trial, peers[k]);
    Partition trial_part = part;
    (into_s ? trial_part.s : trial_part.t).push_back(peers[k]);
    TripleEstimate candidate = into_s ? evaluate(trial, trial_part, t_sum) : evaluate(s_sum, trial_part, trial);
    ++considered;
    record(trial_part, candidate);
    if (candidate.estimates[0].interval->half_size() < current.estimates[0].interval->half_size()) {
      (into_s ? s_sum : t_sum) = std::move(trial);
      part = std::move(trial_part);
      current = std::move(candidate);
    }
  }
  std::sort(part.s.begin(), part.s.end());
  std::sort(part.t.begin(), part.t.end());
  auto out = finish(matrix, std::move(part), std::move(current), considered);
  out.candidates = std::move(recorded);
  return out;
}

}  // namespace detail

// Number of unordered pairs of disjoint nonempty subsets of `peers` items.
inline std::uint64_t exhaustive_candidate_count(std::size_t peers) {
  std::uint64_t p3 = 1, p2 = 1;
  for (std::size_t i = 0; i < peers; ++i) {
    p3 *= 3;
    p2 *= 2;
  }
  return (p3 - 2 * p2 + 1) / 2;
}

// The target's estimate from the triple (target, majority(S), majority(T)).
inline WorkerEstimate estimate_with_partition(const ResponseMatrix& matrix, const Partition& part,
                                              const Diff3Options& opts = {}, TieBreak tie = TieBreak::hashed) {
  require_complete(matrix);
  detail::validate_partition(matrix, part);
  auto s = detail::to_cells(super_majority(matrix, part.s, tie));
  auto t = detail::to_cells(super_majority(matrix, part.t, tie));
  auto triple = estimate_from_agreements(triple_agreements(matrix.column(part.target), s, t),
                                         detail::triple_names(matrix, part.target), opts);
  return detail::finish(matrix, part, std::move(triple), 1).estimate;
}

// Searches peer partitions for `target` according to `cfg.kind` and returns
// the estimate with the smallest interval half-size found.
inline GeneralEstimate estimate_general(const ResponseMatrix& matrix, std::size_t target,
                                        const StrategyConfig& cfg = {}) {
  cfg.validate();
  detail::check_options(cfg.diff3);
  if (matrix.worker_count() < 3) throw DomainError("the general scheme needs at least 3 workers");
  if (target >= matrix.worker_count()) throw DomainError("target worker out of range");
  require_complete(matrix);

  switch (cfg.kind) {
    case Strategy::exhaustive:
      return detail::exhaustive_over(matrix, target, detail::peers_of(matrix, target), cfg);
    case Strategy::greedy:
      return detail::greedy(matrix, target, cfg);
    case Strategy::pruning: {
      std::vector<std::size_t> kept;
      for (std::size_t w : detail::peers_of(matrix, target))
        if (detail::preliminary(matrix, w, cfg).estimates[0].p_hat < cfg.pruning_threshold) kept.push_back(w);
      if (kept.size() < 2) kept = detail::peers_of(matrix, target);
      return detail::exhaustive_over(matrix, target, std::move(kept), cfg);
    }
  }
  throw DomainError("unknown strategy");
}

inline GeneralEstimate estimate_general(const ResponseMatrix& matrix, std::string_view target,
                                        const StrategyConfig& cfg = {}) {
  return estimate_general(matrix, matrix.worker_index(target), cfg);
}

// Estimates every worker: the three-worker scheme when there are exactly
// three, otherwise a partition search per target.
inline std::vector<WorkerEstimate> estimate_all_workers(const ResponseMatrix& matrix, const StrategyConfig& cfg = {}) {
  if (matrix.worker_count() == 3) {
    auto triple = estimate_three(matrix, cfg.diff3);
    return {triple.estimates.begin(), triple.estimates.end()};
  }
  std::vector<WorkerEstimate> out;
  out.reserve(matrix.worker_count());
  for (std::size_t w = 0; w < matrix.worker_count(); ++w) out.push_back(estimate_general(matrix, w, cfg).estimate);
  return out;
}

}  // namespace crowdconf
