#pragma once

// Reference estimators without confidence intervals: EM under the symmetric
// binary error model (one error rate per worker), and the simple-majority
// heuristic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "crowdconf/core.hpp"
#include "crowdconf/random.hpp"

namespace crowdconf {

// Rates inside EM are kept in [kRateFloor, 1 - kRateFloor].
inline constexpr double kRateFloor = 1e-9;

struct EmConfig {
  std::size_t max_iter = 1000;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  double init_low = 0.05;
  double init_high = 0.45;
  double prior = 0.5;        // probability that a task's true answer is Y
  std::size_t restarts = 1;  // best final log-likelihood wins

  void validate() const {
    if (!(tol > 0.0)) throw DomainError("EM tolerance must be positive");
    if (!(init_low > 0.0 && init_low <= init_high && init_high < 0.5))
      throw DomainError("EM initial range must lie inside (0, 0.5)");
    if (!(prior > 0.0 && prior < 1.0)) throw DomainError("EM prior must lie in (0, 1)");
    if (restarts == 0) throw DomainError("EM needs at least one start");
  }
};

struct EmResult {
  std::vector<double> p_hat;
  std::vector<double> posteriors;  // P(true answer = Y) per task
  std::size_t iterations = 0;
  bool converged = false;
  // Observed-data log-likelihood before each M-step, plus the final value.
  std::vector<double> log_likelihood;
};

namespace detail {

// E-step: fills `post` and returns the observed-data log-likelihood.
inline double em_expectation(const ResponseMatrix& matrix, const std::vector<double>& p, double prior,
                             std::vector<double>& post) {
  const std::size_t n = matrix.task_count();
  const std::size_t m = matrix.worker_count();
  std::vector<double> log_yes(n, std::log(prior));
  std::vector<double> log_no(n, std::log1p(-prior));
  for (std::size_t w = 0; w < m; ++w) {
    const double lp = std::log(p[w]);
    const double lq = std::log1p(-p[w]);
    auto col = matrix.column(w);
    for (std::size_t t = 0; t < n; ++t) {
      if (col[t] > 0) {
        log_yes[t] += lq;
        log_no[t] += lp;
      } else {
        log_yes[t] += lp;
        log_no[t] += lq;
      }
    }
  }
  double ll = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double hi = std::max(log_yes[t], log_no[t]);
    const double lo = std::min(log_yes[t], log_no[t]);
    ll += hi + std::log1p(std::exp(lo - hi));
    post[t] = 1.0 / (1.0 + std::exp(log_no[t] - log_yes[t]));
  }
  return ll;
}

inline EmResult em_single(const ResponseMatrix& matrix, const EmConfig& cfg, std::uint64_t seed) {
  const std::size_t n = matrix.task_count();
  const std::size_t m = matrix.worker_count();
  Rng rng(seed);
  std::vector<double> p(m);
  for (auto& v : p) v = rng.uniform(cfg.init_low, cfg.init_high);

  EmResult out;
  out.posteriors.assign(n, 0.5);
  std::vector<double> next(m);
  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    out.log_likelihood.push_back(em_expectation(matrix, p, cfg.prior, out.posteriors));
    double delta = 0.0;
    for (std::size_t w = 0; w < m; ++w) {
      auto col = matrix.column(w);
      double wrong = 0.0;
      for (std::size_t t = 0; t < n; ++t) wrong += col[t] > 0 ? 1.0 - out.posteriors[t] : out.posteriors[t];
      next[w] = std::clamp(wrong / static_cast<double>(n), kRateFloor, 1.0 - kRateFloor);
      delta = std::max(delta, std::fabs(next[w] - p[w]));
    }
    p.swap(next);
    out.iterations = it + 1;
    if (delta < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.log_likelihood.push_back(em_expectation(matrix, p, cfg.prior, out.posteriors));
  out.p_hat = std::move(p);
  return out;
}

}  // namespace detail

// Alternates per-task posteriors (E) and per-worker expected disagreement
// with the latent truth (M) until no rate moves by `tol`. If the mean rate
// ends above 1/2 the labels are swapped (rates and posteriors complemented).
inline EmResult em_estimate(const ResponseMatrix& matrix, const EmConfig& cfg = {}) {
  cfg.validate();
  require_complete(matrix);
  EmResult best;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    auto run = detail::em_single(matrix, cfg, derive_seed(cfg.seed, "em", r));
    if (r == 0 || run.log_likelihood.back() > best.log_likelihood.back()) best = std::move(run);
  }
  double mean = 0.0;
  for (double v : best.p_hat) mean += v;
  mean /= static_cast<double>(best.p_hat.size());
  if (mean > 0.5) {
    for (double& v : best.p_hat) v = 1.0 - v;
    for (double& v : best.posteriors) v = 1.0 - v;
  }
  return best;
}

// Majority answer per task over all workers (tie -> Y).
inline std::vector<Answer> majority_answers(const ResponseMatrix& matrix) {
  std::vector<int> sums(matrix.task_count(), 0);
  for (std::size_t w = 0; w < matrix.worker_count(); ++w) {
    auto col = matrix.column(w);
    for (std::size_t t = 0; t < sums.size(); ++t) sums[t] += col[t];
  }
  std::vector<Answer> out(sums.size());
  for (std::size_t t = 0; t < sums.size(); ++t) out[t] = sums[t] >= 0 ? Answer::yes : Answer::no;
  return out;
}

// Fraction of tasks on which each worker differs from the crowd majority.
inline std::vector<double> majority_estimate(const ResponseMatrix& matrix) {
  require_complete(matrix);
  const auto majority = majority_answers(matrix);
  std::vector<double> out(matrix.worker_count());
  for (std::size_t w = 0; w < out.size(); ++w) {
    auto col = matrix.column(w);
    std::size_t differ = 0;
    for (std::size_t t = 0; t < col.size(); ++t) differ += col[t] != to_int(majority[t]) ? 1 : 0;
    out[w] = static_cast<double>(differ) / static_cast<double>(col.size());
  }
  return out;
}

}  // namespace crowdconf
