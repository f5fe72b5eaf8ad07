#pragma once

// Three-worker differences scheme: error-rate estimates from pairwise
// agreement rates, with corner-evaluated confidence intervals.

#include <array>
#include <cmath>
#include <string>

#include "crowdconf/core.hpp"
#include "crowdconf/stats.hpp"

namespace crowdconf {

enum class IntervalMode { linearized, conservative };

inline const char* to_string(IntervalMode m) noexcept {
  return m == IntervalMode::linearized ? "linearized" : "conservative";
}

struct Diff3Options {
  double confidence = 0.9;
  IntervalMode mode = IntervalMode::linearized;
  bool approx_intervals = false;  // normal-approximation half-sizes for q
};

// Agreement rates at or below 1/2 are replaced by 1/2 + kClampDelta.
inline constexpr double kClampDelta = 1e-6;

// Error rate of the worker shared by the pairs with agreement rates a and b,
// given the agreement rate c of the remaining pair:
//   1/2 - sqrt((a - 1/2)(b - 1/2) / (2 (c - 1/2)))
// Never exceeds 1/2; may be negative.
inline double invert_q(double a, double b, double c) {
  if (!(a > 0.5 && b > 0.5 && c > 0.5))
    throw DomainError("invert_q needs all agreement rates above 1/2");
  return 0.5 - std::sqrt((a - 0.5) * (b - 0.5) / (2.0 * (c - 0.5)));
}

struct TripleEstimate {
  std::array<WorkerEstimate, 3> estimates;
  std::array<PairwiseAgreement, 3> agreements;  // pairs (1,2), (1,3), (2,3)
  double c_nominal = 0.0;
  double c_reported = 0.0;
  IntervalMode mode = IntervalMode::linearized;

  bool degenerate() const noexcept {
    return estimates[0].degenerate || estimates[1].degenerate || estimates[2].degenerate;
  }
};

namespace detail {

struct Clamp {
  bool hit = false;
  double operator()(double q) {
    if (q <= 0.5) {
      hit = true;
      return 0.5 + kClampDelta;
    }
    return q;
  }
};

struct CornerResult {
  double p_hat;
  double lo;
  double hi;
  bool degenerate;
};

// (a, b) are the agreement rates of the two pairs containing the worker and
// c the rate of the opposite pair, each with its interval half-size.
inline CornerResult corner_interval(double a, double ea, double b, double eb, double c, double ec) {
  Clamp clamp;
  const double p = invert_q(clamp(a), clamp(b), clamp(c));
  const double e_minus = invert_q(clamp(a - ea), clamp(b - eb), clamp(c + ec));
  const double e_plus = invert_q(clamp(a + ea), clamp(b + eb), clamp(c - ec));
  return {p, std::min(e_minus, e_plus), std::max(e_minus, e_plus), clamp.hit};
}

inline double q_half_size(double q_hat, std::size_t n, const Diff3Options& opts) {
  return opts.approx_intervals ? wilson_interval_approx(q_hat, opts.confidence, n).half_size()
                               : wilson_interval(q_hat, opts.confidence, n).half_size();
}

inline void check_options(const Diff3Options& opts) {
  if (!(opts.confidence > 0.0 && opts.confidence < 1.0)) throw DomainError("confidence must lie in (0, 1)");
  if (opts.mode == IntervalMode::conservative && opts.confidence < 2.0 / 3.0)
    throw DomainError("conservative intervals need confidence >= 2/3");
}

}  // namespace detail

// Core of the scheme, from the three agreement statistics
// (pairs (1,2), (1,3), (2,3)) of workers named `names`.
inline TripleEstimate estimate_from_agreements(const std::array<PairwiseAgreement, 3>& q,
                                               const std::array<std::string, 3>& names,
                                               const Diff3Options& opts = {}) {
  detail::check_options(opts);
  const double q12 = q[0].q_hat, q13 = q[1].q_hat, q23 = q[2].q_hat;
  const double e12 = detail::q_half_size(q12, q[0].n, opts);
  const double e13 = detail::q_half_size(q13, q[1].n, opts);
  const double e23 = detail::q_half_size(q23, q[2].n, opts);

  const std::array<detail::CornerResult, 3> corners = {
      detail::corner_interval(q12, e12, q13, e13, q23, e23),
      detail::corner_interval(q12, e12, q23, e23, q13, e13),
      detail::corner_interval(q13, e13, q23, e23, q12, e12),
  };

  TripleEstimate out;
  out.agreements = q;
  out.mode = opts.mode;
  out.c_nominal = opts.confidence;
  out.c_reported =
      opts.mode == IntervalMode::conservative ? std::max(0.0, 3.0 * opts.confidence - 2.0) : opts.confidence;
  for (std::size_t k = 0; k < 3; ++k) {
    auto& e = out.estimates[k];
    e.worker = names[k];
    e.p_hat = corners[k].p_hat;
    e.interval = Interval{corners[k].p_hat, corners[k].lo, corners[k].hi, out.c_reported};
    e.method = Method::diff3;
    e.degenerate = corners[k].degenerate;
  }
  return out;
}

// Agreement statistics for three complete columns.
inline std::array<PairwiseAgreement, 3> triple_agreements(std::span<const Cell> c1, std::span<const Cell> c2,
                                                          std::span<const Cell> c3) {
  auto make = [](std::size_t i, std::size_t j, std::span<const Cell> a, std::span<const Cell> b) {
    auto [agree, n] = count_agreements(a, b);
    if (n == 0) throw DegenerateInputError("no shared tasks");
    return PairwiseAgreement{i, j, agree, n, static_cast<double>(agree) / static_cast<double>(n)};
  };
  return {make(0, 1, c1, c2), make(0, 2, c1, c3), make(1, 2, c2, c3)};
}

// Estimates all three workers of a complete 3-worker matrix.
inline TripleEstimate estimate_three(const ResponseMatrix& matrix, const Diff3Options& opts = {}) {
  if (matrix.worker_count() != 3)
    throw DomainError("the three-worker scheme needs exactly 3 workers, got " +
                      std::to_string(matrix.worker_count()));
  require_complete(matrix);
  const auto& w = matrix.workers();
  return estimate_from_agreements(triple_agreements(matrix.column(0), matrix.column(1), matrix.column(2)),
                                  {w[0], w[1], w[2]}, opts);
}

}  // namespace crowdconf
