#pragma once

// Model extensions: a known selectivity injected as a constant pseudo-worker,
// reduction of k-category answers to binary questions, and per-stratum
// (task type or difficulty) estimation.

#include <algorithm>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdconf/aggregation.hpp"
#include "crowdconf/core.hpp"
#include "crowdconf/io.hpp"

namespace crowdconf {

// ---------------------------------------------------------------------------
// Selectivity pseudo-worker
// ---------------------------------------------------------------------------

struct SelectivityWorker {
  ResponseMatrix matrix;  // input plus the constant column (last)
  std::string worker;
  Answer constant = Answer::yes;
  double declared_rate = 0.0;  // min(s, 1 - s)
};

// Appends a worker who always answers the more likely label. Its error rate
// is known to be min(s, 1 - s).
inline SelectivityWorker with_selectivity_worker(const ResponseMatrix& matrix, Selectivity s,
                                                 std::string name = "selectivity") {
  if (s.value() == 0.5)
    throw DomainError("selectivity 0.5 gives a pseudo-worker with error rate 1/2, which carries no information");
  if (matrix.find_worker(name)) throw DomainError("worker '" + name + "' already exists");
  const Answer constant = s.value() > 0.5 ? Answer::yes : Answer::no;
  std::vector<Cell> column(matrix.task_count(), static_cast<Cell>(to_int(constant)));
  return {matrix.with_column(name, column), std::move(name), constant, std::min(s.value(), 1.0 - s.value())};
}

// ---------------------------------------------------------------------------
// Categorical answers
// ---------------------------------------------------------------------------

// Answers drawn from arbitrary string categories.
struct CategoricalResponses {
  std::vector<std::string> tasks;
  std::vector<std::string> workers;
  std::vector<std::string> categories;  // first-appearance order
  std::vector<int> cells;               // column-major category index, -1 if missing

  std::optional<std::string> at(std::size_t task, std::size_t worker) const {
    int c = cells.at(worker * tasks.size() + task);
    if (c < 0) return std::nullopt;
    return categories[static_cast<std::size_t>(c)];
  }
};

inline CategoricalResponses load_categorical(std::istream& in, InputFormat format) {
  auto records = read_response_records(in, format);
  CategoricalResponses out;
  std::unordered_map<std::string, std::size_t> task_idx, worker_idx, cat_idx;
  auto intern = [](const std::string& id, std::vector<std::string>& names,
                   std::unordered_map<std::string, std::size_t>& idx) {
    auto [it, inserted] = idx.emplace(id, names.size());
    if (inserted) names.push_back(id);
    return it->second;
  };
  std::map<std::pair<std::size_t, std::size_t>, std::pair<int, std::size_t>> cells;
  for (const auto& r : records) {
    if (r.answer.empty()) throw ParseError(r.line, "empty answer");
    std::size_t t = intern(r.task, out.tasks, task_idx);
    std::size_t w = intern(r.worker, out.workers, worker_idx);
    int c = static_cast<int>(intern(r.answer, out.categories, cat_idx));
    if (!cells.emplace(std::make_pair(t, w), std::make_pair(c, r.line)).second)
      throw DuplicateError("line " + std::to_string(r.line) + ": duplicate response for task '" + r.task +
                           "' and worker '" + r.worker + "'");
  }
  if (out.tasks.empty()) throw DegenerateInputError("no responses in input");
  out.cells.assign(out.tasks.size() * out.workers.size(), -1);
  for (const auto& [key, value] : cells) out.cells[key.second * out.tasks.size() + key.first] = value.first;
  return out;
}

// Category i gets binary code i; codes from k up to the next power of two
// are padding that never occurs in data.
class CategoricalScheme {
 public:
  explicit CategoricalScheme(std::vector<std::string> categories) : categories_(std::move(categories)) {
    if (categories_.size() < 2) throw DomainError("categorical reduction needs at least two categories");
    for (std::size_t i = 0; i < categories_.size(); ++i)
      if (!index_.emplace(categories_[i], i).second)
        throw DomainError("duplicate category '" + categories_[i] + "'");
    while ((std::size_t{1} << bit_count_) < categories_.size()) ++bit_count_;
  }

  std::size_t k() const noexcept { return categories_.size(); }
  std::size_t padded_k() const noexcept { return std::size_t{1} << bit_count_; }
  std::size_t bit_count() const noexcept { return bit_count_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }

  std::size_t code(const std::string& category) const {
    auto it = index_.find(category);
    if (it == index_.end()) throw DomainError("unknown category '" + category + "'");
    return it->second;
  }

  // Category for a code; nullopt for padding codes.
  std::optional<std::string> decode(std::size_t code) const {
    if (code >= padded_k()) throw DomainError("code outside the scheme");
    if (code >= categories_.size()) return std::nullopt;
    return categories_[code];
  }

  // Categories whose code has bit `bit` set (the Y side of question `bit`).
  std::vector<std::string> yes_side(std::size_t bit) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < categories_.size(); ++i)
      if ((i >> bit) & 1U) out.push_back(categories_[i]);
    return out;
  }

 private:
  std::vector<std::string> categories_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t bit_count_ = 0;
};

// One binary matrix per code bit: "is bit b of the answer's code 1?".
inline std::vector<ResponseMatrix> categorical_reduce(const CategoricalResponses& responses,
                                                      const CategoricalScheme& scheme) {
  std::vector<std::size_t> codes(responses.cells.size());
  std::vector<bool> present(responses.cells.size());
  for (std::size_t i = 0; i < responses.cells.size(); ++i) {
    present[i] = responses.cells[i] >= 0;
    if (present[i]) codes[i] = scheme.code(responses.categories[static_cast<std::size_t>(responses.cells[i])]);
  }
  std::vector<ResponseMatrix> out;
  for (std::size_t b = 0; b < scheme.bit_count(); ++b) {
    std::vector<Cell> cells(codes.size(), kMissing);
    for (std::size_t i = 0; i < codes.size(); ++i)
      if (present[i]) cells[i] = ((codes[i] >> b) & 1U) ? 1 : -1;
    out.emplace_back(responses.tasks, responses.workers, std::move(cells));
  }
  return out;
}

// Inverse of categorical_reduce: reassembles each cell's code from its bits.
// Cells missing in the bit matrices stay missing; padding codes decode to nullopt.
inline std::vector<std::optional<std::string>> categorical_reassemble(std::span<const ResponseMatrix> bits,
                                                                      const CategoricalScheme& scheme) {
  if (bits.size() != scheme.bit_count()) throw DomainError("one matrix per code bit required");
  const std::size_t n = bits[0].task_count(), m = bits[0].worker_count();
  std::vector<std::optional<std::string>> out(n * m);
  for (std::size_t w = 0; w < m; ++w)
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t code = 0;
      bool missing = false;
      for (std::size_t b = 0; b < bits.size(); ++b) {
        auto a = bits[b].at(t, w);
        if (!a) {
          missing = true;
          break;
        }
        if (*a == Answer::yes) code |= std::size_t{1} << b;
      }
      if (!missing) out[w * n + t] = scheme.decode(code);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Stratification
// ---------------------------------------------------------------------------

struct StratificationRule {
  enum class Kind { by_type, by_agreement };
  Kind kind = Kind::by_agreement;
  std::string attribute;   // by_type: task attribute holding the type
  double threshold = 0.9;  // by_agreement: majority fraction for "easy"

  static StratificationRule by_type(std::string attribute) { return {Kind::by_type, std::move(attribute), 0.0}; }
  static StratificationRule by_agreement(double threshold) { return {Kind::by_agreement, {}, threshold}; }
};

struct Stratification {
  std::vector<std::string> labels;                               // stratum of each input task
  std::vector<std::pair<std::string, ResponseMatrix>> strata;    // non-empty strata, in order
  std::vector<std::string> omitted;                              // strata with no tasks
};

// Fraction of the task's answers that side with its majority.
inline double majority_fraction(const ResponseMatrix& matrix, std::size_t task) {
  std::size_t yes = 0, answered = 0;
  for (std::size_t w = 0; w < matrix.worker_count(); ++w) {
    Cell c = matrix.column(w)[task];
    if (c == kMissing) continue;
    ++answered;
    yes += c > 0 ? 1 : 0;
  }
  if (answered == 0) return 0.0;
  return static_cast<double>(std::max(yes, answered - yes)) / static_cast<double>(answered);
}

// Splits tasks into strata: by a task attribute, or into easy/hard by the
// crowd's majority fraction.
inline Stratification stratify(const ResponseMatrix& matrix, const StratificationRule& rule) {
  Stratification out;
  std::vector<std::string> order;
  if (rule.kind == StratificationRule::Kind::by_agreement) {
    if (!(rule.threshold > 0.5 && rule.threshold <= 1.0))
      throw DomainError("difficulty threshold must lie in (0.5, 1]");
    order = {"easy", "hard"};
    for (std::size_t t = 0; t < matrix.task_count(); ++t)
      out.labels.push_back(majority_fraction(matrix, t) >= rule.threshold ? "easy" : "hard");
  } else {
    auto it = matrix.task_attributes().find(rule.attribute);
    if (it == matrix.task_attributes().end())
      throw DomainError("no task attribute named '" + rule.attribute + "'");
    out.labels = it->second;
    for (const auto& label : out.labels)
      if (std::find(order.begin(), order.end(), label) == order.end()) order.push_back(label);
  }
  for (const auto& stratum : order) {
    std::vector<std::size_t> tasks;
    for (std::size_t t = 0; t < out.labels.size(); ++t)
      if (out.labels[t] == stratum) tasks.push_back(t);
    if (tasks.empty()) out.omitted.push_back(stratum);
    else out.strata.emplace_back(stratum, matrix.select_tasks(tasks));
  }
  return out;
}

}  // namespace crowdconf
