#pragma once

// Domain types shared by every estimator: binary answers, the task x worker
// response matrix, pairwise agreement statistics and interval/estimate records.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace crowdconf {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition violated (argument out of range, wrong worker count, ...).
struct DomainError : Error {
  using Error::Error;
};

// Input text could not be parsed. `line` is 1-based; 0 when unknown.
struct ParseError : Error {
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  std::size_t line;
};

// The same (task, worker) cell was supplied twice.
struct DuplicateError : Error {
  using Error::Error;
};

// Input leaves nothing to estimate from (e.g. no shared tasks).
struct DegenerateInputError : Error {
  using Error::Error;
};

// Two inputs that must describe the same workers/tasks disagree.
struct ConsistencyError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Answer
// ---------------------------------------------------------------------------

enum class Answer : std::int8_t { no = -1, yes = 1 };

constexpr int to_int(Answer a) noexcept { return static_cast<int>(a); }

constexpr Answer flip(Answer a) noexcept { return a == Answer::yes ? Answer::no : Answer::yes; }

constexpr Answer answer_from_sign(int v) noexcept { return v > 0 ? Answer::yes : Answer::no; }

inline const char* to_string(Answer a) noexcept { return a == Answer::yes ? "Y" : "N"; }

// Accepts Y/N, yes/no, 1/0 (case-insensitive, surrounding blanks ignored).
inline std::optional<Answer> parse_answer(std::string_view token) {
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
  std::string lower(token);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "y" || lower == "yes" || lower == "1") return Answer::yes;
  if (lower == "n" || lower == "no" || lower == "0") return Answer::no;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ResponseMatrix
// ---------------------------------------------------------------------------

// Cell encoding inside a column: +1 / -1 for answers, 0 for "not answered".
using Cell = std::int8_t;
inline constexpr Cell kMissing = 0;

// n tasks x m workers of binary answers, stored column-major (one contiguous
// column per worker). Cells may be missing right after ingestion; estimators
// require complete() and callers get there through restrict_to().
class ResponseMatrix {
 public:
  ResponseMatrix() = default;

  // `cells` is column-major: cells[w * n + t].
  ResponseMatrix(std::vector<std::string> tasks, std::vector<std::string> workers, std::vector<Cell> cells)
      : tasks_(std::move(tasks)), workers_(std::move(workers)), cells_(std::move(cells)) {
    if (tasks_.empty()) throw DomainError("response matrix needs at least one task");
    if (workers_.size() < 2) throw DomainError("response matrix needs at least two workers");
    if (cells_.size() != tasks_.size() * workers_.size())
      throw DomainError("cell count does not match tasks x workers");
    for (Cell c : cells_)
      if (c != 1 && c != -1 && c != kMissing) throw DomainError("cell value outside {+1, -1, missing}");
    index_names(tasks_, task_index_, "task");
    index_names(workers_, worker_index_, "worker");
  }

  // Complete matrix from one answer column per worker.
  static ResponseMatrix from_columns(std::vector<std::string> tasks, std::vector<std::string> workers,
                                     const std::vector<std::vector<Answer>>& columns) {
    if (columns.size() != workers.size()) throw DomainError("one column per worker required");
    std::vector<Cell> cells;
    cells.reserve(tasks.size() * workers.size());
    for (const auto& col : columns) {
      if (col.size() != tasks.size()) throw DomainError("column length does not match task count");
      for (Answer a : col) cells.push_back(static_cast<Cell>(to_int(a)));
    }
    return ResponseMatrix(std::move(tasks), std::move(workers), std::move(cells));
  }

  std::size_t task_count() const noexcept { return tasks_.size(); }
  std::size_t worker_count() const noexcept { return workers_.size(); }
  const std::vector<std::string>& tasks() const noexcept { return tasks_; }
  const std::vector<std::string>& workers() const noexcept { return workers_; }

  std::span<const Cell> column(std::size_t worker) const {
    check_worker(worker);
    return {cells_.data() + worker * tasks_.size(), tasks_.size()};
  }

  std::optional<Answer> at(std::size_t task, std::size_t worker) const {
    check_worker(worker);
    if (task >= tasks_.size()) throw DomainError("task index out of range");
    Cell c = cells_[worker * tasks_.size() + task];
    if (c == kMissing) return std::nullopt;
    return answer_from_sign(c);
  }

  bool complete() const noexcept {
    return std::find(cells_.begin(), cells_.end(), kMissing) == cells_.end();
  }

  std::optional<std::size_t> find_worker(std::string_view id) const {
    auto it = worker_index_.find(std::string(id));
    if (it == worker_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_task(std::string_view id) const {
    auto it = task_index_.find(std::string(id));
    if (it == task_index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t worker_index(std::string_view id) const {
    if (auto w = find_worker(id)) return *w;
    throw DomainError("unknown worker '" + std::string(id) + "'");
  }
  std::size_t task_index(std::string_view id) const {
    if (auto t = find_task(id)) return *t;
    throw DomainError("unknown task '" + std::string(id) + "'");
  }

  // Per-task string attributes carried over from extra input columns
  // (e.g. a task type used for stratification).
  const std::map<std::string, std::vector<std::string>>& task_attributes() const noexcept { return attributes_; }
  void set_task_attribute(const std::string& name, std::vector<std::string> values) {
    if (values.size() != tasks_.size()) throw DomainError("attribute '" + name + "' needs one value per task");
    attributes_[name] = std::move(values);
  }

  // Same workers, tasks narrowed to `task_indices` (kept in the given order).
  ResponseMatrix select_tasks(std::span<const std::size_t> task_indices) const {
    std::vector<std::string> tasks;
    tasks.reserve(task_indices.size());
    for (std::size_t t : task_indices) tasks.push_back(tasks_.at(t));
    std::vector<Cell> cells;
    cells.reserve(task_indices.size() * workers_.size());
    for (std::size_t w = 0; w < workers_.size(); ++w)
      for (std::size_t t : task_indices) cells.push_back(cells_[w * tasks_.size() + t]);
    ResponseMatrix out(std::move(tasks), workers_, std::move(cells));
    for (const auto& [name, values] : attributes_) {
      std::vector<std::string> sub;
      sub.reserve(task_indices.size());
      for (std::size_t t : task_indices) sub.push_back(values[t]);
      out.attributes_[name] = std::move(sub);
    }
    return out;
  }

  // Same tasks, workers narrowed to `worker_indices` (kept in the given order).
  ResponseMatrix select_workers(std::span<const std::size_t> worker_indices) const {
    std::vector<std::string> workers;
    std::vector<Cell> cells;
    cells.reserve(worker_indices.size() * tasks_.size());
    for (std::size_t w : worker_indices) {
      check_worker(w);
      workers.push_back(workers_[w]);
      auto col = column(w);
      cells.insert(cells.end(), col.begin(), col.end());
    }
    ResponseMatrix out(tasks_, std::move(workers), std::move(cells));
    out.attributes_ = attributes_;
    return out;
  }

  // Appends a worker column. Used for pseudo-workers.
  ResponseMatrix with_column(std::string worker, std::span<const Cell> column) const {
    if (column.size() != tasks_.size()) throw DomainError("column length does not match task count");
    std::vector<std::string> workers = workers_;
    workers.push_back(std::move(worker));
    std::vector<Cell> cells = cells_;
    cells.insert(cells.end(), column.begin(), column.end());
    ResponseMatrix out(tasks_, std::move(workers), std::move(cells));
    out.attributes_ = attributes_;
    return out;
  }

  friend bool operator==(const ResponseMatrix& a, const ResponseMatrix& b) {
    return a.tasks_ == b.tasks_ && a.workers_ == b.workers_ && a.cells_ == b.cells_ &&
           a.attributes_ == b.attributes_;
  }

 private:
  static void index_names(const std::vector<std::string>& names,
                          std::unordered_map<std::string, std::size_t>& index, const char* kind) {
    index.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i)
      if (!index.emplace(names[i], i).second)
        throw DuplicateError(std::string("duplicate ") + kind + " identifier '" + names[i] + "'");
  }

  void check_worker(std::size_t worker) const {
    if (worker >= workers_.size()) throw DomainError("worker index out of range");
  }

  std::vector<std::string> tasks_;
  std::vector<std::string> workers_;
  std::vector<Cell> cells_;
  std::unordered_map<std::string, std::size_t> task_index_;
  std::unordered_map<std::string, std::size_t> worker_index_;
  std::map<std::string, std::vector<std::string>> attributes_;
};

// Incrementally collects (task, worker, answer) triples in first-seen order.
class ResponseMatrixBuilder {
 public:
  // Returns false when the cell was already set.
  bool add(const std::string& task, const std::string& worker, Answer answer) {
    std::size_t t = intern(task, tasks_, task_index_);
    std::size_t w = intern(worker, workers_, worker_index_);
    auto [it, inserted] = cells_.emplace(std::make_pair(t, w), static_cast<Cell>(to_int(answer)));
    return inserted;
  }

  // Records a per-task attribute value; returns false if it conflicts with an
  // earlier value for the same task.
  bool set_attribute(const std::string& task, const std::string& name, const std::string& value) {
    std::size_t t = intern(task, tasks_, task_index_);
    auto& column = attributes_[name];
    auto [it, inserted] = column.emplace(t, value);
    return inserted || it->second == value;
  }

  std::size_t task_count() const noexcept { return tasks_.size(); }
  std::size_t worker_count() const noexcept { return workers_.size(); }

  ResponseMatrix build() const {
    if (tasks_.empty()) throw DegenerateInputError("no responses in input");
    if (workers_.size() < 2) throw DegenerateInputError("input has fewer than two workers");
    const std::size_t n = tasks_.size();
    std::vector<Cell> cells(n * workers_.size(), kMissing);
    for (const auto& [key, value] : cells_) cells[key.second * n + key.first] = value;
    ResponseMatrix out(tasks_, workers_, std::move(cells));
    for (const auto& [name, values] : attributes_) {
      std::vector<std::string> column(n);
      for (const auto& [t, v] : values) column[t] = v;
      out.set_task_attribute(name, std::move(column));
    }
    return out;
  }

 private:
  static std::size_t intern(const std::string& id, std::vector<std::string>& names,
                            std::unordered_map<std::string, std::size_t>& index) {
    auto [it, inserted] = index.emplace(id, names.size());
    if (inserted) names.push_back(id);
    return it->second;
  }

  std::vector<std::string> tasks_;
  std::vector<std::string> workers_;
  std::unordered_map<std::string, std::size_t> task_index_;
  std::unordered_map<std::string, std::size_t> worker_index_;
  std::map<std::pair<std::size_t, std::size_t>, Cell> cells_;
  std::map<std::string, std::map<std::size_t, std::string>> attributes_;
};

// Known correct answers for a subset of tasks. Evaluation only.
struct GoldLabels {
  std::map<std::string, Answer> labels;

  void validate_against(const ResponseMatrix& matrix) const {
    for (const auto& [task, answer] : labels)
      if (!matrix.find_task(task)) throw ConsistencyError("gold label for unknown task '" + task + "'");
  }
};

// ---------------------------------------------------------------------------
// Agreement statistics
// ---------------------------------------------------------------------------

struct PairwiseAgreement {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t agree_count = 0;
  std::size_t n = 0;
  double q_hat = 0.0;
};

// Number of tasks where both columns are present and equal, and the number
// where both are present.
inline std::pair<std::size_t, std::size_t> count_agreements(std::span<const Cell> a, std::span<const Cell> b) {
  if (a.size() != b.size()) throw DomainError("columns differ in length");
  std::size_t agree = 0;
  std::size_t shared = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t] == kMissing || b[t] == kMissing) continue;
    ++shared;
    agree += a[t] == b[t] ? 1 : 0;
  }
  return {agree, shared};
}

// Fraction of shared tasks on which workers i and j give the same answer.
inline PairwiseAgreement agreement_rate(const ResponseMatrix& matrix, std::size_t i, std::size_t j) {
  if (i == j) throw DomainError("agreement_rate needs two distinct workers");
  auto [agree, shared] = count_agreements(matrix.column(i), matrix.column(j));
  if (shared == 0)
    throw DegenerateInputError("workers '" + matrix.workers()[i] + "' and '" + matrix.workers()[j] +
                               "' share no tasks");
  return {i, j, agree, shared, static_cast<double>(agree) / static_cast<double>(shared)};
}

inline PairwiseAgreement agreement_rate(const ResponseMatrix& matrix, std::string_view i, std::string_view j) {
  return agreement_rate(matrix, matrix.worker_index(i), matrix.worker_index(j));
}

// Submatrix over `subset`, keeping only tasks every member answered.
inline ResponseMatrix restrict_to(const ResponseMatrix& matrix, std::span<const std::string> subset) {
  if (subset.size() < 2) throw DomainError("restrict_to needs at least two workers");
  std::vector<std::size_t> cols;
  cols.reserve(subset.size());
  for (const auto& id : subset) {
    std::size_t w = matrix.worker_index(id);
    if (std::find(cols.begin(), cols.end(), w) != cols.end())
      throw DomainError("worker '" + id + "' listed twice in subset");
    cols.push_back(w);
  }
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < matrix.task_count(); ++t) {
    bool all = std::all_of(cols.begin(), cols.end(), [&](std::size_t w) { return matrix.column(w)[t] != kMissing; });
    if (all) keep.push_back(t);
  }
  if (keep.empty()) throw DegenerateInputError("no task was answered by every worker in the subset");
  return matrix.select_workers(cols).select_tasks(keep);
}

inline ResponseMatrix restrict_to(const ResponseMatrix& matrix, std::initializer_list<std::string> subset) {
  std::vector<std::string> ids(subset);
  return restrict_to(matrix, std::span<const std::string>(ids));
}

// Restriction to all workers: drops every task with a missing answer.
inline ResponseMatrix complete_part(const ResponseMatrix& matrix) {
  if (matrix.complete()) return matrix;
  return restrict_to(matrix, std::span<const std::string>(matrix.workers()));
}

inline void require_complete(const ResponseMatrix& matrix) {
  if (!matrix.complete())
    throw DegenerateInputError("estimators need a complete matrix; restrict the workers first");
}

// ---------------------------------------------------------------------------
// Intervals and estimates
// ---------------------------------------------------------------------------

// A point estimate bracketed by [lo, hi] at confidence `level`. The estimate
// need not sit at the midpoint; `lo` may be negative for error-rate intervals.
struct Interval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;

  double half_size() const noexcept { return (hi - lo) / 2.0; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

enum class Method { diff3, diffgen, em, majority };

inline const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::diff3: return "diff3";
    case Method::diffgen: return "diffgen";
    case Method::em: return "em";
    case Method::majority: return "majority";
  }
  return "?";
}

// Two disjoint peer sets acting as super-workers when estimating `target`.
// Indices refer to workers of the matrix the partition was built for.
struct Partition {
  std::size_t target = 0;
  std::vector<std::size_t> s;
  std::vector<std::size_t> t;

  friend bool operator==(const Partition&, const Partition&) = default;
};

struct WorkerEstimate {
  std::string worker;
  double p_hat = 0.0;
  std::optional<Interval> interval;  // absent for em / majority
  Method method = Method::diff3;
  bool degenerate = false;
  std::optional<Partition> partition_used;

  // p_hat clamped to [0, 0.5] for display; p_hat itself stays raw.
  double display_p_hat() const noexcept { return std::clamp(p_hat, 0.0, 0.5); }
};

}  // namespace crowdconf
