#pragma once

// Ingestion of response and gold-label files.
//
// CSV:  header `task_id,worker_id,answer`, one response per row. Extra columns
//       are kept as per-task attributes (their value must not vary within a
//       task); a column named `gold` is read as the task's correct answer.
// JSON: array of {"task": str, "worker": str, "answer": str}; other string
//       members are treated like extra CSV columns.
// Gold: header `task_id,answer`.

#include <algorithm>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdconf/core.hpp"

namespace crowdconf {

enum class InputFormat { csv, json };

struct RawResponse {
  std::size_t line = 0;  // 1-based line (CSV) or record number (JSON)
  std::string task;
  std::string worker;
  std::string answer;
  std::vector<std::pair<std::string, std::string>> extras;
};

struct LoadedResponses {
  ResponseMatrix matrix;
  std::optional<GoldLabels> gold;
};

namespace detail {

// Splits one CSV line. Double quotes may wrap a field; "" inside quotes is a
// literal quote.
inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      if (!field.empty() || was_quoted) throw ParseError(line_no, "unexpected quote inside field");
      quoted = was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw ParseError(line_no, "text after closing quote");
      field.push_back(ch);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Reads a CSV table with a header row. Returns the header and the data rows,
// each paired with its 1-based line number. Blank lines are skipped.
inline std::pair<std::vector<std::string>, std::vector<std::pair<std::size_t, std::vector<std::string>>>>
read_csv_table(std::istream& in) {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line, line_no);
    for (auto& f : fields) f = trim(std::move(f));
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    rows.emplace_back(line_no, std::move(fields));
  }
  if (header.empty()) throw ParseError(0, "empty input: missing header");
  return {std::move(header), std::move(rows)};
}

inline std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(1, "header lacks required column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace detail

// Reads responses without interpreting the answer tokens.
inline std::vector<RawResponse> read_response_records(std::istream& in, InputFormat format) {
  std::vector<RawResponse> records;
  if (format == InputFormat::csv) {
    auto [header, rows] = detail::read_csv_table(in);
    std::size_t task_col = detail::require_column(header, "task_id");
    std::size_t worker_col = detail::require_column(header, "worker_id");
    std::size_t answer_col = detail::require_column(header, "answer");
    for (auto& [line_no, fields] : rows) {
      RawResponse r{line_no, fields[task_col], fields[worker_col], fields[answer_col], {}};
      if (r.task.empty()) throw ParseError(line_no, "empty task_id");
      if (r.worker.empty()) throw ParseError(line_no, "empty worker_id");
      for (std::size_t c = 0; c < header.size(); ++c)
        if (c != task_col && c != worker_col && c != answer_col) r.extras.emplace_back(header[c], fields[c]);
      records.push_back(std::move(r));
    }
    return records;
  }

  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError(0, "JSON responses must be an array");
  std::size_t index = 0;
  for (const auto& item : doc) {
    ++index;
    auto where = "record " + std::to_string(index) + ": ";
    if (!item.is_object()) throw ParseError(index, where + "expected an object");
    RawResponse r;
    r.line = index;
    for (const char* key : {"task", "worker", "answer"})
      if (!item.contains(key) || !item[key].is_string())
        throw ParseError(index, where + "missing string member '" + key + "'");
    r.task = item["task"].get<std::string>();
    r.worker = item["worker"].get<std::string>();
    r.answer = item["answer"].get<std::string>();
    for (const auto& [key, value] : item.items()) {
      if (key == "task" || key == "worker" || key == "answer") continue;
      if (!value.is_string()) throw ParseError(index, where + "member '" + key + "' must be a string");
      r.extras.emplace_back(key, value.get<std::string>());
    }
    records.push_back(std::move(r));
  }
  return records;
}

// Parses responses into a (possibly sparse) binary matrix. Rows and columns
// follow first appearance in the input.
inline LoadedResponses load_responses(std::istream& in, InputFormat format) {
  auto records = read_response_records(in, format);
  ResponseMatrixBuilder builder;
  GoldLabels gold;
  bool has_gold = false;
  for (const auto& r : records) {
    auto answer = parse_answer(r.answer);
    if (!answer) throw DomainError("line " + std::to_string(r.line) + ": unknown answer token '" + r.answer + "'");
    if (!builder.add(r.task, r.worker, *answer))
      throw DuplicateError("line " + std::to_string(r.line) + ": duplicate response for task '" + r.task +
                           "' and worker '" + r.worker + "'");
    for (const auto& [name, value] : r.extras) {
      if (name == "gold") {
        if (value.empty()) continue;
        auto g = parse_answer(value);
        if (!g) throw DomainError("line " + std::to_string(r.line) + ": unknown gold token '" + value + "'");
        auto [it, inserted] = gold.labels.emplace(r.task, *g);
        if (!inserted && it->second != *g)
          throw ParseError(r.line, "conflicting gold labels for task '" + r.task + "'");
        has_gold = true;
      } else if (!builder.set_attribute(r.task, name, value)) {
        throw ParseError(r.line, "column '" + name + "' changes value within task '" + r.task + "'");
      }
    }
  }
  LoadedResponses out{builder.build(), std::nullopt};
  if (has_gold) out.gold = std::move(gold);
  return out;
}

inline LoadedResponses load_responses(const std::string& text, InputFormat format) {
  std::istringstream in(text);
  return load_responses(in, format);
}

// Gold file: header `task_id,answer`.
inline GoldLabels load_gold(std::istream& in) {
  auto [header, rows] = detail::read_csv_table(in);
  std::size_t task_col = detail::require_column(header, "task_id");
  std::size_t answer_col = detail::require_column(header, "answer");
  GoldLabels gold;
  for (const auto& [line_no, fields] : rows) {
    auto answer = parse_answer(fields[answer_col]);
    if (!answer)
      throw DomainError("line " + std::to_string(line_no) + ": unknown answer token '" + fields[answer_col] + "'");
    if (!gold.labels.emplace(fields[task_col], *answer).second)
      throw DuplicateError("line " + std::to_string(line_no) + ": duplicate gold label for task '" +
                           fields[task_col] + "'");
  }
  return gold;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += "\"";
  return out;
}

// Writes the matrix back out in the CSV response format (missing cells skipped).
inline void write_responses_csv(std::ostream& out, const ResponseMatrix& matrix) {
  out << "task_id,worker_id,answer\n";
  for (std::size_t t = 0; t < matrix.task_count(); ++t)
    for (std::size_t w = 0; w < matrix.worker_count(); ++w)
      if (auto a = matrix.at(t, w))
        out << csv_escape(matrix.tasks()[t]) << ',' << csv_escape(matrix.workers()[w]) << ',' << to_string(*a)
            << '\n';
}

inline void write_gold_csv(std::ostream& out, const std::vector<std::string>& tasks, std::span<const Answer> truth) {
  out << "task_id,answer\n";
  for (std::size_t t = 0; t < tasks.size(); ++t) out << csv_escape(tasks[t]) << ',' << to_string(truth[t]) << '\n';
}

}  // namespace crowdconf
