#include "common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef CROWDCONF_VERSION
#define CROWDCONF_VERSION "0.0.0"
#endif

namespace cli {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

crowdconf::InputFormat resolve_format(const std::string& flag, const std::string& path) {
  if (flag == "csv") return crowdconf::InputFormat::csv;
  if (flag == "json") return crowdconf::InputFormat::json;
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return json ? crowdconf::InputFormat::json : crowdconf::InputFormat::csv;
}

std::string digest(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(crowdconf::fnv1a64(bytes)));
  return std::string("fnv1a64:") + buf;
}

bool was_given(const CLI::App& app, const std::string& long_name) {
  const CLI::Option* opt = app.get_option_no_throw("--" + long_name);
  return opt != nullptr && opt->count() > 0;
}

Json effective_config(const CLI::App& app) {
  Json out = Json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
      if (opt->get_expected_max() == 0 && value.empty()) value = "true";
    } else {
      value = opt->get_default_str();
      if (opt->get_expected_max() == 0 && value.empty()) value = "false";
    }
    out[name] = value;
  }
  return out;
}

Json report_header(const std::string& command) {
  Json out;
  out["tool"] = "crowdconf";
  out["version"] = CROWDCONF_VERSION;
  out["command"] = command;
  return out;
}

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& text, const std::string& flag) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(flag + ": '" + text + "' is not a number");
}

std::uint64_t parse_u64(const std::string& text, const std::string& flag) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size())
    throw UsageError(flag + ": '" + text + "' is not a non-negative integer");
  return v;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item, flag));
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::vector<double> parse_double_range(const std::string& text, const std::string& flag) {
  auto parts = split(text, ':');
  if (parts.size() != 3 || text.find(',') != std::string::npos) return parse_doubles(text, flag);
  const double from = parse_double(parts[0], flag), to = parse_double(parts[1], flag),
               step = parse_double(parts[2], flag);
  if (!(step > 0.0) || to < from) throw UsageError(flag + ": range needs from <= to and a positive step");
  std::vector<double> out;
  // Integer stepping so that e.g. -0.4:0.4:0.05 hits both ends exactly.
  const long count = std::lround((to - from) / step);
  for (long i = 0; i <= count; ++i) {
    double v = from + static_cast<double>(i) * step;
    if (std::fabs(v) < 1e-12) v = 0.0;
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

std::vector<std::size_t> parse_size_range(const std::string& text, const std::string& flag) {
  auto parts = split(text, ':');
  std::vector<std::size_t> out;
  if (parts.size() == 3 && text.find(',') == std::string::npos) {
    const auto from = parse_u64(parts[0], flag), to = parse_u64(parts[1], flag), step = parse_u64(parts[2], flag);
    if (step == 0 || to < from) throw UsageError(flag + ": range needs from <= to and a positive step");
    return crowdconf::stepped(from, to, step);
  }
  for (const auto& item : split(text, ',')) out.push_back(parse_u64(item, flag));
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

crowdconf::RateDistribution parse_rate_distribution(const std::string& text, const std::string& flag) {
  crowdconf::RateDistribution dist;
  for (const auto& item : split(text, ',')) {
    auto parts = split(item, ':');
    if (parts.size() != 2) throw UsageError(flag + ": expected rate:probability pairs, got '" + item + "'");
    dist.entries.emplace_back(parse_double(parts[0], flag), parse_double(parts[1], flag));
  }
  dist.validate();
  return dist;
}

crowdconf::Strategy parse_strategy(const std::string& text) {
  if (text == "exhaustive") return crowdconf::Strategy::exhaustive;
  if (text == "pruning") return crowdconf::Strategy::pruning;
  if (text == "greedy") return crowdconf::Strategy::greedy;
  throw UsageError("unknown strategy '" + text + "'");
}

crowdconf::LoadedResponses load_responses_file(const std::string& path, const std::string& format) {
  std::istringstream in(read_file(path));
  return crowdconf::load_responses(in, resolve_format(format, path));
}

Json to_json(const crowdconf::WorkerEstimate& e, const crowdconf::ResponseMatrix& matrix) {
  Json out;
  out["worker"] = e.worker;
  out["method"] = crowdconf::to_string(e.method);
  out["p_hat"] = e.p_hat;
  out["p_hat_display"] = e.display_p_hat();
  if (e.interval) {
    out["interval"] = {{"lo", e.interval->lo},
                       {"hi", e.interval->hi},
                       {"half_size", e.interval->half_size()},
                       {"level", e.interval->level}};
  } else {
    out["interval"] = nullptr;
  }
  out["degenerate"] = e.degenerate;
  if (e.partition_used) {
    Json s = Json::array(), t = Json::array();
    for (std::size_t w : e.partition_used->s) s.push_back(matrix.workers()[w]);
    for (std::size_t w : e.partition_used->t) t.push_back(matrix.workers()[w]);
    out["partition"] = {{"s", s}, {"t", t}};
  }
  return out;
}

}  // namespace cli
