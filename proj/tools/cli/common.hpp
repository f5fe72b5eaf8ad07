#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdconf/crowdconf.hpp"

namespace cli {

using Json = nlohmann::ordered_json;

// Flag combinations that make no sense together; reported like CLI11 usage errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : crowdconf::Error {
  using crowdconf::Error::Error;
};

std::string read_file(const std::string& path);

// Writes to `path`, or standard output when path is empty or "-".
void write_output(const std::string& path, const std::string& text);

// "auto" picks json for *.json paths and csv otherwise.
crowdconf::InputFormat resolve_format(const std::string& flag, const std::string& path);

// fnv1a64 of the bytes, as "fnv1a64:<16 hex digits>".
std::string digest(std::string_view bytes);

// Every long option of `app` with its effective value (given or default).
Json effective_config(const CLI::App& app);

// Header fields shared by all reports.
Json report_header(const std::string& command);

// Shortest representation that reads back to the same double.
std::string num(double v);

std::vector<std::string> split(const std::string& text, char sep);
std::vector<double> parse_doubles(const std::string& text, const std::string& flag);
double parse_double(const std::string& text, const std::string& flag);
std::uint64_t parse_u64(const std::string& text, const std::string& flag);

// "from:to:step" or a comma list.
std::vector<double> parse_double_range(const std::string& text, const std::string& flag);
std::vector<std::size_t> parse_size_range(const std::string& text, const std::string& flag);

// "rate:prob,rate:prob,..."
crowdconf::RateDistribution parse_rate_distribution(const std::string& text, const std::string& flag);

crowdconf::Strategy parse_strategy(const std::string& text);

crowdconf::LoadedResponses load_responses_file(const std::string& path, const std::string& format);

Json to_json(const crowdconf::WorkerEstimate& e, const crowdconf::ResponseMatrix& matrix);

bool was_given(const CLI::App& app, const std::string& long_name);

}  // namespace cli
