#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ikesim/simulation.hpp"

namespace ikesim {

enum class OutputFormat { csv, json };

/// Parses "csv", "json" or "csv,json". Throws ValidationError.
std::vector<OutputFormat> parse_formats(std::string_view list);

inline constexpr std::string_view kCsvHeader =
    "scenario_id,suite,iteration,seed,loss_rate,rtt_ms,success,setup_time_ms,total_bytes,"
    "datagrams,retransmissions,restarts";

/// One row per record, result sets in order. Doubles use the shortest
/// representation that round-trips.
void write_csv(std::ostream& out, std::span<const ResultSet> results);
std::string to_csv(std::span<const ResultSet> results);

/// Per-point summary: suite statistics (null when a suite has no successful
/// run), bytes ECDF, amplification ratios, failures.
std::string summary_json(std::span<const ResultSet> results);

/// Writes the requested formats to `paths`. Throws IoError.
void emit_results(std::span<const ResultSet> results, std::span<const OutputFormat> formats,
                  const std::filesystem::path& csv_path, const std::filesystem::path& json_path);

/// Shortest round-trip decimal form of `value`.
std::string format_double(double value);

}  // namespace ikesim
