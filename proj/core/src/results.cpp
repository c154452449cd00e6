#include "ikesim/results.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

using nlohmann::ordered_json;

ordered_json stats_json(const std::optional<SummaryStats>& s) {
  if (!s) return nullptr;
  ordered_json j;
  j["count"] = s->count;
  j["mean"] = s->mean;
  j["median"] = s->median;
  j["p95"] = s->p95;
  j["p99"] = s->p99;
  j["min"] = s->min;
  j["max"] = s->max;
  return j;
}

ordered_json optional_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::vector<OutputFormat> parse_formats(std::string_view list) {
  std::vector<OutputFormat> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto token = list.substr(start, comma == std::string_view::npos ? list.npos : comma - start);
    if (token == "csv") {
      out.push_back(OutputFormat::csv);
    } else if (token == "json") {
      out.push_back(OutputFormat::json);
    } else {
      throw ValidationError("format", "unknown format '" + std::string(token) + "'");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

void write_csv(std::ostream& out, std::span<const ResultSet> results) {
  out << kCsvHeader << '\n';
  for (const auto& rs : results) {
    for (const auto& r : rs.records) {
      out << r.scenario_id << ',' << r.suite_id << ',' << r.iteration << ',' << r.seed << ','
          << format_double(r.loss_rate) << ',' << format_double(r.rtt_ms) << ','
          << (r.success ? "true" : "false") << ',' << format_double(r.setup_time_ms) << ','
          << r.total_bytes << ',' << r.datagrams << ',' << r.retransmissions << ',' << r.restarts
          << '\n';
    }
  }
}

std::string to_csv(std::span<const ResultSet> results) {
  std::ostringstream out;
  write_csv(out, results);
  return out.str();
}

std::string summary_json(std::span<const ResultSet> results) {
  ordered_json root;
  root["scenario_id"] = results.empty() ? "" : results.front().scenario_id;
  ordered_json points = ordered_json::array();
  for (const auto& rs : results) {
    ordered_json p;
    p["label"] = rs.loss_label;
    p["loss_rate"] = rs.loss_rate;
    p["rtt_ms"] = rs.rtt_ms;
    p["records"] = rs.records.size();
    ordered_json suites = ordered_json::object();
    for (const auto& s : rs.summaries) {
      ordered_json j;
      j["runs"] = s.runs;
      j["successes"] = s.successes;
      j["setup_time_ms"] = stats_json(s.setup_time_ms);
      j["setup_time_rtt"] = stats_json(s.setup_time_rtt);
      j["total_bytes"] = stats_json(s.total_bytes);
      j["datagrams"] = stats_json(s.datagrams);
      ordered_json curve = ordered_json::array();
      for (const auto& [value, fraction] : s.total_bytes_ecdf) curve.push_back({value, fraction});
      j["total_bytes_ecdf"] = std::move(curve);
      suites[s.suite_id] = std::move(j);
    }
    p["suites"] = std::move(suites);
    p["amplification"] = {{"total_bytes_p95", optional_json(rs.bytes_p95_ratio)},
                          {"setup_time_p95", optional_json(rs.setup_time_p95_ratio)},
                          {"setup_time_correlation", optional_json(rs.setup_time_correlation)}};
    ordered_json failures = ordered_json::array();
    for (const auto& f : rs.failures) {
      failures.push_back({{"suite", f.suite_id}, {"iteration", f.iteration}, {"error", f.message}});
    }
    p["failures"] = std::move(failures);
    points.push_back(std::move(p));
  }
  root["points"] = std::move(points);
  return root.dump(2) + "\n";
}

void emit_results(std::span<const ResultSet> results, std::span<const OutputFormat> formats,
                  const std::filesystem::path& csv_path, const std::filesystem::path& json_path) {
  for (auto f : formats) {
    if (f == OutputFormat::csv) write_file(csv_path, to_csv(results));
    if (f == OutputFormat::json) write_file(json_path, summary_json(results));
  }
}

}  // namespace ikesim
