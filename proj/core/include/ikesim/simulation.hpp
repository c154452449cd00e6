#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ikesim/config.hpp"
#include "ikesim/engine.hpp"
#include "ikesim/metrics.hpp"
#include "ikesim/netsim.hpp"

namespace ikesim {

struct ConnectionResult {
  bool established = false;
  bool gave_up = false;
  VirtualTime elapsed{};  // establishment time, or when the initiator gave up
  std::uint64_t total_bytes = 0;
  std::uint64_t datagrams = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t restarts = 0;
  ConnectionTrace trace;  // filled only when requested
};

/// Runs one initiator/responder pair over a simulated link until the
/// initiator is established or gives up. Virtual time starts at 0 with the
/// first IKE_SA_INIT emission; processing takes no time.
ConnectionResult simulate_connection(std::shared_ptr<const PreparedHandshake> handshake,
                                     const LinkParams& link, const LossSpec& loss,
                                     ChannelMode mode = ChannelMode::shared,
                                     bool record_trace = false);

struct SuiteSummary {
  std::string suite_id;
  std::size_t runs = 0;
  std::size_t successes = 0;
  // Over successful runs; empty when there are none.
  std::optional<SummaryStats> setup_time_ms;
  std::optional<SummaryStats> setup_time_rtt;  // setup time / RTT
  std::optional<SummaryStats> total_bytes;
  std::optional<SummaryStats> datagrams;
  std::vector<std::pair<double, double>> total_bytes_ecdf;
};

struct IterationFailure {
  std::string suite_id;
  std::uint64_t iteration = 0;
  std::string message;
};

/// Records of one loss point, sorted by (suite, iteration), plus per-suite
/// statistics and qrc/classical amplification at the 95th percentile.
struct ResultSet {
  std::string scenario_id;
  std::string loss_label;
  double loss_rate = 0.0;
  double rtt_ms = 0.0;
  std::vector<RunRecord> records;
  std::vector<SuiteSummary> summaries;
  std::optional<double> bytes_p95_ratio;
  std::optional<double> setup_time_p95_ratio;
  // Order-statistics correlation of classical vs. qrc setup times.
  std::optional<double> setup_time_correlation;
  std::vector<IterationFailure> failures;

  const SuiteSummary* summary(std::string_view suite_id) const noexcept;
};

/// Fills summaries and ratios of `rs` from its records. `suite_ids` lists the
/// suites that get a summary entry even without records.
void summarize_result_set(ResultSet& rs, const std::vector<std::string>& suite_ids);

struct BatchOptions {
  unsigned parallel = 1;
  std::optional<std::vector<SuiteId>> suites;  // overrides the config
};

/// Iteration i of every suite runs with link seed `config.link.seed + i`.
/// Output is identical for any degree of parallelism.
ResultSet run_point(const ScenarioConfig& config, std::size_t point, const BatchOptions& options = {});

/// One ResultSet per configured loss point.
std::vector<ResultSet> run_batch(const ScenarioConfig& config, const BatchOptions& options = {});

}  // namespace ikesim
