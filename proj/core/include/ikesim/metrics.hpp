#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ikesim/engine.hpp"
#include "ikesim/netsim.hpp"

namespace ikesim {

struct RunRecord {
  std::string scenario_id;
  std::string suite_id;
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
  double loss_rate = 0.0;
  double rtt_ms = 0.0;
  bool success = false;
  double setup_time_ms = 0.0;
  std::uint64_t total_bytes = 0;
  std::uint64_t datagrams = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t restarts = 0;

  bool operator==(const RunRecord&) const = default;
};

/// One datagram emission as seen by the simulator.
struct TraceEntry {
  VirtualTime time{};
  Role from = Role::initiator;
  ExchangeType exchange = ExchangeType::ike_sa_init;
  std::uint32_t message_id = 0;
  std::uint16_t fragment_number = 1;
  std::size_t datagram_size = 0;
  bool retransmission = false;
  bool dropped = false;
};

struct ConnectionTrace {
  std::vector<TraceEntry> sends;
  std::optional<VirtualTime> established_at;
};

/// Time from the first IKE_SA_INIT emission to establishment. Throws
/// NotEstablished when the connection never came up.
double setup_time(const ConnectionTrace& trace);

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Nearest-rank percentile: sorted sample at 1-based index ceil(p/100 * n),
/// with p = 0 mapping to the minimum.
double percentile(std::span<const double> samples, double p);

/// Throws EmptySample.
SummaryStats summarize(std::span<const double> samples);

/// Distinct sorted values with the fraction of samples <= each value.
std::vector<std::pair<double, double>> ecdf(std::span<const double> samples);

/// Product-moment correlation. Throws DegenerateSample on zero variance and
/// std::invalid_argument on length mismatch or fewer than two points.
double pearson(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of the sorted samples paired by rank.
double order_statistic_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace ikesim
