#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ikesim/config.hpp"
#include "ikesim/simulation.hpp"

namespace ikesim {

struct PeerAddress {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port" or "[v6]:port". Throws ValidationError.
PeerAddress parse_peer(std::string_view text);

struct LiveOptions {
  std::optional<std::vector<SuiteId>> suites;  // overrides the config
  // Applied when the config leaves restarts unbounded, so a dead peer ends.
  int default_max_restarts = 2;
};

/// Runs config.iterations handshakes per suite against a LiveResponder using
/// the same engine over a UDP socket and wall-clock timers. Datagram and
/// byte counts are those observed at the initiator, sent and received.
/// Throws PeerUnreachable when an iteration gives up without hearing from
/// the peer, IoError on socket failures.
ResultSet live_run(const ScenarioConfig& config, const PeerAddress& peer,
                   const LiveOptions& options = {});

/// Answers handshakes for every suite of `config` (plus the custom one if
/// given). A connection is keyed by SPI and bound to the suite whose
/// IKE_SA_INIT request it sent.
class LiveResponder {
 public:
  LiveResponder(const ScenarioConfig& config, const PeerAddress& bind);
  ~LiveResponder();
  LiveResponder(const LiveResponder&) = delete;
  LiveResponder& operator=(const LiveResponder&) = delete;

  /// Bound port, useful when binding to port 0.
  std::uint16_t port() const noexcept { return port_; }

  /// Serves until `stop` becomes true. Checks the flag at least every 50 ms.
  void serve(const std::atomic<bool>& stop);

  std::uint64_t connections() const noexcept { return connections_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
  std::uint64_t connections_ = 0;
};

}  // namespace ikesim
