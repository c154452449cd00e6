#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "ikesim/fragmentation.hpp"
#include "ikesim/message.hpp"
#include "ikesim/netsim.hpp"
#include "ikesim/suite.hpp"

namespace ikesim {

/// What to do when an IKE_SA_INIT message exceeds one datagram.
enum class SaInitPolicy { error, ip_fragment };

/// Whether a receiver may combine fragments from different transmissions of
/// the same message. `per_transmission` keeps only the newest transmission,
/// so a message completes only if one transmission arrives whole.
enum class ReassemblyScope { per_transmission, merge };

std::string_view to_string(SaInitPolicy policy) noexcept;
std::string_view to_string(ReassemblyScope scope) noexcept;

struct EngineConfig {
  std::size_t fragment_threshold_bytes = 576;
  std::size_t fragment_overhead_bytes = 61;
  std::size_t ip_udp_overhead_bytes = 28;
  // Key exchanges after IKE_SA_INIT for non-classical suites. 0 places
  // key_establishments[0] in IKE_SA_INIT itself.
  int additional_ke_rounds = 2;
  double initial_timeout_ms = 4000.0;
  double backoff_factor = 2.0;
  int max_retries = 5;
  // Unbounded when empty.
  std::optional<int> max_restarts;
  SaInitPolicy sa_init_policy = SaInitPolicy::error;
  ReassemblyScope reassembly_scope = ReassemblyScope::per_transmission;

  std::size_t fragment_capacity() const;
  FragmentLimits fragment_limits() const;
  /// Timeout armed after the `retry`-th retransmission (0 = first send).
  VirtualTime retransmit_timeout(int retry) const;
  void validate() const;
};

struct HandshakePlan {
  CryptoSuite suite;
  std::vector<MessageBlueprint> blueprints;  // request, response, request, ...
  int additional_ke_rounds = 0;

  std::size_t exchange_count() const noexcept { return blueprints.size() / 2; }
  const MessageBlueprint& request(std::size_t exchange) const { return blueprints.at(2 * exchange); }
  const MessageBlueprint& response(std::size_t exchange) const {
    return blueprints.at(2 * exchange + 1);
  }
};

/// Classical suites get the four-message IKE_SA_INIT + IKE_AUTH flow. Other
/// suites announce additional key exchanges in IKE_SA_INIT (which carries a
/// DH-2048-sized share) and run one IKE_INTERMEDIATE exchange per
/// additional round before IKE_AUTH.
HandshakePlan plan_handshake(const CryptoSuite& suite, const EngineConfig& config);

/// Datagrams a loss-free handshake needs at the given fragment capacity.
/// Throws UnfragmentableMessage for an oversized IKE_SA_INIT under
/// SaInitPolicy::error.
std::size_t datagram_count(const HandshakePlan& plan, std::size_t capacity,
                           SaInitPolicy policy = SaInitPolicy::error);

/// Bodies and fragment lists of every blueprint, built once per plan and
/// shared read-only by both endpoints and across iterations.
class PreparedHandshake {
 public:
  static std::shared_ptr<const PreparedHandshake> build(
      HandshakePlan plan, const EngineConfig& config,
      const MaterialProvider& provider = OpaqueMaterialProvider{}, std::uint64_t material_seed = 0);

  const HandshakePlan& plan() const noexcept { return plan_; }
  const EngineConfig& config() const noexcept { return config_; }
  const Message& message(std::size_t blueprint) const { return messages_.at(blueprint); }
  const std::vector<Fragment>& fragments(std::size_t blueprint) const {
    return fragments_.at(blueprint);
  }

  std::size_t zero_loss_datagrams() const noexcept;
  std::uint64_t zero_loss_bytes() const noexcept;

 private:
  PreparedHandshake() = default;

  HandshakePlan plan_;
  EngineConfig config_;
  std::vector<Message> messages_;
  std::vector<std::vector<Fragment>> fragments_;
};

enum class Role { initiator, responder };

std::string_view to_string(Role role) noexcept;

struct SendAction {
  Role from = Role::initiator;
  Fragment fragment;
  std::size_t datagram_size = 0;  // fragment wire size + IP/UDP
  bool retransmission = false;
};

/// Bytes on the wire for a trace, IP/UDP included, both endpoints.
std::uint64_t handshake_bytes(std::span<const SendAction> trace) noexcept;

struct Start {};
struct FragmentArrived {
  Fragment fragment;
};
struct TimerExpired {};
using EndpointEvent = std::variant<Start, FragmentArrived, TimerExpired>;

struct EndpointState {
  Role role = Role::initiator;
  // Initiator: exchange awaiting its response. Responder: next request id.
  std::size_t phase = 0;
  std::uint64_t spi = 0;
  ReassemblyBuffer reassembly;
  std::vector<Fragment> outstanding_request;
  std::optional<VirtualTime> retransmit_deadline;
  int retry_count = 0;
  int restart_count = 0;
  std::vector<Fragment> cached_response;
  std::optional<std::uint32_t> cached_message_id;
  std::uint32_t transmission = 0;
  bool established = false;
  bool gave_up = false;

  std::uint64_t datagrams_sent = 0;
  std::uint64_t retransmitted_datagrams = 0;
};

class Initiator {
 public:
  Initiator(std::shared_ptr<const PreparedHandshake> handshake, std::uint64_t spi_base = 1);

  /// Start sends the IKE_SA_INIT request. A complete response advances the
  /// plan. A timer expiry re-sends every fragment of the outstanding request
  /// with a backed-off timeout, or restarts from IKE_SA_INIT under a fresh
  /// SPI once max_retries is spent.
  std::vector<SendAction> step(const EndpointEvent& event, VirtualTime now);

  const EndpointState& state() const noexcept { return state_; }

 private:
  std::vector<SendAction> on_start(VirtualTime now);
  std::vector<SendAction> on_fragment(const Fragment& fragment, VirtualTime now);
  std::vector<SendAction> on_timer(VirtualTime now);
  std::vector<SendAction> send_outstanding(VirtualTime now, bool retransmission);
  std::vector<SendAction> begin_request(VirtualTime now);

  std::shared_ptr<const PreparedHandshake> handshake_;
  std::uint64_t spi_base_;
  bool started_ = false;
  EndpointState state_;
};

class Responder {
 public:
  explicit Responder(std::shared_ptr<const PreparedHandshake> handshake);

  /// Answers each completed request and caches the response. Fragment 1 of
  /// an already answered request triggers a resend of the cached response.
  /// An IKE_SA_INIT request under a new SPI starts a new connection.
  std::vector<SendAction> step(const EndpointEvent& event, VirtualTime now);

  const EndpointState& state() const noexcept { return state_; }

 private:
  std::vector<SendAction> on_fragment(const Fragment& fragment);
  std::vector<SendAction> emit_cached(bool retransmission);

  std::shared_ptr<const PreparedHandshake> handshake_;
  bool active_ = false;
  EndpointState state_;
};

}  // namespace ikesim
