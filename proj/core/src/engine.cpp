#include "ikesim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

// Approximate IKEv2 payload sizes (generic headers included where noted).
constexpr std::size_t kSaProposalBytes = 44;
constexpr std::size_t kAddKeTransformBytes = 8;
constexpr std::size_t kNonceBytes = 32;
constexpr std::size_t kNotifyBytes = 8;
constexpr std::size_t kKeHeaderBytes = 8;
constexpr std::size_t kNonceHeaderBytes = 4;
constexpr std::size_t kIdentityBytes = 12;
constexpr std::size_t kCertHeaderBytes = 5;
constexpr std::size_t kAuthHeaderBytes = 8;
constexpr std::size_t kTrafficSelectorBytes = 24;

class BlueprintBuilder {
 public:
  BlueprintBuilder(ExchangeType exchange, Direction direction, std::uint32_t message_id) {
    bp_.exchange = exchange;
    bp_.direction = direction;
    bp_.message_id = message_id;
    bp_.encrypted = is_encrypted(exchange);
  }

  BlueprintBuilder& item(std::string label, std::size_t size) {
    bp_.payload_items.push_back(PayloadItem{std::move(label), size, std::nullopt,
                                            MaterialField::public_object});
    return *this;
  }

  BlueprintBuilder& material(std::string label, const AlgorithmSpec& spec, MaterialField field) {
    bp_.payload_items.push_back(
        PayloadItem{std::move(label), material_size(spec, field), spec, field});
    return *this;
  }

  MessageBlueprint done() {
    bp_.total_payload = 0;
    for (const auto& it : bp_.payload_items) bp_.total_payload += it.size;
    return std::move(bp_);
  }

 private:
  MessageBlueprint bp_;
};

MessageBlueprint sa_init(Direction dir, const AlgorithmSpec& ke, int rounds) {
  BlueprintBuilder b(ExchangeType::ike_sa_init, dir, 0);
  b.item("sa", kSaProposalBytes + kAddKeTransformBytes * static_cast<std::size_t>(rounds));
  b.material("KE_public", ke,
             dir == Direction::request ? MaterialField::public_object
                                       : MaterialField::response_object);
  b.item("nonce", kNonceBytes);
  b.item("notify_fragmentation_supported", kNotifyBytes);
  if (rounds > 0) {
    b.item("notify_intermediate_supported", kNotifyBytes);
    b.item("notify_additional_ke", kNotifyBytes);
  }
  b.item("payload_headers", kKeHeaderBytes + kNonceHeaderBytes);
  return b.done();
}

MessageBlueprint intermediate(Direction dir, std::uint32_t id, const AlgorithmSpec& ke) {
  BlueprintBuilder b(ExchangeType::ike_intermediate, dir, id);
  b.material("KE_public", ke,
             dir == Direction::request ? MaterialField::public_object
                                       : MaterialField::response_object);
  b.item("payload_headers", kKeHeaderBytes);
  return b.done();
}

MessageBlueprint auth(Direction dir, std::uint32_t id, const AlgorithmSpec& authn) {
  BlueprintBuilder b(ExchangeType::ike_auth, dir, id);
  b.item("identity", kIdentityBytes);
  b.material("cert", authn, MaterialField::public_object);
  b.material("signature", authn, MaterialField::signature);
  b.item("child_sa", kSaProposalBytes);
  b.item("ts_initiator", kTrafficSelectorBytes);
  b.item("ts_responder", kTrafficSelectorBytes);
  b.item("payload_headers", kCertHeaderBytes + kAuthHeaderBytes);
  return b.done();
}

}  // namespace

std::string_view to_string(SaInitPolicy policy) noexcept {
  return policy == SaInitPolicy::error ? "error" : "ip_fragment";
}

std::string_view to_string(ReassemblyScope scope) noexcept {
  return scope == ReassemblyScope::per_transmission ? "per_transmission" : "merge";
}

std::string_view to_string(Role role) noexcept {
  return role == Role::initiator ? "initiator" : "responder";
}

std::size_t EngineConfig::fragment_capacity() const {
  return ikesim::fragment_capacity(fragment_threshold_bytes, ip_udp_overhead_bytes,
                                   fragment_overhead_bytes);
}

FragmentLimits EngineConfig::fragment_limits() const {
  return FragmentLimits{fragment_capacity(), fragment_overhead_bytes,
                        sa_init_policy == SaInitPolicy::ip_fragment};
}

VirtualTime EngineConfig::retransmit_timeout(int retry) const {
  return from_millis(initial_timeout_ms * std::pow(backoff_factor, retry));
}

void EngineConfig::validate() const {
  (void)fragment_capacity();
  if (additional_ke_rounds < 0 || additional_ke_rounds > 7) {
    throw ValidationError("engine.additional_ke_rounds", "must be within 0..7");
  }
  if (!(initial_timeout_ms > 0.0)) {
    throw ValidationError("engine.initial_timeout_ms", "must be > 0");
  }
  if (!(backoff_factor >= 1.0)) throw ValidationError("engine.backoff_factor", "must be >= 1");
  if (max_retries < 0) throw ValidationError("engine.max_retries", "must be >= 0");
  if (max_restarts && *max_restarts < 0) {
    throw ValidationError("engine.max_restarts", "must be >= 0");
  }
}

HandshakePlan plan_handshake(const CryptoSuite& suite, const EngineConfig& config) {
  suite.validate();
  config.validate();

  HandshakePlan plan;
  plan.suite = suite;
  plan.additional_ke_rounds = suite.id == SuiteId::classical ? 0 : config.additional_ke_rounds;
  const int rounds = plan.additional_ke_rounds;

  const AlgorithmSpec initial_ke = rounds == 0 ? suite.key_establishments.front() : dhke_modp2048();
  plan.blueprints.push_back(sa_init(Direction::request, initial_ke, rounds));
  plan.blueprints.push_back(sa_init(Direction::response, initial_ke, rounds));

  std::uint32_t id = 1;
  for (int r = 0; r < rounds; ++r, ++id) {
    const auto& ke = suite.key_establishments[static_cast<std::size_t>(r) %
                                              suite.key_establishments.size()];
    plan.blueprints.push_back(intermediate(Direction::request, id, ke));
    plan.blueprints.push_back(intermediate(Direction::response, id, ke));
  }
  plan.blueprints.push_back(auth(Direction::request, id, suite.authentication));
  plan.blueprints.push_back(auth(Direction::response, id, suite.authentication));
  return plan;
}

std::size_t datagram_count(const HandshakePlan& plan, std::size_t capacity, SaInitPolicy policy) {
  std::size_t total = 0;
  for (const auto& bp : plan.blueprints) {
    std::size_t n = fragment_count(bp.total_payload, capacity);
    if (n > 1 && !bp.encrypted && policy == SaInitPolicy::ip_fragment) n = 1;
    if (n > 1 && !bp.encrypted) {
      throw UnfragmentableMessage(std::string(to_string(bp.exchange)) + " payload of " +
                                  std::to_string(bp.total_payload) + " bytes exceeds " +
                                  std::to_string(capacity));
    }
    total += n;
  }
  return total;
}

std::shared_ptr<const PreparedHandshake> PreparedHandshake::build(
    HandshakePlan plan, const EngineConfig& config, const MaterialProvider& provider,
    std::uint64_t material_seed) {
  config.validate();
  std::shared_ptr<PreparedHandshake> out(new PreparedHandshake());
  out->config_ = config;
  const FragmentLimits limits = config.fragment_limits();

  for (std::size_t i = 0; i < plan.blueprints.size(); ++i) {
    const auto& bp = plan.blueprints[i];
    auto body = std::make_shared<Bytes>();
    body->reserve(bp.total_payload);
    const std::uint64_t seed = material_seed * 1000003ULL + i;
    for (const auto& item : bp.payload_items) {
      Bytes chunk = item.algorithm ? provider.material(*item.algorithm, item.field, seed)
                                   : filler_bytes(item.label, item.size, seed);
      if (chunk.size() != item.size) {
        throw ValidationError("material." + item.label,
                              "provider returned " + std::to_string(chunk.size()) +
                                  " bytes, expected " + std::to_string(item.size));
      }
      body->insert(body->end(), chunk.begin(), chunk.end());
    }
    Message msg{bp.exchange, bp.direction, bp.message_id, bp.encrypted, std::move(body)};
    out->fragments_.push_back(fragment(msg, limits));
    out->messages_.push_back(std::move(msg));
  }
  out->plan_ = std::move(plan);
  return out;
}

std::size_t PreparedHandshake::zero_loss_datagrams() const noexcept {
  std::size_t n = 0;
  for (const auto& list : fragments_) n += list.size();
  return n;
}

std::uint64_t PreparedHandshake::zero_loss_bytes() const noexcept {
  std::uint64_t total = 0;
  for (const auto& list : fragments_) {
    for (const auto& f : list) total += f.wire_size + config_.ip_udp_overhead_bytes;
  }
  return total;
}

std::uint64_t handshake_bytes(std::span<const SendAction> trace) noexcept {
  std::uint64_t total = 0;
  for (const auto& a : trace) total += a.datagram_size;
  return total;
}

namespace {

/// Feeds a fragment into `buffer` honouring the reassembly scope. Returns
/// false when the fragment belongs to an older transmission and is ignored.
bool accept_fragment(ReassemblyBuffer& buffer, const Fragment& f, ReassemblyScope scope) {
  if (!buffer.empty() && scope == ReassemblyScope::per_transmission) {
    if (f.transmission < buffer.transmission()) return false;
    if (f.transmission > buffer.transmission()) buffer.reset();
  }
  buffer.add(f);
  return true;
}

void verify_body(const ReassemblyBuffer& buffer, const Message& expected) {
  const auto result = buffer.reassemble();
  const auto* body = std::get_if<Bytes>(&result);
  if (body == nullptr || *body != *expected.body) {
    throw ProtocolViolation(std::string(to_string(expected.exchange)) + " message " +
                            std::to_string(expected.message_id) +
                            " reassembled to unexpected content");
  }
}

}  // namespace

Initiator::Initiator(std::shared_ptr<const PreparedHandshake> handshake, std::uint64_t spi_base)
    : handshake_(std::move(handshake)), spi_base_(spi_base) {
  state_.role = Role::initiator;
}

std::vector<SendAction> Initiator::step(const EndpointEvent& event, VirtualTime now) {
  if (const auto* arrived = std::get_if<FragmentArrived>(&event)) {
    return on_fragment(arrived->fragment, now);
  }
  if (std::holds_alternative<TimerExpired>(event)) return on_timer(now);
  return on_start(now);
}

std::vector<SendAction> Initiator::on_start(VirtualTime now) {
  if (started_) throw ProtocolViolation("initiator already started");
  started_ = true;
  state_.spi = spi_base_;
  state_.phase = 0;
  return begin_request(now);
}

std::vector<SendAction> Initiator::begin_request(VirtualTime now) {
  state_.retry_count = 0;
  state_.transmission = 0;
  state_.reassembly.reset();
  state_.outstanding_request = handshake_->fragments(2 * state_.phase);
  for (auto& f : state_.outstanding_request) f.spi = state_.spi;
  return send_outstanding(now, false);
}

std::vector<SendAction> Initiator::send_outstanding(VirtualTime now, bool retransmission) {
  const std::size_t ip_udp = handshake_->config().ip_udp_overhead_bytes;
  std::vector<SendAction> out;
  out.reserve(state_.outstanding_request.size());
  for (auto& f : state_.outstanding_request) {
    f.transmission = state_.transmission;
    out.push_back(SendAction{Role::initiator, f, f.wire_size + ip_udp, retransmission});
  }
  state_.datagrams_sent += out.size();
  if (retransmission) state_.retransmitted_datagrams += out.size();
  state_.retransmit_deadline = now + handshake_->config().retransmit_timeout(state_.retry_count);
  return out;
}

std::vector<SendAction> Initiator::on_fragment(const Fragment& f, VirtualTime now) {
  if (!started_ || state_.established || state_.gave_up) return {};
  if (f.spi != state_.spi) return {};
  if (f.direction != Direction::response) {
    throw ProtocolViolation("initiator received a request");
  }
  if (f.message_id < state_.phase) return {};
  const auto& plan = handshake_->plan();
  if (f.message_id > state_.phase) {
    throw ProtocolViolation("response for message " + std::to_string(f.message_id) +
                            " while awaiting " + std::to_string(state_.phase));
  }
  if (f.exchange != plan.response(state_.phase).exchange) {
    throw ProtocolViolation(std::string(to_string(f.exchange)) + " response during " +
                            std::string(to_string(plan.response(state_.phase).exchange)));
  }
  auto& buffer = state_.reassembly;
  if (!accept_fragment(buffer, f, handshake_->config().reassembly_scope)) return {};
  if (!buffer.complete()) return {};

  verify_body(buffer, handshake_->message(2 * state_.phase + 1));
  buffer.reset();
  ++state_.phase;
  if (state_.phase == plan.exchange_count()) {
    state_.established = true;
    state_.retransmit_deadline.reset();
    state_.outstanding_request.clear();
    return {};
  }
  return begin_request(now);
}

std::vector<SendAction> Initiator::on_timer(VirtualTime now) {
  if (!started_ || state_.established || state_.gave_up) return {};
  if (!state_.retransmit_deadline || now < *state_.retransmit_deadline) return {};
  const auto& config = handshake_->config();
  if (state_.retry_count < config.max_retries) {
    ++state_.retry_count;
    ++state_.transmission;
    return send_outstanding(now, true);
  }
  ++state_.restart_count;
  if (config.max_restarts && state_.restart_count > *config.max_restarts) {
    state_.gave_up = true;
    state_.retransmit_deadline.reset();
    state_.outstanding_request.clear();
    return {};
  }
  state_.spi = spi_base_ + static_cast<std::uint64_t>(state_.restart_count);
  state_.phase = 0;
  return begin_request(now);
}

Responder::Responder(std::shared_ptr<const PreparedHandshake> handshake)
    : handshake_(std::move(handshake)) {
  state_.role = Role::responder;
}

std::vector<SendAction> Responder::step(const EndpointEvent& event, VirtualTime) {
  if (const auto* arrived = std::get_if<FragmentArrived>(&event)) {
    return on_fragment(arrived->fragment);
  }
  return {};
}

std::vector<SendAction> Responder::emit_cached(bool retransmission) {
  const std::size_t ip_udp = handshake_->config().ip_udp_overhead_bytes;
  std::vector<SendAction> out;
  out.reserve(state_.cached_response.size());
  for (auto& f : state_.cached_response) {
    f.transmission = state_.transmission;
    out.push_back(SendAction{Role::responder, f, f.wire_size + ip_udp, retransmission});
  }
  state_.datagrams_sent += out.size();
  if (retransmission) state_.retransmitted_datagrams += out.size();
  return out;
}

std::vector<SendAction> Responder::on_fragment(const Fragment& f) {
  if (f.direction != Direction::request) {
    throw ProtocolViolation("responder received a response");
  }
  if (!active_ || f.spi != state_.spi) {
    if (f.message_id != 0 || f.exchange != ExchangeType::ike_sa_init) return {};
    // New IKE SA: forget whatever the previous attempt left behind.
    const auto datagrams = state_.datagrams_sent;
    const auto retransmitted = state_.retransmitted_datagrams;
    state_ = EndpointState{};
    state_.role = Role::responder;
    state_.spi = f.spi;
    state_.datagrams_sent = datagrams;
    state_.retransmitted_datagrams = retransmitted;
    active_ = true;
  }

  const auto& plan = handshake_->plan();
  if (f.message_id >= plan.exchange_count()) {
    throw ProtocolViolation("request message id " + std::to_string(f.message_id) +
                            " beyond plan of " + std::to_string(plan.exchange_count()));
  }
  if (f.exchange != plan.request(f.message_id).exchange) {
    throw ProtocolViolation(std::string(to_string(f.exchange)) + " request where plan has " +
                            std::string(to_string(plan.request(f.message_id).exchange)));
  }
  if (state_.cached_message_id && f.message_id == *state_.cached_message_id) {
    if (f.fragment_number != 1) return {};
    ++state_.transmission;
    return emit_cached(true);
  }
  if (f.message_id < state_.phase) return {};
  if (f.message_id > state_.phase) {
    throw ProtocolViolation("request " + std::to_string(f.message_id) + " skips ahead of " +
                            std::to_string(state_.phase));
  }

  auto& buffer = state_.reassembly;
  if (!accept_fragment(buffer, f, handshake_->config().reassembly_scope)) return {};
  if (!buffer.complete()) return {};

  verify_body(buffer, handshake_->message(2 * state_.phase));
  buffer.reset();
  state_.cached_response = handshake_->fragments(2 * state_.phase + 1);
  for (auto& c : state_.cached_response) c.spi = state_.spi;
  state_.cached_message_id = static_cast<std::uint32_t>(state_.phase);
  state_.transmission = 0;
  ++state_.phase;
  if (state_.phase == plan.exchange_count()) state_.established = true;
  return emit_cached(false);
}

}  // namespace ikesim
