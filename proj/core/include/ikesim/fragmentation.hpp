#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "ikesim/message.hpp"

namespace ikesim {

/// One datagram's worth of an IKEv2 message. Unfragmented messages travel as
/// a single fragment numbered 1 of 1.
struct Fragment {
  std::uint64_t spi = 0;
  ExchangeType exchange = ExchangeType::ike_sa_init;
  Direction direction = Direction::request;
  std::uint32_t message_id = 0;
  // Per-message send counter; bumped on every retransmission of the message.
  std::uint32_t transmission = 0;
  std::uint16_t fragment_number = 1;
  std::uint16_t total_fragments = 1;

  std::shared_ptr<const Bytes> body;
  std::size_t offset = 0;
  std::size_t length = 0;

  // payload length + fragment overhead (IP/UDP excluded)
  std::size_t wire_size = 0;

  std::span<const std::uint8_t> payload() const noexcept {
    return body ? std::span<const std::uint8_t>(*body).subspan(offset, length)
                : std::span<const std::uint8_t>();
  }
};

struct FragmentLimits {
  std::size_t capacity = 0;  // payload bytes per fragment
  std::size_t overhead = 0;  // fixed per-fragment header/IV/ICV bytes
  // Permit splitting unencrypted messages (IP-layer fragmentation stand-in).
  bool allow_unencrypted = false;
};

/// Payload capacity left in a datagram of `threshold` bytes. Throws
/// ValidationError when the overheads consume the whole datagram.
std::size_t fragment_capacity(std::size_t threshold, std::size_t ip_udp_overhead,
                              std::size_t fragment_overhead);

/// ceil(payload / capacity), with an empty payload still taking one datagram.
std::size_t fragment_count(std::size_t payload, std::size_t capacity);

/// Splits `message` into ceil(size / capacity) fragments. Throws
/// UnfragmentableMessage for an unencrypted message larger than `capacity`,
/// or, with `limits.allow_unencrypted`, returns it as a single oversized
/// fragment (left to IP fragmentation).
std::vector<Fragment> fragment(const Message& message, const FragmentLimits& limits);

struct Incomplete {
  std::vector<std::uint16_t> missing;
  bool operator==(const Incomplete&) const = default;
};

using ReassemblyResult = std::variant<Bytes, Incomplete>;

/// Collects the fragments of one message. Re-delivery of a fragment is a
/// no-op; a fragment announcing a different total raises InconsistentTotals.
class ReassemblyBuffer {
 public:
  ReassemblyBuffer() = default;

  enum class AddOutcome { added, duplicate };

  AddOutcome add(const Fragment& fragment);

  bool empty() const noexcept { return received_.empty(); }
  bool complete() const noexcept {
    return expected_total_ != 0 && received_.size() == expected_total_;
  }
  std::uint32_t message_id() const noexcept { return message_id_; }
  std::uint32_t transmission() const noexcept { return transmission_; }
  std::size_t expected_total() const noexcept { return expected_total_; }
  std::size_t received_count() const noexcept { return received_.size(); }

  std::vector<std::uint16_t> missing() const;

  /// Original body when complete, else the fragment numbers still missing.
  ReassemblyResult reassemble() const;

  void reset() noexcept;

 private:
  std::uint32_t message_id_ = 0;
  std::uint32_t transmission_ = 0;
  std::size_t expected_total_ = 0;
  std::map<std::uint16_t, Fragment> received_;
};

}  // namespace ikesim
