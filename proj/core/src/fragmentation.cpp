#include "ikesim/fragmentation.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "ikesim/errors.hpp"

namespace ikesim {

std::string_view to_string(ExchangeType type) noexcept {
  switch (type) {
    case ExchangeType::ike_sa_init:
      return "IKE_SA_INIT";
    case ExchangeType::ike_auth:
      return "IKE_AUTH";
    case ExchangeType::ike_intermediate:
      return "IKE_INTERMEDIATE";
    case ExchangeType::ike_followup_ke:
      return "IKE_FOLLOWUP_KE";
  }
  return "UNKNOWN";
}

const PayloadItem* MessageBlueprint::find(std::string_view label) const noexcept {
  for (const auto& item : payload_items) {
    if (item.label == label) return &item;
  }
  return nullptr;
}

std::size_t fragment_capacity(std::size_t threshold, std::size_t ip_udp_overhead,
                              std::size_t fragment_overhead) {
  const std::size_t used = ip_udp_overhead + fragment_overhead;
  if (threshold <= used) {
    throw ValidationError("engine.fragment_threshold_bytes",
                          "threshold " + std::to_string(threshold) +
                              " leaves no room after " + std::to_string(used) +
                              " bytes of overhead");
  }
  return threshold - used;
}

std::size_t fragment_count(std::size_t payload, std::size_t capacity) {
  if (capacity == 0) throw ValidationError("capacity", "must be > 0");
  if (payload == 0) return 1;
  return (payload + capacity - 1) / capacity;
}

std::vector<Fragment> fragment(const Message& message, const FragmentLimits& limits) {
  const std::size_t size = message.size();
  std::size_t count = fragment_count(size, limits.capacity);
  std::size_t capacity = limits.capacity;
  if (count > 1 && !message.encrypted && limits.allow_unencrypted) {
    // IKE fragmentation needs encryption; the whole message goes out as one
    // datagram and IP fragmentation takes over.
    count = 1;
    capacity = size;
  }
  if (count > 1 && !message.encrypted) {
    throw UnfragmentableMessage(std::string(to_string(message.exchange)) + " message of " +
                                std::to_string(size) + " bytes exceeds one datagram (" +
                                std::to_string(limits.capacity) +
                                " bytes) and is not encrypted");
  }
  if (count > std::numeric_limits<std::uint16_t>::max()) {
    throw UnfragmentableMessage("message needs more than 65535 fragments");
  }

  std::vector<Fragment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Fragment f;
    f.exchange = message.exchange;
    f.direction = message.direction;
    f.message_id = message.message_id;
    f.fragment_number = static_cast<std::uint16_t>(i + 1);
    f.total_fragments = static_cast<std::uint16_t>(count);
    f.body = message.body;
    f.offset = i * capacity;
    f.length = std::min(capacity, size - f.offset);
    f.wire_size = f.length + limits.overhead;
    out.push_back(std::move(f));
  }
  return out;
}

ReassemblyBuffer::AddOutcome ReassemblyBuffer::add(const Fragment& fragment) {
  if (fragment.total_fragments == 0 || fragment.fragment_number == 0 ||
      fragment.fragment_number > fragment.total_fragments) {
    throw ProtocolViolation("fragment " + std::to_string(fragment.fragment_number) + " of " +
                            std::to_string(fragment.total_fragments) + " is out of range");
  }
  if (received_.empty()) {
    message_id_ = fragment.message_id;
    transmission_ = fragment.transmission;
    expected_total_ = fragment.total_fragments;
  } else {
    if (fragment.message_id != message_id_) {
      throw ProtocolViolation("fragment of message " + std::to_string(fragment.message_id) +
                              " added to buffer of message " + std::to_string(message_id_));
    }
    if (fragment.total_fragments != expected_total_) {
      throw InconsistentTotals("message " + std::to_string(message_id_) + " announced " +
                               std::to_string(expected_total_) + " fragments, got one claiming " +
                               std::to_string(fragment.total_fragments));
    }
  }
  const auto [it, inserted] = received_.try_emplace(fragment.fragment_number, fragment);
  (void)it;
  return inserted ? AddOutcome::added : AddOutcome::duplicate;
}

std::vector<std::uint16_t> ReassemblyBuffer::missing() const {
  std::vector<std::uint16_t> out;
  for (std::size_t n = 1; n <= expected_total_; ++n) {
    if (!received_.contains(static_cast<std::uint16_t>(n))) {
      out.push_back(static_cast<std::uint16_t>(n));
    }
  }
  return out;
}

ReassemblyResult ReassemblyBuffer::reassemble() const {
  if (!complete()) return Incomplete{missing()};
  Bytes body;
  std::size_t total = 0;
  for (const auto& [number, f] : received_) total += f.length;
  body.reserve(total);
  for (const auto& [number, f] : received_) {
    const auto piece = f.payload();
    body.insert(body.end(), piece.begin(), piece.end());
  }
  return body;
}

void ReassemblyBuffer::reset() noexcept {
  message_id_ = 0;
  transmission_ = 0;
  expected_total_ = 0;
  received_.clear();
}

}  // namespace ikesim
