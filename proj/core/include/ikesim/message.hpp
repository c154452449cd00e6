#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ikesim/suite.hpp"

namespace ikesim {

enum class ExchangeType : std::uint8_t {
  ike_sa_init = 34,
  ike_auth = 35,
  ike_intermediate = 43,
  ike_followup_ke = 44,
};

std::string_view to_string(ExchangeType type) noexcept;

/// IKE_SA_INIT travels in the clear; everything after it is protected by the
/// keys that exchange produced.
constexpr bool is_encrypted(ExchangeType type) noexcept {
  return type != ExchangeType::ike_sa_init;
}

enum class Direction : std::uint8_t { request, response };

/// One payload of a message. When `algorithm` is set the bytes come from the
/// material provider; otherwise they are deterministic filler.
struct PayloadItem {
  std::string label;
  std::size_t size = 0;
  std::optional<AlgorithmSpec> algorithm;
  MaterialField field = MaterialField::public_object;
};

struct MessageBlueprint {
  ExchangeType exchange = ExchangeType::ike_sa_init;
  Direction direction = Direction::request;
  std::uint32_t message_id = 0;
  bool encrypted = false;
  std::vector<PayloadItem> payload_items;
  std::size_t total_payload = 0;

  /// Looks up an item by label; nullptr when absent.
  const PayloadItem* find(std::string_view label) const noexcept;
};

/// A concrete message: a blueprint's header fields plus its serialized body.
/// The body is shared so that fragments can view it without copying.
struct Message {
  ExchangeType exchange = ExchangeType::ike_sa_init;
  Direction direction = Direction::request;
  std::uint32_t message_id = 0;
  bool encrypted = false;
  std::shared_ptr<const Bytes> body;

  std::size_t size() const noexcept { return body ? body->size() : 0; }
};

}  // namespace ikesim
