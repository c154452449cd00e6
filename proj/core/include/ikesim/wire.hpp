#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "ikesim/fragmentation.hpp"

namespace ikesim::wire {

// Datagram layout, big-endian:
//   0  magic "IKSM"        4
//   4  version             1
//   5  flags               1   bit0 response, bit1 retransmission
//   6  exchange type       1
//   7  reserved            1
//   8  spi                 8
//  16  message id          4
//  20  transmission        4
//  24  fragment number     2
//  26  total fragments     2
//  28  payload length      2
//  30  reserved            2
//  32  payload, then zero padding up to the fragment's wire_size
inline constexpr std::size_t kHeaderSize = 32;
inline constexpr std::uint8_t kVersion = 1;

struct Decoded {
  Fragment fragment;
  bool retransmission = false;
};

/// Serializes `fragment`, padded so the datagram is exactly its modeled
/// wire_size (or header + payload if that is larger).
Bytes encode(const Fragment& fragment, bool retransmission);

/// Throws ProtocolViolation for anything that is not a well-formed datagram.
Decoded decode(std::span<const std::uint8_t> datagram);

}  // namespace ikesim::wire
