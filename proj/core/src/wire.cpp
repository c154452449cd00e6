#include "ikesim/wire.hpp"

#include <algorithm>
#include <memory>

#include "ikesim/errors.hpp"

namespace ikesim::wire {
namespace {

constexpr std::uint8_t kMagic[4] = {'I', 'K', 'S', 'M'};
constexpr std::uint8_t kFlagResponse = 0x01;
constexpr std::uint8_t kFlagRetransmission = 0x02;

template <class T>
void put(Bytes& out, std::size_t at, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[at + i] = static_cast<std::uint8_t>(value >> (8 * (sizeof(T) - 1 - i)));
  }
}

template <class T>
T get(std::span<const std::uint8_t> in, std::size_t at) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value = static_cast<T>((value << 8) | in[at + i]);
  return value;
}

bool known_exchange(std::uint8_t v) {
  switch (static_cast<ExchangeType>(v)) {
    case ExchangeType::ike_sa_init:
    case ExchangeType::ike_auth:
    case ExchangeType::ike_intermediate:
    case ExchangeType::ike_followup_ke:
      return true;
  }
  return false;
}

}  // namespace

Bytes encode(const Fragment& f, bool retransmission) {
  const auto payload = f.payload();
  if (payload.size() > 0xffff) throw ProtocolViolation("fragment payload exceeds 65535 bytes");
  Bytes out(std::max(kHeaderSize + payload.size(), f.wire_size), 0);
  std::copy(std::begin(kMagic), std::end(kMagic), out.begin());
  out[4] = kVersion;
  out[5] = static_cast<std::uint8_t>((f.direction == Direction::response ? kFlagResponse : 0) |
                                     (retransmission ? kFlagRetransmission : 0));
  out[6] = static_cast<std::uint8_t>(f.exchange);
  put<std::uint64_t>(out, 8, f.spi);
  put<std::uint32_t>(out, 16, f.message_id);
  put<std::uint32_t>(out, 20, f.transmission);
  put<std::uint16_t>(out, 24, f.fragment_number);
  put<std::uint16_t>(out, 26, f.total_fragments);
  put<std::uint16_t>(out, 28, static_cast<std::uint16_t>(payload.size()));
  std::copy(payload.begin(), payload.end(), out.begin() + kHeaderSize);
  return out;
}

Decoded decode(std::span<const std::uint8_t> in) {
  if (in.size() < kHeaderSize) throw ProtocolViolation("datagram shorter than header");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), in.begin())) {
    throw ProtocolViolation("bad magic");
  }
  if (in[4] != kVersion) throw ProtocolViolation("unsupported version");
  if (!known_exchange(in[6])) throw ProtocolViolation("unknown exchange type");
  const auto length = get<std::uint16_t>(in, 28);
  if (kHeaderSize + length > in.size()) throw ProtocolViolation("truncated payload");

  Decoded d;
  auto& f = d.fragment;
  f.direction = (in[5] & kFlagResponse) ? Direction::response : Direction::request;
  d.retransmission = (in[5] & kFlagRetransmission) != 0;
  f.exchange = static_cast<ExchangeType>(in[6]);
  f.spi = get<std::uint64_t>(in, 8);
  f.message_id = get<std::uint32_t>(in, 16);
  f.transmission = get<std::uint32_t>(in, 20);
  f.fragment_number = get<std::uint16_t>(in, 24);
  f.total_fragments = get<std::uint16_t>(in, 26);
  if (f.fragment_number == 0 || f.fragment_number > f.total_fragments) {
    throw ProtocolViolation("fragment number out of range");
  }
  auto body = std::make_shared<Bytes>(in.begin() + kHeaderSize, in.begin() + kHeaderSize + length);
  f.length = body->size();
  f.body = std::move(body);
  f.wire_size = in.size();
  return d;
}

}  // namespace ikesim::wire
