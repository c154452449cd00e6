#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

namespace ikesim {

using VirtualTime = std::chrono::nanoseconds;

VirtualTime from_millis(double ms);
double to_millis(VirtualTime t) noexcept;

/// Stationary loss probability of the simplified Gilbert-Elliott chain,
/// P / (P + R). Throws DegenerateChain for P = R = 0.
double steady_state_loss(double p_leave_good, double r_leave_bad);

/// Standard error of the empirical drop fraction over `steps` steps of a
/// stationary chain: the binomial term times the autocorrelation inflation
/// (1+λ)/(1−λ), λ = 1−P−R.
double drop_fraction_standard_error(double p_leave_good, double r_leave_bad, std::uint64_t steps);

enum class ChannelState { good, bad };

/// Two-state Markov loss process. Good delivers everything, Bad drops
/// everything. One step is consumed per datagram transmission attempt.
class GilbertElliottChannel {
 public:
  /// Initial state drawn from the stationary distribution.
  GilbertElliottChannel(double p_leave_good, double r_leave_bad, std::uint64_t seed);
  GilbertElliottChannel(double p_leave_good, double r_leave_bad, std::uint64_t seed,
                        ChannelState initial);

  /// Memoryless per-packet loss at `rate`, i.e. the chain with R = 1 - P.
  static GilbertElliottChannel uniform(double rate, std::uint64_t seed);

  /// Reports whether the current datagram is dropped (state is Bad), then
  /// advances the chain with one draw.
  bool step();

  ChannelState state() const noexcept { return state_; }
  double p() const noexcept { return p_; }
  double r() const noexcept { return r_; }

 private:
  double draw() noexcept;

  double p_;
  double r_;
  ChannelState state_ = ChannelState::good;
  std::mt19937_64 rng_;
};

struct LinkParams {
  double rtt_ms = 0.0;
  std::size_t mtu = 1500;
  std::uint64_t seed = 1;
  // Optional uniform extra one-way delay in [0, jitter_ms].
  double jitter_ms = 0.0;

  VirtualTime one_way_delay() const;
  void validate() const;
};

struct Delivered {
  VirtualTime at;
  bool operator==(const Delivered&) const = default;
};
struct Dropped {
  bool operator==(const Dropped&) const = default;
};
using DeliveryOutcome = std::variant<Delivered, Dropped>;

/// One channel step for one datagram; delivery after rtt/2 when it survives.
/// Throws OversizedDatagram when `datagram_size` exceeds the link MTU.
DeliveryOutcome transmit(std::size_t datagram_size, const LinkParams& link,
                         GilbertElliottChannel& channel, VirtualTime now);

/// Loss process parameters. `uniform_rate` selects memoryless loss.
struct LossSpec {
  double p = 0.0;
  double r = 1.0;
  std::optional<double> uniform_rate;

  double steady_state() const;
  GilbertElliottChannel make_channel(std::uint64_t seed) const;
};

/// SGE parameters with steady-state loss `loss_rate` and mean Bad-state
/// sojourn `mean_burst` datagrams: R = 1/mean_burst, P = loss_rate·R/(1−loss_rate).
/// Throws ValidationError when no valid P exists.
LossSpec sge_from_loss_rate(double loss_rate, double mean_burst);

enum class ChannelMode { shared, per_direction };

enum class LinkDirection { initiator_to_responder, responder_to_initiator };

/// Bidirectional link: fixed delay plus optional jitter, one shared loss
/// chain (or one per direction). Delivery stays FIFO per direction.
class Link {
 public:
  Link(LinkParams params, const LossSpec& loss, ChannelMode mode);

  /// With `allow_ip_fragmentation`, a datagram above the MTU travels as
  /// ceil(size / mtu) IP fragments instead of raising OversizedDatagram.
  DeliveryOutcome send(std::size_t datagram_size, LinkDirection direction, VirtualTime now,
                       bool allow_ip_fragmentation = false);

  const LinkParams& params() const noexcept { return params_; }

 private:
  GilbertElliottChannel& channel_for(LinkDirection direction) noexcept;

  LinkParams params_;
  std::vector<GilbertElliottChannel> channels_;
  std::mt19937_64 jitter_rng_;
  VirtualTime last_delivery_[2] = {VirtualTime::min(), VirtualTime::min()};
};

/// Min-heap of events keyed by virtual time; equal times leave in insertion
/// order.
template <class Payload>
class EventQueue {
 public:
  struct Entry {
    VirtualTime time;
    std::uint64_t sequence;
    Payload payload;
  };

  void push(VirtualTime time, Payload payload) {
    heap_.push_back(Entry{time, next_sequence_++, std::move(payload)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
  }

  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  VirtualTime next_time() const { return heap_.front().time; }

  Entry pop() {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Entry e = std::move(heap_.back());
    heap_.pop_back();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  std::vector<Entry> heap_;
  std::uint64_t next_sequence_ = 0;
};

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw; identical
/// across standard library implementations.
inline double unit_interval(std::mt19937_64& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ikesim
