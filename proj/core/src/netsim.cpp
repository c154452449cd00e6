#include "ikesim/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

void check_probability(double value, const char* field) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ValidationError(field, "probability " + std::to_string(value) + " outside [0, 1]");
  }
}

constexpr std::uint64_t kJitterStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kReverseStream = 0xd1b54a32d192ed03ULL;

}  // namespace

VirtualTime from_millis(double ms) {
  return VirtualTime(static_cast<std::int64_t>(std::llround(ms * 1e6)));
}

double to_millis(VirtualTime t) noexcept { return static_cast<double>(t.count()) / 1e6; }

double steady_state_loss(double p_leave_good, double r_leave_bad) {
  check_probability(p_leave_good, "P");
  check_probability(r_leave_bad, "R");
  if (p_leave_good + r_leave_bad <= 0.0) {
    throw DegenerateChain("P = R = 0: chain never changes state");
  }
  return p_leave_good / (p_leave_good + r_leave_bad);
}

GilbertElliottChannel::GilbertElliottChannel(double p_leave_good, double r_leave_bad,
                                             std::uint64_t seed)
    : p_(p_leave_good), r_(r_leave_bad), rng_(seed) {
  const double loss = steady_state_loss(p_, r_);
  state_ = draw() < loss ? ChannelState::bad : ChannelState::good;
}

GilbertElliottChannel::GilbertElliottChannel(double p_leave_good, double r_leave_bad,
                                             std::uint64_t seed, ChannelState initial)
    : p_(p_leave_good), r_(r_leave_bad), state_(initial), rng_(seed) {
  check_probability(p_, "P");
  check_probability(r_, "R");
}

GilbertElliottChannel GilbertElliottChannel::uniform(double rate, std::uint64_t seed) {
  check_probability(rate, "uniform_rate");
  return GilbertElliottChannel(rate, 1.0 - rate, seed);
}

double GilbertElliottChannel::draw() noexcept { return unit_interval(rng_); }

bool GilbertElliottChannel::step() {
  const bool drop = state_ == ChannelState::bad;
  const double u = draw();
  if (state_ == ChannelState::good) {
    if (u < p_) state_ = ChannelState::bad;
  } else {
    if (u < r_) state_ = ChannelState::good;
  }
  return drop;
}

VirtualTime LinkParams::one_way_delay() const { return from_millis(rtt_ms / 2.0); }

void LinkParams::validate() const {
  if (!(rtt_ms >= 0.0)) throw ValidationError("link.rtt_ms", "must be >= 0");
  if (mtu < 576) throw ValidationError("link.mtu", "must be >= 576");
  if (!(jitter_ms >= 0.0)) throw ValidationError("link.jitter_ms", "must be >= 0");
}

DeliveryOutcome transmit(std::size_t datagram_size, const LinkParams& link,
                         GilbertElliottChannel& channel, VirtualTime now) {
  if (datagram_size > link.mtu) {
    throw OversizedDatagram("datagram of " + std::to_string(datagram_size) +
                            " bytes exceeds MTU " + std::to_string(link.mtu));
  }
  if (channel.step()) return Dropped{};
  return Delivered{now + link.one_way_delay()};
}

double LossSpec::steady_state() const {
  if (uniform_rate) return *uniform_rate;
  return steady_state_loss(p, r);
}

GilbertElliottChannel LossSpec::make_channel(std::uint64_t seed) const {
  if (uniform_rate) return GilbertElliottChannel::uniform(*uniform_rate, seed);
  return GilbertElliottChannel(p, r, seed);
}

Link::Link(LinkParams params, const LossSpec& loss, ChannelMode mode)
    : params_(params), jitter_rng_(params.seed ^ kJitterStream) {
  channels_.push_back(loss.make_channel(params_.seed));
  if (mode == ChannelMode::per_direction) {
    channels_.push_back(loss.make_channel(params_.seed ^ kReverseStream));
  }
}

GilbertElliottChannel& Link::channel_for(LinkDirection direction) noexcept {
  if (channels_.size() == 1) return channels_.front();
  return channels_[direction == LinkDirection::initiator_to_responder ? 0 : 1];
}

DeliveryOutcome Link::send(std::size_t datagram_size, LinkDirection direction, VirtualTime now,
                           bool allow_ip_fragmentation) {
  DeliveryOutcome outcome = Dropped{};
  if (allow_ip_fragmentation && datagram_size > params_.mtu) {
    // Every IP fragment steps the channel; losing any one loses the datagram.
    bool lost = false;
    for (std::size_t left = datagram_size; left > 0;) {
      const std::size_t piece = std::min(left, params_.mtu);
      lost |= std::holds_alternative<Dropped>(transmit(piece, params_, channel_for(direction), now));
      left -= piece;
    }
    if (!lost) outcome = Delivered{now + params_.one_way_delay()};
  } else {
    outcome = transmit(datagram_size, params_, channel_for(direction), now);
  }
  if (auto* delivered = std::get_if<Delivered>(&outcome); delivered && params_.jitter_ms > 0.0) {
    delivered->at += from_millis(unit_interval(jitter_rng_) * params_.jitter_ms);
    auto& last = last_delivery_[direction == LinkDirection::initiator_to_responder ? 0 : 1];
    if (delivered->at < last) delivered->at = last;
    last = delivered->at;
  }
  return outcome;
}

LossSpec sge_from_loss_rate(double loss_rate, double mean_burst) {
  if (!(loss_rate >= 0.0 && loss_rate < 1.0)) {
    throw ValidationError("loss_rate", "must be in [0, 1)");
  }
  if (!(mean_burst >= 1.0)) throw ValidationError("mean_burst", "must be >= 1");
  const double r = 1.0 / mean_burst;
  const double p = loss_rate * r / (1.0 - loss_rate);
  if (p > 1.0) throw ValidationError("mean_burst", "too short for this loss rate");
  return LossSpec{p, r, std::nullopt};
}

double drop_fraction_standard_error(double p, double r, std::uint64_t steps) {
  const double pi = steady_state_loss(p, r);
  if (steps == 0) throw std::invalid_argument("steps must be positive");
  const double lambda = 1.0 - p - r;
  const double binomial = pi * (1.0 - pi) / static_cast<double>(steps);
  return std::sqrt(binomial * (1.0 + lambda) / (1.0 - lambda));
}

}  // namespace ikesim
