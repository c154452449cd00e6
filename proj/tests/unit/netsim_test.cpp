#include <gtest/gtest.h>

#include <cmath>

#include "ikesim/config.hpp"
#include "ikesim/errors.hpp"
#include "ikesim/netsim.hpp"

namespace ikesim {
namespace {

double empirical_drop_fraction(double p, double r, std::uint64_t seed, std::uint64_t n) {
  GilbertElliottChannel ch(p, r, seed);
  std::uint64_t drops = 0;
  for (std::uint64_t i = 0; i < n; ++i) drops += ch.step();
  return static_cast<double>(drops) / static_cast<double>(n);
}

TEST(SteadyState, TableRows) {
  EXPECT_NEAR(steady_state_loss(3.0e-3, 128.0e-3), 0.0229, 5e-5);
  EXPECT_NEAR(steady_state_loss(4.0e-3, 81.0e-3), 0.0471, 5e-5);
  EXPECT_NEAR(steady_state_loss(9.0e-3, 82.0e-3), 0.0989, 5e-5);
}

TEST(SteadyState, Formula) {
  EXPECT_DOUBLE_EQ(steady_state_loss(2.5e-3, 43.1e-3), 2.5e-3 / 45.6e-3);
  EXPECT_DOUBLE_EQ(steady_state_loss(0.6e-3, 7.7e-3), 0.6e-3 / 8.3e-3);
  EXPECT_EQ(steady_state_loss(0.0, 0.3), 0.0);
  EXPECT_EQ(steady_state_loss(1.0, 0.0), 1.0);
}

TEST(SteadyState, Errors) {
  EXPECT_THROW(steady_state_loss(0.0, 0.0), DegenerateChain);
  EXPECT_THROW(steady_state_loss(-0.1, 0.5), ValidationError);
  EXPECT_THROW(steady_state_loss(0.1, 1.5), ValidationError);
}

TEST(Channel, AbsorbingGoodNeverDrops) {
  GilbertElliottChannel ch(0.0, 0.5, 3, ChannelState::good);
  for (int i = 0; i < 100000; ++i) ASSERT_FALSE(ch.step());
}

TEST(Channel, AlternatesWhenPAndRAreOne) {
  GilbertElliottChannel ch(1.0, 1.0, 99, ChannelState::good);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(ch.step(), i % 2 == 1) << i;
}

TEST(Channel, AbsorbingBad) {
  GilbertElliottChannel ch(1.0, 0.0, 5, ChannelState::good);
  EXPECT_FALSE(ch.step());
  for (int i = 0; i < 1000; ++i) ASSERT_TRUE(ch.step());
}

TEST(Channel, SameSeedSameSequence) {
  GilbertElliottChannel a(0.01, 0.1, 42);
  GilbertElliottChannel b(0.01, 0.1, 42);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.step(), b.step());
}

TEST(Channel, UniformIsMemoryless) {
  auto ch = GilbertElliottChannel::uniform(0.2, 11);
  EXPECT_DOUBLE_EQ(ch.p() + ch.r(), 1.0);
  int drops = 0;
  int pairs = 0;
  bool prev = ch.step();
  for (int i = 0; i < 200000; ++i) {
    const bool cur = ch.step();
    drops += cur;
    pairs += prev && cur;
    prev = cur;
  }
  EXPECT_NEAR(drops / 200000.0, 0.2, 0.005);
  EXPECT_NEAR(static_cast<double>(pairs) / drops, 0.2, 0.01);
}

TEST(Channel, JpnSwiConvergence) {
  const double p = 0.6e-3;
  const double r = 7.7e-3;
  const std::uint64_t n = 1'000'000;
  const double se = drop_fraction_standard_error(p, r, n);
  const double frac = empirical_drop_fraction(p, r, 1, n);
  EXPECT_LT(std::abs(frac - steady_state_loss(p, r)), 3 * se);
  EXPECT_LT(std::abs(frac - 0.0734), 3 * se);
}

TEST(Channel, ConvergesForEveryPreset) {
  const std::uint64_t n = 1'000'000;
  for (const auto& preset : link_presets()) {
    const double pi = preset.loss.steady_state();
    const double se = drop_fraction_standard_error(preset.loss.p, preset.loss.r, n);
    const double frac = empirical_drop_fraction(preset.loss.p, preset.loss.r, 77, n);
    EXPECT_LT(std::abs(frac - pi), 3 * se) << preset.name;
  }
}

TEST(Channel, StandardErrorReducesToBinomialWhenMemoryless) {
  const double n = 1e6;
  EXPECT_NEAR(drop_fraction_standard_error(0.1, 0.9, 1'000'000), std::sqrt(0.1 * 0.9 / n), 1e-15);
  EXPECT_GT(drop_fraction_standard_error(0.6e-3, 7.7e-3, 1'000'000),
            15 * std::sqrt(0.0723 * 0.9277 / n));
}

TEST(LossSpec, FromLossRateAndBurst) {
  const auto l = sge_from_loss_rate(0.08, 12.5);
  EXPECT_DOUBLE_EQ(l.r, 0.08);
  EXPECT_NEAR(l.steady_state(), 0.08, 1e-12);
  EXPECT_THROW(sge_from_loss_rate(0.9, 2.0), ValidationError);
  EXPECT_THROW(sge_from_loss_rate(0.1, 0.5), ValidationError);
}

TEST(Transmit, GoodLockedDelay) {
  LinkParams link;
  link.rtt_ms = 31.408;
  GilbertElliottChannel ch(0.0, 1.0, 1, ChannelState::good);
  const VirtualTime now = from_millis(1000.0);
  const auto out = transmit(100, link, ch, now);
  ASSERT_TRUE(std::holds_alternative<Delivered>(out));
  EXPECT_EQ(std::get<Delivered>(out).at - now, std::chrono::nanoseconds(15'704'000));
}

TEST(Transmit, BadLockedDrops) {
  LinkParams link;
  link.rtt_ms = 10.0;
  GilbertElliottChannel ch(1.0, 0.0, 1, ChannelState::good);
  transmit(100, link, ch, VirtualTime{0});
  for (int i = 0; i < 10; ++i) {
    EXPECT_TRUE(std::holds_alternative<Dropped>(transmit(100, link, ch, VirtualTime{0})));
  }
}

TEST(Transmit, Oversized) {
  LinkParams link;
  GilbertElliottChannel ch(0.0, 1.0, 1);
  EXPECT_THROW(transmit(2000, link, ch, VirtualTime{0}), OversizedDatagram);
  EXPECT_NO_THROW(transmit(1500, link, ch, VirtualTime{0}));
}

TEST(LinkParams, Validation) {
  LinkParams link;
  link.mtu = 500;
  EXPECT_THROW(link.validate(), ValidationError);
  link.mtu = 1500;
  link.rtt_ms = -1;
  EXPECT_THROW(link.validate(), ValidationError);
}

TEST(Link, JitterKeepsFifoOrder) {
  LinkParams params;
  params.rtt_ms = 20.0;
  params.jitter_ms = 15.0;
  params.seed = 8;
  Link link(params, LossSpec{0.0, 1.0, std::nullopt}, ChannelMode::shared);
  VirtualTime last{0};
  for (int i = 0; i < 1000; ++i) {
    const auto out = link.send(100, LinkDirection::initiator_to_responder, from_millis(0.1 * i));
    const auto at = std::get<Delivered>(out).at;
    ASSERT_GE(at, last);
    last = at;
  }
}

TEST(Link, PerDirectionChannelsAreIndependent) {
  LinkParams params;
  params.seed = 3;
  Link shared(params, LossSpec{0.3, 0.3, std::nullopt}, ChannelMode::shared);
  Link split(params, LossSpec{0.3, 0.3, std::nullopt}, ChannelMode::per_direction);
  int differ = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto d = i % 2 ? LinkDirection::initiator_to_responder : LinkDirection::responder_to_initiator;
    differ += shared.send(100, d, VirtualTime{0}).index() != split.send(100, d, VirtualTime{0}).index();
  }
  EXPECT_GT(differ, 0);
}

TEST(EventQueue, OrdersByTimeThenInsertion) {
  EventQueue<int> q;
  q.push(VirtualTime{5}, 1);
  q.push(VirtualTime{3}, 2);
  q.push(VirtualTime{5}, 3);
  q.push(VirtualTime{3}, 4);
  q.push(VirtualTime{0}, 5);
  std::vector<int> order;
  while (!q.empty()) order.push_back(q.pop().payload);
  EXPECT_EQ(order, (std::vector<int>{5, 2, 4, 1, 3}));
}

TEST(Time, MillisRoundTrip) {
  EXPECT_EQ(from_millis(15.704), std::chrono::nanoseconds(15'704'000));
  EXPECT_DOUBLE_EQ(to_millis(from_millis(4200.0)), 4200.0);
}

}  // namespace
}  // namespace ikesim
