#include <gtest/gtest.h>

#include <numeric>

#include "ikesim/engine.hpp"
#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

using std::chrono::milliseconds;

// Default constants: threshold 576, IP/UDP 28, per-fragment overhead 61.
constexpr std::size_t kCapacity = 576 - 28 - 61;
constexpr std::size_t kPerDatagram = 61 + 28;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Independent byte oracle: payload sizes from the algorithm catalogue.
struct Oracle {
  static std::size_t sa_init(std::size_t ke, int rounds) {
    const std::size_t notifies = 8 + (rounds > 0 ? 16 : 0);
    return (44 + 8 * static_cast<std::size_t>(rounds)) + ke + 32 + notifies + 12;
  }
  static std::size_t auth(std::size_t cert, std::size_t sig) {
    return 12 + cert + sig + 44 + 24 + 24 + 13;
  }
  static std::size_t intermediate(std::size_t ke) { return ke + 8; }
};

std::shared_ptr<const PreparedHandshake> prepared(SuiteId id, EngineConfig cfg = {}) {
  return PreparedHandshake::build(
      plan_handshake(id == SuiteId::classical ? classical_suite() : qrc_suite(), cfg), cfg);
}

// Drives both endpoints with instant, lossless delivery. Returns every send.
std::vector<SendAction> run_lossless(Initiator& ini, Responder& resp) {
  std::vector<SendAction> all;
  std::vector<SendAction> pending = ini.step(Start{}, VirtualTime{0});
  while (!pending.empty()) {
    std::vector<SendAction> next;
    for (auto& a : pending) {
      all.push_back(a);
      auto out = a.from == Role::initiator
                     ? resp.step(FragmentArrived{a.fragment}, VirtualTime{0})
                     : ini.step(FragmentArrived{a.fragment}, VirtualTime{0});
      next.insert(next.end(), out.begin(), out.end());
    }
    pending = std::move(next);
  }
  return all;
}

TEST(Plan, ClassicalHasFourBlueprints) {
  const auto plan = plan_handshake(classical_suite(), EngineConfig{});
  ASSERT_EQ(plan.blueprints.size(), 4U);
  EXPECT_EQ(plan.request(0).exchange, ExchangeType::ike_sa_init);
  EXPECT_EQ(plan.request(1).exchange, ExchangeType::ike_auth);
  EXPECT_EQ(plan.request(0).total_payload, Oracle::sa_init(256, 0));
  EXPECT_EQ(plan.request(1).total_payload, Oracle::auth(91, 64));
  EXPECT_EQ(plan.request(0).total_payload, 352U);
  EXPECT_EQ(plan.request(1).total_payload, 272U);
}

TEST(Plan, QrcAuthCarriesMlDsaCertificate) {
  const auto plan = plan_handshake(qrc_suite(), EngineConfig{});
  const auto& auth = plan.request(plan.exchange_count() - 1);
  EXPECT_EQ(auth.exchange, ExchangeType::ike_auth);
  const auto* cert = auth.find("cert");
  ASSERT_NE(cert, nullptr);
  EXPECT_EQ(cert->size, 2592U);
  EXPECT_EQ(auth.total_payload, Oracle::auth(2592, 4627));
}

TEST(Plan, QrcIntermediateRounds) {
  EngineConfig cfg;
  for (int rounds : {1, 2, 3, 7}) {
    cfg.additional_ke_rounds = rounds;
    const auto plan = plan_handshake(qrc_suite(), cfg);
    ASSERT_EQ(plan.exchange_count(), static_cast<std::size_t>(2 + rounds));
    for (int k = 1; k <= rounds; ++k) {
      EXPECT_EQ(plan.request(k).exchange, ExchangeType::ike_intermediate);
      EXPECT_EQ(plan.request(k).total_payload, Oracle::intermediate(2400));
      EXPECT_EQ(plan.response(k).total_payload, Oracle::intermediate(2400));
    }
    EXPECT_EQ(plan.request(0).total_payload, Oracle::sa_init(256, rounds));
  }
}

TEST(Plan, ClassicalIgnoresRounds) {
  EngineConfig cfg;
  cfg.additional_ke_rounds = 5;
  EXPECT_EQ(plan_handshake(classical_suite(), cfg).blueprints.size(), 4U);
}

TEST(DatagramCount, Classical) {
  const auto plan = plan_handshake(classical_suite(), EngineConfig{});
  EXPECT_EQ(datagram_count(plan, kCapacity), 4U);
  for (std::size_t cap : {352U, 400U, 1000U, 5000U}) EXPECT_EQ(datagram_count(plan, cap), 4U);
}

TEST(DatagramCount, SingleBlueprint) {
  HandshakePlan plan;
  MessageBlueprint bp;
  bp.exchange = ExchangeType::ike_intermediate;
  bp.encrypted = true;
  bp.total_payload = 2400;
  plan.blueprints.push_back(bp);
  EXPECT_EQ(datagram_count(plan, 1200), 2U);
}

TEST(DatagramCount, QrcAtLeastForty) {
  const auto plan = plan_handshake(qrc_suite(), EngineConfig{});
  std::size_t oracle = 0;
  for (const auto& bp : plan.blueprints) oracle += ceil_div(bp.total_payload, kCapacity);
  EXPECT_EQ(datagram_count(plan, kCapacity), oracle);
  EXPECT_EQ(oracle, 2U + 4U * 5U + 2U * 16U);
  EXPECT_GE(oracle, 40U);
}

TEST(DatagramCount, OversizedSaInitPolicy) {
  EngineConfig cfg;
  cfg.additional_ke_rounds = 0;  // ML-KEM share in IKE_SA_INIT itself
  const auto plan = plan_handshake(qrc_suite(), cfg);
  EXPECT_THROW(datagram_count(plan, kCapacity, SaInitPolicy::error), UnfragmentableMessage);
  EXPECT_THROW(PreparedHandshake::build(plan, cfg), UnfragmentableMessage);
  cfg.sa_init_policy = SaInitPolicy::ip_fragment;
  const auto hs = PreparedHandshake::build(plan_handshake(qrc_suite(), cfg), cfg);
  EXPECT_EQ(hs->fragments(0).size(), 1U);
}

TEST(Prepared, ZeroLossBytesOracle) {
  const auto classical = prepared(SuiteId::classical);
  EXPECT_EQ(classical->zero_loss_datagrams(), 4U);
  EXPECT_EQ(classical->zero_loss_bytes(), 2 * (352U + 272U) + 4 * kPerDatagram);
  EXPECT_EQ(classical->zero_loss_bytes(), 1604U);

  const auto qrc = prepared(SuiteId::qrc);
  const std::size_t payload =
      2 * Oracle::sa_init(256, 2) + 4 * Oracle::intermediate(2400) + 2 * Oracle::auth(2592, 4627);
  EXPECT_EQ(qrc->zero_loss_datagrams(), 54U);
  EXPECT_EQ(qrc->zero_loss_bytes(), payload + 54 * kPerDatagram);
  EXPECT_EQ(qrc->zero_loss_bytes(), 29878U);
}

TEST(Prepared, BodiesCarryMaterial) {
  const auto hs = prepared(SuiteId::qrc);
  for (std::size_t i = 0; i < hs->plan().blueprints.size(); ++i) {
    EXPECT_EQ(hs->message(i).size(), hs->plan().blueprints[i].total_payload);
  }
  // Same seed, same bytes; different material seed, different bytes.
  const auto again = prepared(SuiteId::qrc);
  EXPECT_EQ(*hs->message(2).body, *again->message(2).body);
  EngineConfig cfg;
  const auto other = PreparedHandshake::build(plan_handshake(qrc_suite(), cfg), cfg,
                                              OpaqueMaterialProvider{}, 99);
  EXPECT_NE(*hs->message(2).body, *other->message(2).body);
}

TEST(Initiator, StartSendsSaInitAndArmsTimer) {
  Initiator ini(prepared(SuiteId::classical), 10);
  const auto now = VirtualTime{milliseconds(7)};
  const auto out = ini.step(Start{}, now);
  ASSERT_EQ(out.size(), 1U);
  EXPECT_EQ(out[0].fragment.exchange, ExchangeType::ike_sa_init);
  EXPECT_EQ(out[0].fragment.spi, 10U);
  EXPECT_FALSE(out[0].retransmission);
  EXPECT_EQ(out[0].datagram_size, 352U + kPerDatagram);
  EXPECT_EQ(ini.state().retransmit_deadline, now + milliseconds(4000));
}

TEST(Initiator, TimerResendsEveryFragment) {
  auto hs = prepared(SuiteId::qrc);
  Initiator ini(hs, 1);
  Responder resp(hs);
  const auto start = ini.step(Start{}, VirtualTime{0});
  std::vector<SendAction> intermediate;
  for (const auto& a : resp.step(FragmentArrived{start[0].fragment}, VirtualTime{0})) {
    auto out = ini.step(FragmentArrived{a.fragment}, VirtualTime{0});
    intermediate.insert(intermediate.end(), out.begin(), out.end());
  }
  ASSERT_EQ(intermediate.size(), 5U);
  EXPECT_EQ(ini.state().retry_count, 0);
  const auto deadline = *ini.state().retransmit_deadline;
  EXPECT_TRUE(ini.step(TimerExpired{}, deadline - milliseconds(1)).empty());
  const auto resent = ini.step(TimerExpired{}, deadline);
  ASSERT_EQ(resent.size(), 5U);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_TRUE(resent[i].retransmission);
    EXPECT_EQ(resent[i].fragment.fragment_number, i + 1);
    EXPECT_EQ(resent[i].fragment.transmission, intermediate[i].fragment.transmission + 1);
  }
  EXPECT_EQ(*ini.state().retransmit_deadline, deadline + milliseconds(8000));
}

TEST(Initiator, RestartAfterMaxRetries) {
  auto hs = prepared(SuiteId::classical);
  Initiator ini(hs, 100);
  ini.step(Start{}, VirtualTime{0});
  VirtualTime t{0};
  // Full loss: timeouts of 4, 8, 16, 32, 64 s then the sixth expiry (128 s) restarts.
  for (int retry = 1; retry <= 5; ++retry) {
    t = *ini.state().retransmit_deadline;
    const auto out = ini.step(TimerExpired{}, t);
    ASSERT_EQ(out.size(), 1U);
    EXPECT_EQ(ini.state().retry_count, retry);
  }
  t = *ini.state().retransmit_deadline;
  EXPECT_EQ(t, VirtualTime{milliseconds(4000 + 8000 + 16000 + 32000 + 64000 + 128000)});
  const auto out = ini.step(TimerExpired{}, t);
  ASSERT_EQ(out.size(), 1U);
  EXPECT_EQ(out[0].fragment.exchange, ExchangeType::ike_sa_init);
  EXPECT_FALSE(out[0].retransmission);
  EXPECT_EQ(ini.state().phase, 0U);
  EXPECT_EQ(ini.state().restart_count, 1);
  EXPECT_EQ(ini.state().retry_count, 0);
  EXPECT_EQ(out[0].fragment.spi, 101U);
}

TEST(Initiator, GivesUpAfterMaxRestarts) {
  EngineConfig cfg;
  cfg.max_retries = 1;
  cfg.max_restarts = 2;
  Initiator ini(prepared(SuiteId::classical, cfg), 1);
  ini.step(Start{}, VirtualTime{0});
  int sends = 1;
  while (!ini.state().gave_up) {
    sends += static_cast<int>(ini.step(TimerExpired{}, *ini.state().retransmit_deadline).size());
  }
  EXPECT_EQ(sends, 3 * 2);  // three attempts of (send + one retry)
  EXPECT_FALSE(ini.state().established);
}

TEST(Responder, AnswersCompletedRequest) {
  auto hs = prepared(SuiteId::classical);
  Initiator ini(hs, 5);
  Responder resp(hs);
  const auto start = ini.step(Start{}, VirtualTime{0});
  const auto out = resp.step(FragmentArrived{start[0].fragment}, VirtualTime{0});
  ASSERT_EQ(out.size(), 1U);
  EXPECT_EQ(out[0].fragment.direction, Direction::response);
  EXPECT_EQ(out[0].fragment.exchange, ExchangeType::ike_sa_init);
  EXPECT_EQ(out[0].fragment.spi, 5U);
}

TEST(Responder, DuplicateRequestReplaysCachedResponse) {
  auto hs = prepared(SuiteId::qrc);
  Initiator ini(hs, 1);
  Responder resp(hs);
  // Run through the second IKE_INTERMEDIATE (message id 2), then pretend its
  // response was lost: the initiator times out and resends.
  auto pending = ini.step(Start{}, VirtualTime{0});
  while (!pending.empty() && (ini.state().phase < 2 || resp.state().phase < 3)) {
    std::vector<SendAction> next;
    for (auto& a : pending) {
      auto out = a.from == Role::initiator ? resp.step(FragmentArrived{a.fragment}, VirtualTime{0})
                                           : ini.step(FragmentArrived{a.fragment}, VirtualTime{0});
      if (a.from == Role::initiator && a.fragment.message_id == 2) continue;  // drop responses
      next.insert(next.end(), out.begin(), out.end());
    }
    pending = std::move(next);
  }
  ASSERT_EQ(*resp.state().cached_message_id, 2U);
  const auto sent_before = resp.state().datagrams_sent;
  const auto resent = ini.step(TimerExpired{}, *ini.state().retransmit_deadline);
  ASSERT_EQ(resent.size(), 5U);
  std::vector<SendAction> replay;
  for (const auto& a : resent) {
    auto out = resp.step(FragmentArrived{a.fragment}, VirtualTime{0});
    replay.insert(replay.end(), out.begin(), out.end());
  }
  ASSERT_EQ(replay.size(), 5U);  // once, on fragment 1
  for (const auto& a : replay) {
    EXPECT_TRUE(a.retransmission);
    EXPECT_EQ(a.fragment.message_id, 2U);
  }
  EXPECT_EQ(resp.state().datagrams_sent, sent_before + 5);
  EXPECT_EQ(resp.state().retransmitted_datagrams, 5U);
  for (const auto& a : replay) ini.step(FragmentArrived{a.fragment}, VirtualTime{0});
  EXPECT_EQ(ini.state().phase, 3U);
}

TEST(Responder, WrongExchangeIsViolation) {
  auto hs = prepared(SuiteId::qrc);
  Responder resp(hs);
  Initiator ini(hs, 1);
  const auto start = ini.step(Start{}, VirtualTime{0});
  resp.step(FragmentArrived{start[0].fragment}, VirtualTime{0});
  auto bogus = hs->fragments(6)[0];  // IKE_AUTH request fragment
  bogus.spi = 1;
  bogus.message_id = 1;  // where the plan expects IKE_INTERMEDIATE
  EXPECT_THROW(resp.step(FragmentArrived{bogus}, VirtualTime{0}), ProtocolViolation);
}

TEST(Handshake, LosslessRunIsSafeAndComplete) {
  for (auto id : {SuiteId::classical, SuiteId::qrc}) {
    auto hs = prepared(id);
    Initiator ini(hs, 1);
    Responder resp(hs);
    const auto trace = run_lossless(ini, resp);
    EXPECT_TRUE(ini.state().established);
    EXPECT_TRUE(resp.state().established);
    EXPECT_EQ(trace.size(), hs->zero_loss_datagrams());
    EXPECT_EQ(handshake_bytes(trace), hs->zero_loss_bytes());
    // Messages complete in plan order: message ids never decrease per side.
    std::uint32_t last[2] = {0, 0};
    for (const auto& a : trace) {
      auto& l = last[a.from == Role::initiator ? 0 : 1];
      EXPECT_GE(a.fragment.message_id, l);
      l = a.fragment.message_id;
      EXPECT_FALSE(a.retransmission);
    }
  }
}

TEST(Handshake, BytesOfEmptyTrace) { EXPECT_EQ(handshake_bytes({}), 0U); }

TEST(EngineConfig, Validation) {
  EngineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.additional_ke_rounds = 8;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.backoff_factor = 0.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.fragment_threshold_bytes = 60;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  EXPECT_EQ(cfg.fragment_capacity(), kCapacity);
  EXPECT_EQ(cfg.retransmit_timeout(3), VirtualTime{milliseconds(32000)});
}

}  // namespace
}  // namespace ikesim
