#include <benchmark/benchmark.h>

#include "ikesim/config.hpp"
#include "ikesim/engine.hpp"
#include "ikesim/fragmentation.hpp"
#include "ikesim/netsim.hpp"
#include "ikesim/simulation.hpp"

namespace {

using namespace ikesim;

void BM_ChannelStep(benchmark::State& state) {
  GilbertElliottChannel ch(0.6e-3, 7.7e-3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ch.step());
}
BENCHMARK(BM_ChannelStep);

void BM_FragmentAuth(benchmark::State& state) {
  EngineConfig cfg;
  const auto hs = PreparedHandshake::build(plan_handshake(qrc_suite(), cfg), cfg);
  const auto& auth = hs->message(hs->plan().blueprints.size() - 2);
  for (auto _ : state) benchmark::DoNotOptimize(fragment(auth, cfg.fragment_limits()));
}
BENCHMARK(BM_FragmentAuth);

void BM_SimulateConnection(benchmark::State& state) {
  EngineConfig cfg;
  const auto id = state.range(0) == 0 ? classical_suite() : qrc_suite();
  const auto hs = PreparedHandshake::build(plan_handshake(id, cfg), cfg);
  LinkParams link;
  link.rtt_ms = 5.0;
  const auto loss = LossSpec{0.0, 0.0, static_cast<double>(state.range(1)) / 100.0};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    link.seed = ++seed;
    benchmark::DoNotOptimize(simulate_connection(hs, link, loss));
  }
}
BENCHMARK(BM_SimulateConnection)->ArgsProduct({{0, 1}, {0, 5, 12}});

}  // namespace

BENCHMARK_MAIN();
