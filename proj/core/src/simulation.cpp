#include "ikesim/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

struct Deliver {
  Role to;
  Fragment fragment;
};
struct Timer {
  std::uint64_t generation;
};
using SimEvent = std::variant<Deliver, Timer>;

}  // namespace

ConnectionResult simulate_connection(std::shared_ptr<const PreparedHandshake> handshake,
                                     const LinkParams& params, const LossSpec& loss,
                                     ChannelMode mode, bool record_trace) {
  ConnectionResult result;
  Link link(params, loss, mode);
  Initiator initiator(handshake, (params.seed << 16) | 1U);
  Responder responder(handshake);
  EventQueue<SimEvent> queue;

  const bool ip_fragmentation = handshake->config().sa_init_policy == SaInitPolicy::ip_fragment;
  std::optional<VirtualTime> armed;
  std::uint64_t generation = 0;

  auto dispatch = [&](std::vector<SendAction>&& actions, VirtualTime now) {
    for (auto& a : actions) {
      ++result.datagrams;
      result.total_bytes += a.datagram_size;
      if (a.retransmission) ++result.retransmissions;
      const auto direction = a.from == Role::initiator ? LinkDirection::initiator_to_responder
                                                       : LinkDirection::responder_to_initiator;
      const auto outcome = link.send(a.datagram_size, direction, now, ip_fragmentation);
      const auto* delivered = std::get_if<Delivered>(&outcome);
      if (record_trace) {
        result.trace.sends.push_back(TraceEntry{now, a.from, a.fragment.exchange,
                                                a.fragment.message_id, a.fragment.fragment_number,
                                                a.datagram_size, a.retransmission,
                                                delivered == nullptr});
      }
      if (delivered != nullptr) {
        const Role to = a.from == Role::initiator ? Role::responder : Role::initiator;
        queue.push(delivered->at, Deliver{to, std::move(a.fragment)});
      }
    }
  };
  auto sync_timer = [&] {
    const auto& deadline = initiator.state().retransmit_deadline;
    if (deadline != armed) {
      armed = deadline;
      ++generation;
      if (deadline) queue.push(*deadline, Timer{generation});
    }
  };

  VirtualTime now{0};
  dispatch(initiator.step(Start{}, now), now);
  sync_timer();

  while (!queue.empty()) {
    auto entry = queue.pop();
    now = entry.time;
    if (auto* d = std::get_if<Deliver>(&entry.payload)) {
      if (d->to == Role::responder) {
        dispatch(responder.step(FragmentArrived{std::move(d->fragment)}, now), now);
        continue;
      }
      dispatch(initiator.step(FragmentArrived{std::move(d->fragment)}, now), now);
    } else {
      if (std::get<Timer>(entry.payload).generation != generation) continue;
      dispatch(initiator.step(TimerExpired{}, now), now);
    }
    sync_timer();
    if (initiator.state().established || initiator.state().gave_up) break;
  }

  const auto& st = initiator.state();
  result.established = st.established;
  result.gave_up = st.gave_up;
  result.elapsed = now;
  result.restarts = static_cast<std::uint64_t>(st.gave_up ? st.restart_count - 1 : st.restart_count);
  if (st.established) result.trace.established_at = now;
  return result;
}

const SuiteSummary* ResultSet::summary(std::string_view suite_id) const noexcept {
  for (const auto& s : summaries) {
    if (s.suite_id == suite_id) return &s;
  }
  return nullptr;
}

void summarize_result_set(ResultSet& rs, const std::vector<std::string>& suite_ids) {
  rs.summaries.clear();
  for (const auto& id : suite_ids) {
    SuiteSummary s;
    s.suite_id = id;
    std::vector<double> setup;
    std::vector<double> setup_rtt;
    std::vector<double> bytes;
    std::vector<double> datagrams;
    for (const auto& r : rs.records) {
      if (r.suite_id != id) continue;
      ++s.runs;
      if (!r.success) continue;
      ++s.successes;
      setup.push_back(r.setup_time_ms);
      if (r.rtt_ms > 0.0) setup_rtt.push_back(r.setup_time_ms / r.rtt_ms);
      bytes.push_back(static_cast<double>(r.total_bytes));
      datagrams.push_back(static_cast<double>(r.datagrams));
    }
    if (!setup.empty()) {
      s.setup_time_ms = summarize(setup);
      s.total_bytes = summarize(bytes);
      s.datagrams = summarize(datagrams);
      s.total_bytes_ecdf = ecdf(bytes);
    }
    if (!setup_rtt.empty()) s.setup_time_rtt = summarize(setup_rtt);
    rs.summaries.push_back(std::move(s));
  }

  rs.bytes_p95_ratio.reset();
  rs.setup_time_p95_ratio.reset();
  rs.setup_time_correlation.reset();
  const auto* classical = rs.summary("classical");
  const auto* qrc = rs.summary("qrc");
  if (classical && qrc && classical->total_bytes && qrc->total_bytes) {
    rs.bytes_p95_ratio = qrc->total_bytes->p95 / classical->total_bytes->p95;
    if (classical->setup_time_ms->p95 > 0.0) {
      rs.setup_time_p95_ratio = qrc->setup_time_ms->p95 / classical->setup_time_ms->p95;
    }
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& r : rs.records) {
      if (!r.success) continue;
      if (r.suite_id == "classical") a.push_back(r.setup_time_ms);
      if (r.suite_id == "qrc") b.push_back(r.setup_time_ms);
    }
    if (a.size() == b.size() && a.size() >= 2) {
      try {
        rs.setup_time_correlation = order_statistic_correlation(a, b);
      } catch (const DegenerateSample&) {
        // constant setup times (no loss): correlation undefined
      }
    }
  }
}

ResultSet run_point(const ScenarioConfig& config, std::size_t point, const BatchOptions& options) {
  config.validate();
  const auto& lp = config.loss_points.at(point);
  const auto suites = options.suites.value_or(config.suites);

  ResultSet rs;
  rs.scenario_id = config.scenario_id;
  rs.loss_label = lp.label;
  rs.loss_rate = lp.loss.steady_state();
  rs.rtt_ms = config.link.rtt_ms;

  std::vector<std::string> suite_ids;
  for (auto id : suites) {
    const std::string suite_id(to_string(id));
    suite_ids.push_back(suite_id);

    std::shared_ptr<const PreparedHandshake> handshake;
    try {
      handshake = PreparedHandshake::build(plan_handshake(config.suite(id), config.engine),
                                           config.engine, OpaqueMaterialProvider{},
                                           config.material_seed);
    } catch (const Error& e) {
      for (std::uint64_t i = 0; i < config.iterations; ++i) {
        rs.failures.push_back(IterationFailure{suite_id, i, e.what()});
      }
      continue;
    }

    const auto n = config.iterations;
    std::vector<std::optional<RunRecord>> records(n);
    std::vector<std::optional<std::string>> errors(n);
    std::atomic<std::uint64_t> next{0};

    auto worker = [&] {
      for (std::uint64_t i = next++; i < n; i = next++) {
        LinkParams link = config.link;
        link.seed = config.link.seed + i;
        try {
          const auto r = simulate_connection(handshake, link, lp.loss, config.channel_mode);
          RunRecord rec;
          rec.scenario_id = config.scenario_id;
          rec.suite_id = suite_id;
          rec.iteration = i;
          rec.seed = link.seed;
          rec.loss_rate = rs.loss_rate;
          rec.rtt_ms = config.link.rtt_ms;
          rec.success = r.established;
          rec.setup_time_ms = to_millis(r.elapsed);
          rec.total_bytes = r.total_bytes;
          rec.datagrams = r.datagrams;
          rec.retransmissions = r.retransmissions;
          rec.restarts = r.restarts;
          records[i] = std::move(rec);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };

    const unsigned threads = std::max(1U, std::min<unsigned>(options.parallel,
                                                              static_cast<unsigned>(n)));
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    for (std::uint64_t i = 0; i < n; ++i) {
      if (records[i]) rs.records.push_back(std::move(*records[i]));
      if (errors[i]) rs.failures.push_back(IterationFailure{suite_id, i, *errors[i]});
    }
  }

  std::stable_sort(rs.records.begin(), rs.records.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.suite_id != b.suite_id) return a.suite_id < b.suite_id;
    return a.iteration < b.iteration;
  });
  summarize_result_set(rs, suite_ids);
  return rs;
}

std::vector<ResultSet> run_batch(const ScenarioConfig& config, const BatchOptions& options) {
  std::vector<ResultSet> out;
  out.reserve(config.loss_points.size());
  for (std::size_t p = 0; p < config.loss_points.size(); ++p) {
    out.push_back(run_point(config, p, options));
  }
  return out;
}

}  // namespace ikesim
