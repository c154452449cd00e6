#include "ikesim/live.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <charconv>
#include <cstring>
#include <deque>
#include <map>

#include "ikesim/errors.hpp"
#include "ikesim/wire.hpp"

namespace ikesim {
namespace {

using Clock = std::chrono::steady_clock;
constexpr std::size_t kMaxDatagram = 65535;
constexpr std::size_t kMaxConnections = 4096;

struct Socket {
  int fd = -1;
  Socket() = default;
  explicit Socket(int f) : fd(f) {}
  Socket(Socket&& o) noexcept : fd(std::exchange(o.fd, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      if (fd >= 0) ::close(fd);
      fd = std::exchange(o.fd, -1);
    }
    return *this;
  }
  ~Socket() {
    if (fd >= 0) ::close(fd);
  }
};

struct Address {
  sockaddr_storage storage{};
  socklen_t length = 0;
  const sockaddr* get() const { return reinterpret_cast<const sockaddr*>(&storage); }
};

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

Address resolve(const PeerAddress& peer, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_DGRAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* list = nullptr;
  const auto port = std::to_string(peer.port);
  const char* host = peer.host.empty() ? nullptr : peer.host.c_str();
  if (const int rc = ::getaddrinfo(host, port.c_str(), &hints, &list); rc != 0) {
    throw IoError("cannot resolve " + peer.host + ": " + ::gai_strerror(rc));
  }
  Address out;
  std::memcpy(&out.storage, list->ai_addr, list->ai_addrlen);
  out.length = static_cast<socklen_t>(list->ai_addrlen);
  ::freeaddrinfo(list);
  return out;
}

Socket open_socket(const Address& addr) {
  Socket s(::socket(addr.storage.ss_family, SOCK_DGRAM, 0));
  if (s.fd < 0) throw IoError(errno_text("socket"));
  return s;
}

void send_to(const Socket& s, const Address& to, const Bytes& datagram) {
  const auto n = ::sendto(s.fd, datagram.data(), datagram.size(), 0, to.get(), to.length);
  // A refused or unroutable send is a lost datagram, as on a real network.
  if (n < 0 && errno != ECONNREFUSED && errno != ENETUNREACH && errno != EHOSTUNREACH) {
    throw IoError(errno_text("sendto"));
  }
}

std::optional<std::pair<Bytes, Address>> receive(const Socket& s, int timeout_ms) {
  pollfd p{s.fd, POLLIN, 0};
  const int rc = ::poll(&p, 1, timeout_ms);
  if (rc < 0) {
    if (errno == EINTR) return std::nullopt;
    throw IoError(errno_text("poll"));
  }
  if (rc == 0) return std::nullopt;
  Bytes buf(kMaxDatagram);
  Address from;
  from.length = sizeof(from.storage);
  const auto n = ::recvfrom(s.fd, buf.data(), buf.size(), 0,
                            reinterpret_cast<sockaddr*>(&from.storage), &from.length);
  if (n < 0) {
    if (errno == EINTR || errno == EAGAIN || errno == ECONNREFUSED) return std::nullopt;
    throw IoError(errno_text("recvfrom"));
  }
  buf.resize(static_cast<std::size_t>(n));
  return std::make_pair(std::move(buf), from);
}

void check_overhead(const EngineConfig& engine) {
  if (engine.fragment_overhead_bytes < wire::kHeaderSize) {
    throw ValidationError("engine.fragment_overhead_bytes",
                          "live mode needs at least " + std::to_string(wire::kHeaderSize));
  }
}

std::shared_ptr<const PreparedHandshake> prepare(const ScenarioConfig& config, SuiteId id) {
  return PreparedHandshake::build(plan_handshake(config.suite(id), config.engine), config.engine,
                                  OpaqueMaterialProvider{}, config.material_seed);
}

}  // namespace

PeerAddress parse_peer(std::string_view text) {
  PeerAddress out;
  std::string_view host;
  std::string_view port;
  if (!text.empty() && text.front() == '[') {
    const auto close = text.find(']');
    if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':') {
      throw ValidationError("peer", "expected [addr]:port");
    }
    host = text.substr(1, close - 1);
    port = text.substr(close + 2);
  } else {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) throw ValidationError("peer", "expected addr:port");
    host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  unsigned value = 0;
  const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || end != port.data() + port.size() || value > 65535 || port.empty()) {
    throw ValidationError("peer", "invalid port '" + std::string(port) + "'");
  }
  out.host = std::string(host);
  out.port = static_cast<std::uint16_t>(value);
  return out;
}

ResultSet live_run(const ScenarioConfig& config, const PeerAddress& peer,
                   const LiveOptions& options) {
  config.validate();
  check_overhead(config.engine);
  ScenarioConfig cfg = config;
  if (!cfg.engine.max_restarts) cfg.engine.max_restarts = options.default_max_restarts;
  const auto suites = options.suites.value_or(cfg.suites);

  const Address to = resolve(peer, false);
  const Socket sock = open_socket(to);
  const std::size_t ip_udp = cfg.engine.ip_udp_overhead_bytes;

  ResultSet rs;
  rs.scenario_id = cfg.scenario_id;
  rs.loss_label = "live";
  rs.rtt_ms = cfg.link.rtt_ms;

  std::vector<std::string> suite_ids;
  for (std::size_t s = 0; s < suites.size(); ++s) {
    const std::string suite_id(to_string(suites[s]));
    suite_ids.push_back(suite_id);
    const auto handshake = prepare(cfg, suites[s]);

    for (std::uint64_t i = 0; i < cfg.iterations; ++i) {
      const std::uint64_t seed = cfg.link.seed + i;
      // Suite index in the SPI keeps connections of different suites apart.
      Initiator initiator(handshake, (seed << 24) | (static_cast<std::uint64_t>(s) << 16) | 1U);
      RunRecord rec;
      rec.scenario_id = cfg.scenario_id;
      rec.suite_id = suite_id;
      rec.iteration = i;
      rec.seed = seed;
      rec.rtt_ms = cfg.link.rtt_ms;
      bool heard = false;

      const auto t0 = Clock::now();
      auto now = [&] { return std::chrono::duration_cast<VirtualTime>(Clock::now() - t0); };
      auto emit = [&](const std::vector<SendAction>& actions) {
        for (const auto& a : actions) {
          send_to(sock, to, wire::encode(a.fragment, a.retransmission));
          ++rec.datagrams;
          rec.total_bytes += a.datagram_size;
          if (a.retransmission) ++rec.retransmissions;
        }
      };

      emit(initiator.step(Start{}, now()));
      while (!initiator.state().established && !initiator.state().gave_up) {
        const auto deadline = initiator.state().retransmit_deadline;
        int wait_ms = 1000;
        if (deadline) {
          const auto left = std::chrono::ceil<std::chrono::milliseconds>(*deadline - now());
          wait_ms = static_cast<int>(std::clamp<std::int64_t>(left.count(), 0, 1000));
        }
        auto got = receive(sock, wait_ms);
        if (got) {
          std::optional<wire::Decoded> d;
          try {
            d = wire::decode(got->first);
          } catch (const ProtocolViolation&) {
            continue;
          }
          if (d->fragment.spi >> 16 != initiator.state().spi >> 16) continue;  // stale
          heard = true;
          ++rec.datagrams;
          rec.total_bytes += got->first.size() + ip_udp;
          try {
            emit(initiator.step(FragmentArrived{std::move(d->fragment)}, now()));
          } catch (const ProtocolViolation&) {
            // treated as a corrupted datagram
          } catch (const InconsistentTotals&) {
          }
          continue;
        }
        const auto deadline_now = initiator.state().retransmit_deadline;
        if (deadline_now && now() >= *deadline_now) emit(initiator.step(TimerExpired{}, now()));
      }

      const auto& st = initiator.state();
      if (st.gave_up && !heard) {
        throw PeerUnreachable("no answer from " + peer.host + ":" + std::to_string(peer.port) +
                              " after " + std::to_string(st.restart_count) + " attempts");
      }
      rec.success = st.established;
      rec.setup_time_ms = to_millis(now());
      rec.restarts = static_cast<std::uint64_t>(st.gave_up ? st.restart_count - 1 : st.restart_count);
      rs.records.push_back(std::move(rec));
    }
  }
  summarize_result_set(rs, suite_ids);
  return rs;
}

struct LiveResponder::Impl {
  Socket sock;
  std::size_t ip_udp = 0;
  std::vector<std::shared_ptr<const PreparedHandshake>> handshakes;
  std::map<std::uint64_t, Responder> connections;
  std::deque<std::uint64_t> order;

  const std::shared_ptr<const PreparedHandshake>* match(const Fragment& f) const {
    if (f.exchange != ExchangeType::ike_sa_init || f.direction != Direction::request) return nullptr;
    for (const auto& h : handshakes) {
      const auto& frags = h->fragments(0);
      if (frags.size() != f.total_fragments) continue;
      const auto expected = frags[f.fragment_number - 1].payload();
      const auto got = f.payload();
      if (std::equal(expected.begin(), expected.end(), got.begin(), got.end())) return &h;
    }
    return nullptr;
  }
};

LiveResponder::LiveResponder(const ScenarioConfig& config, const PeerAddress& bind)
    : impl_(std::make_unique<Impl>()) {
  config.validate();
  check_overhead(config.engine);
  impl_->ip_udp = config.engine.ip_udp_overhead_bytes;
  std::vector<SuiteId> ids{SuiteId::classical, SuiteId::qrc};
  if (config.custom_suite) ids.push_back(SuiteId::custom);
  for (auto id : ids) impl_->handshakes.push_back(prepare(config, id));

  const Address addr = resolve(bind, true);
  impl_->sock = open_socket(addr);
  const int one = 1;
  ::setsockopt(impl_->sock.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(impl_->sock.fd, addr.get(), addr.length) != 0) throw IoError(errno_text("bind"));
  Address bound;
  bound.length = sizeof(bound.storage);
  if (::getsockname(impl_->sock.fd, reinterpret_cast<sockaddr*>(&bound.storage), &bound.length) != 0) {
    throw IoError(errno_text("getsockname"));
  }
  port_ = ntohs(bound.storage.ss_family == AF_INET6
                    ? reinterpret_cast<const sockaddr_in6*>(&bound.storage)->sin6_port
                    : reinterpret_cast<const sockaddr_in*>(&bound.storage)->sin_port);
}

LiveResponder::~LiveResponder() = default;

void LiveResponder::serve(const std::atomic<bool>& stop) {
  auto& im = *impl_;
  const auto t0 = Clock::now();
  while (!stop.load()) {
    auto got = receive(im.sock, 50);
    if (!got) continue;
    std::optional<wire::Decoded> d;
    try {
      d = wire::decode(got->first);
    } catch (const ProtocolViolation&) {
      continue;
    }
    const auto spi = d->fragment.spi;
    auto it = im.connections.find(spi);
    if (it == im.connections.end()) {
      const auto* h = im.match(d->fragment);
      if (h == nullptr) continue;
      it = im.connections.emplace(spi, Responder(*h)).first;
      im.order.push_back(spi);
      ++connections_;
      if (im.order.size() > kMaxConnections) {
        im.connections.erase(im.order.front());
        im.order.pop_front();
      }
    }
    const auto now = std::chrono::duration_cast<VirtualTime>(Clock::now() - t0);
    std::vector<SendAction> actions;
    try {
      actions = it->second.step(FragmentArrived{std::move(d->fragment)}, now);
    } catch (const Error&) {
      continue;  // malformed peer traffic must not stop the server
    }
    for (const auto& a : actions) send_to(im.sock, got->second, wire::encode(a.fragment, a.retransmission));
  }
}

}  // namespace ikesim
