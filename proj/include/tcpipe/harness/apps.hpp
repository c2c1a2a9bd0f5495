#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "tcpipe/harness/stack.hpp"

namespace tcpipe {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv1a(std::span<const std::uint8_t> data, std::uint64_t h = kFnvOffset);

struct StreamHash {
  std::uint64_t hash = kFnvOffset;
  std::uint64_t bytes = 0;
  void add(std::span<const std::uint8_t> d) {
    hash = fnv1a(d, hash);
    bytes += d.size();
  }
};

double jain_index(const std::vector<double>& xs);
// Nearest-rank percentile, p in [0, 100].
double percentile(std::vector<double> xs, double p);

// Runs an application on a socket context in virtual time: the handler is
// invoked whenever the context is woken and whenever it asks to be.
class App {
 public:
  App(Simulator& sim, Stack& stack);
  virtual ~App() = default;
  App(const App&) = delete;
  App& operator=(const App&) = delete;

  SocketLib& lib() { return lib_; }
  void wake();

 protected:
  virtual void handle(const std::vector<PollEvent>& events) = 0;
  Simulator& sim_;
  Stack& stack_;
  SocketLib& lib_;

 private:
  void run();
  bool queued_ = false;
};

// Per-connection record kept by both client and server applications, keyed
// by the client's address and port so the two ends can be matched.
inline std::uint64_t conn_key(Ipv4Addr ip, std::uint16_t port) { return (std::uint64_t{ip} << 16) | port; }

struct AppConnStats {
  StreamHash sent;
  StreamHash received;
  std::uint64_t window_bytes = 0;  // received inside the measurement window
  std::uint64_t messages = 0;
  bool closed = false;
  SockError error = SockError::kOk;
};

enum class ServerMode : std::uint8_t { kEcho, kRpc, kSink };

class Server : public App {
 public:
  Server(Simulator& sim, Stack& stack, std::uint16_t port, ServerMode mode, std::uint32_t request,
         std::uint32_t response);

  void set_window(TimeNs start, TimeNs end) {
    win_start_ = start;
    win_end_ = end;
  }
  const std::map<std::uint64_t, AppConnStats>& conns() const { return stats_; }
  std::uint64_t accepted() const { return accepted_; }

 protected:
  void handle(const std::vector<PollEvent>& events) override;

 private:
  struct Conn {
    std::uint64_t peer = 0;
    std::uint64_t req_fill = 0;
    std::vector<std::uint8_t> out;
    std::size_t out_off = 0;
    bool closing = false;
  };
  void service(SocketId s, Conn& c);
  void flush(SocketId s, Conn& c);

  SocketId listener_;
  ServerMode mode_;
  std::uint32_t request_;
  std::uint32_t response_;
  TimeNs win_start_ = 0;
  TimeNs win_end_ = std::numeric_limits<TimeNs>::max();
  std::map<SocketId, Conn> conns_;
  std::map<std::uint64_t, AppConnStats> stats_;
  std::uint64_t accepted_ = 0;
  std::vector<std::uint8_t> buf_;
};

struct ClientConfig {
  Ipv4Addr server_ip = 0;
  std::uint16_t server_port = 0;
  std::uint32_t conns = 1;
  std::uint32_t request = 64;
  std::uint32_t response = 64;   // bytes expected back per request (0: none, bulk)
  std::uint32_t depth = 1;       // requests in flight per connection
  std::uint64_t messages = 0;    // per connection; 0 = until stop
  std::uint64_t bulk_bytes = 0;  // bulk mode (response == 0): bytes per connection, 0 = until stop
  TimeNs start = 0;
  TimeNs stop = std::numeric_limits<TimeNs>::max();
  TimeNs connect_spacing = 0;  // delay between successive connects
  bool close_when_done = true;
  std::uint64_t seed = 1;
};

// Request/response client (echo and RPC) or bulk sender (response == 0).
class Client : public App {
 public:
  Client(Simulator& sim, Stack& stack, ClientConfig cfg);

  bool done() const;
  std::size_t established() const { return established_; }
  const std::map<std::uint64_t, AppConnStats>& conns() const { return stats_; }
  const std::vector<double>& latencies_ns() const { return lat_; }
  std::uint64_t requests_completed() const { return completed_; }
  std::uint64_t failures() const { return failures_; }
  std::vector<SocketId> sockets() const;

 protected:
  void handle(const std::vector<PollEvent>& events) override;

 private:
  struct Conn {
    std::uint64_t key = 0;
    bool up = false;
    bool finished = false;  // no more requests will be issued
    bool closed = false;
    std::mt19937_64 rng;
    std::vector<std::uint8_t> out;
    std::size_t out_off = 0;
    std::deque<TimeNs> issued;
    std::uint64_t sent_msgs = 0;
    std::uint64_t resp_fill = 0;
    std::uint64_t bulk_sent = 0;
  };
  void pump(SocketId s, Conn& c);
  void issue(Conn& c);
  bool may_issue(const Conn& c) const;

  ClientConfig cfg_;
  std::map<SocketId, Conn> conns_;
  std::map<std::uint64_t, AppConnStats> stats_;
  std::vector<double> lat_;
  std::vector<std::uint8_t> buf_;
  std::size_t established_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t failures_ = 0;
  std::size_t connects_ = 0;
};

}  // namespace tcpipe
