#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <set>
#include <vector>

#include "tcpipe/ctrl/control_plane.hpp"
#include "tcpipe/datapath/ctxq.hpp"
#include "tcpipe/datapath/flow_table.hpp"

namespace tcpipe {

enum class SockError {
  kOk,
  kWouldBlock,
  kPortInUse,
  kConnectionRefused,
  kTimeout,
  kConnectionClosed,
  kConnectionReset,
  kNotConnected,
  kInvalid,
  kNoRoute,
  kResourceExhausted,
};
const char* to_string(SockError e);

using SocketId = std::int32_t;
constexpr SocketId kNoSocket = -1;

enum class SockRole : std::uint8_t { kListening, kConnecting, kConnected, kClosed };

namespace sockev {
constexpr std::uint32_t kReadable = 0x01;
constexpr std::uint32_t kWritable = 0x02;
constexpr std::uint32_t kAcceptable = 0x04;
constexpr std::uint32_t kConnected = 0x08;
constexpr std::uint32_t kClosed = 0x10;  // connection finished or failed; see error()
}  // namespace sockev

struct PollEvent {
  SocketId sock = kNoSocket;
  std::uint32_t events = 0;
};

struct IoResult {
  std::size_t n = 0;
  SockError err = SockError::kOk;
};

// Socket API for one application context. Not thread-safe: each instance
// belongs to one application thread.
class SocketLib {
 public:
  SocketLib(ContextQueues& queues, ControlPlane& ctrl, FlowTable& flows, std::function<TimeNs()> clock);
  SocketLib(ContextQueues& queues, std::uint16_t context, ControlPlane& ctrl, FlowTable& flows,
            std::function<TimeNs()> clock);

  std::uint16_t context() const { return ctx_id_; }

  SocketId listen(std::uint16_t port, SockError* err = nullptr);
  // Non-blocking; kNoSocket with kWouldBlock when no connection is pending.
  SocketId accept(SocketId listener, SockError* err = nullptr);
  // Starts a connect; kConnected or kClosed is reported by poll().
  SocketId connect(Ipv4Addr ip, std::uint16_t port, SockError* err = nullptr);

  IoResult send(SocketId s, std::span<const std::uint8_t> data);
  IoResult recv(SocketId s, std::span<std::uint8_t> out);
  void close(SocketId s);

  // Drains notifications; returns events for sockets whose state changed.
  // A positive timeout blocks on the context's wakeup when nothing is ready.
  std::vector<PollEvent> poll(std::chrono::nanoseconds timeout = std::chrono::nanoseconds{0});
  // Arms the wakeup for sleeping. False when notifications already wait.
  bool prepare_sleep();

  SockRole role(SocketId s) const;
  SockError error(SocketId s) const;
  FlowIndex flow(SocketId s) const;
  std::uint32_t readable_bytes(SocketId s) const;
  std::uint32_t writable_bytes(SocketId s) const;
  bool peer_closed(SocketId s) const;
  std::size_t open_sockets() const { return socks_.size(); }
  std::uint64_t notifications() const { return notes_; }
  bool commands_parked() const { return !overflow_.empty(); }

 private:
  struct Sock {
    SockRole role = SockRole::kClosed;
    std::uint16_t port = 0;
    FlowIndex flow = kNoFlow;
    std::deque<FlowIndex> backlog;
    std::uint8_t* rx = nullptr;
    std::uint8_t* tx = nullptr;
    std::uint32_t rx_size = 0;
    std::uint32_t tx_size = 0;
    std::uint32_t rx_read = 0;   // free-running read position
    std::uint32_t rx_ready = 0;  // bytes delivered but not read
    std::uint32_t tx_write = 0;  // free-running write position
    std::uint32_t tx_free = 0;
    bool peer_fin = false;
    bool app_closed = false;
    bool fin_acked = false;
    SockError err = SockError::kOk;
    std::uint32_t pending = 0;  // one-shot events
  };

  void drain();
  void handle(const CtxQueueEntry& e);
  void attach(SocketId id, FlowIndex f);
  void push_cmd(const CtxQueueEntry& e);
  void flush_cmds();
  void discard_rx(Sock& s);
  Sock* get(SocketId s);
  const Sock* get(SocketId s) const;
  std::uint32_t level(const Sock& s) const;

  ContextQueues& queues_;
  Context& ctx_;
  std::uint16_t ctx_id_;
  ControlPlane& ctrl_;
  FlowTable& flows_;
  std::function<TimeNs()> clock_;
  std::map<SocketId, Sock> socks_;
  std::unordered_map<FlowIndex, SocketId> by_flow_;
  std::map<std::uint16_t, SocketId> by_port_;
  std::set<SocketId> dirty_;
  std::deque<CtxQueueEntry> overflow_;
  SocketId next_id_ = 1;
  std::uint64_t notes_ = 0;
};

}  // namespace tcpipe
