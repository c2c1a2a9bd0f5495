#include "tcpipe/sockets/socket.hpp"

#include <algorithm>
#include <cstring>

namespace tcpipe {

const char* to_string(SockError e) {
  switch (e) {
    case SockError::kOk: return "ok";
    case SockError::kWouldBlock: return "would-block";
    case SockError::kPortInUse: return "port-in-use";
    case SockError::kConnectionRefused: return "connection-refused";
    case SockError::kTimeout: return "timeout";
    case SockError::kConnectionClosed: return "connection-closed";
    case SockError::kConnectionReset: return "connection-reset";
    case SockError::kNotConnected: return "not-connected";
    case SockError::kInvalid: return "invalid";
    case SockError::kNoRoute: return "no-route";
    case SockError::kResourceExhausted: return "resource-exhausted";
  }
  return "?";
}

namespace {
void set_err(SockError* out, SockError e) {
  if (out) *out = e;
}
}  // namespace

SocketLib::SocketLib(ContextQueues& queues, ControlPlane& ctrl, FlowTable& flows, std::function<TimeNs()> clock)
    : SocketLib(queues, queues.create(), ctrl, flows, std::move(clock)) {}

SocketLib::SocketLib(ContextQueues& queues, std::uint16_t context, ControlPlane& ctrl, FlowTable& flows,
                     std::function<TimeNs()> clock)
    : queues_(queues), ctx_(queues.get(context)), ctx_id_(context), ctrl_(ctrl), flows_(flows),
      clock_(std::move(clock)) {}

SocketLib::Sock* SocketLib::get(SocketId s) {
  auto it = socks_.find(s);
  return it == socks_.end() ? nullptr : &it->second;
}
const SocketLib::Sock* SocketLib::get(SocketId s) const {
  auto it = socks_.find(s);
  return it == socks_.end() ? nullptr : &it->second;
}

SocketId SocketLib::listen(std::uint16_t port, SockError* err) {
  if (ctrl_.listen(port, ctx_id_) != CtrlError::kOk) {
    set_err(err, SockError::kPortInUse);
    return kNoSocket;
  }
  const SocketId id = next_id_++;
  Sock& s = socks_[id];
  s.role = SockRole::kListening;
  s.port = port;
  by_port_[port] = id;
  set_err(err, SockError::kOk);
  return id;
}

SocketId SocketLib::accept(SocketId listener, SockError* err) {
  Sock* l = get(listener);
  if (!l || l->role != SockRole::kListening) {
    set_err(err, SockError::kInvalid);
    return kNoSocket;
  }
  drain();
  if (l->backlog.empty()) {
    set_err(err, SockError::kWouldBlock);
    return kNoSocket;
  }
  const FlowIndex f = l->backlog.front();
  l->backlog.pop_front();
  const SocketId id = next_id_++;
  attach(id, f);
  set_err(err, SockError::kOk);
  return id;
}

SocketId SocketLib::connect(Ipv4Addr ip, std::uint16_t port, SockError* err) {
  const SocketId id = next_id_++;
  const CtrlError ce = ctrl_.connect(ip, port, ctx_id_, static_cast<std::uint64_t>(id), clock_());
  if (ce != CtrlError::kOk) {
    set_err(err, ce == CtrlError::kNoRoute ? SockError::kNoRoute : SockError::kResourceExhausted);
    return kNoSocket;
  }
  socks_[id].role = SockRole::kConnecting;
  set_err(err, SockError::kOk);
  return id;
}

void SocketLib::attach(SocketId id, FlowIndex f) {
  Sock& s = socks_[id];
  const PostState& post = flows_.post(f);
  s.role = SockRole::kConnected;
  s.flow = f;
  s.rx = reinterpret_cast<std::uint8_t*>(static_cast<std::uintptr_t>(post.rx_base));
  s.tx = reinterpret_cast<std::uint8_t*>(static_cast<std::uintptr_t>(post.tx_base));
  s.rx_size = post.rx_size;
  s.tx_size = post.tx_size;
  s.tx_free = post.tx_size;
  by_flow_[f] = id;
  dirty_.insert(id);
}

void SocketLib::flush_cmds() {
  while (!overflow_.empty() && ctx_.cmd.push(overflow_.front())) overflow_.pop_front();
}

void SocketLib::push_cmd(const CtxQueueEntry& e) {
  flush_cmds();
  // A full ring parks commands locally, in order, until the data path catches up.
  if (!overflow_.empty() || !ctx_.cmd.push(e)) overflow_.push_back(e);
  queues_.ring_doorbell(ctx_id_);
}

IoResult SocketLib::send(SocketId id, std::span<const std::uint8_t> data) {
  Sock* s = get(id);
  if (!s) return {0, SockError::kInvalid};
  if (s->role != SockRole::kConnected) return {0, s->err != SockError::kOk ? s->err : SockError::kNotConnected};
  if (s->app_closed) return {0, SockError::kConnectionClosed};
  const std::uint32_t n = static_cast<std::uint32_t>(std::min<std::size_t>(data.size(), s->tx_free));
  if (n == 0) return {0, data.empty() ? SockError::kOk : SockError::kWouldBlock};
  const std::uint32_t off = s->tx_write & (s->tx_size - 1);
  const std::uint32_t first = std::min(n, s->tx_size - off);
  std::memcpy(s->tx + off, data.data(), first);
  if (n > first) std::memcpy(s->tx, data.data() + first, n - first);
  s->tx_write += n;
  s->tx_free -= n;
  push_cmd(CtxQueueEntry::tx_bump(s->flow, n));
  return {n, SockError::kOk};
}

IoResult SocketLib::recv(SocketId id, std::span<std::uint8_t> out) {
  Sock* s = get(id);
  if (!s) return {0, SockError::kInvalid};
  if (s->role == SockRole::kConnecting) return {0, SockError::kNotConnected};
  if (s->rx_ready == 0) drain();
  if (s->rx_ready == 0) {
    if (s->err != SockError::kOk) return {0, s->err};
    if (s->peer_fin || s->role == SockRole::kClosed) return {0, SockError::kConnectionClosed};
    return {0, SockError::kWouldBlock};
  }
  const std::uint32_t n = static_cast<std::uint32_t>(std::min<std::size_t>(out.size(), s->rx_ready));
  if (n == 0) return {0, SockError::kOk};
  const std::uint32_t off = s->rx_read & (s->rx_size - 1);
  const std::uint32_t first = std::min(n, s->rx_size - off);
  std::memcpy(out.data(), s->rx + off, first);
  if (n > first) std::memcpy(out.data() + first, s->rx, n - first);
  s->rx_read += n;
  s->rx_ready -= n;
  if (s->role == SockRole::kConnected) push_cmd(CtxQueueEntry::rx_bump(s->flow, n));
  return {n, SockError::kOk};
}

void SocketLib::discard_rx(Sock& s) {
  if (s.rx_ready == 0) return;
  s.rx_read += s.rx_ready;
  if (s.role == SockRole::kConnected) push_cmd(CtxQueueEntry::rx_bump(s.flow, s.rx_ready));
  s.rx_ready = 0;
}

void SocketLib::close(SocketId id) {
  Sock* s = get(id);
  if (!s) return;
  switch (s->role) {
    case SockRole::kListening:
      ctrl_.unlisten(s->port);
      by_port_.erase(s->port);
      socks_.erase(id);
      return;
    case SockRole::kConnected:
      if (!s->app_closed) {
        s->app_closed = true;
        discard_rx(*s);
        push_cmd(CtxQueueEntry::fin(s->flow));
        ctrl_.shutdown(s->flow, clock_());
      }
      return;
    case SockRole::kConnecting:
      s->app_closed = true;
      return;
    case SockRole::kClosed:
      if (s->flow != kNoFlow) by_flow_.erase(s->flow);
      socks_.erase(id);
      return;
  }
}

void SocketLib::handle(const CtxQueueEntry& e) {
  ++notes_;
  if (e.kind == CtxKind::kConnEvent) {
    const auto ev = static_cast<ConnEvent>(e.op[1]);
    if (ev == ConnEvent::kAccepted) {
      auto it = by_port_.find(static_cast<std::uint16_t>(e.op[2]));
      if (it == by_port_.end()) return;
      socks_[it->second].backlog.push_back(e.flow);
      dirty_.insert(it->second);
      return;
    }
    if (ev == ConnEvent::kEstablished || ev == ConnEvent::kRefused ||
        (ev == ConnEvent::kTimeout && e.flow == kNoFlow)) {
      const auto id = static_cast<SocketId>(e.op[0]);
      Sock* s = get(id);
      if (!s || s->role != SockRole::kConnecting) return;
      if (ev == ConnEvent::kEstablished) {
        attach(id, e.flow);
        s->pending |= sockev::kConnected;
        if (s->app_closed) {
          s->app_closed = false;
          close(id);
        }
      } else {
        s->role = SockRole::kClosed;
        s->err = ev == ConnEvent::kRefused ? SockError::kConnectionRefused : SockError::kTimeout;
        s->pending |= sockev::kClosed;
        dirty_.insert(id);
      }
      return;
    }
    // Closed, Reset or Timeout of an installed flow.
    auto it = by_flow_.find(e.flow);
    if (it == by_flow_.end()) return;
    Sock& s = socks_[it->second];
    s.role = SockRole::kClosed;
    if (ev == ConnEvent::kReset) s.err = SockError::kConnectionReset;
    if (ev == ConnEvent::kTimeout) s.err = SockError::kTimeout;
    s.pending |= sockev::kClosed;
    dirty_.insert(it->second);
    by_flow_.erase(it);
    return;
  }

  auto it = by_flow_.find(e.flow);
  if (it == by_flow_.end()) return;
  Sock& s = socks_[it->second];
  if (e.kind == CtxKind::kRxDataNotify) {
    s.rx_ready += static_cast<std::uint32_t>(e.op[2]);
    if (e.flags & kCtxFlagFin) s.peer_fin = true;
    if (s.app_closed) discard_rx(s);
  } else if (e.kind == CtxKind::kTxSpaceFreed) {
    s.tx_free += static_cast<std::uint32_t>(e.op[2]);
    if (e.flags & kCtxFlagFin) s.fin_acked = true;
  }
  dirty_.insert(it->second);
}

void SocketLib::drain() {
  while (auto e = ctx_.notify.pop()) handle(*e);
}

std::uint32_t SocketLib::level(const Sock& s) const {
  std::uint32_t ev = s.pending;
  if (s.role == SockRole::kListening && !s.backlog.empty()) ev |= sockev::kAcceptable;
  if (s.role == SockRole::kConnected || s.role == SockRole::kClosed) {
    if (s.rx_ready > 0 || s.peer_fin) ev |= sockev::kReadable;
  }
  if (s.role == SockRole::kConnected && !s.app_closed && s.tx_free > 0) ev |= sockev::kWritable;
  if (s.role == SockRole::kClosed) ev |= sockev::kClosed;
  return ev;
}

std::vector<PollEvent> SocketLib::poll(std::chrono::nanoseconds timeout) {
  if (!overflow_.empty()) {
    flush_cmds();
    queues_.ring_doorbell(ctx_id_);
  }
  drain();
  if (dirty_.empty() && timeout.count() > 0) {
    ctx_.wakeup.arm();
    drain();
    if (dirty_.empty()) ctx_.wakeup.wait_for(timeout);
    ctx_.wakeup.disarm();
    drain();
  }
  std::vector<PollEvent> out;
  for (SocketId id : dirty_) {
    Sock* s = get(id);
    if (!s) continue;
    const std::uint32_t ev = level(*s);
    s->pending = 0;
    if (ev) out.push_back(PollEvent{id, ev});
  }
  dirty_.clear();
  return out;
}

bool SocketLib::prepare_sleep() {
  ctx_.wakeup.arm();
  if (ctx_.notify.size() > 0 || !dirty_.empty()) {
    ctx_.wakeup.disarm();
    return false;
  }
  return true;
}

SockRole SocketLib::role(SocketId id) const {
  const Sock* s = get(id);
  return s ? s->role : SockRole::kClosed;
}
SockError SocketLib::error(SocketId id) const {
  const Sock* s = get(id);
  return s ? s->err : SockError::kInvalid;
}
FlowIndex SocketLib::flow(SocketId id) const {
  const Sock* s = get(id);
  return s ? s->flow : kNoFlow;
}
std::uint32_t SocketLib::readable_bytes(SocketId id) const {
  const Sock* s = get(id);
  return s ? s->rx_ready : 0;
}
std::uint32_t SocketLib::writable_bytes(SocketId id) const {
  const Sock* s = get(id);
  return s && s->role == SockRole::kConnected && !s->app_closed ? s->tx_free : 0;
}
bool SocketLib::peer_closed(SocketId id) const {
  const Sock* s = get(id);
  return s && s->peer_fin;
}

}  // namespace tcpipe
