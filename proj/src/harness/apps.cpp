#include "tcpipe/harness/apps.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tcpipe {

std::uint64_t fnv1a(std::span<const std::uint8_t> data, std::uint64_t h) {
  for (std::uint8_t b : data) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

double jain_index(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0, s2 = 0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  return s2 > 0 ? (s * s) / (static_cast<double>(xs.size()) * s2) : 0.0;
}

double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(xs.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(xs.size()))) - 1;
  return xs[idx];
}

App::App(Simulator& sim, Stack& stack) : sim_(sim), stack_(stack), lib_(stack.add_context()) {
  stack_.on_wakeup(lib_, [this] { wake(); });
  wake();  // first run arms the wakeup
}

void App::wake() {
  if (queued_) return;
  queued_ = true;
  sim_.at(sim_.now(), [this] { run(); });
}

void App::run() {
  queued_ = false;
  handle(lib_.poll());
  stack_.kick();
  if (lib_.commands_parked()) {
    queued_ = true;
    sim_.after(kNsPerUs, [this] { run(); });
    return;
  }
  if (!lib_.prepare_sleep()) wake();
}

// --- server ---

Server::Server(Simulator& sim, Stack& stack, std::uint16_t port, ServerMode mode, std::uint32_t request,
               std::uint32_t response)
    : App(sim, stack), mode_(mode), request_(request), response_(response), buf_(64 * 1024) {
  listener_ = lib_.listen(port);
}

void Server::handle(const std::vector<PollEvent>& events) {
  for (const auto& ev : events) {
    if (ev.sock == listener_) {
      for (;;) {
        const SocketId s = lib_.accept(listener_);
        if (s == kNoSocket) break;
        Conn c;
        const auto& t = stack_.flows().tuple(lib_.flow(s));
        c.peer = conn_key(t.remote_ip, t.remote_port);
        stats_[c.peer];
        ++accepted_;
        auto [it, ok] = conns_.emplace(s, std::move(c));
        service(s, it->second);
      }
      continue;
    }
    auto it = conns_.find(ev.sock);
    if (it == conns_.end()) continue;
    service(ev.sock, it->second);
    if (lib_.role(ev.sock) == SockRole::kClosed) {
      AppConnStats& st = stats_[it->second.peer];
      st.closed = true;
      st.error = lib_.error(ev.sock);
      lib_.close(ev.sock);
      conns_.erase(it);
    }
  }
}

void Server::flush(SocketId s, Conn& c) {
  AppConnStats& st = stats_[c.peer];
  while (c.out_off < c.out.size()) {
    const auto r = lib_.send(s, std::span(c.out).subspan(c.out_off));
    if (r.n == 0) break;
    st.sent.add(std::span(c.out).subspan(c.out_off, r.n));
    c.out_off += r.n;
  }
  if (c.out_off == c.out.size()) {
    c.out.clear();
    c.out_off = 0;
  }
}

void Server::service(SocketId s, Conn& c) {
  AppConnStats& st = stats_[c.peer];
  flush(s, c);
  const TimeNs now = sim_.now();
  for (;;) {
    if (c.out.size() - c.out_off > 256 * 1024) break;  // let the peer drain first
    const auto r = lib_.recv(s, buf_);
    if (r.n == 0) {
      if (r.err == SockError::kConnectionClosed) c.closing = true;
      break;
    }
    const auto data = std::span(buf_).first(r.n);
    st.received.add(data);
    if (now >= win_start_ && now < win_end_) st.window_bytes += r.n;
    switch (mode_) {
      case ServerMode::kEcho:
        c.out.insert(c.out.end(), data.begin(), data.end());
        break;
      case ServerMode::kRpc:
        c.req_fill += r.n;
        while (c.req_fill >= request_) {
          c.req_fill -= request_;
          ++st.messages;
          for (std::uint32_t i = 0; i < response_; ++i)
            c.out.push_back(static_cast<std::uint8_t>(st.messages * 31 + i));
        }
        break;
      case ServerMode::kSink:
        break;
    }
    flush(s, c);
  }
  if (mode_ == ServerMode::kEcho) st.messages = st.received.bytes;
  if (c.closing && c.out.empty() && lib_.role(s) == SockRole::kConnected) lib_.close(s);
}

// --- client ---

Client::Client(Simulator& sim, Stack& stack, ClientConfig cfg) : App(sim, stack), cfg_(cfg), buf_(64 * 1024) {
  for (std::uint32_t i = 0; i < cfg_.conns; ++i) {
    sim_.at(cfg_.start + static_cast<TimeNs>(i) * cfg_.connect_spacing, [this, i] {
      SockError err;
      const SocketId s = lib_.connect(cfg_.server_ip, cfg_.server_port, &err);
      ++connects_;
      if (s == kNoSocket) {
        ++failures_;
        return;
      }
      Conn& c = conns_[s];
      c.rng.seed(cfg_.seed * 0x9e3779b97f4a7c15ull + i);
      stack_.kick();
    });
  }
}

std::vector<SocketId> Client::sockets() const {
  std::vector<SocketId> out;
  for (const auto& [s, c] : conns_) out.push_back(s);
  return out;
}

bool Client::done() const {
  if (connects_ < cfg_.conns) return false;
  for (const auto& [s, c] : conns_) {
    if (!c.finished && !c.closed) return false;
  }
  return true;
}

bool Client::may_issue(const Conn& c) const {
  return c.up && !c.finished && sim_.now() < cfg_.stop && (cfg_.messages == 0 || c.sent_msgs < cfg_.messages);
}

void Client::issue(Conn& c) {
  const std::size_t base = c.out.size();
  c.out.resize(base + cfg_.request);
  for (std::size_t i = 0; i < cfg_.request; i += 8) {
    const std::uint64_t v = c.rng();
    const std::size_t n = std::min<std::size_t>(8, cfg_.request - i);
    std::memcpy(&c.out[base + i], &v, n);
  }
  c.issued.push_back(sim_.now());
  ++c.sent_msgs;
}

void Client::pump(SocketId s, Conn& c) {
  AppConnStats& st = stats_[c.key];
  if (cfg_.response == 0) {
    // Bulk: generate exactly what the socket will take.
    for (;;) {
      if (sim_.now() >= cfg_.stop) break;
      std::uint64_t want = lib_.writable_bytes(s);
      if (cfg_.bulk_bytes) want = std::min<std::uint64_t>(want, cfg_.bulk_bytes - c.bulk_sent);
      if (want == 0) break;
      c.out.resize(static_cast<std::size_t>(want));
      for (std::size_t i = 0; i < c.out.size(); i += 8) {
        const std::uint64_t v = c.rng();
        std::memcpy(&c.out[i], &v, std::min<std::size_t>(8, c.out.size() - i));
      }
      const auto r = lib_.send(s, c.out);
      st.sent.add(std::span(c.out).first(r.n));
      c.bulk_sent += r.n;
      if (r.n < c.out.size()) break;
    }
    c.out.clear();
    if ((cfg_.bulk_bytes && c.bulk_sent >= cfg_.bulk_bytes) || sim_.now() >= cfg_.stop) {
      if (!c.finished) {
        c.finished = true;
        if (cfg_.close_when_done) lib_.close(s);
      }
    }
    return;
  }
  while (c.out_off < c.out.size()) {
    const auto r = lib_.send(s, std::span(c.out).subspan(c.out_off));
    if (r.n == 0) break;
    st.sent.add(std::span(c.out).subspan(c.out_off, r.n));
    c.out_off += r.n;
  }
  if (c.out_off == c.out.size()) {
    c.out.clear();
    c.out_off = 0;
  }
}

void Client::handle(const std::vector<PollEvent>& events) {
  const TimeNs now = sim_.now();
  for (const auto& ev : events) {
    auto it = conns_.find(ev.sock);
    if (it == conns_.end()) continue;
    Conn& c = it->second;
    const SocketId s = ev.sock;

    if ((ev.events & sockev::kConnected) && !c.up) {
      c.up = true;
      const auto& t = stack_.flows().tuple(lib_.flow(s));
      c.key = conn_key(t.local_ip, t.local_port);
      stats_[c.key];
      ++established_;
      if (cfg_.response > 0) {
        for (std::uint32_t i = 0; i < cfg_.depth && may_issue(c); ++i) issue(c);
      }
    }
    if (c.up) {
      AppConnStats& st = stats_[c.key];
      for (;;) {
        const auto r = lib_.recv(s, buf_);
        if (r.n == 0) break;
        st.received.add(std::span(buf_).first(r.n));
        if (cfg_.response == 0) continue;
        c.resp_fill += r.n;
        while (c.resp_fill >= cfg_.response && !c.issued.empty()) {
          c.resp_fill -= cfg_.response;
          lat_.push_back(static_cast<double>(now - c.issued.front()));
          c.issued.pop_front();
          ++completed_;
          ++st.messages;
          if (may_issue(c)) issue(c);
        }
      }
      pump(s, c);
      if (cfg_.response > 0 && !c.finished && !may_issue(c) && c.issued.empty() && c.out.empty()) {
        c.finished = true;
        if (cfg_.close_when_done) lib_.close(s);
      }
    }
    if (lib_.role(s) == SockRole::kClosed && !c.closed) {
      c.closed = true;
      const SockError e = lib_.error(s);
      if (e != SockError::kOk) {
        ++failures_;
        if (c.up) stats_[c.key].error = e;
      }
      if (c.up) stats_[c.key].closed = true;
    }
  }
}

}  // namespace tcpipe
