#include "tcpipe/ctrl/control_plane.hpp"

#include <algorithm>
#include <atomic>
#include <limits>

namespace tcpipe {

namespace {

template <typename T>
T load_relaxed(T& v) {
  return std::atomic_ref<T>(v).load(std::memory_order_relaxed);
}

constexpr TimeNs kNever = std::numeric_limits<TimeNs>::max();
constexpr std::uint8_t kDataPathFlags =
    tcpflag::kAck | tcpflag::kFin | tcpflag::kPsh | tcpflag::kEce | tcpflag::kCwr;

}  // namespace

const char* to_string(TcpFsm s) {
  switch (s) {
    case TcpFsm::kListen: return "LISTEN";
    case TcpFsm::kSynSent: return "SYN_SENT";
    case TcpFsm::kSynRcvd: return "SYN_RCVD";
    case TcpFsm::kEstablished: return "ESTABLISHED";
    case TcpFsm::kFinWait: return "FIN_WAIT";
    case TcpFsm::kCloseWait: return "CLOSE_WAIT";
    case TcpFsm::kClosing: return "CLOSING";
    case TcpFsm::kTimeWait: return "TIME_WAIT";
    case TcpFsm::kClosed: return "CLOSED";
  }
  return "?";
}

ControlPlane::ControlPlane(CtrlConfig cfg, FlowTable& flows, ContextQueues& ctx, CtrlHooks hooks)
    : cfg_(cfg), flows_(flows), ctx_(ctx), hooks_(std::move(hooks)), own_ctx_(ctx.create()), rng_(cfg.seed) {}

void ControlPlane::add_neighbor(Ipv4Addr ip, const MacAddr& mac) {
  std::lock_guard lock(mu_);
  neighbors_[ip] = mac;
}

void ControlPlane::set_rto_observer(std::function<void(FlowIndex, TimeNs)> fn) {
  std::lock_guard lock(mu_);
  rto_observer_ = std::move(fn);
}

CtrlError ControlPlane::listen(std::uint16_t port, std::uint16_t context) {
  std::lock_guard lock(mu_);
  if (listeners_.count(port)) return CtrlError::kPortInUse;
  listeners_[port] = context;
  return CtrlError::kOk;
}

void ControlPlane::unlisten(std::uint16_t port) {
  std::lock_guard lock(mu_);
  listeners_.erase(port);
}

std::uint32_t ControlPlane::pick_iss() { return static_cast<std::uint32_t>(rng_()); }

std::optional<std::uint16_t> ControlPlane::ephemeral_port(Ipv4Addr ip, std::uint16_t port) {
  for (int i = 0; i < 16384; ++i) {
    const std::uint16_t p = next_port_;
    next_port_ = next_port_ == 65535 ? 49152 : static_cast<std::uint16_t>(next_port_ + 1);
    const FourTuple t{cfg_.local_ip, ip, p, port};
    if (listeners_.count(p) || pending_.count(t) || flows_.lookup(t)) continue;
    return p;
  }
  return std::nullopt;
}

CtrlError ControlPlane::connect(Ipv4Addr remote_ip, std::uint16_t remote_port, std::uint16_t context,
                                std::uint64_t token, TimeNs now) {
  std::lock_guard lock(mu_);
  auto mac = neighbors_.find(remote_ip);
  if (mac == neighbors_.end()) return CtrlError::kNoRoute;
  if (conns_.size() + pending_.size() >= cfg_.max_conns) return CtrlError::kResourceExhausted;
  auto port = ephemeral_port(remote_ip, remote_port);
  if (!port) return CtrlError::kNoPort;

  Conn c;
  c.st = TcpFsm::kSynSent;
  c.tuple = FourTuple{cfg_.local_ip, remote_ip, *port, remote_port};
  c.peer_mac = mac->second;
  c.iss = pick_iss();
  c.context = context;
  c.token = token;
  c.active_open = true;
  c.timer = now + cfg_.syn_rto;
  send_control(c.tuple, c.peer_mac, c.iss, 0, tcpflag::kSyn, 0, now);
  wake_at(c.timer);
  pending_.emplace(c.tuple, std::move(c));
  return CtrlError::kOk;
}

void ControlPlane::shutdown(FlowIndex f, TimeNs now) {
  std::lock_guard lock(mu_);
  auto it = conns_.find(f);
  if (it == conns_.end()) return;
  Conn& c = it->second;
  if (c.st == TcpFsm::kEstablished) {
    c.st = TcpFsm::kFinWait;
  } else if (c.st == TcpFsm::kCloseWait) {
    c.st = TcpFsm::kClosing;
  }
  wake_at(now + cfg_.tick_period);
}

void ControlPlane::abort(FlowIndex f, TimeNs now) {
  std::lock_guard lock(mu_);
  auto it = conns_.find(f);
  if (it == conns_.end()) return;
  const Conn& c = it->second;
  const auto& v = flows_.view(f);
  send_control(c.tuple, c.peer_mac, v.una.load() + v.tx_sent.load(), v.ack.load(),
               tcpflag::kRst | tcpflag::kAck, 0, now);
  ++stats_.rsts_sent;
  remove(f, ConnEvent::kReset, now);
}

void ControlPlane::deliver(std::uint16_t context, const CtxQueueEntry& e) {
  if (hooks_.notify) {
    hooks_.notify(context, e);
  } else {
    ctx_.deliver(context, e);
  }
}

void ControlPlane::send_control(const FourTuple& t, const MacAddr& mac, std::uint32_t seq, std::uint32_t ack,
                                std::uint8_t flags, std::uint32_t ts_ecr, TimeNs now) {
  if (!hooks_.transmit) return;
  SegmentView v;
  v.eth.src = cfg_.local_mac;
  v.eth.dst = mac;
  v.ip.src = t.local_ip;
  v.ip.dst = t.remote_ip;
  v.tcp.src_port = t.local_port;
  v.tcp.dst_port = t.remote_port;
  v.tcp.seq = seq;
  v.tcp.ack = ack;
  v.tcp.flags = flags;
  v.tcp.window = static_cast<std::uint16_t>(std::min<std::uint32_t>(cfg_.rx_buf, 65535));
  if (!(flags & tcpflag::kRst)) {
    v.tcp.ts = TcpTimestamp{static_cast<std::uint32_t>(now / kNsPerUs), ts_ecr};
  }
  auto frame = build_segment(v);
  fill_checksum(frame);
  hooks_.transmit(std::move(frame), now);
}

void ControlPlane::send_rst_for(const SegmentView& seg, TimeNs now) {
  const FourTuple t{seg.ip.dst, seg.ip.src, seg.tcp.dst_port, seg.tcp.src_port};
  auto mac = neighbors_.find(seg.ip.src);
  const MacAddr dst = mac != neighbors_.end() ? mac->second : seg.eth.src;
  if (seg.tcp.has(tcpflag::kAck)) {
    send_control(t, dst, seg.tcp.ack, 0, tcpflag::kRst, 0, now);
  } else {
    std::uint32_t len = static_cast<std::uint32_t>(seg.payload.size());
    if (seg.tcp.has(tcpflag::kSyn)) ++len;
    if (seg.tcp.has(tcpflag::kFin)) ++len;
    send_control(t, dst, 0, seg.tcp.seq + len, tcpflag::kRst | tcpflag::kAck, 0, now);
  }
  ++stats_.rsts_sent;
}

void ControlPlane::handle_segment(const std::vector<std::uint8_t>& frame, TimeNs now) {
  std::lock_guard lock(mu_);
  auto seg = parse_segment(frame);
  if (!seg || !verify_checksum(*seg)) return;
  ++stats_.segments;
  on_segment(*seg, frame, now);
}

void ControlPlane::on_segment(const SegmentView& seg, const std::vector<std::uint8_t>& raw, TimeNs now) {
  const FourTuple t{seg.ip.dst, seg.ip.src, seg.tcp.dst_port, seg.tcp.src_port};
  const auto& th = seg.tcp;
  const std::uint32_t ts_val = th.ts ? th.ts->ts_val : 0;

  if (auto f = flows_.lookup(t)) {
    auto it = conns_.find(*f);
    if (it == conns_.end()) return;
    Conn& c = it->second;
    if (th.has(tcpflag::kRst)) {
      remove(*f, ConnEvent::kReset, now);
    } else if (th.has(tcpflag::kSyn)) {
      // Our handshake ACK was lost.
      if (c.active_open && th.has(tcpflag::kAck)) {
        send_control(c.tuple, c.peer_mac, c.iss + 1, c.irs + 1, tcpflag::kAck, ts_val, now);
      }
    } else if (hooks_.reinject && (th.flags & kDataPathFlags)) {
      // Raced the install: looked up before the flow became visible.
      ++stats_.reinjected;
      hooks_.reinject(std::vector<std::uint8_t>(raw), now);
    }
    return;
  }

  auto pit = pending_.find(t);
  if (pit != pending_.end()) {
    Conn& c = pit->second;
    if (c.st == TcpFsm::kSynSent) {
      const bool acks_syn = th.has(tcpflag::kAck) && th.ack == c.iss + 1;
      if (th.has(tcpflag::kRst)) {
        if (acks_syn) {
          deliver(c.context, CtxQueueEntry::conn_event(kNoFlow, c.token, ConnEvent::kRefused, t.local_port));
          pending_.erase(pit);
        }
      } else if (th.has(tcpflag::kSyn) && acks_syn) {
        c.irs = th.seq;
        c.peer_win = th.window;
        c.peer_ts = ts_val;
        Conn done = std::move(c);
        pending_.erase(pit);
        if (!install(done, now)) {
          deliver(done.context, CtxQueueEntry::conn_event(kNoFlow, done.token, ConnEvent::kRefused, t.local_port));
          return;
        }
        const Conn& ic = conns_.at(done.flow);
        send_control(ic.tuple, ic.peer_mac, ic.iss + 1, ic.irs + 1, tcpflag::kAck, ts_val, now);
        deliver(ic.context, CtxQueueEntry::conn_event(ic.flow, ic.token, ConnEvent::kEstablished, t.local_port));
      }
      return;
    }
    // SYN_RCVD
    if (th.has(tcpflag::kRst)) {
      pending_.erase(pit);
    } else if (th.has(tcpflag::kSyn)) {
      if (!th.has(tcpflag::kAck)) {
        send_control(c.tuple, c.peer_mac, c.iss, c.irs + 1, tcpflag::kSyn | tcpflag::kAck, ts_val, now);
        ++stats_.syn_acks_sent;
      }
    } else if (th.has(tcpflag::kAck) && th.ack == c.iss + 1) {
      c.peer_win = th.window;
      c.peer_ts = ts_val;
      Conn done = std::move(c);
      pending_.erase(pit);
      if (!install(done, now)) {
        send_rst_for(seg, now);
        return;
      }
      const Conn& ic = conns_.at(done.flow);
      deliver(ic.context, CtxQueueEntry::conn_event(ic.flow, 0, ConnEvent::kAccepted, t.local_port));
      if ((!seg.payload.empty() || th.has(tcpflag::kFin)) && hooks_.reinject) {
        ++stats_.reinjected;
        hooks_.reinject(std::vector<std::uint8_t>(raw), now);
      }
    }
    return;
  }

  if (th.has(tcpflag::kRst)) return;
  if (th.has(tcpflag::kSyn) && !th.has(tcpflag::kAck)) {
    auto lit = listeners_.find(t.local_port);
    if (lit == listeners_.end()) {
      send_rst_for(seg, now);
      return;
    }
    if (conns_.size() + pending_.size() >= cfg_.max_conns) {
      ++stats_.syn_drops;
      return;
    }
    Conn c;
    c.st = TcpFsm::kSynRcvd;
    c.tuple = t;
    auto mac = neighbors_.find(t.remote_ip);
    c.peer_mac = mac != neighbors_.end() ? mac->second : seg.eth.src;
    c.iss = pick_iss();
    c.irs = th.seq;
    c.peer_win = th.window;
    c.peer_ts = ts_val;
    c.context = lit->second;
    c.timer = now + cfg_.syn_rto;
    send_control(c.tuple, c.peer_mac, c.iss, c.irs + 1, tcpflag::kSyn | tcpflag::kAck, ts_val, now);
    ++stats_.syn_acks_sent;
    wake_at(c.timer);
    pending_.emplace(t, std::move(c));
    return;
  }
  send_rst_for(seg, now);
}

bool ControlPlane::install(Conn& c, TimeNs now) {
  auto f = flows_.allocate();
  if (!f) {
    ++stats_.syn_drops;
    return false;
  }
  c.bufs = std::make_shared<Buffers>();
  c.bufs->rx.reset(new std::uint8_t[cfg_.rx_buf]());
  c.bufs->tx.reset(new std::uint8_t[cfg_.tx_buf]());

  PreState pre;
  pre.peer_mac = c.peer_mac;
  pre.peer_ip = c.tuple.remote_ip;
  pre.local_port = c.tuple.local_port;
  pre.remote_port = c.tuple.remote_port;
  pre.flow_group = flow_group(c.tuple, cfg_.flow_groups);

  ProtoState p;
  p.seq = c.iss + 1;
  p.ack = c.irs + 1;
  p.rx_avail = cfg_.rx_buf;
  p.remote_win = c.peer_win;
  p.next_ts = c.peer_ts;

  PostState post;
  post.opaque = *f;
  post.context = c.context;
  post.rx_base = reinterpret_cast<std::uintptr_t>(c.bufs->rx.get());
  post.tx_base = reinterpret_cast<std::uintptr_t>(c.bufs->tx.get());
  post.rx_size = cfg_.rx_buf;
  post.tx_size = cfg_.tx_buf;

  c.flow = *f;
  c.st = TcpFsm::kEstablished;
  c.cc = CcFlowView{};
  c.cc.last_una = p.seq;
  c.cc.last_progress = now;
  c.cc.next_cc = now + cfg_.cc_min_interval;
  if (cfg_.policy == CcPolicy::kDctcp) {
    c.cc.alpha = cfg_.dctcp.initial_alpha;
    c.cc.rate = cfg_.dctcp.initial_rate > 0 ? cfg_.dctcp.initial_rate : cfg_.limits.line_rate;
  } else if (cfg_.policy == CcPolicy::kTimely) {
    c.cc.rate = cfg_.timely.initial_rate > 0 ? cfg_.timely.initial_rate : cfg_.limits.line_rate;
  }
  c.cc.timely.rate = c.cc.rate;
  post.rate = static_cast<std::uint32_t>(std::min(c.cc.rate, 4.0e9));

  flows_.install(*f, c.tuple, pre, p, post);
  if (cfg_.policy != CcPolicy::kNone && hooks_.set_rate) {
    hooks_.set_rate(*f, static_cast<std::uint64_t>(c.cc.rate));
  }
  ++stats_.installs;
  wake_at(now + cfg_.cc_min_interval);
  conns_[*f] = c;
  return true;
}

void ControlPlane::remove(FlowIndex f, ConnEvent ev, TimeNs now) {
  auto it = conns_.find(f);
  if (it == conns_.end()) return;
  Conn& c = it->second;
  flows_.deactivate(f);
  if (hooks_.unschedule) hooks_.unschedule(f);
  deliver(c.context, CtxQueueEntry::conn_event(f, c.token, ev, c.tuple.local_port));
  quarantine_.push_back(Quarantine{f, now + cfg_.quarantine, std::nullopt, c.bufs});
  ++stats_.removals;
  wake_at(now + cfg_.quarantine);
  conns_.erase(it);
}

TimeNs ControlPlane::rto_of(const Conn& c) const {
  const auto rtt = load_relaxed(const_cast<FlowTable&>(flows_).post(c.flow).rtt_est);
  return rto_base(static_cast<double>(rtt), cfg_.rto) * c.cc.backoff;
}

void ControlPlane::cc_step(Conn& c, TimeNs now) {
  if (cfg_.policy == CcPolicy::kNone || now < c.cc.next_cc) return;
  PostState& post = flows_.post(c.flow);
  const std::uint32_t ackb = load_relaxed(post.cnt_ackb);
  const std::uint32_t ecnb = load_relaxed(post.cnt_ecnb);
  const std::uint8_t fretx = load_relaxed(post.cnt_fretx);
  const std::uint32_t rtt = load_relaxed(post.rtt_est);
  const std::uint32_t d_ackb = ackb - c.cc.ackb;
  const std::uint32_t d_ecnb = std::min(ecnb - c.cc.ecnb, d_ackb);
  const auto d_fretx = static_cast<std::uint8_t>(fretx - c.cc.fretx);
  c.cc.ackb = ackb;
  c.cc.ecnb = ecnb;
  c.cc.fretx = fretx;
  c.cc.rtt_est = rtt;
  const double rtt_ns = std::max(rtt > 0 ? static_cast<double>(rtt) : cfg_.default_rtt_ns,
                                  static_cast<double>(cfg_.cc_min_interval));

  const double before = c.cc.rate;
  const double achieved = c.cc.last_cc > 0 && now > c.cc.last_cc
                              ? static_cast<double>(d_ackb) * 1e9 / static_cast<double>(now - c.cc.last_cc)
                              : before;
  if (d_ackb > 0) {
    if (cfg_.policy == CcPolicy::kDctcp) {
      // A flow held back by its window ignores cuts above what it really sends.
      const double base = d_ecnb > 0 ? std::clamp(achieved, cfg_.limits.floor, before) : before;
      DctcpState s{c.cc.alpha, base};
      dctcp_update(s, d_ackb, d_ecnb, rtt_ns, cfg_.mss, cfg_.dctcp, cfg_.limits);
      c.cc.alpha = s.alpha;
      // Acks in the interval after a cut still cover data sent before it.
      const bool stale = d_ecnb > 0 && c.cc.cut;
      c.cc.cut = d_ecnb > 0 && !stale;
      if (!stale) c.cc.rate = s.rate;
    } else if (rtt > 0) {
      c.cc.timely.rate = c.cc.rate;
      timely_update(c.cc.timely, static_cast<double>(rtt), cfg_.timely, cfg_.limits);
      c.cc.rate = c.cc.timely.rate;
    }
  }
  if (d_fretx > 0) c.cc.rate = std::max(c.cc.rate / 2.0, cfg_.limits.floor);
  if (c.cc.rate != before && hooks_.set_rate) hooks_.set_rate(c.flow, static_cast<std::uint64_t>(c.cc.rate));
  post.rate = static_cast<std::uint32_t>(std::min(c.cc.rate, 4.0e9));
  c.cc.last_cc = now;
  c.cc.next_cc = now + std::max<TimeNs>(static_cast<TimeNs>(rtt_ns), cfg_.cc_min_interval);
  ++stats_.cc_iterations;
}

void ControlPlane::rto_step(Conn& c, TimeNs now) {
  const CtrlView& v = flows_.view(c.flow);
  const std::uint32_t una = v.una.load(std::memory_order_relaxed);
  const std::uint8_t bits = v.flags.load(std::memory_order_acquire);
  const bool fin_out = (bits & kViewFinSent) && !(bits & kViewFinAcked);
  const bool persist = v.tx_avail.load() > 0 && v.remote_win.load() == 0;
  const bool outstanding = v.tx_sent.load(std::memory_order_relaxed) > 0 || fin_out || persist;

  if (una != c.cc.last_una) {
    c.cc.last_una = una;
    c.cc.last_progress = now;
    c.cc.backoff = 1;
    c.cc.retries = 0;
  }
  if (!outstanding) {
    c.cc.last_progress = now;
    return;
  }
  if (now - c.cc.last_progress < rto_of(c)) return;

  ctx_.get(own_ctx_).cmd.push(CtxQueueEntry::retransmit(c.flow));
  ctx_.ring_doorbell(own_ctx_);
  ++stats_.retransmits;
  ++c.cc.timeouts;
  ++c.cc.retries;
  c.cc.backoff = std::min(c.cc.backoff * 2, cfg_.rto.backoff_cap);
  c.cc.last_progress = now;
  if (cfg_.policy != CcPolicy::kNone) {
    c.cc.rate = std::max(c.cc.rate / 2.0, cfg_.limits.floor);
    if (hooks_.set_rate) hooks_.set_rate(c.flow, static_cast<std::uint64_t>(c.cc.rate));
  }
  if (rto_observer_) rto_observer_(c.flow, now);
}

void ControlPlane::teardown_step(Conn& c, TimeNs now) {
  const std::uint8_t bits = flows_.view(c.flow).flags.load(std::memory_order_acquire);
  switch (c.st) {
    case TcpFsm::kEstablished:
      if (bits & kViewRxFin) c.st = TcpFsm::kCloseWait;
      break;
    case TcpFsm::kFinWait:
      if ((bits & kViewFinAcked) && (bits & kViewRxFin)) {
        c.st = TcpFsm::kTimeWait;
        c.timer = now + 2 * rto_of(c);
      }
      break;
    case TcpFsm::kClosing:
      if (bits & kViewFinAcked) remove(c.flow, ConnEvent::kClosed, now);
      break;
    case TcpFsm::kTimeWait:
      if (now >= c.timer) remove(c.flow, ConnEvent::kClosed, now);
      break;
    default:
      break;
  }
}

void ControlPlane::tick(TimeNs now) {
  std::lock_guard lock(mu_);

  for (auto it = pending_.begin(); it != pending_.end();) {
    Conn& c = it->second;
    if (now < c.timer) {
      ++it;
      continue;
    }
    if (++c.retries > cfg_.syn_retries) {
      if (c.active_open) {
        deliver(c.context, CtxQueueEntry::conn_event(kNoFlow, c.token, ConnEvent::kTimeout, c.tuple.local_port));
      }
      it = pending_.erase(it);
      continue;
    }
    if (c.st == TcpFsm::kSynSent) {
      send_control(c.tuple, c.peer_mac, c.iss, 0, tcpflag::kSyn, 0, now);
    } else {
      send_control(c.tuple, c.peer_mac, c.iss, c.irs + 1, tcpflag::kSyn | tcpflag::kAck, c.peer_ts, now);
      ++stats_.syn_acks_sent;
    }
    c.timer = now + (cfg_.syn_rto << std::min<std::uint32_t>(c.retries, 6));
    ++it;
  }

  std::vector<FlowIndex> ids;
  ids.reserve(conns_.size());
  for (auto& [f, c] : conns_) ids.push_back(f);
  for (FlowIndex f : ids) {
    auto it = conns_.find(f);
    if (it == conns_.end()) continue;
    Conn& c = it->second;
    cc_step(c, now);
    rto_step(c, now);
    if (c.cc.retries > cfg_.max_rto_retries) {
      send_control(c.tuple, c.peer_mac, c.cc.last_una, flows_.view(f).ack.load(), tcpflag::kRst | tcpflag::kAck, 0,
                   now);
      ++stats_.rsts_sent;
      remove(f, ConnEvent::kTimeout, now);
      continue;
    }
    teardown_step(c, now);
  }

  for (auto it = quarantine_.begin(); it != quarantine_.end();) {
    if (now < it->not_before) {
      ++it;
      continue;
    }
    if (!it->marker) it->marker = hooks_.submitted ? hooks_.submitted() : 0;
    const std::uint64_t done = hooks_.finished ? hooks_.finished() : *it->marker;
    if (done >= *it->marker) {
      flows_.release(it->flow);
      ++stats_.releases;
      it = quarantine_.erase(it);
    } else {
      it->not_before = now;
      ++it;
    }
  }

  next_ = kNever;
  const TimeNs d = compute_deadline();
  if (d != kNever) wake_at(std::max(d, now + 1));
}

TimeNs ControlPlane::next_deadline() const {
  std::lock_guard lock(mu_);
  return next_;
}

void ControlPlane::wake_at(TimeNs t) {
  const TimeNs p = cfg_.tick_period;
  const TimeNs q = t <= 0 ? 0 : ((t + p - 1) / p) * p;
  next_ = std::min(next_, q);
}

TimeNs ControlPlane::compute_deadline() const {
  TimeNs best = kNever;
  for (const auto& [t, c] : pending_) best = std::min(best, c.timer);
  for (const auto& [f, c] : conns_) {
    const TimeNs rto = rto_of(c);
    best = std::min(best, c.cc.last_progress + rto);
    if (cfg_.policy != CcPolicy::kNone) best = std::min(best, c.cc.next_cc);
    switch (c.st) {
      case TcpFsm::kTimeWait: best = std::min(best, c.timer); break;
      case TcpFsm::kFinWait:
      case TcpFsm::kClosing:
      case TcpFsm::kEstablished:
        best = std::min(best, c.cc.last_progress + std::max<TimeNs>(rto / 4, cfg_.cc_min_interval));
        break;
      default: break;
    }
  }
  for (const auto& q : quarantine_) best = std::min(best, q.marker ? q.not_before + cfg_.tick_period : q.not_before);
  return best;
}

std::optional<TcpFsm> ControlPlane::state(FlowIndex f) const {
  std::lock_guard lock(mu_);
  auto it = conns_.find(f);
  if (it == conns_.end()) return std::nullopt;
  return it->second.st;
}

std::optional<CcFlowView> ControlPlane::cc_view(FlowIndex f) const {
  std::lock_guard lock(mu_);
  auto it = conns_.find(f);
  if (it == conns_.end()) return std::nullopt;
  return it->second.cc;
}

std::size_t ControlPlane::connections() const {
  std::lock_guard lock(mu_);
  return conns_.size();
}

std::size_t ControlPlane::quarantined() const {
  std::lock_guard lock(mu_);
  return quarantine_.size();
}

CtrlStats ControlPlane::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace tcpipe
