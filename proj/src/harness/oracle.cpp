#include "tcpipe/harness/oracle.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <optional>
#include <random>
#include <sstream>

#include "tcpipe/core/wire.hpp"
#include "tcpipe/datapath/ctxq.hpp"
#include "tcpipe/datapath/datapath.hpp"
#include "tcpipe/pipeline/engine.hpp"

namespace tcpipe {

namespace {

constexpr Ipv4Addr kLocalIp = make_ip(10, 1, 0, 1);
constexpr Ipv4Addr kPeerIp = make_ip(10, 1, 0, 2);

std::uint8_t peer_byte(std::uint32_t seq) { return static_cast<std::uint8_t>((seq * 2654435761u) >> 24); }

// One data-path instance bound to private copies of the trace's flows.
struct Instance {
  explicit Instance(const Trace& t) : trace(t), flows(std::max<std::size_t>(t.flows.size(), 1)) {
    for (std::uint16_t c = 0; c < t.contexts; ++c) ctx.create();
    out.wire.resize(t.flow_groups);
    out.redirects.resize(t.flow_groups);

    DatapathConfig dc;
    dc.local_mac = t.local_mac;
    dc.mss = t.mss;
    dc.flow_groups = t.flow_groups;
    dc.hc_pool = 1 << 20;
    dc.tx_pool = 1 << 20;

    DatapathSinks sinks;
    sinks.wire = [this](std::vector<std::uint8_t>&& f, TimeNs, std::uint32_t g) { out.wire[g].push_back(std::move(f)); };
    sinks.hint = [this](const SchedHint& h) {
      out.hints[h.flow].push_back(h.sendable);
      sendable[h.flow] = h.sendable;
    };
    sinks.redirect = [this](std::vector<std::uint8_t>&& f, TimeNs t) {
      Descriptor probe = Descriptor::rx_frame(f, t);
      out.redirects[dp->classify(probe) % trace.flow_groups].push_back(std::move(f));
    };
    sinks.clock = [] { return TimeNs{0}; };
    sinks.notify = [this](std::uint16_t c, const CtxQueueEntry& e) {
      out.notes[{c, e.flow}].push_back(e);
      if (e.kind == CtxKind::kRxDataNotify) unread[e.flow] += e.length();
      return true;
    };
    dp = std::make_unique<Datapath>(dc, flows, ctx, std::move(sinks));

    std::mt19937_64 fill(t.tx_fill_seed);
    for (const TraceFlow& tf : t.flows) {
      auto f = flows.allocate();
      Buffers b;
      b.rx.assign(t.rx_buf, 0);
      b.tx.resize(t.tx_buf);
      for (auto& byte : b.tx) byte = static_cast<std::uint8_t>(fill());
      bufs.push_back(std::move(b));
      Buffers& nb = bufs.back();

      PreState pre;
      pre.peer_mac = tf.peer_mac;
      pre.peer_ip = tf.tuple.remote_ip;
      pre.local_port = tf.tuple.local_port;
      pre.remote_port = tf.tuple.remote_port;
      pre.flow_group = flow_group(tf.tuple, t.flow_groups);
      ProtoState p;
      p.seq = tf.iss + 1;
      p.ack = tf.irs + 1;
      p.rx_avail = t.rx_buf;
      p.remote_win = tf.peer_win;
      PostState post;
      post.opaque = *f;
      post.context = tf.context;
      post.rx_base = reinterpret_cast<std::uintptr_t>(nb.rx.data());
      post.tx_base = reinterpret_cast<std::uintptr_t>(nb.tx.data());
      post.rx_size = t.rx_buf;
      post.tx_size = t.tx_buf;
      flows.install(*f, tf.tuple, pre, p, post);
      sendable.push_back(0);
      unread.push_back(0);
    }
  }

  Descriptor make(const TraceEvent& e) const {
    switch (e.kind) {
      case TraceEvent::Kind::kRx:
        return Descriptor::rx_frame(e.frame, e.time);
      case TraceEvent::Kind::kHc: {
        Descriptor d = Descriptor::hc_command(e.cmd, e.time);
        d.context = trace.flows.at(e.cmd.flow).context;
        return d;
      }
      case TraceEvent::Kind::kGrant:
        return Descriptor::tx_grant(e.flow, e.quantum, e.time);
    }
    return {};
  }

  ReplayResult result() const {
    ReplayResult r = out;
    for (FlowIndex f = 0; f < trace.flows.size(); ++f) {
      ReplayResult::FlowFinal ff;
      ff.pre = flows.pre(f);
      ff.proto = flows.proto(f);
      ff.flags = flows.flags(f);
      ff.post = flows.post(f);
      ff.post.rx_base = 0;
      ff.post.tx_base = 0;
      ff.rx_buffer = bufs[f].rx;
      r.flows.push_back(std::move(ff));
    }
    return r;
  }

  struct Buffers {
    std::vector<std::uint8_t> rx;
    std::vector<std::uint8_t> tx;
  };

  const Trace& trace;
  FlowTable flows;
  ContextQueues ctx{16};
  std::deque<Buffers> bufs;  // stable addresses
  std::unique_ptr<Datapath> dp;
  ReplayResult out;
  std::vector<std::uint32_t> sendable;
  std::vector<std::uint64_t> unread;
};

}  // namespace

struct OracleModel::Impl : Instance {
  using Instance::Instance;
};

std::size_t Trace::rx_segments() const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [](const TraceEvent& e) { return e.kind == TraceEvent::Kind::kRx; }));
}

std::uint64_t ReplayResult::wire_bytes() const {
  std::uint64_t n = 0;
  for (const auto& g : wire) {
    for (const auto& f : g) n += f.size();
  }
  return n;
}

OracleModel::OracleModel(const Trace& trace) : impl_(std::make_unique<Impl>(trace)) {}
OracleModel::~OracleModel() = default;

void OracleModel::apply(const TraceEvent& e) {
  Descriptor d = impl_->make(e);
  impl_->dp->run_to_completion(d);
}

const ProtoState& OracleModel::proto(FlowIndex f) const { return impl_->flows.proto(f); }
const ProtoFlags& OracleModel::flags(FlowIndex f) const { return impl_->flows.flags(f); }
ReplayResult OracleModel::result() const { return impl_->result(); }
const ReplayResult& OracleModel::output() const { return impl_->out; }
std::uint64_t OracleModel::rx_unread(FlowIndex f) const { return impl_->unread.at(f); }
void OracleModel::consume_rx(FlowIndex f, std::uint64_t n) { impl_->unread.at(f) -= std::min(n, impl_->unread.at(f)); }

ReplayResult replay_oracle(const Trace& trace) {
  OracleModel m(trace);
  for (const auto& e : trace.events) m.apply(e);
  return m.result();
}

ReplayResult replay_engine(const Trace& trace, const EngineReplayConfig& cfg) {
  Topology topo = cfg.topology;
  topo.flow_groups = trace.flow_groups;
  Instance inst(trace);
  EngineOptions eo;
  eo.disable_reorder = cfg.disable_reorder;
  Engine engine(topo, inst.dp->stage_fns(), eo);
  std::mt19937_64 rng(cfg.seed);
  for (const auto& e : trace.events) {
    Descriptor d = inst.make(e);
    while (!engine.submit(d)) {
      if (!engine.step_adversarial(rng, cfg.max_stall)) throw std::logic_error("engine refused input while idle");
    }
    const unsigned steps = cfg.max_steps_between_submits ? static_cast<unsigned>(rng() % (cfg.max_steps_between_submits + 1)) : 0;
    for (unsigned i = 0; i < steps; ++i) {
      if (!engine.step_adversarial(rng, cfg.max_stall)) break;
    }
  }
  engine.run_adversarial(rng, cfg.max_stall);
  return inst.result();
}

// --- comparison ---

namespace {

std::string describe_frame(const std::vector<std::uint8_t>& f) {
  auto s = parse_segment(f);
  if (!s) return "<" + std::to_string(f.size()) + " unparsable bytes>";
  std::ostringstream os;
  os << s->tcp.src_port << "->" << s->tcp.dst_port << " seq=" << s->tcp.seq << " ack=" << s->tcp.ack
     << " flags=0x" << std::hex << int(s->tcp.flags) << std::dec << " len=" << s->payload.size();
  return os.str();
}

template <class Seq, class Describe>
void compare_seq(DivergenceReport& r, const std::string& what, const Seq& a, const Seq& b, Describe describe) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a[i] == b[i])) {
      r.items.push_back(what + " #" + std::to_string(i) + ": expected " + describe(a[i]) + ", got " + describe(b[i]));
      return;
    }
  }
  if (a.size() != b.size())
    r.items.push_back(what + ": expected " + std::to_string(a.size()) + " items, got " + std::to_string(b.size()));
}

std::string describe_entry(const CtxQueueEntry& e) {
  std::ostringstream os;
  os << "kind=" << int(e.kind) << " flow=" << e.flow << " op=" << e.op[0] << "," << e.op[1] << "," << e.op[2];
  return os.str();
}

}  // namespace

std::string DivergenceReport::summary(std::size_t max_items) const {
  if (items.empty()) return "no divergence";
  std::string s = std::to_string(items.size()) + " divergence(s)";
  for (std::size_t i = 0; i < std::min(max_items, items.size()); ++i) s += "\n  " + items[i];
  return s;
}

DivergenceReport compare(const ReplayResult& a, const ReplayResult& b) {
  DivergenceReport r;
  if (a.wire.size() != b.wire.size()) r.items.push_back("flow group count differs");
  for (std::size_t g = 0; g < std::min(a.wire.size(), b.wire.size()); ++g) {
    compare_seq(r, "wire group " + std::to_string(g), a.wire[g], b.wire[g], describe_frame);
    compare_seq(r, "redirects group " + std::to_string(g), a.redirects[g], b.redirects[g], describe_frame);
  }
  for (const auto& [key, notes] : a.notes) {
    auto it = b.notes.find(key);
    const std::vector<CtxQueueEntry> none;
    compare_seq(r, "notes ctx " + std::to_string(key.first) + " flow " + std::to_string(key.second), notes,
                it == b.notes.end() ? none : it->second, describe_entry);
  }
  for (const auto& [key, notes] : b.notes) {
    if (!a.notes.count(key)) r.items.push_back("unexpected notes for flow " + std::to_string(key.second));
  }
  for (const auto& [f, h] : a.hints) {
    auto it = b.hints.find(f);
    const std::vector<std::uint32_t> none;
    compare_seq(r, "hints flow " + std::to_string(f), h, it == b.hints.end() ? none : it->second,
                [](std::uint32_t v) { return std::to_string(v); });
  }
  if (a.flows.size() != b.flows.size()) r.items.push_back("flow count differs");
  for (std::size_t f = 0; f < std::min(a.flows.size(), b.flows.size()); ++f) {
    const auto& x = a.flows[f];
    const auto& y = b.flows[f];
    const std::string tag = "flow " + std::to_string(f) + ": ";
    if (!(x.proto == y.proto)) {
      r.items.push_back(tag + "protocol state differs (seq " + std::to_string(x.proto.seq) + " vs " +
                        std::to_string(y.proto.seq) + ", ack " + std::to_string(x.proto.ack) + " vs " +
                        std::to_string(y.proto.ack) + ")");
    }
    if (!(x.flags == y.flags)) r.items.push_back(tag + "FIN/probe flags differ");
    if (!(x.pre == y.pre)) r.items.push_back(tag + "pre state differs");
    if (!(x.post == y.post)) r.items.push_back(tag + "post state differs");
    if (x.rx_buffer != y.rx_buffer) r.items.push_back(tag + "receive buffer contents differ");
  }
  return r;
}

DivergenceReport oracle_compare(const Trace& trace, const EngineReplayConfig& cfg) {
  return compare(replay_oracle(trace), replay_engine(trace, cfg));
}

// --- generation ---

namespace {

struct Peer {
  std::uint32_t snd_nxt = 0;   // next peer data byte to send
  std::uint32_t rcv_nxt = 0;   // next byte of our stream the peer expects
  std::uint16_t window = 0xffff;
  std::uint32_t ts = 1;
  std::uint32_t ts_recent = 0;
  bool fin_sent = false;
  std::uint32_t fin_seq = 0;
  std::size_t seen_frames = 0;  // wire frames of this group already examined
  std::uint32_t stalled = 0;
};

class Generator {
 public:
  explicit Generator(const TraceGenConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    trace_.flow_groups = cfg.flow_groups;
    trace_.local_mac = MacAddr{0x02, 0, 0, 0, 1, 1};
    trace_.tx_fill_seed = rng_();
    for (std::uint32_t i = 0; i < cfg.flows; ++i) {
      TraceFlow f;
      f.tuple = FourTuple{kLocalIp, kPeerIp, static_cast<std::uint16_t>(5000 + i), static_cast<std::uint16_t>(40000 + i * 7)};
      f.peer_mac = MacAddr{0x02, 0, 0, 0, 2, static_cast<std::uint8_t>(i)};
      f.context = static_cast<std::uint16_t>(i % trace_.contexts);
      f.iss = static_cast<std::uint32_t>(rng_());
      f.irs = static_cast<std::uint32_t>(rng_());
      trace_.flows.push_back(f);
      Peer p;
      p.snd_nxt = f.irs + 1;
      p.rcv_nxt = f.iss + 1;
      peers_.push_back(p);
    }
    model_ = std::make_unique<OracleModel>(trace_);
    seen_.resize(trace_.flow_groups, 0);
  }

  Trace run() {
    std::uint32_t rx = 0;
    while (rx < cfg_.segments) {
      now_ += static_cast<TimeNs>(rng_() % 3000);
      const FlowIndex f = static_cast<FlowIndex>(rng_() % cfg_.flows);
      const double u = unit();
      const bool near_end = rx > cfg_.segments * 9 / 10;
      if (u < 0.40) {
        rx += peer_data(f);
      } else if (u < 0.60) {
        rx += peer_ack(f);
      } else if (u < 0.72) {
        tx_bump(f);
      } else if (u < 0.80) {
        rx_bump(f);
      } else if (u < 0.97) {
        grant(f);
      } else if (u < 0.98) {
        if (model_->proto(f).tx_sent > 0) emit_hc(CtxQueueEntry::retransmit(f));
      } else if (u < 0.98 + cfg_.control) {
        rx += control(f);
      } else if (near_end && cfg_.fin && u > 0.995) {
        close(f);
      }
      observe_wire();
    }
    return std::move(trace_);
  }

 private:
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  void push(TraceEvent e) {
    e.time = now_;
    model_->apply(e);
    trace_.events.push_back(std::move(e));
  }

  void emit_hc(const CtxQueueEntry& c) {
    TraceEvent e;
    e.kind = TraceEvent::Kind::kHc;
    e.cmd = c;
    push(std::move(e));
  }

  std::vector<std::uint8_t> frame(FlowIndex f, std::uint32_t seq, std::uint8_t flags,
                                  std::span<const std::uint8_t> payload, bool ce) {
    const TraceFlow& tf = trace_.flows[f];
    Peer& p = peers_[f];
    SegmentView v;
    v.eth.src = tf.peer_mac;
    v.eth.dst = trace_.local_mac;
    v.ip.src = tf.tuple.remote_ip;
    v.ip.dst = tf.tuple.local_ip;
    v.ip.set_ecn(ce ? Ecn::kCe : Ecn::kEct0);
    v.tcp.src_port = tf.tuple.remote_port;
    v.tcp.dst_port = tf.tuple.local_port;
    v.tcp.seq = seq;
    v.tcp.ack = p.rcv_nxt;
    v.tcp.flags = flags;
    v.tcp.window = p.window;
    p.ts += 1 + static_cast<std::uint32_t>(rng_() % 3);
    v.tcp.ts = TcpTimestamp{p.ts, p.ts_recent};
    v.payload = payload;
    auto out = build_segment(v);
    fill_checksum(out);
    if (unit() < cfg_.bad_checksum) out.back() ^= 0x5a;
    return out;
  }

  void deliver(std::vector<std::uint8_t> fr) {
    TraceEvent e;
    e.kind = TraceEvent::Kind::kRx;
    e.frame = std::move(fr);
    if (held_ && unit() >= 0.5) {
      push(std::move(e));
      push(std::move(*held_));
      held_.reset();
      return;
    }
    if (!held_ && unit() < cfg_.reorder) {
      held_ = std::move(e);
      return;
    }
    push(std::move(e));
  }

  std::uint32_t peer_data(FlowIndex f) {
    Peer& p = peers_[f];
    const ProtoState& ps = model_->proto(f);
    if (p.fin_sent) return peer_ack(f);
    // Go back to what we last acknowledged when the peer has run ahead too far.
    p.stalled = p.snd_nxt == ps.ack ? 0 : p.stalled + 1;
    if (static_cast<std::int32_t>(p.snd_nxt - ps.ack) > static_cast<std::int32_t>(trace_.rx_buf) || p.stalled > 40) {
      p.snd_nxt = ps.ack;
      p.stalled = 0;
    }
    std::uint32_t seq = p.snd_nxt;
    if (unit() < cfg_.duplicate) seq -= static_cast<std::uint32_t>(rng_() % 3000);
    const std::uint32_t len = 1 + static_cast<std::uint32_t>(rng_() % trace_.mss);
    std::vector<std::uint8_t> payload(len);
    for (std::uint32_t i = 0; i < len; ++i) payload[i] = peer_byte(seq + i);
    if (seq == p.snd_nxt) p.snd_nxt += len;
    if (unit() < cfg_.loss) return 0;
    deliver(frame(f, seq, tcpflag::kAck | tcpflag::kPsh, payload, unit() < cfg_.ce_mark));
    return 1;
  }

  std::uint32_t peer_ack(FlowIndex f) {
    Peer& p = peers_[f];
    const double u = unit();
    if (u < 0.02) {
      p.window = 0;
    } else if (u < 0.1) {
      p.window = static_cast<std::uint16_t>(rng_() % 4096);
    } else if (u < 0.5) {
      p.window = 0xffff;
    }
    std::uint8_t flags = tcpflag::kAck;
    if (unit() < cfg_.ce_mark) flags |= tcpflag::kEce;
    std::uint32_t seq = p.snd_nxt;
    if (p.fin_sent) seq = p.fin_seq + 1;
    if (unit() < cfg_.loss) return 0;
    deliver(frame(f, seq, flags, {}, false));
    return 1;
  }

  void tx_bump(FlowIndex f) {
    if (model_->flags(f).fin_pending || model_->flags(f).fin_sent) return;
    const ProtoState& ps = model_->proto(f);
    const std::uint32_t used = ps.tx_sent + ps.tx_avail;
    if (used >= trace_.tx_buf) return;
    const std::uint32_t room = trace_.tx_buf - used;
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng_() % std::min<std::uint32_t>(room, 3 * trace_.mss));
    emit_hc(CtxQueueEntry::tx_bump(f, n));
  }

  void rx_bump(FlowIndex f) {
    const std::uint64_t unread = model_->rx_unread(f);
    if (unread == 0) return;
    const std::uint64_t n = 1 + rng_() % unread;
    model_->consume_rx(f, n);
    emit_hc(CtxQueueEntry::rx_bump(f, n));
  }

  void grant(FlowIndex f) {
    TraceEvent e;
    e.kind = TraceEvent::Kind::kGrant;
    e.flow = f;
    e.quantum = trace_.mss * (1 + static_cast<std::uint32_t>(rng_() % 8));
    push(std::move(e));
  }

  void close(FlowIndex f) {
    const auto& fl = model_->flags(f);
    if (!fl.fin_pending && !fl.fin_sent) emit_hc(CtxQueueEntry::fin(f));
    Peer& p = peers_[f];
    if (!p.fin_sent && model_->proto(f).ack == p.snd_nxt) {
      p.fin_sent = true;
      p.fin_seq = p.snd_nxt;
      deliver(frame(f, p.snd_nxt, tcpflag::kAck | tcpflag::kFin, {}, false));
    }
  }

  std::uint32_t control(FlowIndex f) {
    const TraceFlow& tf = trace_.flows[f];
    SegmentView v;
    v.eth.src = tf.peer_mac;
    v.eth.dst = trace_.local_mac;
    v.ip.src = tf.tuple.remote_ip;
    v.ip.dst = tf.tuple.local_ip;
    v.tcp.src_port = unit() < 0.5 ? tf.tuple.remote_port : static_cast<std::uint16_t>(30000 + rng_() % 1000);
    v.tcp.dst_port = tf.tuple.local_port;
    v.tcp.seq = static_cast<std::uint32_t>(rng_());
    v.tcp.flags = tcpflag::kSyn;
    v.tcp.window = 0xffff;
    auto out = build_segment(v);
    fill_checksum(out);
    TraceEvent e;
    e.kind = TraceEvent::Kind::kRx;
    e.frame = std::move(out);
    push(std::move(e));
    return 1;
  }

  // The peer sees our transmissions (minus losses) and advances its
  // cumulative acknowledgment over in-order data.
  void observe_wire() {
    const ReplayResult& out = model_->output();
    for (std::uint32_t g = 0; g < trace_.flow_groups; ++g) {
      const auto& frames = out.wire[g];
      for (; seen_[g] < frames.size(); ++seen_[g]) {
        auto s = parse_segment(frames[seen_[g]]);
        if (!s) continue;
        if (unit() < cfg_.loss) continue;
        FlowIndex f = s->tcp.src_port - 5000;
        if (f >= peers_.size()) continue;
        Peer& p = peers_[f];
        if (s->tcp.ts) p.ts_recent = s->tcp.ts->ts_val;
        const std::uint32_t len = static_cast<std::uint32_t>(s->payload.size());
        if (s->tcp.seq == p.rcv_nxt) {
          p.rcv_nxt += len;
          if (s->tcp.has(tcpflag::kFin)) p.rcv_nxt += 1;
        }
      }
    }
  }

  TraceGenConfig cfg_;
  std::mt19937_64 rng_;
  Trace trace_;
  std::vector<Peer> peers_;
  std::unique_ptr<OracleModel> model_;
  std::vector<std::size_t> seen_;
  std::optional<TraceEvent> held_;
  TimeNs now_ = 0;

};

}  // namespace

Trace generate_trace(const TraceGenConfig& cfg) {
  if (cfg.flows == 0 || cfg.flows > 1000) throw std::invalid_argument("flows must be in [1, 1000]");
  Generator g(cfg);
  return g.run();
}

}  // namespace tcpipe
