#include "tcpipe/datapath/datapath.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>

#include "tcpipe/core/wire.hpp"
#include "tcpipe/plugins/xdp.hpp"

namespace tcpipe {

namespace {

std::uint32_t micros(TimeNs t) { return static_cast<std::uint32_t>(static_cast<std::uint64_t>(t / kNsPerUs)); }

// Locates the 4-tuple of a raw frame, looking through one 802.1Q tag, from
// the receiver's point of view.
bool peek_tuple(const std::vector<std::uint8_t>& f, FourTuple& t) {
  std::size_t off = 12;
  if (f.size() < off + 2) return false;
  std::uint16_t et = load_be16(f.data() + off);
  if (et == kEtherTypeVlan) {
    off += 4;
    if (f.size() < off + 2) return false;
    et = load_be16(f.data() + off);
  }
  if (et != kEtherTypeIpv4) return false;
  const std::size_t ip = off + 2;
  if (f.size() < ip + kIpv4HeaderLen) return false;
  const std::size_t ihl = static_cast<std::size_t>(f[ip] & 0x0f) * 4;
  if (f[ip + 9] != kIpProtoTcp || f.size() < ip + ihl + 4) return false;
  t.remote_ip = load_be32(f.data() + ip + 12);
  t.local_ip = load_be32(f.data() + ip + 16);
  t.remote_port = load_be16(f.data() + ip + ihl);
  t.local_port = load_be16(f.data() + ip + ihl + 2);
  return true;
}

template <typename T>
void atomic_add(T& field, T v) {
  std::atomic_ref<T>(field).fetch_add(v, std::memory_order_relaxed);
}

}  // namespace

void copy_into_ring(std::uint64_t base, std::uint32_t size, std::uint32_t offset,
                    std::span<const std::uint8_t> src) {
  auto* buf = reinterpret_cast<std::uint8_t*>(static_cast<std::uintptr_t>(base));
  const std::size_t first = std::min<std::size_t>(src.size(), size - offset);
  std::memcpy(buf + offset, src.data(), first);
  if (first < src.size()) std::memcpy(buf, src.data() + first, src.size() - first);
}

void copy_from_ring(std::uint64_t base, std::uint32_t size, std::uint32_t offset,
                    std::span<std::uint8_t> dst) {
  const auto* buf = reinterpret_cast<const std::uint8_t*>(static_cast<std::uintptr_t>(base));
  const std::size_t first = std::min<std::size_t>(dst.size(), size - offset);
  std::memcpy(dst.data(), buf + offset, first);
  if (first < dst.size()) std::memcpy(dst.data() + first, buf, dst.size() - first);
}

Datapath::Datapath(DatapathConfig cfg, FlowTable& flows, ContextQueues& ctx, DatapathSinks sinks,
                   PluginChain* ingress_chain, Tracepoints* trace)
    : cfg_(cfg),
      flows_(flows),
      ctx_(ctx),
      sinks_(std::move(sinks)),
      chain_(ingress_chain),
      trace_(trace),
      hc_pool_(cfg.hc_pool),
      tx_pool_(cfg.tx_pool) {
  proto_cfg_.mss = cfg_.mss;
}

StageFns Datapath::stage_fns() {
  StageFns f;
  f.classify = [this](const Descriptor& d) { return classify(d); };
  f.xdp = [this](Descriptor& d) { xdp(d); };
  f.pre = [this](Descriptor& d) { pre(d); };
  f.protocol = [this](Descriptor& d) { protocol(d); };
  f.post = [this](Descriptor& d) { post(d); };
  f.dma = [this](Descriptor& d) { dma(d); };
  f.retire = [this](Descriptor& d) { retire(d); };
  f.egress = [this](Descriptor& d) { egress(d); };
  f.notify = [this](std::uint16_t c, const CtxQueueEntry& e) { return notify(c, e); };
  return f;
}

std::uint32_t Datapath::classify(const Descriptor& d) const {
  const std::uint32_t g = std::max<std::uint32_t>(cfg_.flow_groups, 1);
  if (d.dir == Dir::kRx) {
    FourTuple t;
    if (!peek_tuple(d.frame, t)) return 0;
    return flow_hash(t) % g;
  }
  if (!flows_.valid(d.flow)) return 0;
  return flows_.pre(d.flow).flow_group % g;
}

void Datapath::xdp(Descriptor& d) {
  if (d.dir != Dir::kRx || d.fate != Fate::kForward || !chain_ || chain_->empty()) return;
  const ChainResult r = chain_->run(d.frame, d.time);
  if (r.faulted) hit(Tp::kPluginFault);
  switch (r.verdict) {
    case Verdict::kPass:
      break;
    case Verdict::kDrop:
      d.fate = Fate::kDrop;
      d.reason = r.faulted ? DropReason::kPluginFault : DropReason::kPlugin;
      hit(Tp::kXdpDrop);
      break;
    case Verdict::kTx:
      d.fate = Fate::kXdpTx;
      hit(Tp::kXdpTx);
      break;
    case Verdict::kRedirect:
      d.fate = Fate::kRedirect;
      d.reason = DropReason::kNotDataPath;
      hit(Tp::kXdpRedirect);
      break;
  }
}

void Datapath::pre(Descriptor& d) {
  if (d.fate != Fate::kForward) return;
  if (d.dir != Dir::kRx) {
    if (!flows_.active(d.flow)) {
      d.fate = Fate::kDrop;
      d.reason = DropReason::kUnknownFlow;
    }
    return;
  }
  hit(Tp::kRxSegments);
  auto seg = parse_segment(d.frame);
  if (!seg) {
    d.fate = Fate::kDrop;
    d.reason = DropReason::kMalformed;
    hit(Tp::kRxDropMalformed);
    return;
  }
  if (!verify_ip_checksum(*seg) || !verify_checksum(*seg)) {
    d.fate = Fate::kDrop;
    d.reason = DropReason::kChecksum;
    hit(Tp::kRxDropChecksum);
    return;
  }
  const std::uint8_t fl = seg->tcp.flags;
  constexpr std::uint8_t kDataPathFlags =
      tcpflag::kAck | tcpflag::kFin | tcpflag::kPsh | tcpflag::kEce | tcpflag::kCwr;
  if ((fl & (tcpflag::kSyn | tcpflag::kRst)) || !(fl & kDataPathFlags)) {
    d.fate = Fate::kRedirect;
    d.reason = DropReason::kNotDataPath;
    hit(Tp::kRxRedirect);
    return;
  }
  const FourTuple t{seg->ip.dst, seg->ip.src, seg->tcp.dst_port, seg->tcp.src_port};
  auto f = flows_.lookup(t);
  if (!f) {
    d.fate = Fate::kRedirect;
    d.reason = DropReason::kUnknownFlow;
    hit(Tp::kRxUnknownFlow);
    return;
  }
  HeaderSummary& s = d.summary;
  s.flow = *f;
  s.seq = seg->tcp.seq;
  s.ack = seg->tcp.ack;
  s.window = seg->tcp.window;
  s.flags = fl;
  s.payload_len = static_cast<std::uint32_t>(seg->payload.size());
  s.payload_offset = static_cast<std::uint32_t>(seg->payload.data() - d.frame.data());
  s.has_ts = seg->tcp.ts.has_value();
  if (s.has_ts) {
    s.ts_val = seg->tcp.ts->ts_val;
    s.ts_ecr = seg->tcp.ts->ts_ecr;
  }
  s.ecn_ce = seg->ip.ecn() == Ecn::kCe;
  d.flow = *f;
}

void Datapath::protocol(Descriptor& d) {
  if (d.fate != Fate::kForward) return;
  ProtoState& st = flows_.proto(d.flow);
  ProtoFlags& fl = flows_.flags(d.flow);
  switch (d.dir) {
    case Dir::kRx:
      d.rx = protocol_rx(st, fl, d.summary, proto_cfg_);
      if (d.rx.ooo) hit(Tp::kRxOoo);
      if (d.rx.dropped) hit(d.rx.placement ? Tp::kRxTrimmed : d.rx.stale ? Tp::kRxOldDrop : Tp::kRxOooDrop);
      if (d.rx.fast_retransmit) {
        hit(Tp::kFastRetransmit);
        hit(Tp::kGoBackN);
      }
      break;
    case Dir::kTx:
      d.plans = protocol_tx(st, fl, d.quantum, proto_cfg_);
      break;
    case Dir::kHc:
      d.hc = protocol_hc(st, fl, d.cmd, proto_cfg_);
      hit(Tp::kHcCommands);
      if (d.hc.reset) hit(Tp::kGoBackN);
      break;
  }
  d.snap = snapshot(st, fl);
  flows_.publish(d.flow);
}

void Datapath::post(Descriptor& d) {
  if (d.fate != Fate::kForward) return;
  PostState& ps = flows_.post(d.flow);
  d.context = ps.context;
  const std::uint32_t now_us = micros(d.time);
  switch (d.dir) {
    case Dir::kRx: {
      const RxActions& rx = d.rx;
      if (rx.freed_tx > 0) {
        atomic_add(ps.cnt_ackb, rx.freed_tx);
        if (rx.ece) atomic_add(ps.cnt_ecnb, rx.freed_tx);
        if (rx.ts_valid && rx.ts_ecr != 0) {
          const std::uint64_t sample = static_cast<std::uint64_t>(now_us - rx.ts_ecr) * kNsPerUs;
          std::atomic_ref<std::uint32_t> rtt(ps.rtt_est);
          std::uint32_t cur = rtt.load(std::memory_order_relaxed);
          for (;;) {
            const std::uint64_t next = cur == 0 ? sample : (7ull * cur + sample) / 8;
            const auto n32 = static_cast<std::uint32_t>(std::min<std::uint64_t>(next, 0xffffffffu));
            if (rtt.compare_exchange_weak(cur, n32, std::memory_order_relaxed)) break;
          }
        }
      }
      if (rx.fast_retransmit) atomic_add<std::uint8_t>(ps.cnt_fretx, 1);
      if (rx.ack_due) {
        AckPlan a;
        a.seq = d.snap.seq;
        a.ack = d.snap.ack;
        a.window = d.snap.window;
        a.flags = static_cast<std::uint8_t>(tcpflag::kAck | (rx.ecn_ce ? tcpflag::kEce : 0));
        a.ts_val = now_us;
        a.ts_ecr = d.snap.next_ts;
        d.ack = a;
      }
      if (rx.placement) {
        CopyDirective c;
        c.base = ps.rx_base;
        c.size = ps.rx_size;
        c.offset = rx.placement->buf_pos & (ps.rx_size - 1);
        c.len = rx.placement->len;
        c.frame_offset = d.summary.payload_offset + rx.placement->payload_skip;
        d.copies.push_back(c);
      }
      if (rx.inorder_len > 0 || rx.rx_fin)
        d.notes.push_back(CtxQueueEntry::rx_notify(d.flow, ps.opaque, rx.inorder_pos, rx.inorder_len, rx.rx_fin));
      if (rx.freed_tx > 0 || rx.fin_acked) {
        CtxQueueEntry e = CtxQueueEntry::tx_freed(d.flow, ps.opaque, rx.freed_tx);
        if (rx.fin_acked) e.flags = kCtxFlagFin;
        d.notes.push_back(e);
      }
      if (d.summary.flags & tcpflag::kAck) d.hint = SchedHint{d.flow, d.snap.sendable};
      break;
    }
    case Dir::kTx: {
      const std::uint32_t hdr = static_cast<std::uint32_t>(kMinFrameLen + kTcpTimestampOptLen);
      for (const auto& p : d.plans) {
        CopyDirective c;
        c.base = ps.tx_base;
        c.size = ps.tx_size;
        c.offset = p.buf_pos & (ps.tx_size - 1);
        c.len = p.len;
        c.frame_offset = hdr;
        d.copies.push_back(c);
      }
      d.hint = SchedHint{d.flow, d.snap.sendable};
      break;
    }
    case Dir::kHc:
      if (d.hc.ack_due) {
        AckPlan a;
        a.seq = d.snap.seq;
        a.ack = d.snap.ack;
        a.window = d.snap.window;
        a.flags = tcpflag::kAck;
        a.ts_val = now_us;
        a.ts_ecr = d.snap.next_ts;
        d.ack = a;
      }
      if (d.hc.sched_hint) d.hint = SchedHint{d.flow, d.snap.sendable};
      break;
  }
}

std::vector<std::uint8_t> Datapath::build_frame(FlowIndex f, std::uint32_t seq, std::uint32_t ack,
                                                std::uint16_t window, std::uint8_t flags,
                                                std::uint32_t ts_val, std::uint32_t ts_ecr, bool ect,
                                                const CopyDirective* payload) const {
  const PreState& pre = flows_.pre(f);
  const FourTuple& t = flows_.tuple(f);
  SegmentView v;
  v.eth.dst = pre.peer_mac;
  v.eth.src = cfg_.local_mac;
  v.ip.src = t.local_ip;
  v.ip.dst = pre.peer_ip;
  if (ect) v.ip.set_ecn(Ecn::kEct0);
  v.tcp.src_port = pre.local_port;
  v.tcp.dst_port = pre.remote_port;
  v.tcp.seq = seq;
  v.tcp.ack = ack;
  v.tcp.flags = flags;
  v.tcp.window = window;
  v.tcp.ts = TcpTimestamp{ts_val, ts_ecr};
  std::vector<std::uint8_t> out = build_segment(v);
  if (payload && payload->len > 0) {
    const std::size_t hdr = out.size();
    out.resize(hdr + payload->len);
    const std::uint16_t total = static_cast<std::uint16_t>(out.size() - kEthHeaderLen);
    store_be16(out.data() + kEthHeaderLen + 2, total);
    copy_from_ring(payload->base, payload->size, payload->offset,
                   std::span<std::uint8_t>(out.data() + hdr, payload->len));
  }
  fill_checksum(out);
  return out;
}

void Datapath::dma(Descriptor& d) {
  if (d.fate == Fate::kXdpTx) {
    d.out.push_back(std::move(d.frame));
    d.frame.clear();
    return;
  }
  if (d.fate != Fate::kForward) return;
  const std::uint32_t now_us = micros(d.time);
  switch (d.dir) {
    case Dir::kRx:
      for (const auto& c : d.copies) {
        if (c.frame_offset + c.len > d.frame.size()) continue;
        copy_into_ring(c.base, c.size, c.offset, std::span<const std::uint8_t>(d.frame.data() + c.frame_offset, c.len));
      }
      break;
    case Dir::kTx:
      for (std::size_t i = 0; i < d.plans.size(); ++i) {
        const TxSegmentPlan& p = d.plans[i];
        std::uint8_t fl = tcpflag::kAck;
        if (p.len > 0) fl |= tcpflag::kPsh;
        if (p.fin) fl |= tcpflag::kFin;
        d.out.push_back(build_frame(d.flow, p.seq, d.snap.ack, d.snap.window, fl, now_us, d.snap.next_ts,
                                    p.len > 0, &d.copies[i]));
        hit(Tp::kTxSegments);
        hit(Tp::kTxPayloadBytes, p.len);
      }
      break;
    case Dir::kHc:
      break;
  }
  d.copy_done = sinks_.clock ? sinks_.clock() : d.time;
  if (d.ack) {
    d.out.push_back(build_frame(d.flow, d.ack->seq, d.ack->ack, d.ack->window, d.ack->flags, d.ack->ts_val,
                                d.ack->ts_ecr, false, nullptr));
    hit(Tp::kAckTx);
  }
}

void Datapath::retire(Descriptor& d) {
  if (d.fate == Fate::kRedirect && d.dir == Dir::kRx && sinks_.redirect) sinks_.redirect(std::move(d.frame), d.time);
  if (d.pooled) (d.dir == Dir::kTx ? tx_pool_ : hc_pool_).release();
}

void Datapath::egress(Descriptor& d) {
  for (auto& f : d.out) {
    if (egress_chain_ && !egress_chain_->empty() && egress_chain_->run(f, d.time).verdict == Verdict::kDrop) continue;
    hit(Tp::kWireFrames);
    if (sinks_.wire) sinks_.wire(std::move(f), d.time, d.group);
  }
  d.out.clear();
  if (d.hint && sinks_.hint) sinks_.hint(*d.hint);
  if (d.pooled) (d.dir == Dir::kTx ? tx_pool_ : hc_pool_).release();
}

bool Datapath::notify(std::uint16_t context, const CtxQueueEntry& e) {
  hit(Tp::kNotifications);
  if (sinks_.notify) return sinks_.notify(context, e);
  return ctx_.deliver(context, e);
}

void Datapath::run_to_completion(Descriptor& d) {
  d.group = classify(d);
  xdp(d);
  pre(d);
  if (d.fate == Fate::kDrop || d.fate == Fate::kRedirect) {
    retire(d);
    return;
  }
  protocol(d);
  post(d);
  dma(d);
  egress(d);
  for (const auto& e : d.notes) notify(d.context, e);
}

}  // namespace tcpipe
