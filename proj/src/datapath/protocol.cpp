#include "tcpipe/datapath/protocol.hpp"

#include <algorithm>

#include "tcpipe/core/seq.hpp"
#include "tcpipe/core/wire.hpp"

namespace tcpipe {

namespace {

std::uint32_t fin_outstanding(const ProtoFlags& fl) { return fl.fin_sent && !fl.fin_acked ? 1 : 0; }

std::uint32_t window_left(const ProtoState& st) {
  return st.remote_win > st.tx_sent ? st.remote_win - st.tx_sent : 0;
}

// Cumulative ACK handling; returns the number of newly acked payload bytes.
std::uint32_t process_ack(ProtoState& st, ProtoFlags& fl, std::uint32_t ack, RxActions& out) {
  const std::uint32_t fin_out = fin_outstanding(fl);
  const std::uint32_t una = st.seq - st.tx_sent - fin_out;
  const std::int32_t d = seq_diff(ack, una);
  if (d <= 0) return 0;
  const auto delta = static_cast<std::uint32_t>(d);

  if (delta <= st.tx_sent + fin_out) {
    const std::uint32_t bytes = std::min(delta, st.tx_sent);
    st.tx_sent -= bytes;
    st.tx_pos += bytes;
    if (fin_out && delta == bytes + 1) {
      fl.fin_acked = true;
      out.fin_acked = true;
    }
    return bytes;
  }

  // Beyond seq: the peer acknowledges data sent before a go-back-N rewind.
  const std::uint32_t fin_unsent = fl.fin_pending && !fl.fin_sent && !fl.fin_acked ? 1 : 0;
  const std::uint32_t data_limit = st.tx_sent + st.tx_avail;
  if (delta > data_limit + fin_unsent) return 0;  // acks data never sent; ignore
  const std::uint32_t bytes = std::min(delta, data_limit);
  st.tx_avail -= bytes - st.tx_sent;
  st.tx_sent = 0;
  st.tx_pos += bytes;
  st.seq = una + bytes;
  if (fin_unsent && delta == data_limit + 1) {
    st.seq += 1;
    fl.fin_sent = true;
    fl.fin_acked = true;
    out.fin_acked = true;
  }
  return bytes;
}

}  // namespace

std::uint32_t send_una(const ProtoState& st, const ProtoFlags& fl) {
  return st.seq - st.tx_sent - fin_outstanding(fl);
}

std::uint32_t sendable(const ProtoState& st, const ProtoFlags& fl) {
  const std::uint32_t n = std::min(st.tx_avail, window_left(st));
  if (n > 0) return n;
  if (fl.probe && st.tx_avail > 0) return 1;
  if (st.tx_avail == 0 && fl.fin_pending && !fl.fin_sent) return 1;
  return 0;
}

ProtoSnapshot snapshot(const ProtoState& st, const ProtoFlags& fl) {
  ProtoSnapshot s;
  s.seq = st.seq;
  s.ack = st.ack;
  s.window = advertised_window(st);
  s.next_ts = st.next_ts;
  s.sendable = sendable(st, fl);
  s.fin_pending_tx = fl.fin_pending && !fl.fin_sent;
  return s;
}

void reset_tx(ProtoState& st, ProtoFlags& fl) {
  const std::uint32_t fin_out = fin_outstanding(fl);
  st.seq -= st.tx_sent + fin_out;
  st.tx_avail += st.tx_sent;
  st.tx_sent = 0;
  st.dupack_cnt = 0;
  if (fin_out) fl.fin_sent = false;
}

RxActions protocol_rx(ProtoState& st, ProtoFlags& fl, const HeaderSummary& s, const ProtoConfig& cfg) {
  RxActions out;
  out.ece = (s.flags & tcpflag::kEce) != 0;
  out.ecn_ce = s.ecn_ce;
  out.ts_valid = s.has_ts;
  out.ts_ecr = s.ts_ecr;
  if (s.has_ts) st.next_ts = s.ts_val;

  const bool fin = (s.flags & tcpflag::kFin) != 0;

  if (s.flags & tcpflag::kAck) {
    const bool had_outstanding = st.tx_sent + fin_outstanding(fl) > 0;
    const std::uint32_t una_before = send_una(st, fl);
    const std::uint32_t acked = process_ack(st, fl, s.ack, out);
    const bool progressed = acked > 0 || out.fin_acked;
    const bool window_changed = s.window != st.remote_win;
    st.remote_win = s.window;
    out.freed_tx = acked;
    if (progressed || window_changed) {
      st.dupack_cnt = 0;
    } else if (s.payload_len == 0 && !fin && had_outstanding && s.ack == una_before) {
      if (++st.dupack_cnt >= cfg.dupack_threshold) {
        reset_tx(st, fl);
        out.fast_retransmit = true;
      }
    }
    if (fl.probe && window_left(st) > 0) fl.probe = false;
  }

  if (s.payload_len == 0 && !fin) return out;
  out.ack_due = true;
  if (fl.rx_fin) {
    out.dropped = s.payload_len > 0;
    out.stale = true;
    return out;
  }

  std::uint32_t seq = s.seq;
  std::uint32_t len = s.payload_len;
  std::uint32_t skip = 0;

  // Trim bytes below the cumulative ack.
  const std::int32_t old = seq_diff(st.ack, seq);
  if (old > 0) {
    const auto o = static_cast<std::uint32_t>(old);
    if (o >= len) {
      out.dropped = len > 0;
      out.stale = true;
      return out;
    }
    skip = o;
    seq += o;
    len -= o;
  }

  if (seq == st.ack) {
    const std::uint32_t take = std::min(len, st.rx_avail);
    if (take > 0) {
      out.placement = RxPlacement{st.rx_pos, take, skip};
      out.inorder_pos = st.rx_pos;
      out.inorder_len = take;
      st.rx_pos += take;
      st.ack += take;
      st.rx_avail -= take;
    }
    if (take < len) out.dropped = true;
    if (st.ooo_len > 0 && seq_geq(st.ack, st.ooo_start)) {
      const std::uint32_t end = st.ooo_start + st.ooo_len;
      if (seq_gt(end, st.ack)) {
        const std::uint32_t extra = end - st.ack;
        st.ack += extra;
        st.rx_pos += extra;
        st.rx_avail -= extra;
        out.inorder_len += extra;
      }
      st.ooo_start = 0;
      st.ooo_len = 0;
    }
    if (fin && take == len && seq + len == st.ack && st.ooo_len == 0) {
      st.ack += 1;
      fl.rx_fin = true;
      out.rx_fin = true;
    }
    return out;
  }

  // Out of order.
  if (len == 0) return out;
  const std::uint32_t off = seq - st.ack;
  if (off >= st.rx_avail) {
    out.dropped = true;
    return out;
  }
  if (len > st.rx_avail - off) {
    len = st.rx_avail - off;
    out.dropped = true;
  }
  if (st.ooo_len == 0) {
    st.ooo_start = seq;
    st.ooo_len = len;
  } else {
    const std::uint32_t end = st.ooo_start + st.ooo_len;
    if (seq_gt(seq, end) || seq_lt(seq + len, st.ooo_start)) {
      out.dropped = true;
      return out;
    }
    const std::uint32_t new_start = seq_lt(seq, st.ooo_start) ? seq : st.ooo_start;
    const std::uint32_t new_end = seq_gt(seq + len, end) ? seq + len : end;
    st.ooo_start = new_start;
    st.ooo_len = new_end - new_start;
  }
  out.ooo = true;
  out.placement = RxPlacement{st.rx_pos + off, len, skip};
  return out;
}

std::vector<TxSegmentPlan> protocol_tx(ProtoState& st, ProtoFlags& fl, std::uint32_t quantum,
                                       const ProtoConfig& cfg) {
  std::vector<TxSegmentPlan> plans;
  std::uint32_t budget = quantum;
  while (budget > 0) {
    std::uint32_t len = std::min({cfg.mss, st.tx_avail, window_left(st), budget});
    if (len == 0 && fl.probe && st.tx_avail > 0 && window_left(st) == 0) len = 1;
    if (len == 0) break;
    fl.probe = false;
    TxSegmentPlan p{st.seq, st.tx_pos + st.tx_sent, len, false};
    st.seq += len;
    st.tx_avail -= len;
    st.tx_sent += len;
    budget -= len;
    if (st.tx_avail == 0 && fl.fin_pending && !fl.fin_sent) {
      p.fin = true;
      st.seq += 1;
      fl.fin_sent = true;
    }
    plans.push_back(p);
  }
  if (quantum > 0 && st.tx_avail == 0 && fl.fin_pending && !fl.fin_sent) {
    plans.push_back(TxSegmentPlan{st.seq, st.tx_pos + st.tx_sent, 0, true});
    st.seq += 1;
    fl.fin_sent = true;
  }
  return plans;
}

HcResult protocol_hc(ProtoState& st, ProtoFlags& fl, const CtxQueueEntry& cmd, const ProtoConfig& cfg) {
  HcResult r;
  switch (cmd.kind) {
    case CtxKind::kTxBump:
      st.tx_avail += static_cast<std::uint32_t>(cmd.op[0]);
      r.sched_hint = true;
      break;
    case CtxKind::kRxBump: {
      const std::uint32_t before = st.rx_avail;
      st.rx_avail += static_cast<std::uint32_t>(cmd.op[0]);
      // Window update once the advertised window had shrunk below two segments.
      r.ack_due = before < 2 * cfg.mss && cmd.op[0] > 0 && !fl.rx_fin;
      break;
    }
    case CtxKind::kFin:
      fl.fin_pending = true;
      r.sched_hint = true;
      break;
    case CtxKind::kRetransmit:
      if (st.tx_sent > 0 || fin_outstanding(fl)) {
        reset_tx(st, fl);
        r.reset = true;
      } else if (st.tx_avail > 0 && window_left(st) == 0) {
        fl.probe = true;
      }
      r.sched_hint = true;
      break;
    default:
      break;
  }
  return r;
}

}  // namespace tcpipe
