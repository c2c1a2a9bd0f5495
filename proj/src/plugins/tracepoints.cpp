#include "tcpipe/plugins/tracepoints.hpp"

#include <bit>

namespace tcpipe {

const char* tp_name(Tp tp) {
  switch (tp) {
    case Tp::kRxSegments: return "rx_segments";
    case Tp::kRxDropMalformed: return "rx_drop_malformed";
    case Tp::kRxDropChecksum: return "rx_drop_checksum";
    case Tp::kRxRedirect: return "rx_redirect";
    case Tp::kRxUnknownFlow: return "rx_unknown_flow";
    case Tp::kRxOoo: return "rx_ooo";
    case Tp::kRxOooDrop: return "rx_ooo_drop";
    case Tp::kRxOldDrop: return "rx_old_drop";
    case Tp::kRxTrimmed: return "rx_trimmed";
    case Tp::kTxSegments: return "tx_segments";
    case Tp::kTxPayloadBytes: return "tx_payload_bytes";
    case Tp::kAckTx: return "ack_tx";
    case Tp::kFastRetransmit: return "fast_retransmit";
    case Tp::kGoBackN: return "go_back_n";
    case Tp::kHcCommands: return "hc_commands";
    case Tp::kPoolExhausted: return "pool_exhausted";
    case Tp::kNotifications: return "notifications";
    case Tp::kXdpDrop: return "xdp_drop";
    case Tp::kXdpTx: return "xdp_tx";
    case Tp::kXdpRedirect: return "xdp_redirect";
    case Tp::kPluginFault: return "plugin_fault";
    case Tp::kWireFrames: return "wire_frames";
    case Tp::kQueueXdp: return "queue_xdp";
    case Tp::kQueuePre: return "queue_pre";
    case Tp::kQueueProtocol: return "queue_protocol";
    case Tp::kQueuePost: return "queue_post";
    case Tp::kQueueDma: return "queue_dma";
    case Tp::kQueueEgress: return "queue_egress";
    case Tp::kQueueCtxq: return "queue_ctxq";
    case Tp::kCount: break;
  }
  return "?";
}

std::uint64_t TraceSnapshot::counter(Tp tp) const {
  auto it = counters.find(tp_name(tp));
  return it == counters.end() ? 0 : it->second;
}

bool TraceSnapshot::has(Tp tp) const {
  return counters.count(tp_name(tp)) != 0 || histograms.count(tp_name(tp)) != 0;
}

Tracepoints::Tracepoints() : mask_((std::uint64_t{1} << kTpCount) - 1) {}

void Tracepoints::enable(Tp tp, bool on) {
  const std::uint64_t bit = std::uint64_t{1} << static_cast<unsigned>(tp);
  if (on)
    mask_.fetch_or(bit, std::memory_order_relaxed);
  else
    mask_.fetch_and(~bit, std::memory_order_relaxed);
}

void Tracepoints::enable_all(bool on) {
  mask_.store(on ? (std::uint64_t{1} << kTpCount) - 1 : 0, std::memory_order_relaxed);
}

void Tracepoints::sample(Tp tp, std::uint64_t value) {
  if (!enabled(tp)) return;
  Hist& h = hists_[static_cast<std::size_t>(tp)];
  h.samples.fetch_add(1, std::memory_order_relaxed);
  std::uint64_t prev = h.max.load(std::memory_order_relaxed);
  while (value > prev && !h.max.compare_exchange_weak(prev, value, std::memory_order_relaxed)) {
  }
  std::size_t bucket = value == 0 ? 0 : static_cast<std::size_t>(std::bit_width(value));
  if (bucket >= kHistBuckets) bucket = kHistBuckets - 1;
  h.buckets[bucket].fetch_add(1, std::memory_order_relaxed);
}

TraceSnapshot Tracepoints::snapshot() const {
  TraceSnapshot s;
  for (std::size_t i = 0; i < kTpCount; ++i) {
    const Tp tp = static_cast<Tp>(i);
    if (!enabled(tp)) continue;
    if (tp_is_histogram(tp)) {
      TraceHistogram out;
      out.samples = hists_[i].samples.load(std::memory_order_relaxed);
      out.max = hists_[i].max.load(std::memory_order_relaxed);
      for (std::size_t b = 0; b < kHistBuckets; ++b)
        out.buckets[b] = hists_[i].buckets[b].load(std::memory_order_relaxed);
      s.histograms[tp_name(tp)] = out;
    } else {
      s.counters[tp_name(tp)] = counters_[i].load(std::memory_order_relaxed);
    }
  }
  return s;
}

void Tracepoints::reset() {
  for (auto& c : counters_) c.store(0, std::memory_order_relaxed);
  for (auto& h : hists_) {
    h.samples.store(0);
    h.max.store(0);
    for (auto& b : h.buckets) b.store(0);
  }
}

}  // namespace tcpipe
