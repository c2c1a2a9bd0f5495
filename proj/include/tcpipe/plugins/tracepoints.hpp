#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

namespace tcpipe {

// Compiled-in tracepoint registry. Counters are plain event counts;
// histogram tracepoints bucket sampled values by powers of two.
enum class Tp : std::uint16_t {
  kRxSegments,
  kRxDropMalformed,
  kRxDropChecksum,
  kRxRedirect,
  kRxUnknownFlow,
  kRxOoo,
  kRxOooDrop,
  kRxOldDrop,
  kRxTrimmed,
  kTxSegments,
  kTxPayloadBytes,
  kAckTx,
  kFastRetransmit,
  kGoBackN,
  kHcCommands,
  kPoolExhausted,
  kNotifications,
  kXdpDrop,
  kXdpTx,
  kXdpRedirect,
  kPluginFault,
  kWireFrames,
  // histograms: inter-stage queue occupancy
  kQueueXdp,
  kQueuePre,
  kQueueProtocol,
  kQueuePost,
  kQueueDma,
  kQueueEgress,
  kQueueCtxq,
  kCount,
};

constexpr std::size_t kTpCount = static_cast<std::size_t>(Tp::kCount);
constexpr std::size_t kHistBuckets = 16;

const char* tp_name(Tp tp);
constexpr bool tp_is_histogram(Tp tp) { return tp >= Tp::kQueueXdp && tp < Tp::kCount; }

struct TraceHistogram {
  std::uint64_t samples = 0;
  std::uint64_t max = 0;
  std::array<std::uint64_t, kHistBuckets> buckets{};  // bucket i: values in [2^(i-1), 2^i)
};

struct TraceSnapshot {
  std::map<std::string, std::uint64_t> counters;
  std::map<std::string, TraceHistogram> histograms;

  std::uint64_t counter(Tp tp) const;
  bool has(Tp tp) const;
};

class Tracepoints {
 public:
  Tracepoints();

  void enable(Tp tp, bool on = true);
  void enable_all(bool on = true);
  bool enabled(Tp tp) const {
    return (mask_.load(std::memory_order_relaxed) >> static_cast<unsigned>(tp)) & 1;
  }

  void hit(Tp tp, std::uint64_t n = 1) {
    if (!enabled(tp)) return;
    counters_[static_cast<std::size_t>(tp)].fetch_add(n, std::memory_order_relaxed);
  }
  void sample(Tp tp, std::uint64_t value);

  TraceSnapshot snapshot() const;
  void reset();

 private:
  struct Hist {
    std::atomic<std::uint64_t> samples{0};
    std::atomic<std::uint64_t> max{0};
    std::array<std::atomic<std::uint64_t>, kHistBuckets> buckets{};
  };
  std::atomic<std::uint64_t> mask_;
  std::array<std::atomic<std::uint64_t>, kTpCount> counters_{};
  std::array<Hist, kTpCount> hists_{};
};

static_assert(kTpCount <= 64);

}  // namespace tcpipe
