#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tcpipe/core/flow.hpp"
#include "tcpipe/core/state.hpp"
#include "tcpipe/datapath/actions.hpp"
#include "tcpipe/pipeline/topology.hpp"

namespace tcpipe {

// One established connection as it exists before the first trace event.
struct TraceFlow {
  FourTuple tuple;
  MacAddr peer_mac{};
  std::uint16_t context = 0;
  std::uint32_t iss = 0;  // local initial sequence number
  std::uint32_t irs = 0;  // peer initial sequence number
  std::uint16_t peer_win = 0xffff;
};

struct TraceEvent {
  enum class Kind : std::uint8_t { kRx, kHc, kGrant };
  Kind kind = Kind::kRx;
  TimeNs time = 0;
  std::vector<std::uint8_t> frame;  // kRx
  CtxQueueEntry cmd;                // kHc
  FlowIndex flow = kNoFlow;         // kGrant
  std::uint32_t quantum = 0;        // kGrant
};

struct Trace {
  MacAddr local_mac{};
  std::uint32_t mss = kDefaultMss;
  std::uint32_t flow_groups = 4;
  std::uint32_t rx_buf = 16 * 1024;
  std::uint32_t tx_buf = 16 * 1024;
  std::uint64_t tx_fill_seed = 0;  // transmit buffers hold seeded random bytes
  std::uint16_t contexts = 2;
  std::vector<TraceFlow> flows;
  std::vector<TraceEvent> events;

  std::size_t rx_segments() const;
};

struct TraceGenConfig {
  std::uint64_t seed = 1;
  std::uint32_t flows = 8;
  std::uint32_t segments = 10000;  // received segments in the trace
  std::uint32_t flow_groups = 4;
  double loss = 0.05;     // peer segments lost before reaching us, and ours before the peer
  double reorder = 0.05;  // peer segments delivered after their successor
  double duplicate = 0.01;
  double bad_checksum = 0.005;
  double ce_mark = 0.05;
  double control = 0.003;  // SYNs and segments for unknown connections
  bool fin = true;         // close some connections near the end
};

// Builds a randomized trace. Peers react to what the sequential model
// transmits, so acknowledgments and retransmissions stay meaningful.
Trace generate_trace(const TraceGenConfig& cfg);

// Everything a data-path instance emitted while processing a trace, grouped
// by the domains whose order the pipeline guarantees.
struct ReplayResult {
  struct FlowFinal {
    PreState pre;
    ProtoState proto;
    ProtoFlags flags;
    PostState post;  // buffer addresses cleared
    std::vector<std::uint8_t> rx_buffer;
  };
  std::vector<std::vector<std::vector<std::uint8_t>>> wire;       // per flow group
  std::vector<std::vector<std::vector<std::uint8_t>>> redirects;  // per flow group
  std::map<std::pair<std::uint16_t, FlowIndex>, std::vector<CtxQueueEntry>> notes;
  std::map<FlowIndex, std::vector<std::uint32_t>> hints;
  std::vector<FlowFinal> flows;

  std::uint64_t wire_bytes() const;
};

// Single-threaded reference: every event runs through all data-path stages
// to completion before the next one starts.
class OracleModel {
 public:
  explicit OracleModel(const Trace& trace);
  ~OracleModel();
  OracleModel(const OracleModel&) = delete;
  OracleModel& operator=(const OracleModel&) = delete;

  void apply(const TraceEvent& e);
  const ProtoState& proto(FlowIndex f) const;
  const ProtoFlags& flags(FlowIndex f) const;
  // Output so far, with the per-flow final state filled in.
  ReplayResult result() const;
  // Output so far without flow state (no copy).
  const ReplayResult& output() const;
  // Received bytes notified but not yet released by an RX bump.
  std::uint64_t rx_unread(FlowIndex f) const;
  void consume_rx(FlowIndex f, std::uint64_t n);

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

ReplayResult replay_oracle(const Trace& trace);

struct EngineReplayConfig {
  Topology topology = Topology::replicated(4, 2);
  std::uint64_t seed = 1;
  unsigned max_stall = 32;
  unsigned max_steps_between_submits = 4;
  bool disable_reorder = false;
};

ReplayResult replay_engine(const Trace& trace, const EngineReplayConfig& cfg);

struct DivergenceReport {
  std::vector<std::string> items;
  bool empty() const { return items.empty(); }
  std::string summary(std::size_t max_items = 5) const;
};

DivergenceReport compare(const ReplayResult& expected, const ReplayResult& actual);
DivergenceReport oracle_compare(const Trace& trace, const EngineReplayConfig& cfg = {});

}  // namespace tcpipe
