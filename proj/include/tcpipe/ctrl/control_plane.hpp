#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "tcpipe/core/flow.hpp"
#include "tcpipe/core/state.hpp"
#include "tcpipe/core/wire.hpp"
#include "tcpipe/ctrl/cc.hpp"
#include "tcpipe/datapath/ctxq.hpp"
#include "tcpipe/datapath/flow_table.hpp"

namespace tcpipe {

enum class TcpFsm : std::uint8_t {
  kListen,
  kSynSent,
  kSynRcvd,
  kEstablished,
  kFinWait,
  kCloseWait,
  kClosing,
  kTimeWait,
  kClosed,
};
const char* to_string(TcpFsm s);

struct CtrlConfig {
  Ipv4Addr local_ip = 0;
  MacAddr local_mac{};
  std::uint32_t mss = kDefaultMss;
  std::uint32_t flow_groups = 1;
  std::uint32_t rx_buf = 64 * 1024;
  std::uint32_t tx_buf = 64 * 1024;
  std::size_t max_conns = 4096;
  std::uint64_t seed = 1;

  CcPolicy policy = CcPolicy::kNone;
  DctcpParams dctcp;
  TimelyParams timely;
  RateLimits limits;
  TimeNs cc_min_interval = 10 * kNsPerUs;
  double default_rtt_ns = 100'000.0;  // before the first sample

  RtoParams rto;
  std::uint32_t max_rto_retries = 16;
  TimeNs syn_rto = kNsPerMs;
  std::uint32_t syn_retries = 8;
  TimeNs quarantine = kNsPerMs;  // slot reuse delay after removal
  TimeNs tick_period = 20 * kNsPerUs;  // timer deadlines are rounded up to this
};

// Counter snapshot and policy state kept per installed flow.
struct CcFlowView {
  std::uint32_t ackb = 0;
  std::uint32_t ecnb = 0;
  std::uint8_t fretx = 0;
  std::uint32_t rtt_est = 0;
  double alpha = 1.0;
  double rate = 0.0;
  TimeNs next_cc = 0;
  TimeNs last_cc = 0;
  bool cut = false;  // previous iteration decreased the rate

  std::uint32_t last_una = 0;
  TimeNs last_progress = 0;
  std::uint32_t backoff = 1;
  std::uint32_t retries = 0;
  std::uint64_t timeouts = 0;
  TimelyState timely;
};

struct CtrlHooks {
  // Control segments go straight to the NIC.
  std::function<void(std::vector<std::uint8_t>&& frame, TimeNs now)> transmit;
  std::function<void(FlowIndex f, std::uint64_t bytes_per_sec)> set_rate;
  std::function<void(FlowIndex f)> unschedule;
  // Engine progress: descriptors submitted / finished so far.
  std::function<std::uint64_t()> submitted;
  std::function<std::uint64_t()> finished;
  // Returns a redirected data segment to the data path once its flow exists.
  std::function<void(std::vector<std::uint8_t>&& frame, TimeNs now)> reinject;
  // Overrides delivery into the application's context queue.
  std::function<void(std::uint16_t context, const CtxQueueEntry& e)> notify;
};

struct CtrlStats {
  std::uint64_t segments = 0;
  std::uint64_t syn_acks_sent = 0;
  std::uint64_t rsts_sent = 0;
  std::uint64_t installs = 0;
  std::uint64_t removals = 0;
  std::uint64_t releases = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t cc_iterations = 0;
  std::uint64_t syn_drops = 0;
  std::uint64_t reinjected = 0;
};

enum class CtrlError { kOk, kPortInUse, kNoPort, kResourceExhausted, kNoRoute };

class ControlPlane {
 public:
  ControlPlane(CtrlConfig cfg, FlowTable& flows, ContextQueues& ctx, CtrlHooks hooks);

  void add_neighbor(Ipv4Addr ip, const MacAddr& mac);

  CtrlError listen(std::uint16_t port, std::uint16_t context);
  void unlisten(std::uint16_t port);
  // Starts an active open; completion arrives as a ConnEvent on `context`
  // carrying `token`.
  CtrlError connect(Ipv4Addr remote_ip, std::uint16_t remote_port, std::uint16_t context,
                    std::uint64_t token, TimeNs now);
  // Application shutdown after its Fin command was queued.
  void shutdown(FlowIndex f, TimeNs now);
  // Drops the connection with a RST.
  void abort(FlowIndex f, TimeNs now);

  // Redirected segment from the data path or a plugin.
  void handle_segment(const std::vector<std::uint8_t>& frame, TimeNs now);
  // Timers, congestion control, RTO monitoring and teardown.
  void tick(TimeNs now);
  // Earliest time tick() has work, rounded up to the tick period.
  TimeNs next_deadline() const;

  std::optional<TcpFsm> state(FlowIndex f) const;
  std::optional<CcFlowView> cc_view(FlowIndex f) const;
  std::size_t connections() const;
  std::size_t quarantined() const;
  CtrlStats stats() const;
  std::uint16_t context() const { return own_ctx_; }
  const CtrlConfig& config() const { return cfg_; }

  // Per-flow hook invoked after every RTO-triggered Retransmit.
  void set_rto_observer(std::function<void(FlowIndex, TimeNs)> fn);

 private:
  struct Buffers {
    std::unique_ptr<std::uint8_t[]> rx;
    std::unique_ptr<std::uint8_t[]> tx;
  };
  struct Conn {
    TcpFsm st = TcpFsm::kClosed;
    FourTuple tuple;
    MacAddr peer_mac{};
    std::uint32_t iss = 0;
    std::uint32_t irs = 0;
    std::uint16_t peer_win = 0;
    std::uint32_t peer_ts = 0;
    std::uint16_t context = 0;
    std::uint64_t token = 0;
    bool active_open = false;
    FlowIndex flow = kNoFlow;
    TimeNs timer = 0;  // handshake retransmit or TIME_WAIT expiry
    std::uint32_t retries = 0;
    CcFlowView cc;
    std::shared_ptr<Buffers> bufs;
  };
  struct Quarantine {
    FlowIndex flow;
    TimeNs not_before;
    std::optional<std::uint64_t> marker;
    std::shared_ptr<Buffers> bufs;
  };

  void on_segment(const SegmentView& seg, const std::vector<std::uint8_t>& raw, TimeNs now);
  void send_control(const FourTuple& t, const MacAddr& mac, std::uint32_t seq, std::uint32_t ack,
                    std::uint8_t flags, std::uint32_t ts_ecr, TimeNs now);
  void send_rst_for(const SegmentView& seg, TimeNs now);
  bool install(Conn& c, TimeNs now);
  void remove(FlowIndex f, ConnEvent ev, TimeNs now);
  void deliver(std::uint16_t context, const CtxQueueEntry& e);
  void cc_step(Conn& c, TimeNs now);
  void rto_step(Conn& c, TimeNs now);
  void teardown_step(Conn& c, TimeNs now);
  TimeNs rto_of(const Conn& c) const;
  TimeNs compute_deadline() const;
  void wake_at(TimeNs t);
  std::uint32_t pick_iss();
  std::optional<std::uint16_t> ephemeral_port(Ipv4Addr ip, std::uint16_t port);

  CtrlConfig cfg_;
  FlowTable& flows_;
  ContextQueues& ctx_;
  CtrlHooks hooks_;
  std::uint16_t own_ctx_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::unordered_map<Ipv4Addr, MacAddr> neighbors_;
  std::map<std::uint16_t, std::uint16_t> listeners_;  // port -> context
  std::unordered_map<FourTuple, Conn, FourTupleHash> pending_;
  std::map<FlowIndex, Conn> conns_;
  std::vector<Quarantine> quarantine_;
  std::uint16_t next_port_ = 49152;
  TimeNs next_ = std::numeric_limits<TimeNs>::max();
  CtrlStats stats_;
  std::function<void(FlowIndex, TimeNs)> rto_observer_;
};

}  // namespace tcpipe
