#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "tcpipe/ctrl/control_plane.hpp"
#include "tcpipe/datapath/ctxq.hpp"
#include "tcpipe/datapath/datapath.hpp"
#include "tcpipe/datapath/flow_table.hpp"
#include "tcpipe/harness/sim.hpp"
#include "tcpipe/pipeline/engine.hpp"
#include "tcpipe/plugins/tracepoints.hpp"
#include "tcpipe/plugins/xdp.hpp"
#include "tcpipe/scheduler/carousel.hpp"
#include "tcpipe/sockets/socket.hpp"

namespace tcpipe {

// kPipeline drives the staged engine; kInline runs every descriptor to
// completion at submission (the sequential baseline).
enum class ExecMode : std::uint8_t { kPipeline, kInline };

struct StackConfig {
  std::string name = "host";
  Ipv4Addr ip = 0;
  MacAddr mac{};
  Topology topology = Topology::scalar(1);
  ExecMode exec = ExecMode::kPipeline;
  bool adversarial = false;  // random stage interleaving with stalls
  unsigned max_stall = 32;
  std::uint64_t adversarial_seed = 1;
  bool disable_reorder = false;

  std::uint32_t mss = kDefaultMss;
  CtrlConfig ctrl;
  CarouselConfig carousel;
  double nic_rate_bps = 10e9;
  std::size_t nic_queue_frames = 64;  // round-robin grants stop above this NIC backlog
  std::size_t hc_pool = 1024;
  std::size_t tx_pool = 1024;
  std::size_t flow_capacity = 4096;
  PluginChain* ingress_chain = nullptr;
  PluginChain* egress_chain = nullptr;
};

struct StackCounters {
  std::uint64_t rx_frames = 0;
  std::uint64_t nic_frames = 0;
  std::uint64_t nic_bytes = 0;
  std::uint64_t services = 0;
  std::uint64_t grants = 0;
  std::uint64_t redirects = 0;
};

// One host: data path, engine, scheduler, control plane and application
// contexts. Driven either by a Simulator (virtual time) or by its own
// driver thread (wall clock).
class Stack {
 public:
  using Frame = std::vector<std::uint8_t>;
  using Tap = std::function<void(const Frame& frame, TimeNs t)>;

  Stack(Simulator& sim, StackConfig cfg);
  // Wall-clock mode; call start() once applications are set up.
  explicit Stack(StackConfig cfg);
  ~Stack();

  Stack(const Stack&) = delete;
  Stack& operator=(const Stack&) = delete;

  void set_output(std::function<void(Frame&&)> out) { out_ = std::move(out); }
  void receive(Frame&& frame);

  SocketLib& add_context();
  // Virtual time: runs `fn` whenever the context's wakeup fires.
  void on_wakeup(SocketLib& lib, std::function<void()> fn);
  void kick();

  void start();
  void stop();

  // Sees every descriptor entering the data path, before processing.
  void set_submit_observer(std::function<void(const Descriptor&)> fn) { observer_ = std::move(fn); }
  // Frames as they leave the NIC.
  void set_tx_tap(Tap tap) { tap_ = std::move(tap); }

  TimeNs now() const;
  FlowTable& flows() { return flows_; }
  ContextQueues& queues() { return queues_; }
  ControlPlane& ctrl() { return *ctrl_; }
  Carousel& carousel() { return carousel_; }
  Datapath& datapath() { return *dp_; }
  Engine& engine() { return *engine_; }
  Tracepoints& tracepoints() { return trace_; }
  const StackConfig& config() const { return cfg_; }
  StackCounters counters() const;
  std::size_t nic_queue_len() const;
  // No pending work anywhere in the host.
  bool quiescent() const;

 private:
  void init();
  bool submit(Descriptor& d);
  bool service_once(TimeNs now);
  void service();
  void schedule_at(TimeNs t);
  void nic_enqueue(Frame&& f);
  void nic_start();
  void nic_finish();
  void driver_main();

  StackConfig cfg_;
  Simulator* sim_ = nullptr;
  std::chrono::steady_clock::time_point wall_base_;

  FlowTable flows_;
  ContextQueues queues_;
  Tracepoints trace_;
  Carousel carousel_;
  std::unique_ptr<Datapath> dp_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<ControlPlane> ctrl_;
  CommandFetcher fetcher_;
  std::vector<std::unique_ptr<SocketLib>> libs_;
  std::mt19937_64 adv_rng_;

  std::function<void(Frame&&)> out_;
  std::function<void(const Descriptor&)> observer_;
  Tap tap_;

  mutable std::mutex in_mu_;
  std::deque<std::pair<Frame, TimeNs>> rx_inbox_;
  std::deque<std::pair<Frame, TimeNs>> redirects_;
  std::vector<SchedHint> hints_;

  std::deque<std::pair<Frame, TimeNs>> rx_local_;
  std::deque<Grant> pending_grants_;
  std::set<TimeNs> scheduled_;
  std::atomic<std::uint64_t> inline_done_{0};

  mutable std::mutex nic_mu_;
  std::deque<Frame> nic_q_;
  bool nic_busy_ = false;

  StackCounters counters_;
  std::atomic<bool> running_{false};
  std::thread driver_;
};

}  // namespace tcpipe
