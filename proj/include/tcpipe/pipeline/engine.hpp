#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "tcpipe/pipeline/descriptor.hpp"
#include "tcpipe/pipeline/queue.hpp"
#include "tcpipe/pipeline/reorder.hpp"
#include "tcpipe/pipeline/topology.hpp"
#include "tcpipe/plugins/tracepoints.hpp"

namespace tcpipe {

// Stage bodies the engine drives. Each function transforms one descriptor in
// place; the engine owns queueing, steering, sequencing and reordering.
struct StageFns {
  std::function<std::uint32_t(const Descriptor&)> classify;  // flow group; runs in the sequencer
  std::function<void(Descriptor&)> xdp;
  std::function<void(Descriptor&)> pre;
  std::function<void(Descriptor&)> protocol;
  std::function<void(Descriptor&)> post;
  std::function<void(Descriptor&)> dma;
  std::function<void(Descriptor&)> retire;  // Drop/Redirect fate, in epoch order
  std::function<void(Descriptor&)> egress;  // in egress-epoch order, before notes are routed
  std::function<bool(std::uint16_t context, const CtxQueueEntry&)> notify;  // false: retry later
};

struct EngineOptions {
  // Bypass both reorderers. Only for checking that the oracle comparison
  // detects the resulting divergence; skips reorderer topology validation.
  bool disable_reorder = false;
  Tracepoints* trace = nullptr;
};

struct EngineCounters {
  std::uint64_t submitted = 0;
  std::uint64_t retired = 0;
  std::uint64_t completed = 0;
  std::uint64_t notes_routed = 0;
  std::uint64_t notes_delivered = 0;
  std::uint64_t protocol_order_violations = 0;
};

class Engine {
 public:
  Engine(Topology topology, StageFns fns, EngineOptions options = {});
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Returns false when the ingress queue is full; `d` is left untouched.
  bool submit(Descriptor& d);

  // Virtual-time driving (single thread).
  bool step_once();
  void run_until_idle();
  // One step of a randomly chosen ready stage instance; after stepping, the
  // instance sleeps for a uniform 0..max_stall steps.
  bool step_adversarial(std::mt19937_64& rng, unsigned max_stall);
  void run_adversarial(std::mt19937_64& rng, unsigned max_stall);

  // Wall-clock mode: one thread per stage instance.
  void start();
  void stop();  // waits for quiescence, then joins
  void wait_idle() const;
  bool running() const { return running_.load(); }

  bool idle() const;
  EngineCounters counters() const;
  const Topology& topology() const { return topo_; }
  std::size_t instance_count() const { return insts_.size(); }

 private:
  enum class Role : std::uint8_t { kSequencer, kIngress, kProtocol, kEgressStage, kEgress, kCtxq };

  struct Note {
    std::uint16_t context = 0;
    CtxQueueEntry entry;
  };

  struct Inst {
    Role role;
    StageKind kind = StageKind::kPre;
    std::size_t chain_pos = 0;  // index into ingress_/egress_ chain
    std::uint32_t group = 0;
    std::unique_ptr<BoundedQueue<Descriptor>> in;
    std::unique_ptr<BoundedQueue<Note>> notes;  // ctxq instances only
    std::optional<Descriptor> held;             // processed, blocked on output
    std::deque<Descriptor> ready;               // protocol/egress: released, in order
    std::deque<Note> note_out;                  // egress: awaiting a ctxq slot
    std::unique_ptr<ReorderBuffer> rb;
    std::uint64_t out_epoch = 0;                // protocol: next egress epoch
    std::uint64_t last_epoch = kNoEpoch;        // protocol: entry order check
    std::uint32_t rr = 0;
    std::uint64_t ready_at = 0;
    Tp queue_tp = Tp::kQueuePre;
  };

  struct Chain {
    StageKind kind;
    std::vector<std::size_t> insts;
  };

  bool step(std::size_t i);
  std::string stall_report() const;
  bool has_work(std::size_t i) const;
  bool step_sequencer(Inst& in);
  bool step_stage(Inst& in, bool ingress);
  bool step_protocol(Inst& in);
  bool step_egress(Inst& in);
  bool step_ctxq(Inst& in);
  bool forward_ingress(Inst& from, Descriptor& d);
  bool forward_egress(Inst& from, Descriptor& d);
  bool push_to(std::size_t inst, Descriptor& d);
  void run_fn(StageKind k, Descriptor& d);
  void thread_main(std::size_t i);

  Topology topo_;
  StageFns fns_;
  EngineOptions opts_;
  std::vector<Inst> insts_;
  std::size_t sequencer_ = 0;
  std::vector<Chain> ingress_;
  std::vector<Chain> egress_;
  std::vector<std::size_t> protocol_;  // by group
  std::vector<std::size_t> egress_rb_; // by group
  std::vector<std::size_t> ctxq_;
  Sequencer seq_;
  std::size_t cursor_ = 0;
  std::uint64_t clock_ = 0;

  std::atomic<std::uint64_t> submitted_{0};
  std::atomic<std::uint64_t> retired_{0};
  std::atomic<std::uint64_t> completed_{0};
  std::atomic<std::uint64_t> notes_routed_{0};
  std::atomic<std::uint64_t> notes_delivered_{0};
  std::atomic<std::uint64_t> order_violations_{0};

  std::atomic<bool> running_{false};
  std::vector<std::thread> threads_;
};

}  // namespace tcpipe
