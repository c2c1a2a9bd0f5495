#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "tcpipe/core/flow.hpp"
#include "tcpipe/core/state.hpp"

namespace tcpipe {

// Protocol-state fields republished by the protocol stage after every
// operation so the control plane can read them without racing the owner.
struct CtrlView {
  std::atomic<std::uint32_t> una{0};
  std::atomic<std::uint32_t> tx_sent{0};
  std::atomic<std::uint32_t> tx_avail{0};
  std::atomic<std::uint32_t> remote_win{0};
  std::atomic<std::uint32_t> ack{0};
  std::atomic<std::uint8_t> flags{0};  // kView* bits
};

constexpr std::uint8_t kViewFinPending = 0x1;
constexpr std::uint8_t kViewFinSent = 0x2;
constexpr std::uint8_t kViewFinAcked = 0x4;
constexpr std::uint8_t kViewRxFin = 0x8;

// Per-connection state arrays plus the active-connection lookup table.
// Slots are allocated first-free by the control plane.
class FlowTable {
 public:
  explicit FlowTable(std::size_t capacity = 4096);

  std::size_t capacity() const { return capacity_; }

  // Control plane.
  std::optional<FlowIndex> allocate();
  // Writes all partitions, then makes the tuple visible to lookups.
  void install(FlowIndex f, const FourTuple& tuple, const PreState& pre, const ProtoState& proto,
               const PostState& post);
  // Hides the flow from lookups; in-flight descriptors may still touch it.
  void deactivate(FlowIndex f);
  // Returns the slot to the free list.
  void release(FlowIndex f);

  // Data path.
  std::optional<FlowIndex> lookup(const FourTuple& t) const;
  bool valid(FlowIndex f) const { return f < capacity_; }
  bool active(FlowIndex f) const {
    return f < capacity_ && slots_[f].active.load(std::memory_order_acquire);
  }

  PreState& pre(FlowIndex f) { return slots_[f].pre; }
  ProtoState& proto(FlowIndex f) { return slots_[f].proto; }
  ProtoFlags& flags(FlowIndex f) { return slots_[f].flags; }
  PostState& post(FlowIndex f) { return slots_[f].post; }
  const FourTuple& tuple(FlowIndex f) const { return slots_[f].tuple; }
  const PreState& pre(FlowIndex f) const { return slots_[f].pre; }
  const ProtoState& proto(FlowIndex f) const { return slots_[f].proto; }
  const ProtoFlags& flags(FlowIndex f) const { return slots_[f].flags; }
  const PostState& post(FlowIndex f) const { return slots_[f].post; }

  void publish(FlowIndex f);
  const CtrlView& view(FlowIndex f) const { return slots_[f].view; }

  std::vector<FlowIndex> active_flows() const;
  std::size_t active_count() const;

 private:
  struct Slot {
    PreState pre;
    ProtoState proto;
    ProtoFlags flags;
    PostState post;
    FourTuple tuple;
    CtrlView view;
    std::atomic<bool> active{false};
    bool allocated = false;
  };

  std::size_t capacity_;
  std::unique_ptr<Slot[]> slots_;
  mutable std::shared_mutex mu_;
  std::unordered_map<FourTuple, FlowIndex, FourTupleHash> conns_;
};

}  // namespace tcpipe
