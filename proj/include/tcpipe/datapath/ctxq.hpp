#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "tcpipe/datapath/actions.hpp"
#include "tcpipe/pipeline/descriptor.hpp"

namespace tcpipe {

// Fixed-capacity ring of context-queue entries with head/tail indices.
class CtxRing {
 public:
  explicit CtxRing(std::size_t capacity) : slots_(capacity) {}

  bool push(const CtxQueueEntry& e);
  std::optional<CtxQueueEntry> pop();
  std::size_t size() const;
  std::size_t capacity() const { return slots_.size(); }

 private:
  mutable std::mutex mu_;
  std::vector<CtxQueueEntry> slots_;
  std::uint64_t head_ = 0;
  std::uint64_t tail_ = 0;
};

// Sleep/wakeup primitive for one application context. A signal is delivered
// only while the app is armed (about to sleep or sleeping), and at most once
// per arming.
class Wakeup {
 public:
  void arm();
  void disarm();
  bool armed() const;
  // Returns true when a signal was consumed, false on timeout.
  bool wait_for(std::chrono::nanoseconds timeout);
  bool signal();
  std::uint64_t signals() const { return signals_.load(); }
  // Called from signal() in place of a sleeping thread (virtual-time driving).
  void set_hook(std::function<void()> hook);

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool armed_ = false;
  bool pending_ = false;
  std::function<void()> hook_;
  std::atomic<std::uint64_t> signals_{0};
};

struct Context {
  explicit Context(std::size_t ring_capacity) : cmd(ring_capacity), notify(ring_capacity) {}
  CtxRing cmd;     // app -> data path
  CtxRing notify;  // data path -> app
  std::atomic<std::uint64_t> doorbell{0};
  Wakeup wakeup;
};

class ContextQueues {
 public:
  explicit ContextQueues(std::size_t ring_capacity = 16384) : ring_capacity_(ring_capacity) {}

  std::uint16_t create();
  Context& get(std::uint16_t id) { return *contexts_.at(id); }
  std::size_t size() const { return contexts_.size(); }

  // Notification path: append and wake the app. False when the ring is full.
  bool deliver(std::uint16_t context, const CtxQueueEntry& e);
  void ring_doorbell(std::uint16_t context);

 private:
  std::size_t ring_capacity_;
  std::vector<std::unique_ptr<Context>> contexts_;
};

// Counting pool bounding the descriptors a direction may have in flight.
class DescriptorPool {
 public:
  explicit DescriptorPool(std::size_t capacity) : capacity_(capacity) {}
  bool try_acquire();
  void release();
  std::size_t in_use() const { return in_use_.load(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t failures() const { return failures_.load(); }

 private:
  std::size_t capacity_;
  std::atomic<std::size_t> in_use_{0};
  std::atomic<std::uint64_t> failures_{0};
};

// Command half of the context-queue stage: services doorbells, fetches
// batched commands and emits one HC descriptor per command.
class CommandFetcher {
 public:
  using Submit = std::function<bool(Descriptor&)>;

  // Returns the number of descriptors submitted. Pool exhaustion or a full
  // pipeline defers the remainder to a later call.
  std::size_t poll(ContextQueues& queues, DescriptorPool& pool, const Submit& submit, TimeNs now);
  bool pending() const { return held_.has_value(); }
  std::uint64_t deferrals() const { return deferrals_; }

 private:
  std::optional<Descriptor> held_;
  std::uint64_t deferrals_ = 0;
};

}  // namespace tcpipe
