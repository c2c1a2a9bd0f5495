#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "tcpipe/pipeline/descriptor.hpp"

namespace tcpipe {

// Per-domain epoch counter. One sequencer per reorder domain.
class Sequencer {
 public:
  explicit Sequencer(std::size_t domains = 1) : next_(domains, 0) {}
  void assign_epoch(Descriptor& d, std::size_t domain) { d.epoch = next_.at(domain)++; }
  std::uint64_t peek(std::size_t domain) const { return next_.at(domain); }
  std::size_t domains() const { return next_.size(); }

 private:
  std::vector<std::uint64_t> next_;
};

enum class ReorderStatus {
  kAccepted,          // released or buffered
  kCapacityExceeded,  // caller must stall and retry; descriptor untouched
  kStale,             // epoch already released or already buffered
};

// Restores epoch order within one domain. Holds at most `capacity`
// out-of-order descriptors and releases maximal contiguous runs.
class ReorderBuffer {
 public:
  explicit ReorderBuffer(std::size_t capacity, std::uint64_t next_expected = 0)
      : capacity_(capacity), next_(next_expected) {}

  // On kAccepted `d` has been moved from and `released` receives the
  // descriptors now in order (possibly none).
  ReorderStatus push(Descriptor& d, std::vector<Descriptor>& released);
  // Same, ordered by `key` instead of d.epoch.
  ReorderStatus push(Descriptor& d, std::uint64_t key, std::vector<Descriptor>& released);

  std::uint64_t next_expected() const { return next_.load(std::memory_order_acquire); }
  std::size_t held() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::atomic<std::uint64_t> next_;
  std::map<std::uint64_t, Descriptor> slots_;
};

}  // namespace tcpipe
