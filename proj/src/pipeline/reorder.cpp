#include "tcpipe/pipeline/reorder.hpp"

namespace tcpipe {

ReorderStatus ReorderBuffer::push(Descriptor& d, std::vector<Descriptor>& released) {
  return push(d, d.epoch, released);
}

ReorderStatus ReorderBuffer::push(Descriptor& d, std::uint64_t key, std::vector<Descriptor>& released) {
  std::uint64_t next = next_.load(std::memory_order_relaxed);
  if (key < next || slots_.count(key) != 0) return ReorderStatus::kStale;
  if (key != next) {
    if (slots_.size() >= capacity_) return ReorderStatus::kCapacityExceeded;
    slots_.emplace(key, std::move(d));
    return ReorderStatus::kAccepted;
  }
  released.push_back(std::move(d));
  ++next;
  for (auto it = slots_.begin(); it != slots_.end() && it->first == next; it = slots_.erase(it)) {
    released.push_back(std::move(it->second));
    ++next;
  }
  next_.store(next, std::memory_order_release);
  return ReorderStatus::kAccepted;
}

}  // namespace tcpipe
