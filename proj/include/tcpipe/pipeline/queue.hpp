#pragma once

#include <cstddef>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

namespace tcpipe {

// Bounded multi-producer/single-consumer FIFO. Producers never block; a full
// queue makes try_push fail and the producer stalls.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : slots_(capacity) {}

  BoundedQueue(const BoundedQueue&) = delete;
  BoundedQueue& operator=(const BoundedQueue&) = delete;

  // Leaves `item` untouched on failure.
  bool try_push(T& item) {
    std::lock_guard lock(mu_);
    if (count_ == slots_.size()) return false;
    slots_[(head_ + count_) % slots_.size()].emplace(std::move(item));
    ++count_;
    if (count_ > high_water_) high_water_ = count_;
    return true;
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mu_);
    if (count_ == 0) return std::nullopt;
    std::optional<T> out = std::move(slots_[head_]);
    slots_[head_].reset();
    head_ = (head_ + 1) % slots_.size();
    --count_;
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return count_;
  }
  bool empty() const { return size() == 0; }
  std::size_t capacity() const { return slots_.size(); }
  std::size_t high_water() const {
    std::lock_guard lock(mu_);
    return high_water_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::optional<T>> slots_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  std::size_t high_water_ = 0;
};

}  // namespace tcpipe
