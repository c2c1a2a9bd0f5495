#include "tcpipe/datapath/ctxq.hpp"

#include <stdexcept>

namespace tcpipe {

bool CtxRing::push(const CtxQueueEntry& e) {
  std::lock_guard lock(mu_);
  if (tail_ - head_ == slots_.size()) return false;
  slots_[tail_ % slots_.size()] = e;
  ++tail_;
  return true;
}

std::optional<CtxQueueEntry> CtxRing::pop() {
  std::lock_guard lock(mu_);
  if (head_ == tail_) return std::nullopt;
  CtxQueueEntry e = slots_[head_ % slots_.size()];
  ++head_;
  return e;
}

std::size_t CtxRing::size() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(tail_ - head_);
}

void Wakeup::arm() {
  std::lock_guard lock(mu_);
  armed_ = true;
}

void Wakeup::disarm() {
  std::lock_guard lock(mu_);
  armed_ = false;
  pending_ = false;
}

bool Wakeup::armed() const {
  std::lock_guard lock(mu_);
  return armed_;
}

bool Wakeup::wait_for(std::chrono::nanoseconds timeout) {
  std::unique_lock lock(mu_);
  if (!armed_ && !pending_) armed_ = true;
  const bool got = cv_.wait_for(lock, timeout, [&] { return pending_; });
  pending_ = false;
  armed_ = false;
  return got;
}

bool Wakeup::signal() {
  std::function<void()> hook;
  {
    std::lock_guard lock(mu_);
    if (!armed_) return false;
    armed_ = false;
    pending_ = true;
    hook = hook_;
  }
  signals_.fetch_add(1);
  cv_.notify_all();
  if (hook) hook();
  return true;
}

void Wakeup::set_hook(std::function<void()> hook) {
  std::lock_guard lock(mu_);
  hook_ = std::move(hook);
}

std::uint16_t ContextQueues::create() {
  if (contexts_.size() >= 0xffff) throw std::length_error("too many contexts");
  contexts_.push_back(std::make_unique<Context>(ring_capacity_));
  return static_cast<std::uint16_t>(contexts_.size() - 1);
}

bool ContextQueues::deliver(std::uint16_t context, const CtxQueueEntry& e) {
  Context& c = get(context);
  if (!c.notify.push(e)) return false;
  c.wakeup.signal();
  return true;
}

void ContextQueues::ring_doorbell(std::uint16_t context) {
  get(context).doorbell.fetch_add(1, std::memory_order_release);
}

bool DescriptorPool::try_acquire() {
  std::size_t cur = in_use_.load();
  while (cur < capacity_) {
    if (in_use_.compare_exchange_weak(cur, cur + 1)) return true;
  }
  failures_.fetch_add(1);
  return false;
}

void DescriptorPool::release() { in_use_.fetch_sub(1); }

std::size_t CommandFetcher::poll(ContextQueues& queues, DescriptorPool& pool, const Submit& submit,
                                 TimeNs now) {
  std::size_t n = 0;
  if (held_) {
    if (!submit(*held_)) return 0;
    held_.reset();
    ++n;
  }
  for (std::uint16_t id = 0; id < queues.size(); ++id) {
    Context& c = queues.get(id);
    if (c.doorbell.load(std::memory_order_acquire) == 0) continue;
    c.doorbell.store(0, std::memory_order_relaxed);
    for (;;) {
      if (c.cmd.size() == 0) break;
      if (!pool.try_acquire()) {
        ++deferrals_;
        c.doorbell.fetch_add(1);
        return n;
      }
      auto e = c.cmd.pop();
      if (!e) {
        pool.release();
        break;
      }
      Descriptor d = Descriptor::hc_command(*e, now);
      d.pooled = true;
      d.context = id;
      if (!submit(d)) {
        held_ = std::move(d);
        c.doorbell.fetch_add(1);
        return n;
      }
      ++n;
    }
  }
  return n;
}

}  // namespace tcpipe
