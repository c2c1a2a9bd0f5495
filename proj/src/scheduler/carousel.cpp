#include "tcpipe/scheduler/carousel.hpp"

#include <algorithm>
#include <stdexcept>

namespace tcpipe {

Carousel::Carousel(CarouselConfig cfg) : cfg_(cfg), wheel_(cfg.slots) {
  if (cfg_.slots < 2 || cfg_.granularity <= 0) throw std::invalid_argument("carousel: bad wheel geometry");
}

void Carousel::set_rate(FlowIndex f, std::uint64_t bytes_per_sec) {
  Entry& e = entry(f);
  if (bytes_per_sec == 0) {
    e.interval = 0;
    return;
  }
  const Fp num = static_cast<Fp>(kNsPerSec) << 32;
  e.interval = static_cast<std::uint64_t>((num + bytes_per_sec / 2) / bytes_per_sec);
  if (e.interval == 0) e.interval = 1;
}

std::uint64_t Carousel::interval_fp(FlowIndex f) const {
  auto it = flows_.find(f);
  return it == flows_.end() ? 0 : it->second.interval;
}

double Carousel::interval_ns(FlowIndex f) const {
  return static_cast<double>(interval_fp(f)) / 4294967296.0;
}

std::uint32_t Carousel::pending(FlowIndex f) const {
  auto it = flows_.find(f);
  return it == flows_.end() ? 0 : it->second.pending;
}

bool Carousel::enqueued(FlowIndex f) const {
  auto it = flows_.find(f);
  return it != flows_.end() && it->second.where != Where::kIdle;
}

void Carousel::update(FlowIndex f, std::uint32_t sendable, TimeNs now) {
  Entry& e = entry(f);
  e.pending = sendable;
  if (sendable > 0 && e.where == Where::kIdle) enqueue_flow(f, now);
}

void Carousel::remove(FlowIndex f) {
  auto it = flows_.find(f);
  if (it == flows_.end()) return;
  if (it->second.where == Where::kWheel) --wheel_count_;
  // Stale slot and lane items are skipped by generation.
  Entry& e = it->second;
  const std::uint32_t gen = e.gen + 1;
  e = Entry{};
  e.gen = gen;
}

std::int64_t Carousel::place(FlowIndex f, Entry& e, Fp deadline) {
  const Fp gran = static_cast<Fp>(cfg_.granularity) << 32;
  auto slot = static_cast<std::int64_t>((deadline + gran - 1) / gran);
  const auto n = static_cast<std::int64_t>(cfg_.slots);
  slot = std::clamp(slot, cursor_ + 1, cursor_ + n);
  e.deadline = deadline;
  e.where = Where::kWheel;
  wheel_[static_cast<std::size_t>(slot % n)].push_back({f, e.gen});
  ++wheel_count_;
  return slot;
}

std::optional<std::int64_t> Carousel::enqueue_flow(FlowIndex f, TimeNs now) {
  Entry& e = entry(f);
  if (e.where != Where::kIdle) return std::nullopt;
  if (e.interval == 0) {
    e.where = Where::kRr;
    rr_.push_back({f, e.gen});
    return std::nullopt;
  }
  if (cursor_ < 0) cursor_ = now / cfg_.granularity - 1;
  const Fp base = std::max(to_fp(now), e.last_tx);
  return place(f, e, base + static_cast<Fp>(cfg_.burst) * e.interval);
}

std::optional<TimeNs> Carousel::next_wheel_time() const {
  if (wheel_count_ == 0) return std::nullopt;
  const auto n = static_cast<std::int64_t>(cfg_.slots);
  for (std::int64_t s = cursor_ + 1; s <= cursor_ + n; ++s) {
    for (const auto& it : wheel_[static_cast<std::size_t>(s % n)]) {
      auto e = flows_.find(it.flow);
      if (e != flows_.end() && e->second.gen == it.gen && e->second.where == Where::kWheel)
        return s * cfg_.granularity;
    }
  }
  return std::nullopt;
}

std::vector<Grant> Carousel::poll(TimeNs now, std::size_t rr_budget) {
  std::vector<Grant> grants;
  const auto n = static_cast<std::int64_t>(cfg_.slots);
  const std::int64_t cur = now / cfg_.granularity;
  if (cursor_ < 0) cursor_ = cur - 1;
  const Fp now_fp = to_fp(now);

  std::vector<FlowIndex> replace_early;
  std::vector<FlowIndex> requeue;
  const std::int64_t last = std::min(cur, cursor_ + n);
  for (std::int64_t s = cursor_ + 1; s <= last; ++s) {
    auto& bucket = wheel_[static_cast<std::size_t>(s % n)];
    if (bucket.empty()) continue;
    std::vector<SlotItem> items;
    items.swap(bucket);
    for (const auto& it : items) {
      auto fi = flows_.find(it.flow);
      if (fi == flows_.end() || fi->second.gen != it.gen || fi->second.where != Where::kWheel) continue;
      Entry& e = fi->second;
      --wheel_count_;
      e.where = Where::kIdle;
      if (e.pending == 0) continue;  // window closed or drained since enqueue
      if (e.deadline > now_fp) {
        replace_early.push_back(it.flow);  // clamped beyond the horizon
        continue;
      }
      grants.push_back({it.flow, cfg_.burst});
      e.pending -= std::min(e.pending, cfg_.burst);
      e.last_tx = e.deadline;
      if (e.pending > 0) requeue.push_back(it.flow);
    }
  }
  if (cur > cursor_) cursor_ = cur;

  for (FlowIndex f : replace_early) {
    Entry& e = entry(f);
    place(f, e, e.deadline);
  }
  for (FlowIndex f : requeue) {
    Entry& e = entry(f);
    if (e.interval == 0) {
      e.where = Where::kRr;
      rr_.push_back({f, e.gen});
    } else {
      place(f, e, e.last_tx + static_cast<Fp>(cfg_.burst) * e.interval);
    }
  }

  std::size_t round = rr_.size();
  while (round-- > 0 && rr_budget > 0 && !rr_.empty()) {
    SlotItem it = rr_.front();
    rr_.pop_front();
    auto fi = flows_.find(it.flow);
    if (fi == flows_.end() || fi->second.gen != it.gen || fi->second.where != Where::kRr) continue;
    Entry& e = fi->second;
    if (e.pending == 0) {
      e.where = Where::kIdle;
      continue;
    }
    grants.push_back({it.flow, cfg_.rr_quantum});
    --rr_budget;
    e.pending -= std::min(e.pending, cfg_.rr_quantum);
    e.last_tx = now_fp;
    if (e.pending == 0) {
      e.where = Where::kIdle;
    } else if (e.interval != 0) {
      e.where = Where::kIdle;
      enqueue_flow(it.flow, now);
    } else {
      rr_.push_back(it);
    }
  }
  return grants;
}

}  // namespace tcpipe
