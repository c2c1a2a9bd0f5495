#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

struct CarouselConfig {
  TimeNs granularity = kNsPerUs;
  std::size_t slots = 2048;
  std::uint32_t burst = kDefaultMss;           // per grant, rate-limited flows
  std::uint32_t rr_quantum = 4 * kDefaultMss;  // per grant, uncongested flows
};

struct Grant {
  FlowIndex flow = kNoFlow;
  std::uint32_t quantum = 0;
  bool operator==(const Grant&) const = default;
};

// Time-wheel flow scheduler with a round-robin bypass lane for flows without
// a rate limit. Intervals are kept in 32.32 fixed point nanoseconds per byte
// so the grant path performs no division.
class Carousel {
 public:
  explicit Carousel(CarouselConfig cfg = {});

  // bytes/s; 0 means uncongested. Takes effect at the flow's next enqueue.
  void set_rate(FlowIndex f, std::uint64_t bytes_per_sec);
  std::uint64_t interval_fp(FlowIndex f) const;
  double interval_ns(FlowIndex f) const;

  // Latest sendable byte count for the flow (scheduler hint). Enqueues an idle
  // flow once it has something to send.
  void update(FlowIndex f, std::uint32_t sendable, TimeNs now);
  void remove(FlowIndex f);

  // Places a pending flow. Returns the absolute wheel slot, or nullopt for
  // the round-robin lane.
  std::optional<std::int64_t> enqueue_flow(FlowIndex f, TimeNs now);

  // Grants for every wheel slot whose deadline has passed, in slot order,
  // then at most one round of the round-robin lane limited to `rr_budget`
  // grants.
  std::vector<Grant> poll(TimeNs now, std::size_t rr_budget = std::numeric_limits<std::size_t>::max());

  bool has_work() const { return wheel_count_ > 0 || !rr_.empty(); }
  bool rr_pending() const { return !rr_.empty(); }
  // Start time of the earliest occupied wheel slot.
  std::optional<TimeNs> next_wheel_time() const;
  std::uint32_t pending(FlowIndex f) const;
  bool enqueued(FlowIndex f) const;
  const CarouselConfig& config() const { return cfg_; }

 private:
  using Fp = unsigned __int128;  // nanoseconds << 32
  enum class Where : std::uint8_t { kIdle, kWheel, kRr };

  struct Entry {
    std::uint64_t interval = 0;  // ns/B << 32
    Fp last_tx = 0;
    Fp deadline = 0;
    std::uint32_t pending = 0;
    Where where = Where::kIdle;
    std::uint32_t gen = 0;
  };
  struct SlotItem {
    FlowIndex flow;
    std::uint32_t gen;
  };

  static Fp to_fp(TimeNs t) { return static_cast<Fp>(t < 0 ? 0 : t) << 32; }
  std::int64_t place(FlowIndex f, Entry& e, Fp deadline);
  Entry& entry(FlowIndex f) { return flows_[f]; }

  CarouselConfig cfg_;
  std::vector<std::vector<SlotItem>> wheel_;
  std::deque<SlotItem> rr_;
  std::unordered_map<FlowIndex, Entry> flows_;
  std::int64_t cursor_ = -1;  // last processed absolute slot
  std::size_t wheel_count_ = 0;
};

}  // namespace tcpipe
