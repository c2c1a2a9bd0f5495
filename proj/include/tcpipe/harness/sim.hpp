#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

// Discrete-event loop over virtual nanoseconds. Events at equal times run in
// scheduling order.
class Simulator {
 public:
  using Fn = std::function<void()>;

  TimeNs now() const { return now_; }
  void at(TimeNs t, Fn fn);
  void after(TimeNs dt, Fn fn) { at(now_ + dt, std::move(fn)); }

  bool step();
  // Runs every event scheduled at or before `end`, then advances to `end`.
  void run_until(TimeNs end);
  void run();
  // Runs until `done` holds (checked after each event) or `limit` is reached.
  bool run_while(const std::function<bool()>& more, TimeNs limit);

  bool empty() const { return q_.empty(); }
  std::size_t pending() const { return q_.size(); }
  std::uint64_t events() const { return events_; }

 private:
  struct Ev {
    TimeNs t;
    std::uint64_t seq;
    Fn fn;
  };
  struct Later {
    bool operator()(const Ev& a, const Ev& b) const { return a.t != b.t ? a.t > b.t : a.seq > b.seq; }
  };

  std::priority_queue<Ev, std::vector<Ev>, Later> q_;
  TimeNs now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t events_ = 0;
};

}  // namespace tcpipe
