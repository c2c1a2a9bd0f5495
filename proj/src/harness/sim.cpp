#include "tcpipe/harness/sim.hpp"

namespace tcpipe {

void Simulator::at(TimeNs t, Fn fn) { q_.push(Ev{t < now_ ? now_ : t, seq_++, std::move(fn)}); }

bool Simulator::step() {
  if (q_.empty()) return false;
  Ev ev = std::move(const_cast<Ev&>(q_.top()));
  q_.pop();
  now_ = ev.t;
  ++events_;
  ev.fn();
  return true;
}

void Simulator::run_until(TimeNs end) {
  while (!q_.empty() && q_.top().t <= end) step();
  if (now_ < end) now_ = end;
}

void Simulator::run() {
  while (step()) {
  }
}

bool Simulator::run_while(const std::function<bool()>& more, TimeNs limit) {
  while (more()) {
    if (q_.empty() || q_.top().t > limit) {
      if (now_ < limit) now_ = limit;
      return false;
    }
    step();
  }
  return true;
}

}  // namespace tcpipe
