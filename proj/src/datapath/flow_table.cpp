#include "tcpipe/datapath/flow_table.hpp"

#include <mutex>

#include "tcpipe/datapath/protocol.hpp"

namespace tcpipe {

FlowTable::FlowTable(std::size_t capacity) : capacity_(capacity), slots_(new Slot[capacity]) {}

std::optional<FlowIndex> FlowTable::allocate() {
  std::unique_lock lock(mu_);
  for (std::size_t i = 0; i < capacity_; ++i) {
    if (!slots_[i].allocated) {
      slots_[i].allocated = true;
      return static_cast<FlowIndex>(i);
    }
  }
  return std::nullopt;
}

void FlowTable::install(FlowIndex f, const FourTuple& tuple, const PreState& pre, const ProtoState& proto,
                        const PostState& post) {
  Slot& s = slots_[f];
  s.pre = pre;
  s.proto = proto;
  s.flags = ProtoFlags{};
  s.post = post;
  s.tuple = tuple;
  publish(f);
  std::unique_lock lock(mu_);
  s.active.store(true, std::memory_order_release);
  conns_[tuple] = f;
}

void FlowTable::deactivate(FlowIndex f) {
  std::unique_lock lock(mu_);
  Slot& s = slots_[f];
  auto it = conns_.find(s.tuple);
  if (it != conns_.end() && it->second == f) conns_.erase(it);
  s.active.store(false, std::memory_order_release);
}

void FlowTable::release(FlowIndex f) {
  std::unique_lock lock(mu_);
  slots_[f].allocated = false;
}

std::optional<FlowIndex> FlowTable::lookup(const FourTuple& t) const {
  std::shared_lock lock(mu_);
  auto it = conns_.find(t);
  if (it == conns_.end()) return std::nullopt;
  return it->second;
}

void FlowTable::publish(FlowIndex f) {
  Slot& s = slots_[f];
  s.view.una.store(send_una(s.proto, s.flags), std::memory_order_relaxed);
  s.view.tx_sent.store(s.proto.tx_sent, std::memory_order_relaxed);
  s.view.tx_avail.store(s.proto.tx_avail, std::memory_order_relaxed);
  s.view.remote_win.store(s.proto.remote_win, std::memory_order_relaxed);
  s.view.ack.store(s.proto.ack, std::memory_order_relaxed);
  std::uint8_t bits = 0;
  if (s.flags.fin_pending) bits |= kViewFinPending;
  if (s.flags.fin_sent) bits |= kViewFinSent;
  if (s.flags.fin_acked) bits |= kViewFinAcked;
  if (s.flags.rx_fin) bits |= kViewRxFin;
  s.view.flags.store(bits, std::memory_order_release);
}

std::vector<FlowIndex> FlowTable::active_flows() const {
  std::shared_lock lock(mu_);
  std::vector<FlowIndex> out;
  for (std::size_t i = 0; i < capacity_; ++i)
    if (slots_[i].active.load(std::memory_order_relaxed)) out.push_back(static_cast<FlowIndex>(i));
  return out;
}

std::size_t FlowTable::active_count() const {
  std::shared_lock lock(mu_);
  return conns_.size();
}

}  // namespace tcpipe
