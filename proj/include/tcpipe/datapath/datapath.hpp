#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tcpipe/datapath/ctxq.hpp"
#include "tcpipe/datapath/flow_table.hpp"
#include "tcpipe/datapath/protocol.hpp"
#include "tcpipe/pipeline/engine.hpp"
#include "tcpipe/plugins/tracepoints.hpp"

namespace tcpipe {

class PluginChain;

struct DatapathConfig {
  MacAddr local_mac{};
  std::uint32_t mss = kDefaultMss;
  std::uint32_t flow_groups = 1;
  std::size_t hc_pool = 1024;
  std::size_t tx_pool = 1024;
};

// Where finished work leaves the data path. All sinks are invoked from the
// egress (or retire) step of the owning flow group, in that group's order.
struct DatapathSinks {
  std::function<void(std::vector<std::uint8_t>&& frame, TimeNs t, std::uint32_t group)> wire;
  std::function<void(const SchedHint& hint)> hint;
  std::function<void(std::vector<std::uint8_t>&& frame, TimeNs t)> redirect;
  std::function<TimeNs()> clock;  // stamps payload copy completion
  // Replaces delivery into the context queues when set.
  std::function<bool(std::uint16_t context, const CtxQueueEntry& e)> notify;
};

// Circular-buffer copies; `offset` is already reduced modulo `size`.
void copy_into_ring(std::uint64_t base, std::uint32_t size, std::uint32_t offset,
                    std::span<const std::uint8_t> src);
void copy_from_ring(std::uint64_t base, std::uint32_t size, std::uint32_t offset,
                    std::span<std::uint8_t> dst);

inline std::uint64_t buffer_handle(std::uint8_t* p) { return reinterpret_cast<std::uintptr_t>(p); }

// The stage functions of the RX, TX and HC workflows bound to one stack's
// flow table, context queues and plugin chain.
class Datapath {
 public:
  Datapath(DatapathConfig cfg, FlowTable& flows, ContextQueues& ctx, DatapathSinks sinks,
           PluginChain* ingress_chain = nullptr, Tracepoints* trace = nullptr);

  StageFns stage_fns();

  std::uint32_t classify(const Descriptor& d) const;
  void xdp(Descriptor& d);
  void pre(Descriptor& d);
  void protocol(Descriptor& d);
  void post(Descriptor& d);
  void dma(Descriptor& d);
  void retire(Descriptor& d);
  void egress(Descriptor& d);
  bool notify(std::uint16_t context, const CtxQueueEntry& e);

  // Sequential reference path: every stage, in order, for one descriptor.
  void run_to_completion(Descriptor& d);

  // Runs on every wire frame in egress order; DROP suppresses the frame.
  void set_egress_chain(PluginChain* chain) { egress_chain_ = chain; }

  DescriptorPool& hc_pool() { return hc_pool_; }
  DescriptorPool& tx_pool() { return tx_pool_; }
  const DatapathConfig& config() const { return cfg_; }
  FlowTable& flows() { return flows_; }
  const ProtoConfig& proto_config() const { return proto_cfg_; }

 private:
  void hit(Tp tp, std::uint64_t n = 1) {
    if (trace_) trace_->hit(tp, n);
  }
  std::vector<std::uint8_t> build_frame(FlowIndex f, std::uint32_t seq, std::uint32_t ack,
                                        std::uint16_t window, std::uint8_t flags, std::uint32_t ts_val,
                                        std::uint32_t ts_ecr, bool ect,
                                        const CopyDirective* payload) const;

  DatapathConfig cfg_;
  ProtoConfig proto_cfg_;
  FlowTable& flows_;
  ContextQueues& ctx_;
  DatapathSinks sinks_;
  PluginChain* chain_;
  PluginChain* egress_chain_ = nullptr;
  Tracepoints* trace_;
  DescriptorPool hc_pool_;
  DescriptorPool tx_pool_;
};

}  // namespace tcpipe
