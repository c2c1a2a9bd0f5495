#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "tcpipe/core/types.hpp"
#include "tcpipe/datapath/actions.hpp"

namespace tcpipe {

enum class Dir : std::uint8_t { kRx, kTx, kHc };

// What happens to a descriptor after the ingress stages.
enum class Fate : std::uint8_t {
  kForward,   // normal processing
  kDrop,
  kRedirect,  // to the control plane
  kXdpTx,     // plugin rewrote the packet; goes straight to the wire, in order
};

enum class DropReason : std::uint8_t {
  kNone,
  kMalformed,
  kChecksum,
  kPlugin,
  kPluginFault,
  kUnknownFlow,
  kNotDataPath,
};

const char* to_string(DropReason r);

constexpr std::uint64_t kNoEpoch = std::numeric_limits<std::uint64_t>::max();

// Write-once scratch metadata forwarded between stages.
class Meta {
 public:
  // Returns false (and leaves the value untouched) if the key was already set.
  bool set(std::uint16_t key, std::uint64_t value);
  std::optional<std::uint64_t> get(std::uint16_t key) const;
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<std::pair<std::uint16_t, std::uint64_t>> items_;
};

// The unit of work flowing through the pipeline.
struct Descriptor {
  std::uint64_t epoch = kNoEpoch;
  std::uint64_t egress_epoch = kNoEpoch;
  std::uint32_t group = 0;
  Dir dir = Dir::kRx;
  Fate fate = Fate::kForward;
  DropReason reason = DropReason::kNone;
  FlowIndex flow = kNoFlow;
  std::uint16_t context = 0;  // application context for notifications
  TimeNs time = 0;
  bool pooled = false;  // holds a descriptor-pool credit (HC path)

  std::vector<std::uint8_t> frame;  // RX: received frame; kXdpTx: rewritten frame
  HeaderSummary summary;
  CtxQueueEntry cmd;
  std::uint32_t quantum = 0;
  std::uint32_t vlan_stripped = 0;

  // protocol stage output
  ProtoSnapshot snap;
  RxActions rx;
  HcResult hc;
  std::vector<TxSegmentPlan> plans;

  // post-processing output
  std::optional<AckPlan> ack;
  std::vector<CopyDirective> copies;  // one per plan (TX) or one placement (RX)
  std::vector<CtxQueueEntry> notes;
  std::optional<SchedHint> hint;

  // payload-transfer output, ready for the wire
  std::vector<std::vector<std::uint8_t>> out;
  TimeNs copy_done = -1;

  Meta meta;

  static Descriptor rx_frame(std::vector<std::uint8_t> frame, TimeNs now) {
    Descriptor d;
    d.dir = Dir::kRx;
    d.frame = std::move(frame);
    d.time = now;
    return d;
  }
  static Descriptor hc_command(const CtxQueueEntry& e, TimeNs now) {
    Descriptor d;
    d.dir = Dir::kHc;
    d.cmd = e;
    d.flow = e.flow;
    d.time = now;
    return d;
  }
  static Descriptor tx_grant(FlowIndex flow, std::uint32_t quantum, TimeNs now) {
    Descriptor d;
    d.dir = Dir::kTx;
    d.flow = flow;
    d.quantum = quantum;
    d.time = now;
    return d;
  }
};

}  // namespace tcpipe
