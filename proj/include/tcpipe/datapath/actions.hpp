#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

// Distilled header fields. Stages after pre-processing never reparse the
// raw segment.
struct HeaderSummary {
  FlowIndex flow = kNoFlow;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint16_t window = 0;
  std::uint8_t flags = 0;
  std::uint32_t payload_len = 0;
  std::uint32_t payload_offset = 0;  // byte offset of the payload inside the frame
  bool has_ts = false;
  std::uint32_t ts_val = 0;
  std::uint32_t ts_ecr = 0;
  bool ecn_ce = false;
};

enum class CtxKind : std::uint16_t {
  kNone = 0,
  // notifications, data path to app
  kRxDataNotify = 1,
  kTxSpaceFreed = 2,
  // commands, app/control plane to data path
  kTxBump = 3,
  kRxBump = 4,
  kFin = 5,
  kRetransmit = 6,
  // control plane to app: op[0] = connect token, op[1] = ConnEvent, op[2] = port
  kConnEvent = 7,
};

enum class ConnEvent : std::uint64_t { kEstablished = 1, kAccepted, kClosed, kRefused, kReset, kTimeout };

const char* to_string(CtxKind k);

constexpr std::uint16_t kCtxFlagFin = 0x1;  // RxDataNotify: peer FIN consumed

// Fixed 32-byte context-queue entry: kind tag, flags, flow, 3x64-bit operands.
// Notifications: op[0] = opaque, op[1] = buffer offset, op[2] = length.
// Commands: op[0] = length.
struct CtxQueueEntry {
  CtxKind kind = CtxKind::kNone;
  std::uint16_t flags = 0;
  FlowIndex flow = kNoFlow;
  std::uint64_t op[3] = {0, 0, 0};

  static CtxQueueEntry tx_bump(FlowIndex f, std::uint64_t len) { return cmd(CtxKind::kTxBump, f, len); }
  static CtxQueueEntry rx_bump(FlowIndex f, std::uint64_t len) { return cmd(CtxKind::kRxBump, f, len); }
  static CtxQueueEntry fin(FlowIndex f) { return cmd(CtxKind::kFin, f, 0); }
  static CtxQueueEntry retransmit(FlowIndex f) { return cmd(CtxKind::kRetransmit, f, 0); }
  static CtxQueueEntry rx_notify(FlowIndex f, std::uint64_t opaque, std::uint64_t offset,
                                 std::uint64_t len, bool fin = false) {
    CtxQueueEntry e{CtxKind::kRxDataNotify, static_cast<std::uint16_t>(fin ? kCtxFlagFin : 0), f,
                    {opaque, offset, len}};
    return e;
  }
  static CtxQueueEntry conn_event(FlowIndex f, std::uint64_t token, ConnEvent ev, std::uint64_t port = 0) {
    CtxQueueEntry e{CtxKind::kConnEvent, 0, f, {token, static_cast<std::uint64_t>(ev), port}};
    return e;
  }
  static CtxQueueEntry tx_freed(FlowIndex f, std::uint64_t opaque, std::uint64_t len) {
    CtxQueueEntry e{CtxKind::kTxSpaceFreed, 0, f, {opaque, 0, len}};
    return e;
  }

  std::uint64_t length() const { return is_command() ? op[0] : op[2]; }
  bool is_command() const { return kind >= CtxKind::kTxBump && kind <= CtxKind::kRetransmit; }
  bool operator==(const CtxQueueEntry&) const = default;

 private:
  static CtxQueueEntry cmd(CtxKind k, FlowIndex f, std::uint64_t len) {
    CtxQueueEntry e{k, 0, f, {len, 0, 0}};
    return e;
  }
};
static_assert(sizeof(CtxQueueEntry) == 32);

// Where received payload lands in the circular receive buffer.
struct RxPlacement {
  std::uint32_t buf_pos = 0;       // free-running position counter
  std::uint32_t len = 0;
  std::uint32_t payload_skip = 0;  // leading payload bytes trimmed
};

// State the protocol stage hands forward; post stages never read ProtoState.
struct ProtoSnapshot {
  std::uint32_t seq = 0;         // next TX sequence number
  std::uint32_t ack = 0;         // next expected RX sequence number
  std::uint16_t window = 0;      // receive window to advertise
  std::uint32_t next_ts = 0;
  std::uint32_t sendable = 0;    // bytes the scheduler may request now
  bool fin_pending_tx = false;   // FIN still to be (re)sent
};

struct RxActions {
  std::optional<RxPlacement> placement;
  bool ack_due = false;
  std::uint32_t freed_tx = 0;
  bool fast_retransmit = false;
  bool ooo = false;              // payload landed above ack
  bool dropped = false;          // payload discarded (outside window/interval, or old)
  bool stale = false;            // segment lay entirely below the cumulative ack
  std::uint32_t inorder_pos = 0; // buffer position of newly in-order bytes
  std::uint32_t inorder_len = 0; // newly in-order bytes, including absorbed interval
  bool rx_fin = false;           // peer FIN consumed by this segment
  bool fin_acked = false;        // our FIN acknowledged by this segment
  bool ece = false;              // incoming segment carried ECE
  bool ecn_ce = false;           // incoming segment was CE-marked
  bool ts_valid = false;
  std::uint32_t ts_ecr = 0;
};

struct TxSegmentPlan {
  std::uint32_t seq = 0;
  std::uint32_t buf_pos = 0;
  std::uint32_t len = 0;
  bool fin = false;
};

struct HcResult {
  bool ack_due = false;  // receive window reopened
  bool reset = false;    // go-back-N applied
  bool sched_hint = false;
};

struct AckPlan {
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint16_t window = 0;
  std::uint8_t flags = 0;
  std::uint32_t ts_val = 0;
  std::uint32_t ts_ecr = 0;
};

// A memcpy between a socket buffer and a frame. `offset` is already reduced
// modulo the buffer size; copies may wrap.
struct CopyDirective {
  std::uint64_t base = 0;
  std::uint32_t size = 0;
  std::uint32_t offset = 0;
  std::uint32_t len = 0;
  std::uint32_t frame_offset = 0;
};

struct SchedHint {
  FlowIndex flow = kNoFlow;
  std::uint32_t sendable = 0;
};

}  // namespace tcpipe
