#pragma once

#include <cstdint>
#include <vector>

#include "tcpipe/core/state.hpp"
#include "tcpipe/datapath/actions.hpp"

namespace tcpipe {

struct ProtoConfig {
  std::uint32_t mss = kDefaultMss;
  std::uint8_t dupack_threshold = 3;
};

// Bytes the scheduler may request right now: min(tx_avail, open window),
// or 1 when only a FIN or a window probe remains to go out.
std::uint32_t sendable(const ProtoState& st, const ProtoFlags& fl);

// Advertised receive window: rx_avail saturated at 16 bits (no scaling).
inline std::uint16_t advertised_window(const ProtoState& st) {
  return st.rx_avail > 0xffffu ? 0xffff : static_cast<std::uint16_t>(st.rx_avail);
}

ProtoSnapshot snapshot(const ProtoState& st, const ProtoFlags& fl);

// First unacknowledged sequence number.
std::uint32_t send_una(const ProtoState& st, const ProtoFlags& fl);

// Go-back-N: rewind to the last cumulatively acked byte. A sent but
// unacknowledged FIN is rewound too.
void reset_tx(ProtoState& st, ProtoFlags& fl);

RxActions protocol_rx(ProtoState& st, ProtoFlags& fl, const HeaderSummary& s, const ProtoConfig& cfg);
std::vector<TxSegmentPlan> protocol_tx(ProtoState& st, ProtoFlags& fl, std::uint32_t quantum,
                                       const ProtoConfig& cfg);
HcResult protocol_hc(ProtoState& st, ProtoFlags& fl, const CtxQueueEntry& cmd, const ProtoConfig& cfg);

}  // namespace tcpipe
