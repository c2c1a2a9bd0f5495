#include "tcpipe/pipeline/descriptor.hpp"

namespace tcpipe {

const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::kNone: return "none";
    case DropReason::kMalformed: return "malformed";
    case DropReason::kChecksum: return "checksum";
    case DropReason::kPlugin: return "plugin";
    case DropReason::kPluginFault: return "plugin-fault";
    case DropReason::kUnknownFlow: return "unknown-flow";
    case DropReason::kNotDataPath: return "not-data-path";
  }
  return "?";
}

bool Meta::set(std::uint16_t key, std::uint64_t value) {
  for (const auto& [k, v] : items_)
    if (k == key) return false;
  items_.emplace_back(key, value);
  return true;
}

std::optional<std::uint64_t> Meta::get(std::uint16_t key) const {
  for (const auto& [k, v] : items_)
    if (k == key) return v;
  return std::nullopt;
}

}  // namespace tcpipe

namespace tcpipe {

const char* to_string(CtxKind k) {
  switch (k) {
    case CtxKind::kNone: return "none";
    case CtxKind::kRxDataNotify: return "rx-data";
    case CtxKind::kTxSpaceFreed: return "tx-freed";
    case CtxKind::kTxBump: return "tx-bump";
    case CtxKind::kRxBump: return "rx-bump";
    case CtxKind::kFin: return "fin";
    case CtxKind::kRetransmit: return "retransmit";
    case CtxKind::kConnEvent: return "conn-event";
  }
  return "?";
}

}  // namespace tcpipe
