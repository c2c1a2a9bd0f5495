#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

// Direction-specific connection identifier. Fields are never sorted, so the
// RX tuple (from received headers) and the TX tuple (from local state) agree
// only because both are expressed from the local host's point of view.
struct FourTuple {
  Ipv4Addr local_ip = 0;
  Ipv4Addr remote_ip = 0;
  std::uint16_t local_port = 0;
  std::uint16_t remote_port = 0;

  bool operator==(const FourTuple&) const = default;
};

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320).
std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t crc = 0);

// CRC-32 over local_ip | remote_ip | local_port | remote_port, big-endian.
std::uint32_t flow_hash(const FourTuple& t);

constexpr std::uint32_t kDefaultFlowGroups = 4;

inline std::uint32_t flow_group(const FourTuple& t, std::uint32_t groups = kDefaultFlowGroups) {
  return flow_hash(t) % groups;
}

struct FourTupleHash {
  std::size_t operator()(const FourTuple& t) const noexcept { return flow_hash(t); }
};

}  // namespace tcpipe
