#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace tcpipe {

// Virtual or monotonic time in nanoseconds.
using TimeNs = std::int64_t;

constexpr TimeNs kNsPerUs = 1000;
constexpr TimeNs kNsPerMs = 1000 * kNsPerUs;
constexpr TimeNs kNsPerSec = 1000 * kNsPerMs;

// Dense connection handle allocated by the control plane.
using FlowIndex = std::uint32_t;
constexpr FlowIndex kNoFlow = 0xffffffffu;

using MacAddr = std::array<std::uint8_t, 6>;

// IPv4 addresses are kept in host byte order.
using Ipv4Addr = std::uint32_t;

constexpr Ipv4Addr make_ip(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  return (Ipv4Addr{a} << 24) | (Ipv4Addr{b} << 16) | (Ipv4Addr{c} << 8) | Ipv4Addr{d};
}

std::string ip_to_string(Ipv4Addr ip);
bool parse_ip(const std::string& text, Ipv4Addr& out);

constexpr std::uint32_t kDefaultMss = 1448;

}  // namespace tcpipe
