#pragma once

#include <cstdint>

namespace tcpipe {

// 32-bit modular sequence-space arithmetic (windows < 2^31).

constexpr std::int32_t seq_diff(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::int32_t>(a - b);
}
constexpr bool seq_lt(std::uint32_t a, std::uint32_t b) { return seq_diff(a, b) < 0; }
constexpr bool seq_leq(std::uint32_t a, std::uint32_t b) { return seq_diff(a, b) <= 0; }
constexpr bool seq_gt(std::uint32_t a, std::uint32_t b) { return seq_diff(a, b) > 0; }
constexpr bool seq_geq(std::uint32_t a, std::uint32_t b) { return seq_diff(a, b) >= 0; }

}  // namespace tcpipe
