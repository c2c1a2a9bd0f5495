#include "tcpipe/core/flow.hpp"

#include <array>

#include "tcpipe/core/wire.hpp"

namespace tcpipe {

namespace {

constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t crc) {
  crc = ~crc;
  for (std::uint8_t b : data) crc = kCrcTable[(crc ^ b) & 0xff] ^ (crc >> 8);
  return ~crc;
}

std::uint32_t flow_hash(const FourTuple& t) {
  std::array<std::uint8_t, 12> key;
  store_be32(key.data(), t.local_ip);
  store_be32(key.data() + 4, t.remote_ip);
  store_be16(key.data() + 8, t.local_port);
  store_be16(key.data() + 10, t.remote_port);
  return crc32(key);
}

}  // namespace tcpipe
