#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

// Connection identification partition, read-only after installation.
struct PreState {
  MacAddr peer_mac{};
  Ipv4Addr peer_ip = 0;
  std::uint16_t local_port = 0;
  std::uint16_t remote_port = 0;
  std::uint32_t flow_group = 0;

  bool operator==(const PreState&) const = default;
};

// Protocol partition. Mutated only by the owning flow-group's protocol stage.
// Buffer positions are free-running 32-bit counters; they are reduced modulo
// the (power-of-two) buffer size only when addressing memory.
struct ProtoState {
  std::uint32_t rx_pos = 0;
  std::uint32_t tx_pos = 0;
  std::uint32_t tx_avail = 0;
  std::uint32_t rx_avail = 0;
  std::uint16_t remote_win = 0;
  std::uint32_t tx_sent = 0;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint32_t ooo_start = 0;
  std::uint32_t ooo_len = 0;
  std::uint8_t dupack_cnt = 0;
  std::uint32_t next_ts = 0;

  bool operator==(const ProtoState&) const = default;
};

// FIN and probe bookkeeping kept beside ProtoState; not part of the packed
// 43-byte partition.
struct ProtoFlags {
  bool fin_pending = false;  // app issued close; FIN goes out after tx_avail drains
  bool fin_sent = false;     // FIN occupies sequence number seq - 1
  bool fin_acked = false;
  bool rx_fin = false;       // peer FIN consumed in order
  bool probe = false;        // send one byte into a closed window on next TX grant

  bool operator==(const ProtoFlags&) const = default;
};

// Application interface and congestion statistics partition.
struct PostState {
  std::uint64_t opaque = 0;
  std::uint16_t context = 0;
  std::uint64_t rx_base = 0;
  std::uint64_t tx_base = 0;
  std::uint32_t rx_size = 0;
  std::uint32_t tx_size = 0;
  std::uint32_t cnt_ackb = 0;
  std::uint32_t cnt_ecnb = 0;
  std::uint8_t cnt_fretx = 0;
  std::uint32_t rtt_est = 0;  // nanoseconds
  std::uint32_t rate = 0;     // bytes/s, 0 = uncongested

  bool operator==(const PostState&) const = default;
};

// Packed sizes of the three partitions (field bit widths summed, rounded up).
constexpr std::size_t kPreStateBytes = 15;
constexpr std::size_t kProtoStateBytes = 43;
constexpr std::size_t kPostStateBytes = 51;

std::vector<std::uint8_t> pack(const PreState& s);
std::vector<std::uint8_t> pack(const ProtoState& s);
std::vector<std::uint8_t> pack(const PostState& s);
PreState unpack_pre(const std::vector<std::uint8_t>& bytes);
ProtoState unpack_proto(const std::vector<std::uint8_t>& bytes);
PostState unpack_post(const std::vector<std::uint8_t>& bytes);

constexpr bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

// Returns a description of the first violated ProtoState invariant.
std::optional<std::string> check_invariants(const ProtoState& st, const ProtoFlags& flags,
                                            std::uint32_t tx_size, std::uint32_t rx_size);

std::string describe(const ProtoState& st);

}  // namespace tcpipe
