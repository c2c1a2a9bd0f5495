#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

namespace tcpflag {
constexpr std::uint8_t kFin = 0x01;
constexpr std::uint8_t kSyn = 0x02;
constexpr std::uint8_t kRst = 0x04;
constexpr std::uint8_t kPsh = 0x08;
constexpr std::uint8_t kAck = 0x10;
constexpr std::uint8_t kUrg = 0x20;
constexpr std::uint8_t kEce = 0x40;
constexpr std::uint8_t kCwr = 0x80;
}  // namespace tcpflag

// ECN codepoint in the two low bits of the IPv4 TOS byte.
enum class Ecn : std::uint8_t { kNotEct = 0, kEct1 = 1, kEct0 = 2, kCe = 3 };

constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
constexpr std::uint16_t kEtherTypeVlan = 0x8100;
constexpr std::uint8_t kIpProtoTcp = 6;

constexpr std::size_t kEthHeaderLen = 14;
constexpr std::size_t kIpv4HeaderLen = 20;
constexpr std::size_t kTcpHeaderLen = 20;
constexpr std::size_t kTcpTimestampOptLen = 12;  // NOP NOP kind=8 len=10
constexpr std::size_t kMinFrameLen = kEthHeaderLen + kIpv4HeaderLen + kTcpHeaderLen;

// Big-endian field access.
inline std::uint16_t load_be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
inline std::uint32_t load_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}
inline void store_be16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v);
}
inline void store_be32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 24);
  p[1] = static_cast<std::uint8_t>(v >> 16);
  p[2] = static_cast<std::uint8_t>(v >> 8);
  p[3] = static_cast<std::uint8_t>(v);
}

struct EthHeader {
  MacAddr dst{};
  MacAddr src{};
  std::uint16_t ethertype = kEtherTypeIpv4;
  bool operator==(const EthHeader&) const = default;
};

struct IpHeader {
  Ipv4Addr src = 0;
  Ipv4Addr dst = 0;
  std::uint8_t tos = 0;
  std::uint16_t total_length = 0;
  std::uint16_t id = 0;
  std::uint8_t ttl = 64;
  std::uint8_t protocol = kIpProtoTcp;
  std::uint16_t checksum = 0;

  Ecn ecn() const { return static_cast<Ecn>(tos & 0x3); }
  void set_ecn(Ecn e) { tos = static_cast<std::uint8_t>((tos & ~0x3) | static_cast<std::uint8_t>(e)); }
  bool operator==(const IpHeader&) const = default;
};

struct TcpTimestamp {
  std::uint32_t ts_val = 0;
  std::uint32_t ts_ecr = 0;
  bool operator==(const TcpTimestamp&) const = default;
};

struct TcpHeader {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t flags = 0;
  std::uint16_t window = 0;
  std::uint16_t checksum = 0;
  std::optional<TcpTimestamp> ts;

  bool has(std::uint8_t f) const { return (flags & f) != 0; }
  bool operator==(const TcpHeader&) const = default;
};

// A parsed Ethernet/IPv4/TCP frame. `payload` and `raw` alias the parsed
// buffer; the view must not outlive it.
struct SegmentView {
  EthHeader eth;
  IpHeader ip;
  TcpHeader tcp;
  std::span<const std::uint8_t> payload;
  std::span<const std::uint8_t> raw;
  std::size_t tcp_offset = kEthHeaderLen + kIpv4HeaderLen;
};

enum class ParseError { kTruncated, kNotIpv4, kNotTcp, kLengthMismatch, kBadHeader };
const char* to_string(ParseError e);

std::optional<SegmentView> parse_segment(std::span<const std::uint8_t> raw,
                                         ParseError* error = nullptr);

// Serializes headers verbatim (including the checksum fields) followed by the
// payload. ip.total_length is recomputed from the actual sizes.
std::vector<std::uint8_t> build_segment(const SegmentView& view);
std::size_t tcp_header_len(const TcpHeader& tcp);

// RFC 1071 ones-complement sum folded to 16 bits (not inverted).
std::uint32_t checksum_partial(std::span<const std::uint8_t> data, std::uint32_t sum = 0);
std::uint16_t checksum_fold(std::uint32_t sum);

// Rewrites the IPv4 header and TCP checksums of a frame in place. The frame
// must hold a well-formed segment.
void fill_checksum(std::span<std::uint8_t> frame);
bool verify_checksum(const SegmentView& seg);
bool verify_ip_checksum(const SegmentView& seg);

}  // namespace tcpipe
