#include "tcpipe/core/wire.hpp"

#include <algorithm>
#include <cstdio>

namespace tcpipe {

std::string ip_to_string(Ipv4Addr ip) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", ip >> 24, (ip >> 16) & 0xff, (ip >> 8) & 0xff,
                ip & 0xff);
  return buf;
}

bool parse_ip(const std::string& text, Ipv4Addr& out) {
  unsigned a, b, c, d;
  char tail;
  if (std::sscanf(text.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4) return false;
  if (a > 255 || b > 255 || c > 255 || d > 255) return false;
  out = make_ip(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(d));
  return true;
}

const char* to_string(ParseError e) {
  switch (e) {
    case ParseError::kTruncated: return "truncated";
    case ParseError::kNotIpv4: return "not-ipv4";
    case ParseError::kNotTcp: return "not-tcp";
    case ParseError::kLengthMismatch: return "length-mismatch";
    case ParseError::kBadHeader: return "bad-header";
  }
  return "?";
}

namespace {

std::optional<SegmentView> fail(ParseError* out, ParseError e) {
  if (out) *out = e;
  return std::nullopt;
}

}  // namespace

std::optional<SegmentView> parse_segment(std::span<const std::uint8_t> raw, ParseError* error) {
  if (raw.size() < kMinFrameLen) return fail(error, ParseError::kTruncated);
  const std::uint8_t* p = raw.data();

  SegmentView v;
  v.raw = raw;
  std::copy_n(p, 6, v.eth.dst.begin());
  std::copy_n(p + 6, 6, v.eth.src.begin());
  v.eth.ethertype = load_be16(p + 12);
  if (v.eth.ethertype != kEtherTypeIpv4) return fail(error, ParseError::kNotIpv4);

  const std::uint8_t* ip = p + kEthHeaderLen;
  if ((ip[0] >> 4) != 4) return fail(error, ParseError::kNotIpv4);
  const std::size_t ihl = std::size_t{ip[0] & 0x0fu} * 4;
  if (ihl < kIpv4HeaderLen) return fail(error, ParseError::kBadHeader);
  v.ip.tos = ip[1];
  v.ip.total_length = load_be16(ip + 2);
  v.ip.id = load_be16(ip + 4);
  v.ip.ttl = ip[8];
  v.ip.protocol = ip[9];
  v.ip.checksum = load_be16(ip + 10);
  v.ip.src = load_be32(ip + 12);
  v.ip.dst = load_be32(ip + 16);
  if (v.ip.protocol != kIpProtoTcp) return fail(error, ParseError::kNotTcp);
  if (v.ip.total_length > raw.size() - kEthHeaderLen) return fail(error, ParseError::kLengthMismatch);
  if (v.ip.total_length < ihl + kTcpHeaderLen) return fail(error, ParseError::kLengthMismatch);

  v.tcp_offset = kEthHeaderLen + ihl;
  const std::uint8_t* tcp = p + v.tcp_offset;
  const std::size_t tcp_len = v.ip.total_length - ihl;
  v.tcp.src_port = load_be16(tcp);
  v.tcp.dst_port = load_be16(tcp + 2);
  v.tcp.seq = load_be32(tcp + 4);
  v.tcp.ack = load_be32(tcp + 8);
  const std::size_t doff = static_cast<std::size_t>(tcp[12] >> 4) * 4;
  v.tcp.flags = tcp[13];
  v.tcp.window = load_be16(tcp + 14);
  v.tcp.checksum = load_be16(tcp + 16);
  if (doff < kTcpHeaderLen || doff > tcp_len) return fail(error, ParseError::kBadHeader);

  // Options: only timestamps are interpreted; everything else is skipped.
  std::size_t i = kTcpHeaderLen;
  while (i < doff) {
    const std::uint8_t kind = tcp[i];
    if (kind == 0) break;
    if (kind == 1) {
      ++i;
      continue;
    }
    if (i + 1 >= doff) return fail(error, ParseError::kBadHeader);
    const std::size_t len = tcp[i + 1];
    if (len < 2 || i + len > doff) return fail(error, ParseError::kBadHeader);
    if (kind == 8) {
      if (len != 10) return fail(error, ParseError::kBadHeader);
      v.tcp.ts = TcpTimestamp{load_be32(tcp + i + 2), load_be32(tcp + i + 6)};
    }
    i += len;
  }

  v.payload = raw.subspan(v.tcp_offset + doff, tcp_len - doff);
  return v;
}

std::size_t tcp_header_len(const TcpHeader& tcp) {
  return kTcpHeaderLen + (tcp.ts ? kTcpTimestampOptLen : 0);
}

std::vector<std::uint8_t> build_segment(const SegmentView& v) {
  const std::size_t thl = tcp_header_len(v.tcp);
  const std::size_t total = kIpv4HeaderLen + thl + v.payload.size();
  std::vector<std::uint8_t> out(kEthHeaderLen + total);
  std::uint8_t* p = out.data();
  std::copy(v.eth.dst.begin(), v.eth.dst.end(), p);
  std::copy(v.eth.src.begin(), v.eth.src.end(), p + 6);
  store_be16(p + 12, v.eth.ethertype);

  std::uint8_t* ip = p + kEthHeaderLen;
  ip[0] = 0x45;
  ip[1] = v.ip.tos;
  store_be16(ip + 2, static_cast<std::uint16_t>(total));
  store_be16(ip + 4, v.ip.id);
  store_be16(ip + 6, 0x4000);  // DF
  ip[8] = v.ip.ttl;
  ip[9] = v.ip.protocol;
  store_be16(ip + 10, v.ip.checksum);
  store_be32(ip + 12, v.ip.src);
  store_be32(ip + 16, v.ip.dst);

  std::uint8_t* tcp = ip + kIpv4HeaderLen;
  store_be16(tcp, v.tcp.src_port);
  store_be16(tcp + 2, v.tcp.dst_port);
  store_be32(tcp + 4, v.tcp.seq);
  store_be32(tcp + 8, v.tcp.ack);
  tcp[12] = static_cast<std::uint8_t>((thl / 4) << 4);
  tcp[13] = v.tcp.flags;
  store_be16(tcp + 14, v.tcp.window);
  store_be16(tcp + 16, v.tcp.checksum);
  store_be16(tcp + 18, 0);
  if (v.tcp.ts) {
    tcp[20] = 1;
    tcp[21] = 1;
    tcp[22] = 8;
    tcp[23] = 10;
    store_be32(tcp + 24, v.tcp.ts->ts_val);
    store_be32(tcp + 28, v.tcp.ts->ts_ecr);
  }
  std::copy(v.payload.begin(), v.payload.end(), tcp + thl);
  return out;
}

std::uint32_t checksum_partial(std::span<const std::uint8_t> data, std::uint32_t sum) {
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += load_be16(data.data() + i);
  if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
  // Fold early so long buffers never overflow 32 bits.
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return sum;
}

std::uint16_t checksum_fold(std::uint32_t sum) {
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(sum);
}

namespace {

std::uint32_t pseudo_header_sum(Ipv4Addr src, Ipv4Addr dst, std::size_t tcp_len) {
  std::uint32_t sum = 0;
  sum += src >> 16;
  sum += src & 0xffff;
  sum += dst >> 16;
  sum += dst & 0xffff;
  sum += kIpProtoTcp;
  sum += static_cast<std::uint32_t>(tcp_len);
  return sum;
}

}  // namespace

void fill_checksum(std::span<std::uint8_t> frame) {
  std::uint8_t* ip = frame.data() + kEthHeaderLen;
  const std::size_t ihl = std::size_t{ip[0] & 0x0fu} * 4;
  const std::size_t total = load_be16(ip + 2);
  store_be16(ip + 10, 0);
  store_be16(ip + 10, static_cast<std::uint16_t>(~checksum_fold(checksum_partial({ip, ihl}))));

  std::uint8_t* tcp = ip + ihl;
  const std::size_t tcp_len = total - ihl;
  store_be16(tcp + 16, 0);
  std::uint32_t sum = pseudo_header_sum(load_be32(ip + 12), load_be32(ip + 16), tcp_len);
  sum = checksum_partial({tcp, tcp_len}, sum);
  store_be16(tcp + 16, static_cast<std::uint16_t>(~checksum_fold(sum)));
}

bool verify_checksum(const SegmentView& seg) {
  const std::size_t ihl = seg.tcp_offset - kEthHeaderLen;
  const std::size_t tcp_len = seg.ip.total_length - ihl;
  std::uint32_t sum = pseudo_header_sum(seg.ip.src, seg.ip.dst, tcp_len);
  sum = checksum_partial(seg.raw.subspan(seg.tcp_offset, tcp_len), sum);
  return checksum_fold(sum) == 0xffff;
}

bool verify_ip_checksum(const SegmentView& seg) {
  const std::size_t ihl = seg.tcp_offset - kEthHeaderLen;
  return checksum_fold(checksum_partial(seg.raw.subspan(kEthHeaderLen, ihl))) == 0xffff;
}

}  // namespace tcpipe
