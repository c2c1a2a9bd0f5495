#include <random>

#include "doctest.h"
#include "tcpipe/core/flow.hpp"
#include "tcpipe/core/seq.hpp"
#include "tcpipe/core/state.hpp"
#include "tcpipe/core/wire.hpp"

using namespace tcpipe;

namespace {

SegmentView base_view() {
  SegmentView v;
  v.eth.dst = {2, 0, 0, 0, 0, 2};
  v.eth.src = {2, 0, 0, 0, 0, 1};
  v.ip.src = make_ip(10, 0, 0, 1);
  v.ip.dst = make_ip(10, 0, 0, 2);
  v.tcp.src_port = 7000;
  v.tcp.dst_port = 49152;
  return v;
}

}  // namespace

TEST_CASE("minimal SYN frame parses") {
  SegmentView v = base_view();
  v.tcp.flags = tcpflag::kSyn;
  v.tcp.seq = 42;
  auto frame = build_segment(v);
  REQUIRE(frame.size() == 54);
  auto seg = parse_segment(frame);
  REQUIRE(seg);
  CHECK(seg->tcp.flags == tcpflag::kSyn);
  CHECK(seg->tcp.seq == 42);
  CHECK(seg->payload.empty());
  CHECK_FALSE(seg->tcp.ts);
}

TEST_CASE("ip total length beyond the buffer is malformed") {
  auto frame = build_segment(base_view());
  store_be16(&frame[kEthHeaderLen + 2], 200);
  ParseError err{};
  CHECK_FALSE(parse_segment(frame, &err));
  CHECK(err == ParseError::kLengthMismatch);
}

TEST_CASE("truncated frames are rejected") {
  auto frame = build_segment(base_view());
  frame.resize(30);
  ParseError err{};
  CHECK_FALSE(parse_segment(frame, &err));
  CHECK(err == ParseError::kTruncated);
}

TEST_CASE("timestamp option from hand-assembled bytes") {
  // Ethernet, IPv4 (total 52), TCP with data offset 8: NOP NOP TS(8,10).
  std::vector<std::uint8_t> f = {
      2, 0, 0, 0, 0, 2, 2, 0, 0, 0, 0, 1, 0x08, 0x00,                                    // eth
      0x45, 0, 0, 52, 0, 0, 0x40, 0, 64, 6, 0, 0, 10, 0, 0, 1, 10, 0, 0, 2,              // ip
      0x1b, 0x58, 0xc0, 0x00, 0, 0, 0, 1, 0, 0, 0, 2, 0x80, 0x10, 0xff, 0xff, 0, 0, 0, 0,  // tcp
      1, 1, 8, 10, 0x11, 0x22, 0x33, 0x44, 0xaa, 0xbb, 0xcc, 0xdd};
  auto seg = parse_segment(f);
  REQUIRE(seg);
  REQUIRE(seg->tcp.ts);
  CHECK(seg->tcp.ts->ts_val == 0x11223344u);
  CHECK(seg->tcp.ts->ts_ecr == 0xaabbccddu);
  CHECK(seg->tcp.flags == tcpflag::kAck);
  CHECK(seg->payload.empty());
}

TEST_CASE("build and parse round trip") {
  SegmentView v = base_view();
  std::vector<std::uint8_t> payload = {1, 2, 3, 4, 5};
  v.payload = payload;
  v.tcp.seq = 0xfffffff0u;
  v.tcp.ack = 77;
  v.tcp.flags = tcpflag::kAck | tcpflag::kPsh;
  v.tcp.window = 1234;
  v.tcp.ts = TcpTimestamp{5, 6};
  v.ip.set_ecn(Ecn::kEct0);
  auto frame = build_segment(v);
  auto seg = parse_segment(frame);
  REQUIRE(seg);
  CHECK(seg->tcp.seq == v.tcp.seq);
  CHECK(seg->tcp.ack == 77);
  CHECK(seg->tcp.window == 1234);
  CHECK(seg->tcp.ts == v.tcp.ts);
  CHECK(seg->ip.ecn() == Ecn::kEct0);
  CHECK(std::vector<std::uint8_t>(seg->payload.begin(), seg->payload.end()) == payload);
}

TEST_CASE("ones-complement sum of a fixed header and payload") {
  // Reference value from an independent RFC 1071 summation.
  const std::vector<std::uint8_t> bytes = {0x1b, 0x58, 0xc0, 0x00, 0x00, 0x00, 0x03, 0xe8, 0x00, 0x00, 0x07, 0xd0,
                                           0x50, 0x18, 0xff, 0xff, 0x00, 0x00, 0x00, 0x00, 0xde, 0xad, 0xbe, 0xef};
  CHECK(checksum_fold(checksum_partial(bytes)) == 0xd4c6);
}

TEST_CASE("fill_checksum matches reference values") {
  SegmentView v = base_view();
  const std::vector<std::uint8_t> payload = {0xde, 0xad, 0xbe, 0xef};
  v.payload = payload;
  v.tcp.seq = 1000;
  v.tcp.ack = 2000;
  v.tcp.flags = tcpflag::kAck | tcpflag::kPsh;
  v.tcp.window = 0xffff;
  auto frame = build_segment(v);
  fill_checksum(frame);
  CHECK(load_be16(&frame[kEthHeaderLen + 10]) == 0x26ca);
  CHECK(load_be16(&frame[kEthHeaderLen + kIpv4HeaderLen + 16]) == 0x1718);
  auto seg = parse_segment(frame);
  REQUIRE(seg);
  CHECK(verify_checksum(*seg));
  CHECK(verify_ip_checksum(*seg));
}

TEST_CASE("checksum round trip and single-bit sensitivity") {
  std::mt19937 rng(7);
  for (int i = 0; i < 50; ++i) {
    SegmentView v = base_view();
    std::vector<std::uint8_t> payload(rng() % 1400 + 1);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
    v.payload = payload;
    v.tcp.seq = rng();
    v.tcp.ack = rng();
    v.tcp.flags = tcpflag::kAck;
    auto frame = build_segment(v);
    fill_checksum(frame);
    auto seg = parse_segment(frame);
    REQUIRE(seg);
    CHECK(verify_checksum(*seg));

    const std::size_t at = frame.size() - 1 - rng() % payload.size();
    frame[at] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    auto bad = parse_segment(frame);
    REQUIRE(bad);
    CHECK_FALSE(verify_checksum(*bad));
  }
}

TEST_CASE("crc32 standard check value") {
  const std::string s = "123456789";
  CHECK(crc32({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}) == 0xcbf43926u);
}

TEST_CASE("flow hash of a fixed tuple") {
  FourTuple t{make_ip(10, 0, 0, 1), make_ip(10, 0, 0, 2), 7000, 49152};
  CHECK(flow_hash(t) == 0x43d40d3du);
  CHECK(flow_hash(t) == flow_hash(t));
  CHECK(flow_group(t, 4) == 1);
}

TEST_CASE("flow groups stay in range") {
  std::mt19937 rng(3);
  for (int i = 0; i < 1000; ++i) {
    FourTuple t{static_cast<Ipv4Addr>(rng()), static_cast<Ipv4Addr>(rng()), static_cast<std::uint16_t>(rng()),
                static_cast<std::uint16_t>(rng())};
    CHECK(flow_group(t, 4) < 4);
  }
}

TEST_CASE("sequence comparisons wrap") {
  CHECK(seq_lt(0xfffffff0u, 0x10u));
  CHECK(seq_gt(0x10u, 0xfffffff0u));
  CHECK(seq_diff(5, 0xfffffffbu) == 10);
  CHECK(seq_leq(7, 7));
}

TEST_CASE("state partitions pack to their stated sizes") {
  PreState pre;
  pre.peer_mac = {1, 2, 3, 4, 5, 6};
  pre.peer_ip = 0x0a000002;
  pre.local_port = 7000;
  pre.remote_port = 49152;
  pre.flow_group = 3;
  ProtoState p;
  p.rx_pos = 1;
  p.tx_pos = 2;
  p.tx_avail = 3;
  p.rx_avail = 4;
  p.remote_win = 5;
  p.tx_sent = 6;
  p.seq = 7;
  p.ack = 8;
  p.ooo_start = 9;
  p.ooo_len = 10;
  p.dupack_cnt = 2;
  p.next_ts = 12;
  PostState post;
  post.opaque = 99;
  post.context = 4;
  post.rx_size = 4096;
  post.tx_size = 8192;
  post.cnt_ackb = 1448;
  post.rtt_est = 100000;
  CHECK(pack(pre).size() == kPreStateBytes);
  CHECK(pack(p).size() == kProtoStateBytes);
  CHECK(pack(post).size() == kPostStateBytes);
  CHECK(unpack_pre(pack(pre)) == pre);
  CHECK(unpack_proto(pack(p)) == p);
}

TEST_CASE("invariant checker flags an impossible state") {
  ProtoState st;
  st.rx_avail = 4096;
  ProtoFlags fl;
  CHECK_FALSE(check_invariants(st, fl, 4096, 4096));
  st.tx_avail = 4000;
  st.tx_sent = 200;  // more than the buffer holds
  CHECK(check_invariants(st, fl, 4096, 4096));
}
