#include <random>

#include "doctest.h"
#include "tcpipe/core/wire.hpp"
#include "tcpipe/datapath/datapath.hpp"

using namespace tcpipe;

namespace {

const Ipv4Addr kLocal = make_ip(10, 0, 0, 2);
const Ipv4Addr kRemote = make_ip(10, 0, 0, 1);
constexpr std::uint16_t kLocalPort = 7000;
constexpr std::uint16_t kRemotePort = 49152;
constexpr std::uint32_t kBuf = 4096;

HeaderSummary data(std::uint32_t seq, std::uint32_t len, std::uint32_t ack = 0) {
  HeaderSummary s;
  s.seq = seq;
  s.ack = ack;
  s.payload_len = len;
  s.flags = tcpflag::kAck;
  return s;
}

// One installed flow with real buffers, driven run-to-completion.
struct Fixture {
  FlowTable flows{16};
  ContextQueues ctx;
  std::vector<std::uint8_t> rxbuf = std::vector<std::uint8_t>(kBuf);
  std::vector<std::uint8_t> txbuf = std::vector<std::uint8_t>(kBuf);
  std::vector<std::vector<std::uint8_t>> wire, redirected;
  std::vector<CtxQueueEntry> notes;
  std::unique_ptr<Datapath> dp;
  FlowIndex f = 0;

  explicit Fixture(ProtoState st) {
    DatapathSinks sinks;
    sinks.wire = [this](std::vector<std::uint8_t>&& fr, TimeNs, std::uint32_t) { wire.push_back(std::move(fr)); };
    sinks.redirect = [this](std::vector<std::uint8_t>&& fr, TimeNs) { redirected.push_back(std::move(fr)); };
    sinks.notify = [this](std::uint16_t, const CtxQueueEntry& e) {
      notes.push_back(e);
      return true;
    };
    sinks.clock = [] { return TimeNs{0}; };
    dp = std::make_unique<Datapath>(DatapathConfig{}, flows, ctx, sinks);
    f = *flows.allocate();
    PreState pre;
    pre.peer_ip = kRemote;
    pre.local_port = kLocalPort;
    pre.remote_port = kRemotePort;
    PostState post;
    post.opaque = 77;
    post.rx_base = buffer_handle(rxbuf.data());
    post.tx_base = buffer_handle(txbuf.data());
    post.rx_size = kBuf;
    post.tx_size = kBuf;
    flows.install(f, FourTuple{kLocal, kRemote, kLocalPort, kRemotePort}, pre, st, post);
  }

  std::vector<std::uint8_t> segment(std::uint32_t seq, std::span<const std::uint8_t> payload,
                                    std::uint8_t flags = tcpflag::kAck, bool ce = false) const {
    SegmentView v;
    v.ip.src = kRemote;
    v.ip.dst = kLocal;
    v.tcp.src_port = kRemotePort;
    v.tcp.dst_port = kLocalPort;
    v.tcp.seq = seq;
    v.tcp.ack = flows.proto(f).seq;
    v.tcp.flags = flags;
    v.tcp.window = 0xffff;
    v.tcp.ts = TcpTimestamp{1, 0};
    if (ce) v.ip.set_ecn(Ecn::kCe);
    v.payload = payload;
    auto fr = build_segment(v);
    fill_checksum(fr);
    return fr;
  }

  Descriptor run(std::vector<std::uint8_t> frame, TimeNs now = 1000 * kNsPerUs) {
    Descriptor d = Descriptor::rx_frame(std::move(frame), now);
    dp->run_to_completion(d);
    return d;
  }
};

ProtoState receiver(std::uint32_t ack = 1000, std::uint32_t rx_pos = 0) {
  ProtoState st;
  st.ack = ack;
  st.rx_pos = rx_pos;
  st.rx_avail = kBuf;
  st.seq = 9000;
  st.remote_win = 0xffff;
  return st;
}

}  // namespace

TEST_CASE("in-order data advances ack and shrinks the window") {
  ProtoState st = receiver();
  ProtoFlags fl;
  const RxActions a = protocol_rx(st, fl, data(1000, 100), ProtoConfig{});
  CHECK(st.ack == 1100);
  CHECK(st.rx_avail == 3996);
  REQUIRE(a.placement);
  CHECK(a.placement->buf_pos == 0);
  CHECK(a.placement->len == 100);
  CHECK(a.ack_due);
  CHECK(st.rx_pos == 100);
}

TEST_CASE("out-of-order segment opens the interval, gap fill absorbs it") {
  ProtoState st = receiver();
  ProtoFlags fl;
  RxActions a = protocol_rx(st, fl, data(1200, 100), ProtoConfig{});
  CHECK(st.ooo_start == 1200);
  CHECK(st.ooo_len == 100);
  CHECK(st.ack == 1000);
  CHECK(a.ack_due);
  CHECK(a.ooo);
  REQUIRE(a.placement);
  CHECK(a.placement->buf_pos == 200);

  a = protocol_rx(st, fl, data(1000, 200), ProtoConfig{});
  CHECK(st.ack == 1300);
  CHECK(st.ooo_len == 0);
  CHECK(a.inorder_len == 300);
  CHECK(st.rx_avail == kBuf - 300);
}

TEST_CASE("a second disjoint interval is dropped") {
  ProtoState st = receiver();
  ProtoFlags fl;
  protocol_rx(st, fl, data(1200, 100), ProtoConfig{});
  const RxActions a = protocol_rx(st, fl, data(1500, 100), ProtoConfig{});
  CHECK(a.dropped);
  CHECK_FALSE(a.placement);
  CHECK(a.ack_due);
  CHECK(st.ooo_start == 1200);
  CHECK(st.ooo_len == 100);
  // Extending the interval at its tail is allowed.
  protocol_rx(st, fl, data(1300, 50), ProtoConfig{});
  CHECK(st.ooo_len == 150);
}

TEST_CASE("in-order data is trimmed to the receive window") {
  ProtoState st = receiver();
  st.rx_avail = 60;
  ProtoFlags fl;
  const RxActions a = protocol_rx(st, fl, data(1000, 100), ProtoConfig{});
  REQUIRE(a.placement);
  CHECK(a.placement->len == 60);
  CHECK(st.ack == 1060);
  CHECK(st.rx_avail == 0);
}

TEST_CASE("transmit plans respect MSS and the peer window") {
  ProtoState st;
  st.seq = 5000;
  st.tx_avail = 3000;
  st.remote_win = 2000;
  ProtoFlags fl;
  const auto plans = protocol_tx(st, fl, 4096, ProtoConfig{});
  REQUIRE(plans.size() == 2);
  CHECK(plans[0].seq == 5000);
  CHECK(plans[0].len == 1448);
  CHECK(plans[1].seq == 6448);
  CHECK(plans[1].len == 552);
  CHECK(plans[1].buf_pos == 1448);
  CHECK(st.tx_sent == 2000);
  CHECK(st.tx_avail == 1000);
  CHECK(st.seq == 7000);

  const ProtoState before = st;
  CHECK(protocol_tx(st, fl, 4096, ProtoConfig{}).empty());  // window full
  CHECK(st == before);

  ProtoState idle;
  idle.remote_win = 0xffff;
  CHECK(protocol_tx(idle, fl, 4096, ProtoConfig{}).empty());
}

TEST_CASE("retransmit resets to the last acked byte") {
  ProtoState st;
  st.seq = 8000;
  st.tx_sent = 2896;
  st.tx_avail = 104;
  st.dupack_cnt = 2;
  ProtoFlags fl;
  const HcResult r = protocol_hc(st, fl, CtxQueueEntry::retransmit(0), ProtoConfig{});
  CHECK(r.reset);
  CHECK(r.sched_hint);
  CHECK(st.seq == 5104);
  CHECK(st.tx_avail == 3000);
  CHECK(st.tx_sent == 0);
  CHECK(st.dupack_cnt == 0);
}

TEST_CASE("third duplicate ack triggers fast retransmit") {
  ProtoState st;
  st.seq = 8000;
  st.tx_sent = 2896;
  st.tx_avail = 104;
  st.remote_win = 5000;
  st.rx_avail = kBuf;
  ProtoFlags fl;
  HeaderSummary dup = data(0, 0, 5104);
  dup.window = 5000;
  CHECK_FALSE(protocol_rx(st, fl, dup, ProtoConfig{}).fast_retransmit);
  CHECK_FALSE(protocol_rx(st, fl, dup, ProtoConfig{}).fast_retransmit);
  CHECK(st.dupack_cnt == 2);
  CHECK(protocol_rx(st, fl, dup, ProtoConfig{}).fast_retransmit);
  CHECK(st.seq == 5104);
  CHECK(st.tx_avail == 3000);
  CHECK(st.tx_sent == 0);
  CHECK(st.dupack_cnt == 0);

  // Go-back-N: the next emission starts at the acked sequence number.
  const auto plans = protocol_tx(st, fl, 1448, ProtoConfig{});
  REQUIRE_FALSE(plans.empty());
  CHECK(plans[0].seq == 5104);
}

TEST_CASE("acks free transmit buffer") {
  ProtoState st;
  st.seq = 7000;
  st.tx_sent = 2000;
  st.tx_pos = 100;
  st.remote_win = 0xffff;
  ProtoFlags fl;
  HeaderSummary s = data(0, 0, 6448);
  s.window = 0xffff;
  const RxActions a = protocol_rx(st, fl, s, ProtoConfig{});
  CHECK(a.freed_tx == 1448);
  CHECK(st.tx_sent == 552);
  CHECK(st.tx_pos == 1548);
}

TEST_CASE("tx bump and fin") {
  ProtoState st;
  st.remote_win = 0xffff;
  ProtoFlags fl;
  const HcResult r = protocol_hc(st, fl, CtxQueueEntry::tx_bump(0, 512), ProtoConfig{});
  CHECK(st.tx_avail == 512);
  CHECK(r.sched_hint);

  protocol_hc(st, fl, CtxQueueEntry::fin(0), ProtoConfig{});
  CHECK(fl.fin_pending);
  auto plans = protocol_tx(st, fl, 300, ProtoConfig{});
  REQUIRE(plans.size() == 1);
  CHECK_FALSE(plans[0].fin);
  plans = protocol_tx(st, fl, 4096, ProtoConfig{});
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].len == 212);
  CHECK(plans[0].fin);
  CHECK(fl.fin_sent);
}

TEST_CASE("protocol operations preserve state invariants") {
  std::mt19937 rng(11);
  ProtoConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    ProtoState st = receiver(rng(), rng() % kBuf);
    st.seq = rng();
    ProtoFlags fl;
    std::uint32_t peer_next = st.ack;
    for (int step = 0; step < 300; ++step) {
      switch (rng() % 5) {
        case 0:
          if (st.tx_avail + st.tx_sent < kBuf)
            protocol_hc(st, fl, CtxQueueEntry::tx_bump(0, rng() % (kBuf - st.tx_avail - st.tx_sent) + 1), cfg);
          break;
        case 1:
          protocol_tx(st, fl, rng() % 4096, cfg);
          break;
        case 2: {
          HeaderSummary s = data(peer_next + rng() % 600 - 200, rng() % 800, st.seq - st.tx_sent + (st.tx_sent ? rng() % st.tx_sent : 0));
          s.window = static_cast<std::uint16_t>(rng());
          protocol_rx(st, fl, s, cfg);
          if (rng() % 2) peer_next = st.ack;
          break;
        }
        case 3: {
          const std::uint32_t used = kBuf - st.rx_avail;
          if (used) protocol_hc(st, fl, CtxQueueEntry::rx_bump(0, rng() % used + 1), cfg);
          break;
        }
        case 4:
          if (rng() % 10 == 0) protocol_hc(st, fl, CtxQueueEntry::retransmit(0), cfg);
          break;
      }
      const auto err = check_invariants(st, fl, kBuf, kBuf);
      INFO(describe(st));
      REQUIRE_FALSE(err);
    }
  }
}

TEST_CASE("ring copies wrap") {
  std::vector<std::uint8_t> ring(kBuf, 0);
  std::vector<std::uint8_t> src(100);
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = static_cast<std::uint8_t>(i + 1);
  copy_into_ring(buffer_handle(ring.data()), kBuf, kBuf - 40, src);
  CHECK(ring[kBuf - 40] == 1);
  CHECK(ring[kBuf - 1] == 40);
  CHECK(ring[0] == 41);
  CHECK(ring[59] == 100);
  CHECK(ring[60] == 0);

  std::vector<std::uint8_t> back(100);
  copy_from_ring(buffer_handle(ring.data()), kBuf, kBuf - 40, back);
  CHECK(back == src);
}

TEST_CASE("pre-processing redirects, drops and summarizes") {
  Fixture fx(receiver());
  const std::vector<std::uint8_t> payload(100, 0xab);

  Descriptor syn = fx.run(fx.segment(1000, {}, tcpflag::kSyn));
  CHECK(syn.fate == Fate::kRedirect);
  CHECK(fx.redirected.size() == 1);

  auto bad = fx.segment(1000, payload);
  bad.back() ^= 0x01;
  Descriptor dropped = fx.run(bad);
  CHECK(dropped.fate == Fate::kDrop);
  CHECK(dropped.reason == DropReason::kChecksum);

  Descriptor none = fx.run(fx.segment(1000, {}, 0));
  CHECK(none.fate == Fate::kRedirect);

  Descriptor ok = fx.run(fx.segment(1000, payload));
  CHECK(ok.fate == Fate::kForward);
  CHECK(ok.summary.flow == fx.f);
  CHECK(ok.summary.seq == 1000);
  CHECK(ok.summary.payload_len == 100);
  CHECK(ok.summary.has_ts);
}

TEST_CASE("unknown tuple goes to the control plane") {
  Fixture fx(receiver());
  auto fr = fx.segment(1000, {});
  store_be16(&fr[kEthHeaderLen + kIpv4HeaderLen], 1234);  // source port
  fill_checksum(fr);
  Descriptor d = fx.run(fr);
  CHECK(d.fate == Fate::kRedirect);
  CHECK(d.reason == DropReason::kUnknownFlow);
}

TEST_CASE("received payload lands in the buffer and is acknowledged with ECE on CE") {
  Fixture fx(receiver(1000, kBuf - 40));
  std::vector<std::uint8_t> payload(100);
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(i);
  fx.run(fx.segment(1000, payload, tcpflag::kAck, true));

  for (std::size_t i = 0; i < 40; ++i) CHECK(fx.rxbuf[kBuf - 40 + i] == i);
  for (std::size_t i = 0; i < 60; ++i) CHECK(fx.rxbuf[i] == 40 + i);

  REQUIRE(fx.wire.size() == 1);
  auto ack = parse_segment(fx.wire[0]);
  REQUIRE(ack);
  CHECK(ack->tcp.ack == 1100);
  CHECK((ack->tcp.flags & tcpflag::kEce) != 0);
  CHECK(ack->tcp.window == kBuf - 100);
  CHECK(verify_checksum(*ack));

  REQUIRE(fx.notes.size() == 1);
  CHECK(fx.notes[0].kind == CtxKind::kRxDataNotify);
  CHECK(fx.notes[0].op[0] == 77);
  CHECK(fx.notes[0].length() == 100);

  fx.run(fx.segment(1100, payload));
  auto plain = parse_segment(fx.wire.back());
  REQUIRE(plain);
  CHECK((plain->tcp.flags & tcpflag::kEce) == 0);
}

TEST_CASE("post-processing counts acked bytes and smooths rtt") {
  ProtoState st = receiver();
  st.seq = 7000;
  st.tx_sent = 1448;
  Fixture fx(st);
  fx.flows.post(fx.f).rtt_est = 100000;

  const TimeNs t = 5000 * kNsPerUs;
  SegmentView v;
  v.ip.src = kRemote;
  v.ip.dst = kLocal;
  v.tcp.src_port = kRemotePort;
  v.tcp.dst_port = kLocalPort;
  v.tcp.seq = 1000;
  v.tcp.ack = 7000;
  v.tcp.flags = tcpflag::kAck | tcpflag::kEce;
  v.tcp.window = 0xffff;
  v.tcp.ts = TcpTimestamp{1, 5000};
  auto fr = build_segment(v);
  fill_checksum(fr);
  fx.run(fr, t + 120 * kNsPerUs);

  const PostState& ps = fx.flows.post(fx.f);
  CHECK(ps.cnt_ackb == 1448);
  CHECK(ps.cnt_ecnb == 1448);
  CHECK(ps.rtt_est == 102500);
  bool freed = false;
  for (const auto& e : fx.notes) freed |= e.kind == CtxKind::kTxSpaceFreed && e.length() == 1448;
  CHECK(freed);
}

TEST_CASE("batched commands become hc descriptors in order") {
  ContextQueues q;
  const auto id = q.create();
  for (std::uint64_t n : {10, 20, 30}) q.get(id).cmd.push(CtxQueueEntry::tx_bump(0, n));
  q.ring_doorbell(id);
  DescriptorPool pool(8);
  CommandFetcher fetch;
  std::vector<std::uint64_t> lens;
  const auto n = fetch.poll(q, pool, [&](Descriptor& d) {
    lens.push_back(d.cmd.length());
    return true;
  }, 0);
  CHECK(n == 3);
  CHECK(lens == std::vector<std::uint64_t>{10, 20, 30});
  CHECK(pool.in_use() == 3);
}

TEST_CASE("pool exhaustion defers without losing commands") {
  ContextQueues q;
  const auto id = q.create();
  DescriptorPool pool(1);
  CommandFetcher fetch;
  std::vector<std::uint64_t> got;
  auto submit = [&](Descriptor& d) {
    got.push_back(d.cmd.length());
    return true;
  };
  q.get(id).cmd.push(CtxQueueEntry::tx_bump(0, 1));
  q.ring_doorbell(id);
  q.get(id).cmd.push(CtxQueueEntry::tx_bump(0, 2));
  q.ring_doorbell(id);
  CHECK(fetch.poll(q, pool, submit, 0) == 1);
  CHECK(fetch.poll(q, pool, submit, 0) == 0);
  CHECK(fetch.deferrals() >= 1);
  pool.release();
  CHECK(fetch.poll(q, pool, submit, 0) == 1);
  CHECK(got == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("wakeup fires once per arming") {
  Wakeup w;
  CHECK_FALSE(w.signal());  // not sleeping
  w.arm();
  CHECK(w.signal());
  CHECK_FALSE(w.signal());
  CHECK(w.signals() == 1);
  CHECK(w.wait_for(std::chrono::milliseconds(1)));
  w.arm();
  CHECK(w.signal());
  CHECK(w.signals() == 2);
}
