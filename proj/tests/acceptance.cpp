// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "tcpipe/core/seq.hpp"
#include "tcpipe/core/wire.hpp"
#include "tcpipe/datapath/datapath.hpp"
#include "tcpipe/harness/link.hpp"
#include "tcpipe/harness/oracle.hpp"
#include "tcpipe/harness/parallel.hpp"
#include "tcpipe/harness/presets.hpp"
#include "tcpipe/harness/scenario.hpp"
#include "tcpipe/plugins/builtin.hpp"

using namespace tcpipe;

namespace {

using Clock = std::chrono::steady_clock;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Status::kPass : Status::kFail, std::move(d)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::uint64_t counter(const TraceReport& r, const std::string& k) {
  auto it = r.counters.find(k);
  return it == r.counters.end() ? 0 : it->second;
}

// --- 1: oracle equivalence -------------------------------------------------

Outcome c1_oracle() {
  constexpr int kTraces = 100;
  const auto t0 = Clock::now();
  std::size_t segments = 0;
  for (int s = 1; s <= kTraces; ++s) {
    TraceGenConfig g;
    g.seed = static_cast<std::uint64_t>(s);
    g.segments = 10000;
    g.loss = 0.05;
    const Trace t = generate_trace(g);
    segments += t.rx_segments();
    EngineReplayConfig e;
    e.seed = static_cast<std::uint64_t>(s) * 31 + 7;
    const DivergenceReport d = oracle_compare(t, e);
    if (!d.empty()) return fail(fmt("seed %d diverged: %s", s, d.summary(3).c_str()));
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return verdict(secs < 300, fmt("%d traces, %zu rx segments, 0 divergences, %.1f s", kTraces, segments, secs));
}

// --- 2: loss robustness ----------------------------------------------------

Outcome c2_loss() {
  const TraceReport clean = run_scenario(echo_preset(100, 8, 0.0));
  const TraceReport lossy = run_scenario(echo_preset(100, 8, 0.02));
  const bool ok = clean.complete && clean.hashes_ok && lossy.complete && lossy.hashes_ok &&
                  lossy.throughput_bps > 0 && lossy.throughput_bps * 10 >= clean.throughput_bps;
  return verdict(ok, fmt("p=0: %.3f Gb/s, p=0.02: %.3f Gb/s (ratio %.2f), hashes %s/%s, retransmits %llu",
                         clean.throughput_bps / 1e9, lossy.throughput_bps / 1e9,
                         clean.throughput_bps / std::max(lossy.throughput_bps, 1.0),
                         clean.hashes_ok ? "ok" : "BAD", lossy.hashes_ok ? "ok" : "BAD",
                         static_cast<unsigned long long>(counter(lossy, "ctrl.retransmits"))));
}

// --- 3: single out-of-order interval ---------------------------------------

// Receiver with one installed flow, run to completion per segment.
struct Receiver {
  static constexpr std::uint32_t kBuf = 64 * 1024;
  const Ipv4Addr local = make_ip(10, 0, 0, 2);
  const Ipv4Addr remote = make_ip(10, 0, 0, 1);
  FlowTable flows{4};
  ContextQueues ctx;
  std::vector<std::uint8_t> rx = std::vector<std::uint8_t>(kBuf);
  std::vector<std::uint8_t> tx = std::vector<std::uint8_t>(kBuf);
  std::vector<std::vector<std::uint8_t>> wire;
  std::unique_ptr<Datapath> dp;
  FlowIndex f = 0;

  explicit Receiver(std::uint32_t irs) {
    DatapathSinks s;
    s.wire = [this](std::vector<std::uint8_t>&& fr, TimeNs, std::uint32_t) { wire.push_back(std::move(fr)); };
    s.notify = [](std::uint16_t, const CtxQueueEntry&) { return true; };
    s.clock = [] { return TimeNs{0}; };
    dp = std::make_unique<Datapath>(DatapathConfig{}, flows, ctx, s);
    f = *flows.allocate();
    ProtoState st;
    st.ack = irs;
    st.rx_avail = kBuf;
    st.seq = 1;
    st.remote_win = 0xffff;
    PostState post;
    post.rx_base = buffer_handle(rx.data());
    post.tx_base = buffer_handle(tx.data());
    post.rx_size = post.tx_size = kBuf;
    flows.install(f, FourTuple{local, remote, 80, 5555}, PreState{}, st, post);
  }

  void deliver(std::uint32_t seq, std::span<const std::uint8_t> payload) {
    SegmentView v;
    v.ip.src = remote;
    v.ip.dst = local;
    v.tcp.src_port = 5555;
    v.tcp.dst_port = 80;
    v.tcp.seq = seq;
    v.tcp.ack = 1;
    v.tcp.flags = tcpflag::kAck;
    v.tcp.window = 0xffff;
    v.payload = payload;
    auto fr = build_segment(v);
    fill_checksum(fr);
    Descriptor d = Descriptor::rx_frame(std::move(fr), 0);
    dp->run_to_completion(d);
  }
};

Outcome c3_ooo() {
  std::size_t checked = 0, dropped_ok = 0;
  for (std::uint64_t trial = 1; trial <= 200; ++trial) {
    std::mt19937_64 rng(trial);
    const std::uint32_t irs = static_cast<std::uint32_t>(rng());
    Receiver r(irs);
    std::vector<std::uint8_t> stream(24 * 1024);
    for (auto& b : stream) b = static_cast<std::uint8_t>(rng());

    // Independent model of the receiver: next expected offset plus one interval.
    std::uint32_t ack = 0, os = 0, oe = 0;
    for (int step = 0; step < 400 && ack < stream.size(); ++step) {
      std::uint32_t off, len;
      if (rng() % 4 == 0) {
        off = ack;
      } else {
        off = ack + static_cast<std::uint32_t>(rng() % 6000);
        if (rng() % 5 == 0 && off > 3000) off -= 3000 + static_cast<std::uint32_t>(rng() % 3000);
      }
      len = 1 + static_cast<std::uint32_t>(rng() % 1448);
      if (off >= stream.size()) continue;
      len = std::min<std::uint32_t>(len, static_cast<std::uint32_t>(stream.size()) - off);
      const bool old = off + len <= ack;
      const bool straddles = off < ack && !old;
      if (straddles) continue;  // partially old: trimming rules, not this property

      const bool in_order = off == ack;
      const bool have = oe > os;
      const bool touches = have && off <= oe && off + len >= os;
      const bool neither = old || (!in_order && have && !touches);

      const std::size_t frames = r.wire.size();
      const std::uint32_t ooo_before = r.flows.proto(r.f).ooo_len;
      r.deliver(irs + off, std::span(stream).subspan(off, len));
      const ProtoState& st = r.flows.proto(r.f);

      if (r.wire.size() != frames + 1) return fail(fmt("trial %llu: no ack for a data segment", (unsigned long long)trial));
      auto a = parse_segment(r.wire.back());
      if (!a) return fail("unparseable ack");
      if (neither) {
        ++checked;
        if (st.ooo_len != ooo_before || st.ack != irs + ack)
          return fail(fmt("trial %llu: segment outside the interval changed state", (unsigned long long)trial));
        if (a->tcp.ack != irs + ack)
          return fail(fmt("trial %llu: ack %u, expected %u", (unsigned long long)trial, a->tcp.ack, irs + ack));
        ++dropped_ok;
        continue;
      }
      // Advance the model.
      if (in_order) {
        ack = off + len;
        if (have && os <= ack) {
          ack = std::max(ack, oe);
          os = oe = 0;
        }
      } else if (!have) {
        os = off;
        oe = off + len;
      } else {
        os = std::min(os, off);
        oe = std::max(oe, off + len);
      }
      if (st.ack != irs + ack) return fail(fmt("trial %llu: ack model mismatch", (unsigned long long)trial));
      if (a->tcp.ack != st.ack) return fail("ack does not carry the expected sequence number");
      const bool now_have = oe > os;
      if (now_have != (st.ooo_len > 0) || (now_have && (st.ooo_start != irs + os || st.ooo_len != oe - os)))
        return fail(fmt("trial %llu: interval model mismatch", (unsigned long long)trial));
    }
    // Everything acknowledged matches the original stream.
    for (std::uint32_t i = 0; i < ack; ++i)
      if (r.rx[i % Receiver::kBuf] != stream[i]) return fail("received bytes differ from the stream");
  }
  return verdict(checked > 1000, fmt("200 trials, %zu out-of-interval segments dropped and acked with the expected seq", dropped_ok));
}

// --- 4: go-back-N and RTO liveness -----------------------------------------

Outcome c4_rto() {
  ScenarioConfig c;
  c.workload = Workload::kBulk;
  c.conns = 1;
  c.bulk_bytes = 1 << 20;
  c.duration = 200 * kNsPerMs;
  const TimeNs drop_start = 300 * kNsPerUs;
  const TimeNs drop_len = 3 * CtrlConfig{}.rto.rto_min;  // three minimum RTOs
  c.drop_windows = {{drop_start, drop_start + drop_len}};

  Stack* client = nullptr;
  std::vector<std::uint32_t> una_at_rto;
  std::vector<std::uint32_t> first_seq_after;
  bool awaiting = false;
  ScenarioHooks h;
  h.setup = [&](Simulator&, std::vector<Stack*>& hosts) {
    client = hosts[1];
    client->ctrl().set_rto_observer([&](FlowIndex f, TimeNs) {
      una_at_rto.push_back(client->flows().view(f).una.load());
      awaiting = true;
    });
  };
  h.client_tap = [&](std::size_t, const std::vector<std::uint8_t>& fr, TimeNs) {
    if (!awaiting) return;
    auto s = parse_segment(fr);
    if (!s || s->payload.empty()) return;
    first_seq_after.push_back(s->tcp.seq);
    awaiting = false;
  };
  const TraceReport r = run_scenario(c, h);
  if (una_at_rto.empty()) return fail("no RTO fired during the drop window");
  if (first_seq_after.empty()) return fail("no data segment after the RTO");
  const bool exact = first_seq_after[0] == una_at_rto[0];
  const bool ok = r.complete && r.hashes_ok && exact;
  return verdict(ok, fmt("%zu RTOs, first retransmit seq %u vs una %u, transfer %s, hash %s, elapsed %.2f ms",
                         una_at_rto.size(), first_seq_after[0], una_at_rto[0], r.complete ? "complete" : "INCOMPLETE",
                         r.hashes_ok ? "ok" : "BAD", static_cast<double>(r.elapsed) / 1e6));
}

// --- 5: fairness -------------------------------------------------------------

Outcome c5_fairness() {
  const TraceReport r = run_scenario(fairness_preset(256, 10 * kNsPerSec));
  const bool ok = r.established == 256 && r.jfi >= 0.95 && r.tput_p1_bps >= 0.5 * r.tput_median_bps;
  return verdict(ok, fmt("256 flows, 10 s: JFI %.4f, p1 %.3f Mb/s, median %.3f Mb/s (%.2fx)", r.jfi,
                         r.tput_p1_bps / 1e6, r.tput_median_bps / 1e6,
                         r.tput_median_bps > 0 ? r.tput_p1_bps / r.tput_median_bps : 0.0));
}

// --- 6: congestion control under incast ------------------------------------

Outcome c6_incast() {
  const TimeNs d = 200 * kNsPerMs;
  const TraceReport on = run_scenario(incast_preset(CcPolicy::kDctcp, d));
  const TraceReport off = run_scenario(incast_preset(CcPolicy::kNone, d));
  const double inflation = on.latency_p9999_us > 0 ? off.latency_p9999_us / on.latency_p9999_us : 0.0;
  const bool ok = on.bottleneck_utilization >= 0.9 && on.jfi >= 0.9 && inflation >= 3.0;
  return verdict(ok, fmt("dctcp: util %.3f, JFI %.3f, p99.99 %.0f us; none: p99.99 %.0f us (%.1fx)",
                         on.bottleneck_utilization, on.jfi, on.latency_p9999_us, off.latency_p9999_us, inflation));
}

// --- 7: parallelism ladder -------------------------------------------------

Outcome c7_parallel() {
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw < 9) return {Status::kSkip, fmt("%u hardware threads, need >= 9", hw)};
  const auto ladder = parallel_ladder(2.0);
  std::vector<ParallelResult> res;
  for (const auto& p : ladder) res.push_back(run_parallel(p));
  const double base = res[0].rpcs_per_sec, pipe = res[1].rpcs_per_sec, rep = res[2].rpcs_per_sec;
  const bool ok = res[0].ok && res[1].ok && res[2].ok && pipe >= 1.5 * base && rep >= 1.2 * pipe;
  return verdict(ok, fmt("rpc/s: run-to-completion %.0f, pipelined %.0f (%.2fx), replicated %.0f (%.2fx)", base,
                         pipe, base > 0 ? pipe / base : 0.0, rep, pipe > 0 ? rep / pipe : 0.0));
}

// --- 8: plugins ----------------------------------------------------------------

double echo_rate(bool null_chain) {
  ScenarioConfig c = echo_preset(100, 8, 0.0);
  c.messages = 300;
  c.null_plugin = null_chain;
  const auto t0 = Clock::now();
  const TraceReport r = run_scenario(c);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return r.hashes_ok ? static_cast<double>(r.requests) / secs : 0.0;
}

// Client, proxy and server on one switch. The proxy accepts the client,
// connects to the server, then hands both flows to the splice plugin.
struct SpliceBed {
  Simulator sim;
  Network net{sim};
  PluginChain chain;
  std::shared_ptr<PluginMap> table = make_splice_map();
  std::vector<std::unique_ptr<Stack>> hosts;  // 0 client, 1 proxy, 2 server
  std::vector<SocketLib*> libs;
  std::size_t proxy_frames = 0, bad_checksums = 0;

  SpliceBed() {
    chain.add("splice", splice_plugin(table));
    for (std::size_t i = 0; i < 3; ++i) {
      StackConfig sc;
      sc.name = "host" + std::to_string(i);
      sc.ip = host_ip(i);
      sc.mac = host_mac(i);
      sc.ctrl.seed = 11 + i;
      if (i == 1) {
        sc.topology.with_xdp();
        sc.ingress_chain = &chain;
      }
      auto st = std::make_unique<Stack>(sim, sc);
      Stack* raw = st.get();
      net.attach(sc.ip, LinkConfig{}, [raw](std::vector<std::uint8_t>&& f) { raw->receive(std::move(f)); });
      st->set_output([this](std::vector<std::uint8_t>&& f) { net.send(std::move(f)); });
      hosts.push_back(std::move(st));
    }
    hosts[1]->set_tx_tap([this](const std::vector<std::uint8_t>& f, TimeNs) {
      ++proxy_frames;
      auto s = parse_segment(f);
      if (!s || !verify_checksum(*s) || !verify_ip_checksum(*s)) ++bad_checksums;
    });
    for (auto& h : hosts)
      for (std::size_t j = 0; j < 3; ++j) h->ctrl().add_neighbor(host_ip(j), host_mac(j));
    for (auto& h : hosts) libs.push_back(&h->add_context());
  }

  template <typename F>
  bool until(F done, TimeNs limit = 200 * kNsPerMs) {
    const TimeNs end = sim.now() + limit;
    while (sim.now() < end) {
      for (auto* l : libs) l->poll();
      if (done()) return true;
      for (auto& h : hosts) h->kick();
      sim.run_until(sim.now() + 20 * kNsPerUs);
    }
    return done();
  }
};

Outcome c8_splice() {
  SpliceBed b;
  SocketLib& cl = *b.libs[0];
  SocketLib& px = *b.libs[1];
  SocketLib& sv = *b.libs[2];
  const SocketId sl = sv.listen(8080);
  const SocketId pl = px.listen(7000);
  const SocketId c = cl.connect(host_ip(1), 7000);
  SocketId pa = kNoSocket;
  if (!b.until([&] { return (pa = pa == kNoSocket ? px.accept(pl) : pa) != kNoSocket && cl.role(c) == SockRole::kConnected; }))
    return fail("splice: client never reached the proxy");
  const SocketId pb = px.connect(host_ip(2), 8080);
  SocketId s = kNoSocket;
  if (!b.until([&] { return (s = s == kNoSocket ? sv.accept(sl) : s) != kNoSocket && px.role(pb) == SockRole::kConnected; }))
    return fail("splice: proxy never reached the server");
  b.until([] { return false; }, 2 * kNsPerMs);  // let handshake ACKs settle

  // Install both directions from the proxy's view of the two flows.
  FlowTable& ft = b.hosts[1]->flows();
  const FlowIndex fa = px.flow(pa), fb = px.flow(pb);
  const ProtoState& A = ft.proto(fa);
  const ProtoState& B = ft.proto(fb);
  const FourTuple ta = ft.tuple(fa), tb = ft.tuple(fb);
  SpliceEntry to_server;
  to_server.remote_mac = host_mac(2);
  to_server.remote_ip = tb.remote_ip;
  to_server.local_port = tb.local_port;
  to_server.remote_port = tb.remote_port;
  to_server.seq_delta = B.seq - A.ack;
  to_server.ack_delta = B.ack - A.seq;
  SpliceEntry to_client;
  to_client.remote_mac = host_mac(0);
  to_client.remote_ip = ta.remote_ip;
  to_client.local_port = ta.local_port;
  to_client.remote_port = ta.remote_port;
  to_client.seq_delta = A.seq - B.ack;
  to_client.ack_delta = A.ack - B.seq;
  b.table->put(make_splice_key(ta.remote_ip, ta.local_ip, ta.remote_port, ta.local_port), to_server);
  b.table->put(make_splice_key(tb.remote_ip, tb.local_ip, tb.remote_port, tb.local_port), to_client);
  const std::size_t frames_before = b.proxy_frames;

  std::mt19937_64 rng(5);
  std::vector<std::uint8_t> up(200 * 1024), down(100 * 1024);
  for (auto& x : up) x = static_cast<std::uint8_t>(rng());
  for (auto& x : down) x = static_cast<std::uint8_t>(rng());
  StreamHash up_sent, up_got, down_sent, down_got;
  std::size_t up_off = 0, down_off = 0;
  std::vector<std::uint8_t> buf(16 * 1024);
  const bool done = b.until([&] {
    if (up_off < up.size()) {
      const auto r = cl.send(c, std::span(up).subspan(up_off));
      up_sent.add(std::span(up).subspan(up_off, r.n));
      up_off += r.n;
    }
    if (down_off < down.size()) {
      const auto r = sv.send(s, std::span(down).subspan(down_off));
      down_sent.add(std::span(down).subspan(down_off, r.n));
      down_off += r.n;
    }
    for (IoResult r; (r = sv.recv(s, buf)).n > 0;) up_got.add(std::span(buf).first(r.n));
    for (IoResult r; (r = cl.recv(c, buf)).n > 0;) down_got.add(std::span(buf).first(r.n));
    return up_got.bytes == up.size() && down_got.bytes == down.size();
  });
  const std::uint64_t forwarded = b.hosts[1]->tracepoints().snapshot().counter(Tp::kXdpTx);
  const bool ok = done && up_got.hash == up_sent.hash && down_got.hash == down_sent.hash && b.bad_checksums == 0 &&
                  px.readable_bytes(pa) == 0 && px.readable_bytes(pb) == 0 && forwarded > 0;
  if (!ok)
    return fail(fmt("splice: done=%d up %llu/%zu down %llu/%zu, bad checksums %zu, forwarded %llu", done,
                    static_cast<unsigned long long>(up_got.bytes), up.size(),
                    static_cast<unsigned long long>(down_got.bytes), down.size(), b.bad_checksums,
                    static_cast<unsigned long long>(forwarded)));
  return pass(fmt("splice: 200 KB + 100 KB intact, %zu forwarded segments with valid checksums, none reached the proxy app",
                  b.proxy_frames - frames_before));
}

Outcome c8_plugins() {
  // Wall-clock cost of simulating a saturating echo run, best of three each.
  double none = 0, null_chain = 0;
  for (int i = 0; i < 3; ++i) {
    none = std::max(none, echo_rate(false));
    null_chain = std::max(null_chain, echo_rate(true));
  }
  const double overhead = none > 0 ? 1.0 - null_chain / none : 1.0;
  const Outcome s = c8_splice();
  const bool ok = null_chain > 0 && overhead <= 0.10 && s.status == Status::kPass;
  return verdict(ok, fmt("null chain overhead %.1f%% (%.0f vs %.0f req/s); %s", overhead * 100, null_chain, none,
                         s.detail.c_str()));
}

// --- 9: pacing ---------------------------------------------------------------

Outcome c9_pacing() {
  const TimeNs start = 2 * kNsPerMs;
  const TimeNs span = 50 * kNsPerMs;
  std::string detail;
  bool ok = true;
  for (std::uint64_t rate : {1'000'000ull, 10'000'000ull, 100'000'000ull, 1'000'000'000ull}) {
    ScenarioConfig c;
    c.workload = Workload::kBulk;
    c.conns = 1;
    c.duration = start + span + kNsPerMs;
    c.drain = 0;
    c.rx_buf = c.tx_buf = 1 << 20;
    std::uint64_t bytes = 0;
    ScenarioHooks h;
    h.setup = [&](Simulator& sim, std::vector<Stack*>& hosts) {
      Stack* cl = hosts[1];
      sim.at(start - kNsPerMs, [cl, rate] {
        for (FlowIndex f : cl->flows().active_flows()) cl->carousel().set_rate(f, rate);
      });
    };
    h.client_tap = [&](std::size_t, const std::vector<std::uint8_t>& fr, TimeNs t) {
      if (t < start || t >= start + span) return;
      if (auto s = parse_segment(fr)) bytes += s->payload.size();
    };
    run_scenario(c, h);
    const double expect = static_cast<double>(rate) * static_cast<double>(span) / 1e9;
    const double err = static_cast<double>(bytes) - expect;
    const bool good = std::abs(err) <= kDefaultMss;
    ok = ok && good;
    detail += fmt("%s%.0e B/s: %+.0f B", detail.empty() ? "" : ", ", static_cast<double>(rate), err);
  }
  return verdict(ok, "error vs R*T over 50 ms: " + detail);
}

// --- 10: wire order ----------------------------------------------------------

Outcome c10_wire_order() {
  std::uint64_t segments = 0, violations = 0, retransmits = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ScenarioConfig c;
    c.seed = seed;
    c.adversarial = true;
    c.topology = Topology::replicated(2, 2);
    if (seed % 2) {
      c.workload = Workload::kBulk;
      c.conns = 4;
      c.bulk_bytes = 64 * 1024;
    } else {
      c.workload = Workload::kRpc;
      c.conns = 4;
      c.size = 4096;
      c.response = 64;
      c.depth = 4;
      c.messages = 20;
    }
    std::map<std::pair<std::size_t, std::uint32_t>, std::uint32_t> last;
    ScenarioHooks h;
    h.client_tap = [&](std::size_t host, const std::vector<std::uint8_t>& fr, TimeNs) {
      auto s = parse_segment(fr);
      if (!s || s->payload.empty()) return;
      ++segments;
      const auto key = std::make_pair(host, (std::uint32_t{s->tcp.src_port} << 16) | s->tcp.dst_port);
      auto it = last.find(key);
      if (it != last.end() && seq_lt(s->tcp.seq, it->second)) ++violations;
      last[key] = s->tcp.seq;
    };
    const TraceReport r = run_scenario(c, h);
    retransmits += counter(r, "ctrl.retransmits");
    if (!r.hashes_ok) return fail(fmt("seed %llu: stream hash mismatch", static_cast<unsigned long long>(seed)));
  }
  return verdict(violations == 0, fmt("100 seeds, %llu data segments, %llu order violations, %llu retransmits",
                                      static_cast<unsigned long long>(segments),
                                      static_cast<unsigned long long>(violations),
                                      static_cast<unsigned long long>(retransmits)));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> checks = {
      {1, c1_oracle},   {2, c2_loss},     {3, c3_ooo},      {4, c4_rto},      {5, c5_fairness},
      {6, c6_incast},   {7, c7_parallel}, {8, c8_plugins},  {9, c9_pacing},   {10, c10_wire_order},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [id, fn] : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kSkip ? "SKIP" : "FAIL";
    if (o.status == Status::kFail) ++failures;
    std::printf("C%-2d %s  %s  [%.1fs]\n", id, tag, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
