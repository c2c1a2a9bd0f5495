#include "doctest.h"
#include "json.hpp"
#include "tcpipe/core/wire.hpp"
#include "tcpipe/harness/oracle.hpp"
#include "tcpipe/harness/presets.hpp"
#include "tcpipe/harness/scenario.hpp"

using namespace tcpipe;

namespace {

std::vector<std::uint8_t> ect_frame(std::size_t payload) {
  SegmentView v;
  v.ip.src = make_ip(10, 0, 0, 1);
  v.ip.dst = make_ip(10, 0, 0, 2);
  v.ip.set_ecn(Ecn::kEct0);
  v.tcp.flags = tcpflag::kAck;
  std::vector<std::uint8_t> p(payload, 1);
  v.payload = p;
  auto f = build_segment(v);
  fill_checksum(f);
  return f;
}

std::uint64_t counter(const TraceReport& r, const std::string& k) {
  auto it = r.counters.find(k);
  return it == r.counters.end() ? 0 : it->second;
}

}  // namespace

TEST_CASE("jain index and percentiles") {
  CHECK(jain_index({1, 1, 1, 1}) == doctest::Approx(1.0));
  CHECK(jain_index({1, 0, 0, 0}) == doctest::Approx(0.25));
  CHECK(jain_index({1, 2}) == doctest::Approx(9.0 / 10.0));
  CHECK(percentile({5, 1, 3, 2, 4}, 50) == 3);
  CHECK(percentile({5, 1, 3, 2, 4}, 100) == 5);
  CHECK(percentile({5, 1, 3, 2, 4}, 0) == 1);
}

TEST_CASE("link queues, marks and conserves packets") {
  Simulator sim;
  LinkConfig lc;
  lc.bandwidth_bps = 1e9;
  lc.queue_capacity = 6;
  lc.ecn_threshold = 3;
  std::vector<std::vector<std::uint8_t>> out;
  Link l(sim, lc, [&](std::vector<std::uint8_t>&& f) { out.push_back(std::move(f)); });
  for (int i = 0; i < 10; ++i) l.send(ect_frame(100));
  CHECK(l.queue_len() == 6);
  sim.run();
  const auto& s = l.stats();
  CHECK(s.in == 10);
  CHECK(s.dropped_queue == 4);
  CHECK(s.delivered == 6);
  CHECK(s.ce_marked == 2);  // enqueued with 4 and 5 ahead
  CHECK(s.in == s.delivered + s.dropped() + l.in_flight());
  std::size_t ce = 0;
  for (const auto& f : out) {
    auto seg = parse_segment(f);
    REQUIRE(seg);
    CHECK(verify_ip_checksum(*seg));
    if (seg->ip.ecn() == Ecn::kCe) ++ce;
  }
  CHECK(ce == 2);
}

TEST_CASE("link serializes at its bandwidth") {
  Simulator sim;
  LinkConfig lc;
  lc.bandwidth_bps = 1e9;
  lc.prop_delay = 1000;
  std::vector<TimeNs> at;
  Link l(sim, lc, [&](std::vector<std::uint8_t>&&) { at.push_back(sim.now()); });
  auto f = ect_frame(125 - kMinFrameLen);  // 125 bytes, 1000 ns on the wire
  REQUIRE(f.size() == 125);
  l.send(std::vector<std::uint8_t>(f));
  l.send(std::vector<std::uint8_t>(f));
  sim.run();
  CHECK(at == std::vector<TimeNs>{2000, 3000});
}

TEST_CASE("scripted drop windows") {
  Simulator sim;
  LinkConfig lc;
  lc.drop_windows = {{100, 200}};
  Link l(sim, lc, [](std::vector<std::uint8_t>&&) {});
  sim.at(50, [&] { l.send(ect_frame(10)); });
  sim.at(150, [&] { l.send(ect_frame(10)); });
  sim.at(250, [&] { l.send(ect_frame(10)); });
  sim.run();
  CHECK(l.stats().dropped_script == 1);
  CHECK(l.stats().delivered == 2);
}

TEST_CASE("invalid scenario configuration") {
  ScenarioConfig c;
  c.conns = 0;
  CHECK_THROWS_AS(run_scenario(c), ConfigInvalid);
  c = ScenarioConfig{};
  c.loss = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigInvalid);
  c = ScenarioConfig{};
  c.rx_buf = 3000;
  CHECK_THROWS_AS(c.validate(), ConfigInvalid);
  c = ScenarioConfig{};
  c.warmup = c.duration;
  CHECK_THROWS_AS(c.validate(), ConfigInvalid);
}

TEST_CASE("lossless echo completes without retransmissions") {
  const ScenarioConfig c = echo_preset(1, 1, 0.0);
  const TraceReport r = run_scenario(c);
  CHECK(r.complete);
  CHECK(r.hashes_ok);
  CHECK(r.established == 1);
  CHECK(r.requests == 1000);
  CHECK(counter(r, "ctrl.retransmits") == 0);
  CHECK(r.link_conserved);
  CHECK(r.latency_p50_us > 0);
  CHECK(r.latency_p50_us <= r.latency_p99_us);
  CHECK(r.latency_p99_us <= r.latency_p9999_us);
}

TEST_CASE("lossy echo still delivers every byte") {
  ScenarioConfig c = echo_preset(10, 8, 0.02);
  c.messages = 200;
  const TraceReport r = run_scenario(c);
  CHECK(r.complete);
  CHECK(r.hashes_ok);
  CHECK(counter(r, "ctrl.retransmits") + counter(r, "fast_retransmit") > 0);
}

TEST_CASE("same seed gives identical reports") {
  ScenarioConfig c = echo_preset(4, 4, 0.01);
  c.messages = 100;
  c.seed = 42;
  const std::string a = to_json(run_scenario(c), c);
  const std::string b = to_json(run_scenario(c), c);
  CHECK(a == b);
  c.seed = 43;
  CHECK(to_json(run_scenario(c), c) != a);
}

TEST_CASE("json report schema") {
  ScenarioConfig c = echo_preset(2, 2, 0.0);
  c.messages = 50;
  const auto j = nlohmann::json::parse(to_json(run_scenario(c), c));
  CHECK(j.contains("throughput_bps"));
  CHECK(j.contains("jfi"));
  REQUIRE(j.contains("latency_us"));
  CHECK(j["latency_us"].contains("p50"));
  CHECK(j["latency_us"].contains("p99"));
  CHECK(j["latency_us"].contains("p9999"));
  CHECK(j["counters"].is_object());
  CHECK_FALSE(to_table(run_scenario(c), c).empty());
}

TEST_CASE("rpc and bulk workloads run over replicated stages") {
  ScenarioConfig rpc;
  rpc.workload = Workload::kRpc;
  rpc.size = 2048;
  rpc.response = 64;
  rpc.depth = 4;
  rpc.messages = 100;
  rpc.conns = 3;
  rpc.topology = Topology::replicated(2, 2);
  rpc.adversarial = true;
  const TraceReport r = run_scenario(rpc);
  CHECK(r.complete);
  CHECK(r.hashes_ok);

  ScenarioConfig bulk;
  bulk.workload = Workload::kBulk;
  bulk.conns = 2;
  bulk.bulk_bytes = 200'000;
  const TraceReport b = run_scenario(bulk);
  CHECK(b.complete);
  CHECK(b.hashes_ok);
  CHECK(b.throughput_bps > 0);
}

TEST_CASE("oracle agrees with the scalar and replicated engines") {
  TraceGenConfig g;
  g.segments = 2000;
  g.seed = 5;
  const Trace t = generate_trace(g);
  CHECK(t.rx_segments() >= 1900);
  const ReplayResult expected = replay_oracle(t);
  CHECK(expected.wire_bytes() > 0);

  EngineReplayConfig scalar;
  scalar.topology = Topology::scalar(g.flow_groups);
  const auto d1 = compare(expected, replay_engine(t, scalar));
  CHECK_MESSAGE(d1.empty(), d1.summary());

  EngineReplayConfig rep;
  rep.seed = 77;
  const auto d2 = compare(expected, replay_engine(t, rep));
  CHECK_MESSAGE(d2.empty(), d2.summary());
}

TEST_CASE("oracle comparison catches a disabled reorderer") {
  TraceGenConfig g;
  g.segments = 2000;
  g.seed = 6;
  const Trace t = generate_trace(g);
  EngineReplayConfig cfg;
  cfg.disable_reorder = true;
  CHECK_FALSE(oracle_compare(t, cfg).empty());
}

TEST_CASE("trace generation is deterministic") {
  TraceGenConfig g;
  g.segments = 300;
  g.seed = 9;
  const Trace a = generate_trace(g);
  const Trace b = generate_trace(g);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) CHECK(a.events[i].frame == b.events[i].frame);
}
