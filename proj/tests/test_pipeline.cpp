#include <map>
#include <random>

#include "doctest.h"
#include "tcpipe/pipeline/engine.hpp"

using namespace tcpipe;

namespace {

Descriptor tagged(std::uint64_t tag) { return Descriptor::rx_frame({}, static_cast<TimeNs>(tag)); }

std::vector<std::uint64_t> times(const std::vector<Descriptor>& v) {
  std::vector<std::uint64_t> out;
  for (const auto& d : v) out.push_back(static_cast<std::uint64_t>(d.time));
  return out;
}

struct Trace {
  std::map<std::uint32_t, std::vector<TimeNs>> protocol, egress;
};

StageFns recording(Trace& t) {
  StageFns f;
  f.classify = [](const Descriptor& d) { return static_cast<std::uint32_t>(d.time % 2); };
  f.protocol = [&t](Descriptor& d) { t.protocol[d.group].push_back(d.time); };
  f.egress = [&t](Descriptor& d) { t.egress[d.group].push_back(d.time); };
  return f;
}

bool increasing(const std::vector<TimeNs>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1]) return false;
  return true;
}

}  // namespace

TEST_CASE("sequencer numbers each domain from zero") {
  Sequencer s(2);
  Descriptor a, b, c, x;
  s.assign_epoch(a, 0);
  s.assign_epoch(b, 0);
  s.assign_epoch(x, 1);
  s.assign_epoch(c, 0);
  CHECK(a.epoch == 0);
  CHECK(b.epoch == 1);
  CHECK(c.epoch == 2);
  CHECK(x.epoch == 0);
  CHECK(s.peek(0) == 3);
  CHECK(s.peek(1) == 1);
}

TEST_CASE("reorder buffer releases contiguous runs") {
  ReorderBuffer rb(8, 1);
  std::vector<Descriptor> out;
  Descriptor d2 = tagged(2), d1 = tagged(1), d3 = tagged(3);
  d2.epoch = 2;
  d1.epoch = 1;
  d3.epoch = 3;

  CHECK(rb.push(d2, out) == ReorderStatus::kAccepted);
  CHECK(out.empty());
  CHECK(rb.held() == 1);

  CHECK(rb.push(d1, out) == ReorderStatus::kAccepted);
  CHECK(times(out) == std::vector<std::uint64_t>{1, 2});
  out.clear();

  CHECK(rb.push(d3, out) == ReorderStatus::kAccepted);
  CHECK(times(out) == std::vector<std::uint64_t>{3});
  CHECK(rb.next_expected() == 4);
  CHECK(rb.held() == 0);
}

TEST_CASE("reorder buffer refuses beyond capacity and rejects stale epochs") {
  ReorderBuffer rb(2, 0);
  std::vector<Descriptor> out;
  Descriptor a = tagged(3), b = tagged(4), c = tagged(5);
  a.epoch = 3;
  b.epoch = 4;
  c.epoch = 5;
  CHECK(rb.push(a, out) == ReorderStatus::kAccepted);
  CHECK(rb.push(b, out) == ReorderStatus::kAccepted);
  CHECK(rb.push(c, out) == ReorderStatus::kCapacityExceeded);
  CHECK(c.time == 5);  // left intact for retry
  CHECK(rb.held() == 2);

  Descriptor dup = tagged(9);
  dup.epoch = 3;
  CHECK(rb.push(dup, out) == ReorderStatus::kStale);

  Descriptor z = tagged(0);
  z.epoch = 0;
  CHECK(rb.push(z, out) == ReorderStatus::kAccepted);
  REQUIRE(out.size() == 1);
  Descriptor old = tagged(0);
  old.epoch = 0;
  CHECK(rb.push(old, out) == ReorderStatus::kStale);
}

TEST_CASE("reorder by explicit key") {
  ReorderBuffer rb(4, 0);
  std::vector<Descriptor> out;
  Descriptor a = tagged(10), b = tagged(20);
  CHECK(rb.push(b, 1, out) == ReorderStatus::kAccepted);
  CHECK(out.empty());
  CHECK(rb.push(a, 0, out) == ReorderStatus::kAccepted);
  CHECK(times(out) == std::vector<std::uint64_t>{10, 20});
}

TEST_CASE("topology validation") {
  CHECK_NOTHROW(Topology::scalar().validate());
  CHECK_NOTHROW(Topology::replicated(4, 3).validate());
  CHECK_NOTHROW(Topology::scalar(2).with_xdp(2).validate());

  Topology t = Topology::scalar();
  t.find(StageKind::kProtocol)->replication = 2;
  CHECK_THROWS_AS(t.validate(), InvalidTopology);

  Topology r = Topology::replicated(1, 2);
  for (auto& s : r.stages) s.reorder_after = false;
  CHECK_THROWS_AS(r.validate(), InvalidTopology);

  Topology e;
  e.flow_groups = 0;
  CHECK_THROWS_AS(e.validate(), InvalidTopology);
  CHECK_THROWS_AS(Topology::from_json("{\"stages\":[{\"stage\":\"bogus\"}]}"), InvalidTopology);
  CHECK_THROWS_AS(Topology::from_json("not json"), InvalidTopology);
}

TEST_CASE("topology json round trip") {
  const Topology t = Topology::replicated(3, 2).with_xdp(2);
  const Topology u = Topology::from_json(t.to_json());
  REQUIRE(u.stages.size() == t.stages.size());
  CHECK(u.flow_groups == 3);
  for (std::size_t i = 0; i < t.stages.size(); ++i) {
    CHECK(u.stages[i].kind == t.stages[i].kind);
    CHECK(u.stages[i].replication == t.stages[i].replication);
    CHECK(u.stages[i].reorder_after == t.stages[i].reorder_after);
  }
}

TEST_CASE("replicated stages deliver per-group order under adversarial scheduling") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Trace t;
    Engine e(Topology::replicated(2, 3), recording(t));
    for (std::uint64_t i = 0; i < 200; ++i) {
      Descriptor d = tagged(i);
      REQUIRE(e.submit(d));
    }
    std::mt19937_64 rng(seed);
    e.run_adversarial(rng, 4);
    CHECK(e.counters().protocol_order_violations == 0);
    for (std::uint32_t g = 0; g < 2; ++g) {
      CHECK(t.protocol[g].size() == 100);
      CHECK(increasing(t.protocol[g]));
      CHECK(t.egress[g].size() == 100);
      CHECK(increasing(t.egress[g]));
    }
  }
}

TEST_CASE("scalar engine drains in submission order") {
  Trace t;
  Engine e(Topology::scalar(1), recording(t));
  CHECK(e.instance_count() > 0);
  for (std::uint64_t i = 0; i < 50; ++i) {
    Descriptor d = tagged(i * 2);  // all in group 0
    REQUIRE(e.submit(d));
  }
  e.run_until_idle();
  CHECK(e.idle());
  CHECK(t.egress[0].size() == 50);
  CHECK(increasing(t.egress[0]));
}

TEST_CASE("without reorderers replication visibly reorders") {
  bool reordered = false;
  for (std::uint64_t seed = 1; seed <= 20 && !reordered; ++seed) {
    Trace t;
    EngineOptions o;
    o.disable_reorder = true;
    Engine e(Topology::replicated(1, 3), recording(t), o);
    for (std::uint64_t i = 0; i < 100; ++i) {
      Descriptor d = tagged(i * 2);
      REQUIRE(e.submit(d));
    }
    std::mt19937_64 rng(seed);
    e.run_adversarial(rng, 4);
    reordered = !increasing(t.protocol[0]) || !increasing(t.egress[0]);
  }
  CHECK(reordered);
}

TEST_CASE("topology json with a malformed stage entry") {
  CHECK_THROWS_AS(Topology::from_json("{\"stages\":[{\"kind\":\"pre\"}]}"), InvalidTopology);
  CHECK_THROWS_AS(Topology::from_json("{\"stages\":[{\"stage\":3}]}"), InvalidTopology);
}
