#include <cmath>

#include "doctest.h"
#include "tcpipe/scheduler/carousel.hpp"

using namespace tcpipe;

namespace {

CarouselConfig with_burst(std::uint32_t burst) {
  CarouselConfig c;
  c.burst = burst;
  return c;
}

// Backlogged single flow; returns bytes granted in [0, horizon].
std::uint64_t paced_bytes(std::uint64_t rate, TimeNs horizon) {
  Carousel c;
  const FlowIndex f = 0;
  c.set_rate(f, rate);
  c.update(f, 0xffffffffu, 0);
  std::uint64_t bytes = 0;
  for (;;) {
    const auto t = c.next_wheel_time();
    if (!t || *t > horizon) break;
    for (const auto& g : c.poll(*t)) bytes += g.quantum;
  }
  return bytes;
}

}  // namespace

TEST_CASE("rate converts to a per-byte interval") {
  Carousel c;
  c.set_rate(1, 1'000'000'000);
  CHECK(c.interval_fp(1) == (1ull << 32));
  CHECK(c.interval_ns(1) == doctest::Approx(1.0));
  c.set_rate(2, 100'000'000);
  CHECK(c.interval_ns(2) == doctest::Approx(10.0));
  c.set_rate(2, 0);
  CHECK(c.interval_fp(2) == 0);
}

TEST_CASE("deadline rounds up to a slot") {
  Carousel c(with_burst(1500));
  c.set_rate(0, 1'000'000'000);
  const auto slot = c.enqueue_flow(0, 0);
  REQUIRE(slot);
  CHECK(*slot == 2);
  CHECK(c.enqueued(0));
  CHECK(c.next_wheel_time() == 2 * kNsPerUs);
}

TEST_CASE("uncongested flows take the round-robin lane") {
  Carousel c;
  c.set_rate(0, 0);
  c.update(0, 100, 0);
  CHECK(c.rr_pending());
  CHECK_FALSE(c.next_wheel_time());
  const auto g = c.poll(0);
  REQUIRE(g.size() == 1);
  CHECK(g[0] == Grant{0, c.config().rr_quantum});
  CHECK_FALSE(c.enqueued(0));
}

TEST_CASE("deadlines past the horizon clamp to the last slot") {
  Carousel c;
  c.set_rate(0, 1);  // one byte per second
  const auto slot = c.enqueue_flow(0, 0);
  REQUIRE(slot);
  CHECK(*slot == static_cast<std::int64_t>(c.config().slots) - 1);
  // The slot passing does not release the flow early.
  c.update(0, 1000, 0);
  CHECK(c.poll(static_cast<TimeNs>(c.config().slots) * kNsPerUs).empty());
  CHECK(c.enqueued(0));
}

TEST_CASE("grants follow slot order") {
  Carousel c(with_burst(1000));
  c.set_rate(1, 222'222'222);  // 4.5 ns/B, deadline 4.5 us, slot 5
  c.set_rate(2, 400'000'000);  // 2.5 ns/B, deadline 2.5 us, slot 3
  c.update(1, 1000, 0);
  c.update(2, 1000, 0);
  CHECK(c.poll(2 * kNsPerUs).empty());
  const auto g = c.poll(5 * kNsPerUs);
  REQUIRE(g.size() == 2);
  CHECK(g[0].flow == 2);
  CHECK(g[1].flow == 1);
}

TEST_CASE("residual backlog is re-enqueued one burst later") {
  Carousel c(with_burst(1500));
  c.set_rate(0, 1'000'000'000);
  c.update(0, 4000, 0);
  CHECK(c.poll(1999).empty());
  CHECK(c.poll(2000).size() == 1);
  CHECK(c.pending(0) == 2500);
  CHECK(c.next_wheel_time() == 3000);  // deadline 1500 + 1500
  CHECK(c.poll(3000).size() == 1);
  CHECK(c.next_wheel_time() == 5000);  // deadline 4500
  CHECK(c.poll(4999).empty());
  CHECK(c.poll(5000).size() == 1);
  CHECK(c.pending(0) == 0);
  CHECK_FALSE(c.enqueued(0));
}

TEST_CASE("rate change applies at the next enqueue") {
  Carousel c(with_burst(1000));
  c.set_rate(0, 1'000'000'000);
  c.update(0, 3000, 0);
  c.set_rate(0, 100'000'000);  // 10 ns/B
  CHECK(c.next_wheel_time() == 1000);
  CHECK(c.poll(1000).size() == 1);
  CHECK(c.next_wheel_time() == 11000);
}

TEST_CASE("a flow stays in one place") {
  Carousel c;
  c.set_rate(0, 1'000'000);
  c.update(0, 100, 0);
  CHECK_FALSE(c.enqueue_flow(0, 0));  // already on the wheel
  c.update(0, 200, 0);
  CHECK(c.pending(0) == 200);
  c.remove(0);
  CHECK_FALSE(c.enqueued(0));
  CHECK_FALSE(c.has_work());
}

TEST_CASE("work conservation with a mix of limited and unlimited flows") {
  Carousel c;
  c.set_rate(0, 1'000);
  c.update(0, 1000, 0);
  c.set_rate(1, 0);
  c.update(1, 1'000'000, 0);
  for (TimeNs t = 0; t < 4; ++t) CHECK_FALSE(c.poll(t).empty());
}

TEST_CASE("round-robin budget limits one poll") {
  Carousel c;
  for (FlowIndex f = 0; f < 5; ++f) c.update(f, 100'000, 0);
  CHECK(c.poll(0, 2).size() == 2);
  CHECK(c.poll(0).size() == 5);
}

TEST_CASE("pacing over a long run sends rate times duration within one burst") {
  const std::uint32_t burst = CarouselConfig{}.burst;
  for (std::uint64_t rate : {1'000'000ull, 10'000'000ull, 100'000'000ull, 1'000'000'000ull}) {
    const TimeNs horizon = rate >= 100'000'000 ? 10 * kNsPerMs : kNsPerSec;
    const double expect = static_cast<double>(rate) * static_cast<double>(horizon) / 1e9;
    const double got = static_cast<double>(paced_bytes(rate, horizon));
    INFO("rate " << rate);
    CHECK(std::abs(got - expect) <= burst);
  }
}
