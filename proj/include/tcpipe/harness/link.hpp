#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <unordered_map>
#include <vector>

#include "tcpipe/core/types.hpp"
#include "tcpipe/harness/sim.hpp"

namespace tcpipe {

struct DropWindow {
  TimeNs start = 0;
  TimeNs end = 0;
};

// One switch output port: a FIFO served at `bandwidth_bps`, followed by
// propagation delay.
struct LinkConfig {
  double bandwidth_bps = 10e9;
  TimeNs prop_delay = 2 * kNsPerUs;
  TimeNs jitter = 0;              // uniform extra delay in [0, jitter]
  double loss = 0.0;
  double reorder = 0.0;           // probability of an extra reorder_delay
  TimeNs reorder_delay = 10 * kNsPerUs;
  std::size_t queue_capacity = 4096;  // packets; tail drop beyond
  std::size_t ecn_threshold = 64;     // mark CE above this many queued packets; 0 = off
  std::vector<DropWindow> drop_windows;
  std::uint64_t seed = 1;
};

struct LinkStats {
  std::uint64_t in = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_loss = 0;
  std::uint64_t dropped_queue = 0;
  std::uint64_t dropped_script = 0;
  std::uint64_t ce_marked = 0;
  std::uint64_t bytes_delivered = 0;
  std::size_t max_queue = 0;

  std::uint64_t dropped() const { return dropped_loss + dropped_queue + dropped_script; }
};

class Link {
 public:
  using Deliver = std::function<void(std::vector<std::uint8_t>&& frame)>;
  using Tap = std::function<void(const std::vector<std::uint8_t>& frame, TimeNs t)>;

  Link(Simulator& sim, LinkConfig cfg, Deliver deliver);

  void send(std::vector<std::uint8_t>&& frame);
  void set_tap(Tap tap) { tap_ = std::move(tap); }

  std::size_t queue_len() const { return queued_; }
  // Accepted but not yet delivered (queued or propagating).
  std::uint64_t in_flight() const { return stats_.in - stats_.delivered - stats_.dropped(); }
  const LinkStats& stats() const { return stats_; }
  LinkConfig& config() { return cfg_; }

 private:
  Simulator& sim_;
  LinkConfig cfg_;
  Deliver deliver_;
  Tap tap_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  LinkStats stats_;
  std::size_t queued_ = 0;
  TimeNs busy_until_ = 0;
};

// Star topology: every host hangs off one switch port. Frames are switched
// by destination IPv4 address.
class Network {
 public:
  explicit Network(Simulator& sim) : sim_(sim) {}

  // Registers a host and the switch port that feeds it.
  Link& attach(Ipv4Addr ip, LinkConfig port, Link::Deliver to_host);
  void send(std::vector<std::uint8_t>&& frame);
  Link* port(Ipv4Addr ip);
  std::vector<Link*> ports();
  std::uint64_t unroutable() const { return unroutable_; }

 private:
  Simulator& sim_;
  std::vector<std::unique_ptr<Link>> links_;
  std::unordered_map<Ipv4Addr, Link*> by_ip_;
  std::uint64_t unroutable_ = 0;
};

}  // namespace tcpipe
