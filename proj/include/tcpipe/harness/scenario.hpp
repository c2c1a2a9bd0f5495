#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcpipe/ctrl/cc.hpp"
#include "tcpipe/harness/apps.hpp"
#include "tcpipe/harness/link.hpp"
#include "tcpipe/harness/stack.hpp"
#include "tcpipe/pipeline/topology.hpp"

namespace tcpipe {

class ConfigInvalid : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Workload : std::uint8_t { kEcho, kRpc, kBulk };
const char* to_string(Workload w);
Workload workload_from_string(const std::string& s);

struct ScenarioConfig {
  Workload workload = Workload::kEcho;
  std::uint32_t senders = 1;   // client hosts
  std::uint32_t conns = 1;     // per client host
  std::uint32_t size = 64;     // request bytes
  std::uint32_t response = 0;  // rpc response bytes
  std::uint32_t depth = 1;
  std::uint64_t messages = 0;    // per connection; 0 = run for `duration`
  std::uint64_t bulk_bytes = 0;  // per connection; 0 = run for `duration`
  TimeNs duration = 100 * kNsPerMs;
  TimeNs warmup = 0;
  TimeNs drain = 500 * kNsPerMs;  // extra time for outstanding work
  TimeNs connect_spacing = 0;
  std::uint64_t seed = 1;

  Topology topology = Topology::scalar(1);
  ExecMode exec = ExecMode::kPipeline;
  bool adversarial = false;
  unsigned max_stall = 32;

  double nic_rate_bps = 10e9;
  std::size_t nic_queue_frames = 64;
  double link_bps = 10e9;
  double bottleneck_bps = 0;  // switch port toward the server; 0 = link_bps
  TimeNs prop_delay = 2 * kNsPerUs;
  TimeNs jitter = 0;
  double loss = 0.0;
  double reorder = 0.0;
  TimeNs reorder_delay = 10 * kNsPerUs;
  std::size_t queue_capacity = 4096;
  std::size_t ecn_threshold = 64;
  std::vector<DropWindow> drop_windows;  // applied to every switch port

  CcPolicy cc = CcPolicy::kNone;
  double cc_initial_rate = 0.0;  // bytes/s; 0 = line rate
  TimeNs cc_min_interval = 10 * kNsPerUs;
  std::uint32_t rx_buf = 64 * 1024;
  std::uint32_t tx_buf = 64 * 1024;

  bool null_plugin = false;
  std::string pcap_path;

  void validate() const;  // throws ConfigInvalid
};

struct ConnReport {
  std::uint64_t key = 0;  // client address and port
  std::uint64_t sent = 0;      // client to server
  std::uint64_t received = 0;  // server to client
  std::uint64_t messages = 0;
  double throughput_bps = 0.0;
  bool hash_ok = false;
};

struct TraceReport {
  bool complete = false;
  bool hashes_ok = false;
  std::uint64_t established = 0;
  std::uint64_t requests = 0;
  double throughput_bps = 0.0;
  double bottleneck_utilization = 0.0;
  double latency_p50_us = 0.0;
  double latency_p99_us = 0.0;
  double latency_p9999_us = 0.0;
  double jfi = 0.0;
  double tput_p1_bps = 0.0;
  double tput_median_bps = 0.0;
  TimeNs elapsed = 0;
  std::map<std::string, std::uint64_t> counters;
  std::vector<ConnReport> conns;
  bool link_conserved = false;
};

// Observers into a scenario while it runs.
struct ScenarioHooks {
  // Called once all hosts exist, before any traffic.
  std::function<void(Simulator&, std::vector<Stack*>& hosts)> setup;
  // Frames leaving each client host's NIC.
  std::function<void(std::size_t host, const std::vector<std::uint8_t>&, TimeNs)> client_tap;
};

TraceReport run_scenario(const ScenarioConfig& cfg, const ScenarioHooks& hooks = {});

std::string to_json(const TraceReport& r, const ScenarioConfig& cfg);
std::string to_table(const TraceReport& r, const ScenarioConfig& cfg);

Ipv4Addr host_ip(std::size_t i);
MacAddr host_mac(std::size_t i);

}  // namespace tcpipe
