#include "tcpipe/harness/presets.hpp"

namespace tcpipe {

ScenarioConfig echo_preset(std::uint32_t conns, std::uint32_t depth, double loss) {
  ScenarioConfig c;
  c.workload = Workload::kEcho;
  c.conns = conns;
  c.size = 64;
  c.depth = depth;
  c.messages = 1000;
  c.loss = loss;
  c.duration = 5 * kNsPerSec;
  return c;
}

ScenarioConfig loss_preset(double loss, TimeNs duration) {
  ScenarioConfig c = echo_preset(100, 8, loss);
  c.messages = 0;
  c.duration = duration;
  c.warmup = duration / 10;
  return c;
}

std::vector<double> loss_sweep_points() { return {0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 2e-2}; }

ScenarioConfig fairness_preset(std::uint32_t conns, TimeNs duration) {
  ScenarioConfig c;
  c.workload = Workload::kBulk;
  c.conns = conns;
  c.duration = duration;
  c.warmup = duration / 10;
  c.drain = 50 * kNsPerMs;
  c.link_bps = 200e6;
  c.nic_rate_bps = 200e6;
  return c;
}

ScenarioConfig incast_preset(CcPolicy cc, TimeNs duration) {
  ScenarioConfig c;
  c.workload = Workload::kRpc;
  c.senders = 4;
  c.conns = 4;
  c.size = 64 * 1024;
  c.response = 32;
  c.depth = 1;
  c.duration = duration;
  c.warmup = duration / 5;
  c.drain = 100 * kNsPerMs;
  c.bottleneck_bps = 2.5e9;  // a quarter of the 10 Gbit/s links
  c.queue_capacity = 256;
  c.ecn_threshold = 64;
  c.cc = cc;
  c.cc_min_interval = 400 * kNsPerUs;
  return c;
}

}  // namespace tcpipe
