#pragma once

#include <vector>

#include "tcpipe/harness/scenario.hpp"

namespace tcpipe {

// Scenario shapes shared by the bench CLI and the acceptance checks.

// 64 B echo, pipelined, fixed message count per connection.
ScenarioConfig echo_preset(std::uint32_t conns, std::uint32_t depth, double loss);
// Same traffic, bounded by virtual time instead of message count.
ScenarioConfig loss_preset(double loss, TimeNs duration);
std::vector<double> loss_sweep_points();

// Bulk flows from one host through a capped link.
ScenarioConfig fairness_preset(std::uint32_t conns, TimeNs duration);

// 64 KB requests, 32 B responses, four senders into a shaped server port
// with ECN marking.
ScenarioConfig incast_preset(CcPolicy cc, TimeNs duration);

}  // namespace tcpipe
