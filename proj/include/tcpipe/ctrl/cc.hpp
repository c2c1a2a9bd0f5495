#pragma once

#include <cstdint>
#include <string>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

enum class CcPolicy : std::uint8_t { kNone, kDctcp, kTimely };

const char* to_string(CcPolicy p);
CcPolicy cc_policy_from_string(const std::string& s);

struct RateLimits {
  double floor = 125'000.0;            // bytes/s (1 Mbit/s)
  double line_rate = 1'250'000'000.0;  // bytes/s (10 Gbit/s)
};

struct DctcpParams {
  double g = 1.0 / 16.0;
  double initial_alpha = 1.0;
  double initial_rate = 0.0;  // bytes/s; 0 = start at line rate
};

struct DctcpState {
  double alpha = 1.0;
  double rate = 0.0;
};

// One DCTCP step from counter deltas. `rtt_ns` sizes the additive increase
// (one MSS per RTT).
void dctcp_update(DctcpState& s, std::uint32_t delta_ackb, std::uint32_t delta_ecnb, double rtt_ns,
                  std::uint32_t mss, const DctcpParams& p, const RateLimits& lim);

struct TimelyParams {
  double ewma = 0.875;          // weight of the newest RTT difference
  double beta = 0.8;
  double delta = 1'250'000.0;   // additive step, bytes/s (10 Mbit/s)
  double t_low_ns = 50'000.0;
  double t_high_ns = 500'000.0;
  std::uint32_t hai_threshold = 5;  // consecutive non-positive gradients before HAI
  double hai_factor = 5.0;
  double initial_rate = 0.0;    // 0 = line rate
};

struct TimelyState {
  double rate = 0.0;
  double prev_rtt_ns = 0.0;
  double rtt_diff_ns = 0.0;
  double min_rtt_ns = 0.0;
  std::uint32_t neg_count = 0;
};

void timely_update(TimelyState& s, double rtt_sample_ns, const TimelyParams& p, const RateLimits& lim);

// Retransmission timeout with exponential backoff.
struct RtoParams {
  TimeNs rto_min = kNsPerMs;
  std::uint32_t backoff_cap = 64;
};

inline TimeNs rto_base(double rtt_ns, const RtoParams& p) {
  const auto four = static_cast<TimeNs>(4.0 * rtt_ns);
  return four > p.rto_min ? four : p.rto_min;
}

}  // namespace tcpipe
