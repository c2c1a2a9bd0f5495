#include "tcpipe/ctrl/cc.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tcpipe {

const char* to_string(CcPolicy p) {
  switch (p) {
    case CcPolicy::kNone: return "none";
    case CcPolicy::kDctcp: return "dctcp";
    case CcPolicy::kTimely: return "timely";
  }
  return "?";
}

CcPolicy cc_policy_from_string(const std::string& s) {
  if (s == "none") return CcPolicy::kNone;
  if (s == "dctcp") return CcPolicy::kDctcp;
  if (s == "timely") return CcPolicy::kTimely;
  throw std::invalid_argument("unknown congestion control policy: " + s);
}

void dctcp_update(DctcpState& s, std::uint32_t delta_ackb, std::uint32_t delta_ecnb, double rtt_ns,
                  std::uint32_t mss, const DctcpParams& p, const RateLimits& lim) {
  const double f = static_cast<double>(delta_ecnb) / static_cast<double>(std::max<std::uint32_t>(delta_ackb, 1));
  s.alpha = std::clamp((1.0 - p.g) * s.alpha + p.g * f, 0.0, 1.0);
  if (f > 0.0) {
    s.rate *= 1.0 - s.alpha / 2.0;
  } else {
    const double rtt_s = std::max(rtt_ns, 1000.0) * 1e-9;
    s.rate += static_cast<double>(mss) / rtt_s;
  }
  s.rate = std::clamp(s.rate, lim.floor, lim.line_rate);
}

void timely_update(TimelyState& s, double rtt, const TimelyParams& p, const RateLimits& lim) {
  if (s.prev_rtt_ns == 0.0) {
    s.prev_rtt_ns = rtt;
    s.min_rtt_ns = rtt;
    return;
  }
  s.min_rtt_ns = std::min(s.min_rtt_ns, rtt);
  const double new_diff = rtt - s.prev_rtt_ns;
  s.prev_rtt_ns = rtt;
  s.rtt_diff_ns = (1.0 - p.ewma) * s.rtt_diff_ns + p.ewma * new_diff;
  const double gradient = s.rtt_diff_ns / std::max(s.min_rtt_ns, 1.0);

  if (rtt < p.t_low_ns) {
    s.rate += p.delta;
    s.neg_count = 0;
  } else if (rtt > p.t_high_ns) {
    s.rate *= 1.0 - p.beta * (1.0 - p.t_high_ns / rtt);
    s.neg_count = 0;
  } else if (gradient <= 0.0) {
    ++s.neg_count;
    s.rate += (s.neg_count >= p.hai_threshold ? p.hai_factor : 1.0) * p.delta;
  } else {
    s.rate *= 1.0 - p.beta * std::min(gradient, 1.0);
    s.neg_count = 0;
  }
  s.rate = std::clamp(s.rate, lim.floor, lim.line_rate);
}

}  // namespace tcpipe
