#include "tcpipe/harness/link.hpp"

#include "tcpipe/core/wire.hpp"

namespace tcpipe {

Link::Link(Simulator& sim, LinkConfig cfg, Deliver deliver)
    : sim_(sim), cfg_(std::move(cfg)), deliver_(std::move(deliver)), rng_(cfg_.seed) {}

namespace {

std::size_t ip_offset(const std::vector<std::uint8_t>& f) {
  if (f.size() >= 18 && load_be16(&f[12]) == kEtherTypeVlan) return 18;
  return kEthHeaderLen;
}

bool mark_ce(std::vector<std::uint8_t>& f) {
  const std::size_t ip = ip_offset(f);
  if (f.size() < ip + kIpv4HeaderLen) return false;
  const auto ecn = static_cast<Ecn>(f[ip + 1] & 0x3);
  if (ecn != Ecn::kEct0 && ecn != Ecn::kEct1) return false;
  f[ip + 1] = static_cast<std::uint8_t>(f[ip + 1] | 0x3);
  if (ip == kEthHeaderLen) {
    fill_checksum(f);
  } else {
    // Only the IPv4 header checksum covers the TOS byte.
    f[ip + 10] = f[ip + 11] = 0;
    const auto sum = checksum_fold(checksum_partial({&f[ip], kIpv4HeaderLen}));
    store_be16(&f[ip + 10], static_cast<std::uint16_t>(~sum));
  }
  return true;
}

}  // namespace

void Link::send(std::vector<std::uint8_t>&& frame) {
  const TimeNs now = sim_.now();
  ++stats_.in;
  if (tap_) tap_(frame, now);
  // Draw every random variable for every packet so outcomes stay aligned
  // across configurations that differ only in probabilities.
  const double u_loss = unit_(rng_);
  const double u_reorder = unit_(rng_);
  const double u_jitter = unit_(rng_);

  for (const auto& w : cfg_.drop_windows) {
    if (now >= w.start && now < w.end) {
      ++stats_.dropped_script;
      return;
    }
  }
  if (u_loss < cfg_.loss) {
    ++stats_.dropped_loss;
    return;
  }
  if (queued_ >= cfg_.queue_capacity) {
    ++stats_.dropped_queue;
    return;
  }
  if (cfg_.ecn_threshold > 0 && queued_ > cfg_.ecn_threshold && mark_ce(frame)) ++stats_.ce_marked;

  ++queued_;
  if (queued_ > stats_.max_queue) stats_.max_queue = queued_;
  const auto ser = static_cast<TimeNs>(static_cast<double>(frame.size()) * 8e9 / cfg_.bandwidth_bps);
  const TimeNs depart = std::max(now, busy_until_) + ser;
  busy_until_ = depart;
  TimeNs arrive = depart + cfg_.prop_delay;
  if (cfg_.jitter > 0) arrive += static_cast<TimeNs>(u_jitter * static_cast<double>(cfg_.jitter));
  if (u_reorder < cfg_.reorder) arrive += cfg_.reorder_delay;
  sim_.at(depart, [this] { --queued_; });
  sim_.at(arrive, [this, f = std::move(frame)]() mutable {
    ++stats_.delivered;
    stats_.bytes_delivered += f.size();
    deliver_(std::move(f));
  });
}

Link& Network::attach(Ipv4Addr ip, LinkConfig port, Link::Deliver to_host) {
  links_.push_back(std::make_unique<Link>(sim_, std::move(port), std::move(to_host)));
  by_ip_[ip] = links_.back().get();
  return *links_.back();
}

Link* Network::port(Ipv4Addr ip) {
  auto it = by_ip_.find(ip);
  return it == by_ip_.end() ? nullptr : it->second;
}

std::vector<Link*> Network::ports() {
  std::vector<Link*> out;
  for (auto& l : links_) out.push_back(l.get());
  return out;
}

void Network::send(std::vector<std::uint8_t>&& frame) {
  const std::size_t ip = ip_offset(frame);
  if (frame.size() < ip + kIpv4HeaderLen) {
    ++unroutable_;
    return;
  }
  Link* l = port(load_be32(&frame[ip + 16]));
  if (!l) {
    ++unroutable_;
    return;
  }
  l->send(std::move(frame));
}

}  // namespace tcpipe
