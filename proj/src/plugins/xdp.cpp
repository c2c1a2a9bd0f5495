#include "tcpipe/plugins/xdp.hpp"

#include <algorithm>

#include "tcpipe/core/wire.hpp"

namespace tcpipe {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "PASS";
    case Verdict::kDrop: return "DROP";
    case Verdict::kTx: return "TX";
    case Verdict::kRedirect: return "REDIRECT";
  }
  return "?";
}

void Packet::check(std::size_t off, std::size_t len) const {
  if (off > f_.size() || len > f_.size() - off) throw PacketFault("packet access out of bounds");
}

std::uint8_t Packet::u8(std::size_t off) const {
  check(off, 1);
  return f_[off];
}
std::uint16_t Packet::be16(std::size_t off) const {
  check(off, 2);
  return load_be16(f_.data() + off);
}
std::uint32_t Packet::be32(std::size_t off) const {
  check(off, 4);
  return load_be32(f_.data() + off);
}
MacAddr Packet::mac(std::size_t off) const {
  check(off, 6);
  MacAddr m;
  std::copy_n(f_.data() + off, 6, m.begin());
  return m;
}
void Packet::set_u8(std::size_t off, std::uint8_t v) {
  check(off, 1);
  f_[off] = v;
  mutated_ = true;
}
void Packet::set_be16(std::size_t off, std::uint16_t v) {
  check(off, 2);
  store_be16(f_.data() + off, v);
  mutated_ = true;
}
void Packet::set_be32(std::size_t off, std::uint32_t v) {
  check(off, 4);
  store_be32(f_.data() + off, v);
  mutated_ = true;
}
void Packet::set_mac(std::size_t off, const MacAddr& m) {
  check(off, 6);
  std::copy(m.begin(), m.end(), f_.data() + off);
  mutated_ = true;
}
void Packet::erase(std::size_t off, std::size_t len) {
  check(off, len);
  f_.erase(f_.begin() + static_cast<std::ptrdiff_t>(off), f_.begin() + static_cast<std::ptrdiff_t>(off + len));
  mutated_ = true;
}

void PluginChain::add(std::string name, PluginFn fn) { plugins_.push_back({std::move(name), std::move(fn)}); }

std::vector<std::string> PluginChain::names() const {
  std::vector<std::string> out;
  for (const auto& p : plugins_) out.push_back(p.name);
  return out;
}

ChainResult PluginChain::run(std::vector<std::uint8_t>& frame, TimeNs now) const {
  ChainResult r;
  Packet pkt(frame, now);
  for (const auto& p : plugins_) {
    try {
      r.verdict = p.fn(pkt);
    } catch (const PacketFault&) {
      faults_.fetch_add(1, std::memory_order_relaxed);
      r.verdict = Verdict::kDrop;
      r.faulted = true;
      return r;
    }
    if (r.verdict != Verdict::kPass) break;
  }
  r.mutated = pkt.mutated();
  if (r.verdict == Verdict::kTx || (r.verdict == Verdict::kPass && r.mutated)) {
    if (parse_segment(frame)) fill_checksum(frame);
  }
  return r;
}

}  // namespace tcpipe
