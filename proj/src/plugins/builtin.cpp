#include "tcpipe/plugins/builtin.hpp"

#include "tcpipe/core/wire.hpp"

namespace tcpipe {

namespace {
constexpr std::size_t kEthType = 12;
constexpr std::size_t kIp = kEthHeaderLen;

bool ipv4_tcp(const Packet& p) {
  if (p.size() < kMinFrameLen) return false;
  return p.be16(kEthType) == kEtherTypeIpv4 && p.u8(kIp + 9) == kIpProtoTcp;
}
std::size_t tcp_off(const Packet& p) { return kIp + static_cast<std::size_t>(p.u8(kIp) & 0x0f) * 4; }
}  // namespace

PluginFn null_plugin() {
  return [](Packet&) { return Verdict::kPass; };
}

std::shared_ptr<PluginMap> make_blacklist(std::size_t capacity) {
  return std::make_shared<PluginMap>(PluginMap::Kind::kHash, sizeof(Ipv4Addr), 1, capacity);
}

bool blacklist_add(PluginMap& m, Ipv4Addr ip) { return m.put(ip, std::uint8_t{1}); }
bool blacklist_remove(PluginMap& m, Ipv4Addr ip) { return m.remove(ip); }

PluginFn firewall_plugin(std::shared_ptr<PluginMap> blacklist) {
  return [bl = std::move(blacklist)](Packet& p) {
    if (p.size() < kIp + kIpv4HeaderLen || p.be16(kEthType) != kEtherTypeIpv4) return Verdict::kPass;
    const Ipv4Addr src = p.be32(kIp + 12);
    return bl->get<Ipv4Addr, std::uint8_t>(src) ? Verdict::kDrop : Verdict::kPass;
  };
}

PluginFn vlan_strip_plugin() {
  return [](Packet& p) {
    if (p.be16(kEthType) != kEtherTypeVlan) return Verdict::kPass;
    const std::uint16_t inner = p.be16(kEthType + 4);
    p.erase(kEthType, 4);
    p.set_be16(kEthType, inner);
    return Verdict::kPass;
  };
}

PluginFn pcap_plugin(std::shared_ptr<PcapWriter> sink, PacketFilter filter) {
  return [sink = std::move(sink), filter = std::move(filter)](Packet& p) {
    if (filter.matches(p.bytes())) sink->write(p.bytes(), p.time());
    return Verdict::kPass;
  };
}

SpliceKey make_splice_key(Ipv4Addr src, Ipv4Addr dst, std::uint16_t sport, std::uint16_t dport) {
  SpliceKey k{};
  store_be32(k.data(), src);
  store_be32(k.data() + 4, dst);
  store_be16(k.data() + 8, sport);
  store_be16(k.data() + 10, dport);
  return k;
}

std::shared_ptr<PluginMap> make_splice_map(std::size_t capacity) {
  return std::make_shared<PluginMap>(PluginMap::Kind::kHash, sizeof(SpliceKey), sizeof(SpliceEntry), capacity);
}

PluginFn splice_plugin(std::shared_ptr<PluginMap> table) {
  return [tbl = std::move(table)](Packet& p) {
    if (!ipv4_tcp(p)) return Verdict::kRedirect;
    const std::size_t tcp = tcp_off(p);
    const SpliceKey key = make_splice_key(p.be32(kIp + 12), p.be32(kIp + 16), p.be16(tcp), p.be16(tcp + 2));

    if (p.u8(tcp + 13) & (tcpflag::kSyn | tcpflag::kFin | tcpflag::kRst)) {
      tbl->remove(key);
      return Verdict::kRedirect;
    }
    auto state = tbl->get<SpliceKey, SpliceEntry>(key);
    if (!state) return Verdict::kPass;

    p.set_mac(6, p.mac(0));
    p.set_mac(0, state->remote_mac);
    p.set_be32(kIp + 12, p.be32(kIp + 16));
    p.set_be32(kIp + 16, state->remote_ip);
    p.set_be16(tcp, state->local_port);
    p.set_be16(tcp + 2, state->remote_port);
    p.set_be32(tcp + 4, p.be32(tcp + 4) + state->seq_delta);
    p.set_be32(tcp + 8, p.be32(tcp + 8) + state->ack_delta);
    return Verdict::kTx;
  };
}

}  // namespace tcpipe
