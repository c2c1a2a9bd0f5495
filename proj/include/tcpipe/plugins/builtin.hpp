#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "tcpipe/plugins/maps.hpp"
#include "tcpipe/plugins/pcap.hpp"
#include "tcpipe/plugins/xdp.hpp"

namespace tcpipe {

// Always PASS.
PluginFn null_plugin();

// DROP when the IPv4 source address is in the map (4-byte host-order key,
// 1-byte value). Non-IPv4 frames PASS.
std::shared_ptr<PluginMap> make_blacklist(std::size_t capacity = 1024);
bool blacklist_add(PluginMap& m, Ipv4Addr ip);
bool blacklist_remove(PluginMap& m, Ipv4Addr ip);
PluginFn firewall_plugin(std::shared_ptr<PluginMap> blacklist);

// Removes one 802.1Q tag in place; untagged frames pass unchanged.
PluginFn vlan_strip_plugin();

// Appends frames matching `filter` to `sink`; always PASS.
PluginFn pcap_plugin(std::shared_ptr<PcapWriter> sink, PacketFilter filter = {});

// Splice table key: ip.src, ip.dst, tcp.sport, tcp.dport exactly as they
// appear in the packet (network byte order).
using SpliceKey = std::array<std::uint8_t, 12>;
SpliceKey make_splice_key(Ipv4Addr src, Ipv4Addr dst, std::uint16_t sport, std::uint16_t dport);

struct SpliceEntry {
  MacAddr remote_mac{};
  std::uint16_t pad = 0;
  Ipv4Addr remote_ip = 0;
  std::uint16_t local_port = 0;
  std::uint16_t remote_port = 0;
  std::uint32_t seq_delta = 0;
  std::uint32_t ack_delta = 0;
};

std::shared_ptr<PluginMap> make_splice_map(std::size_t capacity = 4096);
// Rewrites matching segments toward the spliced peer and transmits them.
// SYN/FIN/RST remove the entry and go to the control plane.
PluginFn splice_plugin(std::shared_ptr<PluginMap> table);

}  // namespace tcpipe
