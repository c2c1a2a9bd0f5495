#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
constexpr std::uint32_t kPcapLinktypeEthernet = 1;

// libpcap classic format, version 2.4, microsecond timestamps, host byte
// order (readers detect it from the magic).
class PcapWriter {
 public:
  PcapWriter();                                // in-memory capture
  explicit PcapWriter(const std::string& path);  // file capture

  void write(std::span<const std::uint8_t> frame, TimeNs t);
  std::size_t packets() const;
  std::vector<std::uint8_t> contents() const;  // in-memory captures only
  void flush();

 private:
  void emit(const void* p, std::size_t n);
  mutable std::mutex mu_;
  std::unique_ptr<std::ofstream> file_;
  std::vector<std::uint8_t> mem_;
  std::size_t packets_ = 0;
};

struct PcapRecord {
  TimeNs time = 0;
  std::uint32_t orig_len = 0;
  std::vector<std::uint8_t> data;
};

// Throws std::runtime_error on a malformed capture.
std::vector<PcapRecord> read_pcap(std::span<const std::uint8_t> bytes);

class FilterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Header-field predicate.
//
//   expr   := term { ("or" | "||") term }
//   term   := factor { ("and" | "&&") factor }
//   factor := ("not" | "!") factor | "(" expr ")" | field op value
//   field  := ip.src | ip.dst | ip.proto | ip.ecn | ip.len | tcp.sport | tcp.dport
//           | tcp.port | tcp.seq | tcp.ack | tcp.flags | tcp.window | tcp.len | frame.len
//   op     := == | != | < | > | <= | >= | has
//   value  := number | dotted IPv4 | flag names joined by '|' (SYN|ACK)
//
// `has` tests that all bits of value are set. tcp.port matches either port.
// Comparisons against non-TCP frames are false. An empty expression matches
// everything.
class PacketFilter {
 public:
  PacketFilter();
  static PacketFilter parse(const std::string& expr);
  bool matches(std::span<const std::uint8_t> frame) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace tcpipe
