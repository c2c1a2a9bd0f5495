#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcpipe/core/types.hpp"

namespace tcpipe {

enum class Verdict : std::uint8_t { kPass, kDrop, kTx, kRedirect };

const char* to_string(Verdict v);

// Raised by Packet accessors on out-of-bounds access.
class PacketFault : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Bounds-checked view of a raw frame handed to plugins.
class Packet {
 public:
  Packet(std::vector<std::uint8_t>& frame, TimeNs now) : f_(frame), now_(now) {}

  std::size_t size() const { return f_.size(); }
  TimeNs time() const { return now_; }

  std::uint8_t u8(std::size_t off) const;
  std::uint16_t be16(std::size_t off) const;
  std::uint32_t be32(std::size_t off) const;
  MacAddr mac(std::size_t off) const;
  void set_u8(std::size_t off, std::uint8_t v);
  void set_be16(std::size_t off, std::uint16_t v);
  void set_be32(std::size_t off, std::uint32_t v);
  void set_mac(std::size_t off, const MacAddr& m);
  // Removes `len` bytes at `off`.
  void erase(std::size_t off, std::size_t len);

  const std::vector<std::uint8_t>& bytes() const { return f_; }
  bool mutated() const { return mutated_; }

 private:
  void check(std::size_t off, std::size_t len) const;
  std::vector<std::uint8_t>& f_;
  TimeNs now_;
  bool mutated_ = false;
};

using PluginFn = std::function<Verdict(Packet&)>;

struct ChainResult {
  Verdict verdict = Verdict::kPass;
  bool faulted = false;
  bool mutated = false;
};

// Ordered plugin chain. Plugins keep no private state (state lives in maps),
// so one chain may be run concurrently by replicated stage instances.
class PluginChain {
 public:
  void add(std::string name, PluginFn fn);
  bool empty() const { return plugins_.empty(); }
  std::size_t size() const { return plugins_.size(); }
  std::vector<std::string> names() const;

  // First non-PASS verdict ends the chain. A fault counts as DROP. Checksums
  // are refreshed on TX verdicts and on mutated PASS packets.
  ChainResult run(std::vector<std::uint8_t>& frame, TimeNs now = 0) const;

  std::uint64_t faults() const { return faults_.load(); }

 private:
  struct Entry {
    std::string name;
    PluginFn fn;
  };
  std::vector<Entry> plugins_;
  mutable std::atomic<std::uint64_t> faults_{0};
};

}  // namespace tcpipe
