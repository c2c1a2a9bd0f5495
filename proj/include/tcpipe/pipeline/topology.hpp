#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcpipe {

enum class StageKind : std::uint8_t { kXdp, kPre, kProtocol, kPost, kDma, kCtxq };

const char* to_string(StageKind k);
StageKind stage_kind_from_string(const std::string& s);

struct StageConfig {
  StageKind kind = StageKind::kPre;
  std::uint32_t replication = 1;
  std::uint32_t queue_capacity = 512;
  bool reorder_after = false;
};

class InvalidTopology : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Declarative stage graph. The stage order is fixed:
//   [xdp] pre protocol post dma ctxq
// with one protocol instance per flow group.
struct Topology {
  std::vector<StageConfig> stages;
  std::uint32_t flow_groups = 1;
  std::uint32_t reorder_capacity = 256;
  std::uint32_t ingress_capacity = 512;

  static Topology scalar(std::uint32_t flow_groups = 1);
  // Replicates the pre, post and payload-transfer stages.
  static Topology replicated(std::uint32_t flow_groups, std::uint32_t factor);

  const StageConfig* find(StageKind k) const;
  StageConfig* find(StageKind k);
  Topology& with_xdp(std::uint32_t replication = 1);

  // Throws InvalidTopology.
  void validate() const;

  std::string to_json() const;
  static Topology from_json(const std::string& text);
  static Topology load(const std::string& path);
};

}  // namespace tcpipe
