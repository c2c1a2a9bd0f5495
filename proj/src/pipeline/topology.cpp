#include "tcpipe/pipeline/topology.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tcpipe {

const char* to_string(StageKind k) {
  switch (k) {
    case StageKind::kXdp: return "xdp";
    case StageKind::kPre: return "pre";
    case StageKind::kProtocol: return "protocol";
    case StageKind::kPost: return "post";
    case StageKind::kDma: return "dma";
    case StageKind::kCtxq: return "ctxq";
  }
  return "?";
}

StageKind stage_kind_from_string(const std::string& s) {
  for (StageKind k : {StageKind::kXdp, StageKind::kPre, StageKind::kProtocol, StageKind::kPost,
                      StageKind::kDma, StageKind::kCtxq})
    if (s == to_string(k)) return k;
  throw InvalidTopology("unknown stage '" + s + "'");
}

Topology Topology::scalar(std::uint32_t flow_groups) {
  Topology t;
  t.flow_groups = flow_groups;
  t.stages = {{StageKind::kPre, 1, 512, false},
              {StageKind::kProtocol, 1, 512, false},
              {StageKind::kPost, 1, 512, false},
              {StageKind::kDma, 1, 512, false},
              {StageKind::kCtxq, 1, 512, false}};
  return t;
}

Topology Topology::replicated(std::uint32_t flow_groups, std::uint32_t factor) {
  Topology t = scalar(flow_groups);
  for (auto& s : t.stages) {
    if (s.kind == StageKind::kPre || s.kind == StageKind::kPost || s.kind == StageKind::kDma)
      s.replication = factor;
    if (s.kind == StageKind::kPre || s.kind == StageKind::kDma) s.reorder_after = true;
  }
  return t;
}

const StageConfig* Topology::find(StageKind k) const {
  for (const auto& s : stages)
    if (s.kind == k) return &s;
  return nullptr;
}

StageConfig* Topology::find(StageKind k) {
  for (auto& s : stages)
    if (s.kind == k) return &s;
  return nullptr;
}

Topology& Topology::with_xdp(std::uint32_t replication) {
  if (StageConfig* x = find(StageKind::kXdp)) {
    x->replication = replication;
  } else {
    stages.insert(stages.begin(), StageConfig{StageKind::kXdp, replication, 512, false});
  }
  if (replication > 1) find(StageKind::kPre)->reorder_after = true;
  return *this;
}

void Topology::validate() const {
  if (flow_groups == 0) throw InvalidTopology("flow_groups must be >= 1");
  if (reorder_capacity == 0) throw InvalidTopology("reorder_capacity must be >= 1");
  static const StageKind kOrder[] = {StageKind::kXdp, StageKind::kPre, StageKind::kProtocol,
                                     StageKind::kPost, StageKind::kDma, StageKind::kCtxq};
  std::size_t at = 0;
  for (const auto& s : stages) {
    while (at < std::size(kOrder) && kOrder[at] != s.kind) {
      if (kOrder[at] != StageKind::kXdp)
        throw InvalidTopology(std::string("stage '") + to_string(kOrder[at]) +
                              "' missing or out of order");
      ++at;
    }
    if (at == std::size(kOrder))
      throw InvalidTopology(std::string("stage '") + to_string(s.kind) + "' out of order");
    if (s.replication == 0) throw InvalidTopology("replication must be >= 1");
    if (s.queue_capacity == 0) throw InvalidTopology("queue_capacity must be >= 1");
    ++at;
  }
  if (at != std::size(kOrder)) throw InvalidTopology("topology must end with ctxq");

  if (find(StageKind::kProtocol)->replication != 1)
    throw InvalidTopology("protocol stage is atomic per flow group; replication must be 1");

  // Replicated stages may reorder; the consumer at each ordered point needs a
  // reorderer behind the last stage feeding it.
  bool ingress_parallel = false;
  for (StageKind k : {StageKind::kXdp, StageKind::kPre})
    if (const StageConfig* s = find(k); s && s->replication > 1) ingress_parallel = true;
  if (ingress_parallel && !find(StageKind::kPre)->reorder_after)
    throw InvalidTopology("replicated stage feeds protocol without a reorderer");

  bool egress_parallel = false;
  for (StageKind k : {StageKind::kPost, StageKind::kDma})
    if (find(k)->replication > 1) egress_parallel = true;
  if (egress_parallel && !find(StageKind::kDma)->reorder_after)
    throw InvalidTopology("replicated stage feeds the wire without a reorderer");
}

std::string Topology::to_json() const {
  nlohmann::json j;
  j["flow_groups"] = flow_groups;
  j["reorder_capacity"] = reorder_capacity;
  j["ingress_capacity"] = ingress_capacity;
  for (const auto& s : stages) {
    j["stages"].push_back({{"stage", to_string(s.kind)},
                           {"replication", s.replication},
                           {"queue_capacity", s.queue_capacity},
                           {"reorder_after", s.reorder_after}});
  }
  return j.dump(2);
}

Topology Topology::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidTopology(std::string("topology json: ") + e.what());
  }
  Topology t;
  try {
    t.flow_groups = j.value("flow_groups", 1u);
    t.reorder_capacity = j.value("reorder_capacity", 256u);
    t.ingress_capacity = j.value("ingress_capacity", 512u);
    if (!j.contains("stages") || !j["stages"].is_array())
      throw InvalidTopology("topology json: missing 'stages' array");
    for (const auto& s : j["stages"]) {
      StageConfig c;
      c.kind = stage_kind_from_string(s.at("stage").get<std::string>());
      c.replication = s.value("replication", 1u);
      c.queue_capacity = s.value("queue_capacity", 512u);
      c.reorder_after = s.value("reorder_after", false);
      t.stages.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidTopology(std::string("topology json: ") + e.what());
  }
  t.validate();
  return t;
}

Topology Topology::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidTopology("cannot open topology file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace tcpipe
