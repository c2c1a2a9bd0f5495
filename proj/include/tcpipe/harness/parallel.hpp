#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcpipe/harness/stack.hpp"
#include "tcpipe/pipeline/topology.hpp"

namespace tcpipe {

// Single-connection pipelined RPC between two wall-clock stacks joined by an
// in-memory wire. Every stage instance runs on its own thread.
struct ParallelConfig {
  std::string label;
  ExecMode exec = ExecMode::kPipeline;
  Topology topology = Topology::scalar(1);
  std::uint32_t request = 2048;
  std::uint32_t response = 64;
  std::uint32_t depth = 16;
  double seconds = 1.0;       // measurement time after warmup
  double warmup_seconds = 0.2;
};

struct ParallelResult {
  std::string label;
  bool ok = false;  // connection came up and made progress
  std::uint64_t rpcs = 0;
  double rpcs_per_sec = 0.0;
  double goodput_bps = 0.0;  // request payload
};

ParallelResult run_parallel(const ParallelConfig& cfg);

// Run-to-completion baseline, scalar pipeline, replicated pipeline.
std::vector<ParallelConfig> parallel_ladder(double seconds);

std::string to_json(const std::vector<ParallelResult>& ladder);
std::string to_table(const std::vector<ParallelResult>& ladder);

}  // namespace tcpipe
