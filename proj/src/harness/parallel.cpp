#include "tcpipe/harness/parallel.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "tcpipe/harness/scenario.hpp"

namespace tcpipe {

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::uint16_t kPort = 7100;
constexpr auto kPollWait = std::chrono::microseconds(200);

StackConfig host_config(const ParallelConfig& cfg, std::size_t i) {
  StackConfig sc;
  sc.name = i == 0 ? "server" : "client";
  sc.ip = host_ip(i);
  sc.mac = host_mac(i);
  sc.topology = cfg.topology;
  sc.exec = cfg.exec;
  sc.ctrl.seed = 17 + i;
  sc.ctrl.rx_buf = 256 * 1024;
  sc.ctrl.tx_buf = 256 * 1024;
  return sc;
}

void serve(SocketLib& lib, SocketId listener, const ParallelConfig& cfg, const std::atomic<bool>& stop) {
  SocketId conn = kNoSocket;
  std::vector<std::uint8_t> in(64 * 1024);
  std::vector<std::uint8_t> out;
  std::size_t out_off = 0;
  std::uint64_t fill = 0;
  while (!stop.load(std::memory_order_relaxed)) {
    lib.poll(kPollWait);
    if (conn == kNoSocket) conn = lib.accept(listener);
    if (conn == kNoSocket) continue;
    for (;;) {
      if (out.size() - out_off > 64 * 1024) break;
      const auto r = lib.recv(conn, in);
      if (r.n == 0) break;
      fill += r.n;
      for (; fill >= cfg.request; fill -= cfg.request) out.insert(out.end(), cfg.response, 0x5a);
    }
    while (out_off < out.size()) {
      const auto r = lib.send(conn, std::span(out).subspan(out_off));
      if (r.n == 0) break;
      out_off += r.n;
    }
    if (out_off == out.size()) {
      out.clear();
      out_off = 0;
    }
  }
}

}  // namespace

ParallelResult run_parallel(const ParallelConfig& cfg) {
  ParallelResult res;
  res.label = cfg.label;

  Stack server(host_config(cfg, 0));
  Stack client(host_config(cfg, 1));
  server.set_output([&client](std::vector<std::uint8_t>&& f) { client.receive(std::move(f)); });
  client.set_output([&server](std::vector<std::uint8_t>&& f) { server.receive(std::move(f)); });
  for (Stack* s : {&server, &client}) {
    s->ctrl().add_neighbor(host_ip(0), host_mac(0));
    s->ctrl().add_neighbor(host_ip(1), host_mac(1));
  }
  SocketLib& slib = server.add_context();
  SocketLib& clib = client.add_context();
  server.start();
  client.start();

  const SocketId listener = slib.listen(kPort);
  std::atomic<bool> stop{false};
  std::thread srv([&] { serve(slib, listener, cfg, stop); });

  const SocketId s = clib.connect(host_ip(0), kPort);
  std::vector<std::uint8_t> req(cfg.request, 0xa5);
  std::vector<std::uint8_t> buf(64 * 1024);
  std::uint64_t issued = 0, done = 0, fill = 0, counted_from = 0;
  std::size_t req_off = 0;
  bool up = false, measuring = false;
  const auto t0 = Clock::now();
  const auto warm_end = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.warmup_seconds));
  const auto end = warm_end + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.seconds));
  Clock::time_point measure_start = warm_end;

  while (s != kNoSocket) {
    const auto now = Clock::now();
    if (now >= end) break;
    if (!measuring && now >= warm_end) {
      measuring = true;
      counted_from = done;
      measure_start = now;
    }
    for (const auto& ev : clib.poll(kPollWait)) {
      if (ev.events & sockev::kConnected) up = true;
    }
    if (clib.role(s) == SockRole::kClosed) break;
    if (!up) continue;
    for (;;) {
      const auto r = clib.recv(s, buf);
      if (r.n == 0) break;
      fill += r.n;
      for (; fill >= cfg.response; fill -= cfg.response) ++done;
    }
    // Keep `depth` requests in flight; a partly sent request finishes first.
    while (req_off > 0 || issued - done < cfg.depth) {
      const auto r = clib.send(s, std::span(req).subspan(req_off));
      if (r.n == 0) break;
      req_off += r.n;
      if (req_off == req.size()) {
        req_off = 0;
        ++issued;
      }
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - measure_start).count();

  stop = true;
  srv.join();
  client.stop();
  server.stop();

  res.rpcs = measuring ? done - counted_from : 0;
  res.ok = up && res.rpcs > 0;
  if (secs > 0) {
    res.rpcs_per_sec = static_cast<double>(res.rpcs) / secs;
    res.goodput_bps = res.rpcs_per_sec * cfg.request * 8.0;
  }
  return res;
}

std::vector<ParallelConfig> parallel_ladder(double seconds) {
  std::vector<ParallelConfig> out(3);
  out[0].label = "run-to-completion";
  out[0].exec = ExecMode::kInline;
  out[1].label = "pipelined";
  out[2].label = "replicated";
  out[2].topology = Topology::replicated(1, 2);
  for (auto& c : out) c.seconds = seconds;
  return out;
}

std::string to_json(const std::vector<ParallelResult>& ladder) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : ladder) {
    j.push_back({{"config", r.label},
                 {"ok", r.ok},
                 {"rpcs", r.rpcs},
                 {"rpcs_per_sec", r.rpcs_per_sec},
                 {"throughput_bps", r.goodput_bps}});
  }
  return j.dump(2);
}

std::string to_table(const std::vector<ParallelResult>& ladder) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %12s %14s %8s\n", "config", "rpc/s", "Gbit/s", "ratio");
  os << line;
  const double base = ladder.empty() ? 0.0 : ladder.front().rpcs_per_sec;
  for (const auto& r : ladder) {
    std::snprintf(line, sizeof line, "%-20s %12.0f %14.3f %8.2f%s\n", r.label.c_str(), r.rpcs_per_sec,
                  r.goodput_bps / 1e9, base > 0 ? r.rpcs_per_sec / base : 0.0, r.ok ? "" : "  (no progress)");
    os << line;
  }
  return os.str();
}

}  // namespace tcpipe
