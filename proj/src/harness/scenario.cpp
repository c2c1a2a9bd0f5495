#include "tcpipe/harness/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "tcpipe/plugins/builtin.hpp"
#include "tcpipe/plugins/pcap.hpp"

namespace tcpipe {

namespace {
constexpr std::uint16_t kServerPort = 7000;
constexpr TimeNs kNever = std::numeric_limits<TimeNs>::max();
}  // namespace

const char* to_string(Workload w) {
  switch (w) {
    case Workload::kEcho:
      return "echo";
    case Workload::kRpc:
      return "rpc";
    case Workload::kBulk:
      return "bulk";
  }
  return "?";
}

Workload workload_from_string(const std::string& s) {
  if (s == "echo") return Workload::kEcho;
  if (s == "rpc") return Workload::kRpc;
  if (s == "bulk") return Workload::kBulk;
  throw ConfigInvalid("unknown workload: " + s);
}

void ScenarioConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigInvalid(what);
  };
  need(senders >= 1 && senders <= 200, "senders must be in [1, 200]");
  need(conns >= 1 && conns <= 4000, "conns must be in [1, 4000]");
  need(workload == Workload::kBulk || size >= 1, "size must be positive");
  need(workload != Workload::kRpc || response >= 1, "rpc needs a response size");
  need(depth >= 1, "depth must be positive");
  need(loss >= 0.0 && loss < 1.0, "loss must be in [0, 1)");
  need(reorder >= 0.0 && reorder <= 1.0, "reorder must be in [0, 1]");
  need(duration > 0, "duration must be positive");
  need(warmup < duration, "warmup must be shorter than duration");
  need(nic_rate_bps > 0 && link_bps > 0 && bottleneck_bps >= 0, "rates must be positive");
  need(rx_buf >= 2048 && (rx_buf & (rx_buf - 1)) == 0, "rx_buf must be a power of two >= 2048");
  need(tx_buf >= 2048 && (tx_buf & (tx_buf - 1)) == 0, "tx_buf must be a power of two >= 2048");
  topology.validate();
}

Ipv4Addr host_ip(std::size_t i) { return make_ip(10, 0, static_cast<std::uint8_t>((i + 1) >> 8), static_cast<std::uint8_t>((i + 1) & 0xff)); }

MacAddr host_mac(std::size_t i) {
  return MacAddr{0x02, 0x00, 0x00, 0x00, static_cast<std::uint8_t>((i + 1) >> 8), static_cast<std::uint8_t>(i + 1)};
}

TraceReport run_scenario(const ScenarioConfig& cfg, const ScenarioHooks& hooks) {
  cfg.validate();
  const std::size_t nhosts = 1 + cfg.senders;
  const bool finite = (cfg.workload == Workload::kBulk) ? cfg.bulk_bytes > 0 : cfg.messages > 0;

  Simulator sim;
  Network net(sim);
  PluginChain chain;
  if (cfg.null_plugin) chain.add("null", null_plugin());
  std::shared_ptr<PcapWriter> pcap;
  if (!cfg.pcap_path.empty()) pcap = std::make_shared<PcapWriter>(cfg.pcap_path);

  std::vector<std::unique_ptr<Stack>> stacks;
  std::vector<Link*> ports;
  for (std::size_t i = 0; i < nhosts; ++i) {
    StackConfig sc;
    sc.name = i == 0 ? "server" : "client" + std::to_string(i);
    sc.ip = host_ip(i);
    sc.mac = host_mac(i);
    sc.topology = cfg.topology;
    if (cfg.null_plugin) {
      sc.topology.with_xdp();
      sc.ingress_chain = &chain;
    }
    sc.exec = cfg.exec;
    sc.adversarial = cfg.adversarial;
    sc.max_stall = cfg.max_stall;
    sc.adversarial_seed = cfg.seed * 7919 + i;
    sc.nic_rate_bps = cfg.nic_rate_bps;
    sc.nic_queue_frames = cfg.nic_queue_frames;
    sc.flow_capacity = std::max<std::size_t>(4096, cfg.conns * cfg.senders + 64);
    sc.ctrl.rx_buf = cfg.rx_buf;
    sc.ctrl.tx_buf = cfg.tx_buf;
    sc.ctrl.max_conns = sc.flow_capacity;
    sc.ctrl.seed = cfg.seed * 1000003 + i;
    sc.ctrl.policy = cfg.cc;
    sc.ctrl.dctcp.initial_rate = cfg.cc_initial_rate;
    sc.ctrl.timely.initial_rate = cfg.cc_initial_rate;
    sc.ctrl.limits.line_rate = cfg.nic_rate_bps / 8.0;
    sc.ctrl.cc_min_interval = cfg.cc_min_interval;
    stacks.push_back(std::make_unique<Stack>(sim, sc));

    LinkConfig lc;
    lc.bandwidth_bps = (i == 0 && cfg.bottleneck_bps > 0) ? cfg.bottleneck_bps : cfg.link_bps;
    lc.prop_delay = cfg.prop_delay;
    lc.jitter = cfg.jitter;
    lc.loss = cfg.loss;
    lc.reorder = cfg.reorder;
    lc.reorder_delay = cfg.reorder_delay;
    lc.queue_capacity = cfg.queue_capacity;
    lc.ecn_threshold = cfg.ecn_threshold;
    lc.drop_windows = cfg.drop_windows;
    lc.seed = cfg.seed * 0x2545f4914f6cdd1dull + i;
    Stack* st = stacks.back().get();
    Link& l = net.attach(sc.ip, lc, [st](std::vector<std::uint8_t>&& f) { st->receive(std::move(f)); });
    if (pcap) l.set_tap([pcap](const std::vector<std::uint8_t>& f, TimeNs t) { pcap->write(f, t); });
    ports.push_back(&l);
    st->set_output([&net](std::vector<std::uint8_t>&& f) { net.send(std::move(f)); });
  }
  for (auto& s : stacks) {
    for (std::size_t j = 0; j < nhosts; ++j) s->ctrl().add_neighbor(host_ip(j), host_mac(j));
  }
  if (hooks.client_tap) {
    for (std::size_t i = 1; i < nhosts; ++i) {
      stacks[i]->set_tx_tap([&hooks, i](const std::vector<std::uint8_t>& f, TimeNs t) { hooks.client_tap(i, f, t); });
    }
  }

  const ServerMode mode = cfg.workload == Workload::kEcho  ? ServerMode::kEcho
                          : cfg.workload == Workload::kRpc ? ServerMode::kRpc
                                                           : ServerMode::kSink;
  Server server(sim, *stacks[0], kServerPort, mode, cfg.size, cfg.response);
  if (!finite) server.set_window(cfg.warmup, cfg.duration);

  std::vector<std::unique_ptr<Client>> clients;
  for (std::size_t i = 1; i < nhosts; ++i) {
    ClientConfig cc;
    cc.server_ip = host_ip(0);
    cc.server_port = kServerPort;
    cc.conns = cfg.conns;
    cc.request = cfg.workload == Workload::kBulk ? 0 : cfg.size;
    cc.response = cfg.workload == Workload::kEcho ? cfg.size : cfg.workload == Workload::kRpc ? cfg.response : 0;
    cc.depth = cfg.depth;
    cc.messages = cfg.messages;
    cc.bulk_bytes = cfg.bulk_bytes;
    cc.stop = finite ? kNever : cfg.duration;
    cc.connect_spacing = cfg.connect_spacing;
    cc.seed = cfg.seed * 131 + i;
    clients.push_back(std::make_unique<Client>(sim, *stacks[i], cc));
  }

  std::vector<Stack*> raw;
  for (auto& s : stacks) raw.push_back(s.get());
  if (hooks.setup) hooks.setup(sim, raw);

  std::uint64_t bn_start = 0, bn_end = 0;
  sim.at(cfg.warmup, [&] { bn_start = ports[0]->stats().bytes_delivered; });
  sim.at(cfg.duration, [&] { bn_end = ports[0]->stats().bytes_delivered; });

  auto all_done = [&] {
    for (auto& c : clients) {
      if (!c->done()) return false;
    }
    return true;
  };
  TimeNs done_at = 0;
  const TimeNs limit = (finite ? 0 : cfg.duration) + cfg.drain + (finite ? cfg.duration : 0);
  sim.run_while(
      [&] {
        if (sim.now() < cfg.duration && !finite) return true;
        if (all_done()) {
          done_at = sim.now();
          return false;
        }
        return true;
      },
      limit);
  if (!finite && sim.now() < cfg.duration) sim.run_until(cfg.duration);
  // Let in-flight FINs and final ACKs settle.
  sim.run_until(sim.now() + 5 * kNsPerMs);
  if (pcap) pcap->flush();

  TraceReport r;
  r.complete = done_at > 0;
  r.elapsed = done_at > 0 ? done_at : sim.now();

  const auto& srv = server.conns();
  bool all_ok = true;
  std::vector<double> tputs;
  std::vector<double> lats;
  std::uint64_t total_bytes = 0;
  for (auto& c : clients) {
    r.established += c->established();
    r.requests += c->requests_completed();
    lats.insert(lats.end(), c->latencies_ns().begin(), c->latencies_ns().end());
    for (const auto& [key, st] : c->conns()) {
      ConnReport cr;
      cr.key = key;
      cr.sent = st.sent.bytes;
      cr.received = st.received.bytes;
      cr.messages = st.messages;
      auto it = srv.find(key);
      if (it != srv.end()) {
        cr.hash_ok = it->second.received.hash == st.sent.hash && it->second.received.bytes == st.sent.bytes &&
                     it->second.sent.hash == st.received.hash && it->second.sent.bytes == st.received.bytes;
        if (finite) {
          cr.throughput_bps = static_cast<double>(it->second.received.bytes + st.received.bytes) * 8e9 /
                              static_cast<double>(std::max<TimeNs>(r.elapsed, 1));
        } else {
          cr.throughput_bps = static_cast<double>(it->second.window_bytes) * 8e9 /
                              static_cast<double>(cfg.duration - cfg.warmup);
        }
        total_bytes += finite ? it->second.received.bytes + st.received.bytes : it->second.window_bytes;
      }
      all_ok = all_ok && cr.hash_ok;
      tputs.push_back(cr.throughput_bps);
      r.conns.push_back(cr);
    }
  }
  if (srv.size() != r.conns.size()) all_ok = false;
  r.hashes_ok = all_ok && !r.conns.empty();
  const double window_ns = finite ? static_cast<double>(std::max<TimeNs>(r.elapsed, 1))
                                  : static_cast<double>(cfg.duration - cfg.warmup);
  r.throughput_bps = static_cast<double>(total_bytes) * 8e9 / window_ns;
  if (!finite) {
    const double bw = cfg.bottleneck_bps > 0 ? cfg.bottleneck_bps : cfg.link_bps;
    r.bottleneck_utilization = static_cast<double>(bn_end - bn_start) * 8e9 / (bw * window_ns);
  }
  r.latency_p50_us = percentile(lats, 50) / 1000.0;
  r.latency_p99_us = percentile(lats, 99) / 1000.0;
  r.latency_p9999_us = percentile(lats, 99.99) / 1000.0;
  r.jfi = jain_index(tputs);
  r.tput_p1_bps = percentile(tputs, 1);
  r.tput_median_bps = percentile(tputs, 50);

  std::uint64_t nic_frames = 0, rx_frames = 0, link_in = 0, link_delivered = 0;
  for (auto& s : stacks) {
    for (const auto& [name, v] : s->tracepoints().snapshot().counters) r.counters[name] += v;
    const auto cs = s->ctrl().stats();
    r.counters["ctrl.retransmits"] += cs.retransmits;
    r.counters["ctrl.rsts_sent"] += cs.rsts_sent;
    r.counters["ctrl.cc_iterations"] += cs.cc_iterations;
    const auto sc = s->counters();
    nic_frames += sc.nic_frames;
    rx_frames += sc.rx_frames;
  }
  for (Link* l : ports) {
    const auto& ls = l->stats();
    link_in += ls.in;
    link_delivered += ls.delivered;
    r.counters["link.dropped"] += ls.dropped();
    r.counters["link.dropped_queue"] += ls.dropped_queue;
    r.counters["link.ce_marked"] += ls.ce_marked;
    r.counters["link.max_queue"] = std::max<std::uint64_t>(r.counters["link.max_queue"], ls.max_queue);
  }
  r.counters["link.unroutable"] = net.unroutable();
  r.link_conserved = nic_frames == link_in + net.unroutable() && rx_frames == link_delivered;
  return r;
}

std::string to_json(const TraceReport& r, const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["workload"] = to_string(cfg.workload);
  j["senders"] = cfg.senders;
  j["conns"] = cfg.conns;
  j["size"] = cfg.size;
  j["loss"] = cfg.loss;
  j["seed"] = cfg.seed;
  j["cc"] = to_string(cfg.cc);
  j["complete"] = r.complete;
  j["hashes_ok"] = r.hashes_ok;
  j["established"] = r.established;
  j["requests"] = r.requests;
  j["elapsed_ns"] = r.elapsed;
  j["throughput_bps"] = r.throughput_bps;
  j["bottleneck_utilization"] = r.bottleneck_utilization;
  j["latency_us"] = {{"p50", r.latency_p50_us}, {"p99", r.latency_p99_us}, {"p9999", r.latency_p9999_us}};
  j["jfi"] = r.jfi;
  j["tput_p1_bps"] = r.tput_p1_bps;
  j["tput_median_bps"] = r.tput_median_bps;
  j["link_conserved"] = r.link_conserved;
  j["counters"] = r.counters;
  return j.dump(2);
}

std::string to_table(const TraceReport& r, const ScenarioConfig& cfg) {
  std::ostringstream os;
  char buf[128];
  auto row = [&](const char* k, const std::string& v) {
    std::snprintf(buf, sizeof buf, "%-24s %s\n", k, v.c_str());
    os << buf;
  };
  auto num = [](double v) {
    char b[48];
    std::snprintf(b, sizeof b, "%.4g", v);
    return std::string(b);
  };
  row("workload", to_string(cfg.workload));
  row("connections", std::to_string(r.established) + "/" + std::to_string(cfg.conns * cfg.senders));
  row("complete", r.complete ? "yes" : "no");
  row("payload integrity", r.hashes_ok ? "ok" : "MISMATCH");
  row("requests", std::to_string(r.requests));
  row("elapsed (ms)", num(static_cast<double>(r.elapsed) / 1e6));
  row("throughput (Gbit/s)", num(r.throughput_bps / 1e9));
  if (r.bottleneck_utilization > 0) row("bottleneck util", num(r.bottleneck_utilization));
  if (r.requests > 0) {
    row("latency p50 (us)", num(r.latency_p50_us));
    row("latency p99 (us)", num(r.latency_p99_us));
    row("latency p99.99 (us)", num(r.latency_p9999_us));
  }
  row("fairness (JFI)", num(r.jfi));
  for (const auto& [k, v] : r.counters) {
    if (v) row(k.c_str(), std::to_string(v));
  }
  return os.str();
}

}  // namespace tcpipe
