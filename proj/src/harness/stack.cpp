#include "tcpipe/harness/stack.hpp"

#include <algorithm>
#include <limits>

namespace tcpipe {

namespace {
constexpr TimeNs kNever = std::numeric_limits<TimeNs>::max();
}

Stack::Stack(Simulator& sim, StackConfig cfg)
    : cfg_(std::move(cfg)), sim_(&sim), flows_(cfg_.flow_capacity), carousel_(cfg_.carousel),
      adv_rng_(cfg_.adversarial_seed) {
  init();
}

Stack::Stack(StackConfig cfg)
    : cfg_(std::move(cfg)), wall_base_(std::chrono::steady_clock::now()), flows_(cfg_.flow_capacity),
      carousel_(cfg_.carousel), adv_rng_(cfg_.adversarial_seed) {
  init();
}

Stack::~Stack() { stop(); }

TimeNs Stack::now() const {
  if (sim_) return sim_->now();
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - wall_base_).count();
}

void Stack::init() {
  const std::uint32_t groups = cfg_.topology.flow_groups;

  DatapathConfig dc;
  dc.local_mac = cfg_.mac;
  dc.mss = cfg_.mss;
  dc.flow_groups = groups;
  dc.hc_pool = cfg_.hc_pool;
  dc.tx_pool = cfg_.tx_pool;

  DatapathSinks sinks;
  sinks.wire = [this](Frame&& f, TimeNs, std::uint32_t) { nic_enqueue(std::move(f)); };
  sinks.hint = [this](const SchedHint& h) {
    std::lock_guard lock(in_mu_);
    hints_.push_back(h);
  };
  sinks.redirect = [this](Frame&& f, TimeNs t) {
    std::lock_guard lock(in_mu_);
    redirects_.emplace_back(std::move(f), t);
  };
  sinks.clock = [this] { return now(); };
  dp_ = std::make_unique<Datapath>(dc, flows_, queues_, std::move(sinks), cfg_.ingress_chain, &trace_);
  if (cfg_.egress_chain) dp_->set_egress_chain(cfg_.egress_chain);

  EngineOptions eo;
  eo.disable_reorder = cfg_.disable_reorder;
  eo.trace = &trace_;
  engine_ = std::make_unique<Engine>(cfg_.topology, dp_->stage_fns(), eo);

  CtrlConfig cc = cfg_.ctrl;
  cc.local_ip = cfg_.ip;
  cc.local_mac = cfg_.mac;
  cc.mss = cfg_.mss;
  cc.flow_groups = groups;
  CtrlHooks hooks;
  hooks.transmit = [this](Frame&& f, TimeNs) { nic_enqueue(std::move(f)); };
  hooks.set_rate = [this](FlowIndex f, std::uint64_t r) { carousel_.set_rate(f, r); };
  hooks.unschedule = [this](FlowIndex f) { carousel_.remove(f); };
  hooks.submitted = [this] {
    return cfg_.exec == ExecMode::kInline ? inline_done_.load() : engine_->counters().submitted;
  };
  hooks.finished = [this] {
    if (cfg_.exec == ExecMode::kInline) return inline_done_.load();
    const auto c = engine_->counters();
    return c.retired + c.completed;
  };
  hooks.reinject = [this](Frame&& f, TimeNs t) {
    std::lock_guard lock(in_mu_);
    rx_inbox_.emplace_back(std::move(f), t);
  };
  ctrl_ = std::make_unique<ControlPlane>(cc, flows_, queues_, std::move(hooks));
}

SocketLib& Stack::add_context() {
  libs_.push_back(std::make_unique<SocketLib>(queues_, *ctrl_, flows_, [this] { return now(); }));
  return *libs_.back();
}

void Stack::on_wakeup(SocketLib& lib, std::function<void()> fn) {
  queues_.get(lib.context()).wakeup.set_hook([this, fn = std::move(fn)] {
    if (sim_) sim_->at(sim_->now(), fn);
  });
}

void Stack::receive(Frame&& frame) {
  {
    std::lock_guard lock(in_mu_);
    rx_inbox_.emplace_back(std::move(frame), now());
    ++counters_.rx_frames;
  }
  kick();
}

void Stack::kick() {
  if (sim_) schedule_at(sim_->now());
}

void Stack::schedule_at(TimeNs t) {
  if (!scheduled_.empty() && *scheduled_.begin() <= t) return;
  scheduled_.insert(t);
  sim_->at(t, [this, t] {
    scheduled_.erase(t);
    service();
  });
}

bool Stack::submit(Descriptor& d) {
  Descriptor copy;
  if (observer_) copy = d;
  bool ok = true;
  if (cfg_.exec == ExecMode::kInline) {
    dp_->run_to_completion(d);
    inline_done_.fetch_add(1);
  } else {
    ok = engine_->submit(d);
  }
  if (ok && observer_) observer_(copy);
  return ok;
}

bool Stack::service_once(TimeNs now) {
  bool moved = false;
  {
    std::lock_guard lock(in_mu_);
    while (!rx_inbox_.empty()) {
      rx_local_.push_back(std::move(rx_inbox_.front()));
      rx_inbox_.pop_front();
    }
  }
  while (!rx_local_.empty()) {
    auto& [frame, t] = rx_local_.front();
    Descriptor d = Descriptor::rx_frame(std::move(frame), t);
    if (!submit(d)) {
      frame = std::move(d.frame);
      break;
    }
    rx_local_.pop_front();
    moved = true;
  }

  std::deque<std::pair<Frame, TimeNs>> redirects;
  std::vector<SchedHint> hints;
  {
    std::lock_guard lock(in_mu_);
    redirects.swap(redirects_);
    hints.swap(hints_);
  }
  for (auto& [f, t] : redirects) {
    ++counters_.redirects;
    ctrl_->handle_segment(f, now);
    moved = true;
  }
  for (const auto& h : hints) {
    if (flows_.active(h.flow)) carousel_.update(h.flow, h.sendable, now);
  }

  if (fetcher_.poll(queues_, dp_->hc_pool(), [this](Descriptor& d) { return submit(d); }, now) > 0) moved = true;

  const std::size_t per_grant = std::max<std::size_t>(1, cfg_.carousel.rr_quantum / std::max<std::uint32_t>(cfg_.mss, 1));
  const std::size_t backlog = nic_queue_len() + pending_grants_.size() * per_grant;
  const std::size_t budget =
      backlog >= cfg_.nic_queue_frames ? 0 : (cfg_.nic_queue_frames - backlog + per_grant - 1) / per_grant;
  for (const Grant& g : carousel_.poll(now, budget)) pending_grants_.push_back(g);
  while (!pending_grants_.empty()) {
    if (!dp_->tx_pool().try_acquire()) break;
    const Grant g = pending_grants_.front();
    Descriptor d = Descriptor::tx_grant(g.flow, g.quantum, now);
    d.pooled = true;
    if (!submit(d)) {
      dp_->tx_pool().release();
      break;
    }
    pending_grants_.pop_front();
    ++counters_.grants;
    moved = true;
  }

  if (ctrl_->next_deadline() <= now) {
    ctrl_->tick(now);
    moved = true;
  }
  return moved;
}

void Stack::service() {
  const TimeNs t = sim_->now();
  ++counters_.services;
  for (;;) {
    bool moved = service_once(t);
    if (cfg_.exec == ExecMode::kPipeline && !engine_->idle()) {
      if (cfg_.adversarial) {
        engine_->run_adversarial(adv_rng_, cfg_.max_stall);
      } else {
        engine_->run_until_idle();
      }
      moved = true;
    }
    if (!moved) break;
  }

  TimeNs next = ctrl_->next_deadline();
  if (auto w = carousel_.next_wheel_time()) next = std::min(next, std::max(*w, t + 1));
  if (next != kNever) schedule_at(next);
}

void Stack::nic_enqueue(Frame&& f) {
  if (!sim_) {
    std::lock_guard lock(nic_mu_);
    ++counters_.nic_frames;
    counters_.nic_bytes += f.size();
    if (tap_) tap_(f, now());
    if (out_) out_(std::move(f));
    return;
  }
  nic_q_.push_back(std::move(f));
  if (!nic_busy_) nic_start();
}

void Stack::nic_start() {
  nic_busy_ = true;
  const auto ser = static_cast<TimeNs>(static_cast<double>(nic_q_.front().size()) * 8e9 / cfg_.nic_rate_bps);
  sim_->after(std::max<TimeNs>(ser, 1), [this] { nic_finish(); });
}

void Stack::nic_finish() {
  Frame f = std::move(nic_q_.front());
  nic_q_.pop_front();
  ++counters_.nic_frames;
  counters_.nic_bytes += f.size();
  if (tap_) tap_(f, sim_->now());
  if (out_) out_(std::move(f));
  if (!nic_q_.empty()) {
    nic_start();
  } else {
    nic_busy_ = false;
  }
  if (carousel_.rr_pending() || !pending_grants_.empty()) kick();
}

std::size_t Stack::nic_queue_len() const {
  std::lock_guard lock(nic_mu_);
  return nic_q_.size();
}

StackCounters Stack::counters() const {
  std::lock_guard lock(nic_mu_);
  return counters_;
}

bool Stack::quiescent() const {
  std::lock_guard lock(in_mu_);
  return rx_inbox_.empty() && redirects_.empty() && rx_local_.empty() && pending_grants_.empty() &&
         (cfg_.exec == ExecMode::kInline || engine_->idle()) && nic_q_.empty();
}

void Stack::start() {
  if (sim_ || running_.exchange(true)) return;
  if (cfg_.exec == ExecMode::kPipeline) engine_->start();
  driver_ = std::thread([this] { driver_main(); });
}

void Stack::driver_main() {
  unsigned idle = 0;
  while (running_.load(std::memory_order_acquire)) {
    if (service_once(now())) {
      idle = 0;
    } else if (++idle < 64) {
      std::this_thread::yield();
    } else {
      std::this_thread::sleep_for(std::chrono::microseconds(10));
    }
  }
}

void Stack::stop() {
  if (!running_.exchange(false)) return;
  if (driver_.joinable()) driver_.join();
  if (cfg_.exec == ExecMode::kPipeline) engine_->stop();
}

}  // namespace tcpipe
