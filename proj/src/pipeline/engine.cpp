#include "tcpipe/pipeline/engine.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace tcpipe {

namespace {

Tp queue_tp(StageKind k) {
  switch (k) {
    case StageKind::kXdp: return Tp::kQueueXdp;
    case StageKind::kPre: return Tp::kQueuePre;
    case StageKind::kProtocol: return Tp::kQueueProtocol;
    case StageKind::kPost: return Tp::kQueuePost;
    case StageKind::kDma: return Tp::kQueueDma;
    case StageKind::kCtxq: return Tp::kQueueCtxq;
  }
  return Tp::kQueuePre;
}

}  // namespace

Engine::Engine(Topology topology, StageFns fns, EngineOptions options)
    : topo_(std::move(topology)), fns_(std::move(fns)), opts_(options), seq_(topo_.flow_groups) {
  if (opts_.disable_reorder) {
    Topology relaxed = topo_;
    for (auto& s : relaxed.stages) s.reorder_after = true;
    relaxed.validate();
  } else {
    topo_.validate();
  }

  auto add = [&](Role role, StageKind kind, std::size_t cap) {
    Inst in;
    in.role = role;
    in.kind = kind;
    in.in = std::make_unique<BoundedQueue<Descriptor>>(cap);
    in.queue_tp = queue_tp(kind);
    insts_.push_back(std::move(in));
    return insts_.size() - 1;
  };

  sequencer_ = add(Role::kSequencer, StageKind::kPre, topo_.ingress_capacity);

  for (const auto& s : topo_.stages) {
    if (s.kind != StageKind::kXdp && s.kind != StageKind::kPre) continue;
    Chain c{s.kind, {}};
    for (std::uint32_t r = 0; r < s.replication; ++r) {
      std::size_t i = add(Role::kIngress, s.kind, s.queue_capacity);
      insts_[i].chain_pos = ingress_.size();
      c.insts.push_back(i);
    }
    ingress_.push_back(std::move(c));
  }

  const StageConfig& proto = *topo_.find(StageKind::kProtocol);
  for (std::uint32_t g = 0; g < topo_.flow_groups; ++g) {
    std::size_t i = add(Role::kProtocol, StageKind::kProtocol, proto.queue_capacity);
    insts_[i].group = g;
    insts_[i].rb = std::make_unique<ReorderBuffer>(topo_.reorder_capacity);
    protocol_.push_back(i);
  }

  for (const auto& s : topo_.stages) {
    if (s.kind != StageKind::kPost && s.kind != StageKind::kDma) continue;
    Chain c{s.kind, {}};
    for (std::uint32_t r = 0; r < s.replication; ++r) {
      std::size_t i = add(Role::kEgressStage, s.kind, s.queue_capacity);
      insts_[i].chain_pos = egress_.size();
      c.insts.push_back(i);
    }
    egress_.push_back(std::move(c));
  }

  const StageConfig& dma = *topo_.find(StageKind::kDma);
  for (std::uint32_t g = 0; g < topo_.flow_groups; ++g) {
    std::size_t i = add(Role::kEgress, StageKind::kDma, dma.queue_capacity);
    insts_[i].group = g;
    insts_[i].rb = std::make_unique<ReorderBuffer>(topo_.reorder_capacity);
    insts_[i].queue_tp = Tp::kQueueEgress;
    egress_rb_.push_back(i);
  }

  const StageConfig& ctxq = *topo_.find(StageKind::kCtxq);
  for (std::uint32_t r = 0; r < ctxq.replication; ++r) {
    std::size_t i = add(Role::kCtxq, StageKind::kCtxq, 1);
    insts_[i].notes = std::make_unique<BoundedQueue<Note>>(ctxq.queue_capacity);
    ctxq_.push_back(i);
  }
}

Engine::~Engine() {
  if (running_.load()) {
    running_.store(false);
    for (auto& t : threads_) t.join();
  }
}

bool Engine::submit(Descriptor& d) {
  d.epoch = kNoEpoch;
  d.egress_epoch = kNoEpoch;
  if (!insts_[sequencer_].in->try_push(d)) return false;
  submitted_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

bool Engine::push_to(std::size_t inst, Descriptor& d) { return insts_[inst].in->try_push(d); }

bool Engine::forward_ingress(Inst& from, Descriptor& d) {
  std::size_t next_chain = from.role == Role::kSequencer ? 0 : from.chain_pos + 1;
  if (next_chain < ingress_.size()) {
    const auto& targets = ingress_[next_chain].insts;
    if (!push_to(targets[from.rr % targets.size()], d)) return false;
    ++from.rr;
    return true;
  }
  return push_to(protocol_[d.group], d);
}

bool Engine::forward_egress(Inst& from, Descriptor& d) {
  std::size_t next_chain = from.role == Role::kProtocol ? 0 : from.chain_pos + 1;
  if (next_chain < egress_.size()) {
    const auto& targets = egress_[next_chain].insts;
    if (!push_to(targets[from.rr % targets.size()], d)) return false;
    ++from.rr;
    return true;
  }
  return push_to(egress_rb_[d.group], d);
}

void Engine::run_fn(StageKind k, Descriptor& d) {
  switch (k) {
    case StageKind::kXdp:
      if (fns_.xdp) fns_.xdp(d);
      break;
    case StageKind::kPre:
      if (fns_.pre) fns_.pre(d);
      break;
    case StageKind::kPost:
      if (fns_.post) fns_.post(d);
      break;
    case StageKind::kDma:
      if (fns_.dma) fns_.dma(d);
      break;
    default:
      break;
  }
}

bool Engine::step_sequencer(Inst& in) {
  bool progress = false;
  if (!in.held) {
    auto d = in.in->try_pop();
    if (!d) return false;
    in.held = std::move(*d);
    progress = true;
  }
  Descriptor& d = *in.held;
  if (d.epoch == kNoEpoch) {
    const std::uint32_t g = fns_.classify ? fns_.classify(d) % topo_.flow_groups : 0;
    if (!opts_.disable_reorder) {
      const ReorderBuffer& rb = *insts_[protocol_[g]].rb;
      if (seq_.peek(g) - rb.next_expected() >= topo_.reorder_capacity) return progress;
    }
    d.group = g;
    seq_.assign_epoch(d, g);
  }
  if (!forward_ingress(in, d)) return progress;
  in.held.reset();
  return true;
}

bool Engine::step_stage(Inst& in, bool ingress) {
  if (in.held) {
    if (!(ingress ? forward_ingress(in, *in.held) : forward_egress(in, *in.held))) return false;
    in.held.reset();
    return true;
  }
  if (opts_.trace) opts_.trace->sample(in.queue_tp, in.in->size());
  auto d = in.in->try_pop();
  if (!d) return false;
  run_fn(in.kind, *d);
  if (!(ingress ? forward_ingress(in, *d) : forward_egress(in, *d))) in.held = std::move(*d);
  return true;
}

bool Engine::step_protocol(Inst& in) {
  bool progress = false;
  if (in.held) {
    if (!forward_egress(in, *in.held)) return false;
    in.held.reset();
    progress = true;
  }
  if (in.ready.empty()) {
    if (opts_.trace) opts_.trace->sample(in.queue_tp, in.in->size());
    auto d = in.in->try_pop();
    if (d) {
      progress = true;
      if (opts_.disable_reorder) {
        in.ready.push_back(std::move(*d));
      } else {
        std::vector<Descriptor> released;
        if (in.rb->push(*d, released) != ReorderStatus::kAccepted)
          throw std::logic_error("ingress reorder buffer rejected a credited descriptor");
        for (auto& r : released) in.ready.push_back(std::move(r));
      }
    }
  }
  if (in.ready.empty()) return progress;

  Descriptor& d = in.ready.front();
  if (d.fate == Fate::kDrop || d.fate == Fate::kRedirect) {
    if (in.last_epoch != kNoEpoch && d.epoch <= in.last_epoch)
      order_violations_.fetch_add(1, std::memory_order_relaxed);
    in.last_epoch = d.epoch;
    if (fns_.retire) fns_.retire(d);
    in.ready.pop_front();
    retired_.fetch_add(1, std::memory_order_relaxed);
    return true;
  }
  if (!opts_.disable_reorder) {
    const ReorderBuffer& out_rb = *insts_[egress_rb_[in.group]].rb;
    if (in.out_epoch - out_rb.next_expected() >= topo_.reorder_capacity) return progress;
  }
  if (in.last_epoch != kNoEpoch && d.epoch <= in.last_epoch)
    order_violations_.fetch_add(1, std::memory_order_relaxed);
  in.last_epoch = d.epoch;
  d.egress_epoch = in.out_epoch++;
  if (fns_.protocol) fns_.protocol(d);
  Descriptor out = std::move(d);
  in.ready.pop_front();
  if (!forward_egress(in, out)) in.held = std::move(out);
  return true;
}

bool Engine::step_egress(Inst& in) {
  bool progress = false;
  while (!in.note_out.empty()) {
    Note& n = in.note_out.front();
    if (!insts_[ctxq_[n.context % ctxq_.size()]].notes->try_push(n)) return progress;
    in.note_out.pop_front();
    progress = true;
  }
  if (in.ready.empty()) {
    if (opts_.trace) opts_.trace->sample(in.queue_tp, in.in->size());
    auto d = in.in->try_pop();
    if (d) {
      progress = true;
      if (opts_.disable_reorder) {
        in.ready.push_back(std::move(*d));
      } else {
        std::vector<Descriptor> released;
        if (in.rb->push(*d, d->egress_epoch, released) != ReorderStatus::kAccepted)
          throw std::logic_error("egress reorder buffer rejected a credited descriptor");
        for (auto& r : released) in.ready.push_back(std::move(r));
      }
    }
  }
  if (in.ready.empty()) return progress;

  Descriptor d = std::move(in.ready.front());
  in.ready.pop_front();
  if (fns_.egress) fns_.egress(d);
  for (const auto& e : d.notes) {
    in.note_out.push_back(Note{d.context, e});
    notes_routed_.fetch_add(1, std::memory_order_seq_cst);
  }
  completed_.fetch_add(1, std::memory_order_seq_cst);
  return true;
}

bool Engine::step_ctxq(Inst& in) {
  std::optional<Note> n;
  if (!in.note_out.empty()) {
    n = in.note_out.front();
    in.note_out.pop_front();
  } else {
    n = in.notes->try_pop();
  }
  if (!n) return false;
  if (fns_.notify && !fns_.notify(n->context, n->entry)) {
    in.note_out.push_front(*n);
    return false;
  }
  notes_delivered_.fetch_add(1, std::memory_order_seq_cst);
  return true;
}

bool Engine::step(std::size_t i) {
  Inst& in = insts_[i];
  switch (in.role) {
    case Role::kSequencer: return step_sequencer(in);
    case Role::kIngress: return step_stage(in, true);
    case Role::kProtocol: return step_protocol(in);
    case Role::kEgressStage: return step_stage(in, false);
    case Role::kEgress: return step_egress(in);
    case Role::kCtxq: return step_ctxq(in);
  }
  return false;
}

bool Engine::has_work(std::size_t i) const {
  const Inst& in = insts_[i];
  if (in.notes) return in.notes->size() > 0 || !in.note_out.empty();
  return in.in->size() > 0 || in.held.has_value() || !in.ready.empty() || !in.note_out.empty();
}

bool Engine::step_once() {
  bool progress = false;
  for (std::size_t i = 0; i < insts_.size(); ++i) progress |= step(i);
  return progress;
}

void Engine::run_until_idle() {
  while (step_once()) {
  }
  if (!idle()) throw std::logic_error(stall_report());
}

std::string Engine::stall_report() const {
  static const char* const kRoles[] = {"sequencer", "ingress", "protocol", "egress-stage", "egress", "ctxq"};
  std::string msg = "pipeline stalled before reaching idle:";
  const auto c = counters();
  msg += " submitted=" + std::to_string(c.submitted) + " retired=" + std::to_string(c.retired) +
         " completed=" + std::to_string(c.completed) + " notes=" + std::to_string(c.notes_routed) + "/" +
         std::to_string(c.notes_delivered);
  for (std::size_t i = 0; i < insts_.size(); ++i) {
    const Inst& in = insts_[i];
    if (in.rb && in.rb->held() > 0)
      msg += std::string(" [") + kRoles[static_cast<int>(in.role)] + " g" + std::to_string(in.group) +
             " reorder holds " + std::to_string(in.rb->held()) + ", expects " +
             std::to_string(in.rb->next_expected()) + "]";
    if (!has_work(i)) continue;
    msg += std::string(" [") + kRoles[static_cast<int>(in.role)] + " " + to_string(in.kind) + " g" +
           std::to_string(in.group) + "]";
  }
  return msg;
}

bool Engine::step_adversarial(std::mt19937_64& rng, unsigned max_stall) {
  std::vector<std::size_t> cand;
  for (;;) {
    cand.clear();
    bool any_work = false;
    std::uint64_t next_wake = UINT64_MAX;
    for (std::size_t i = 0; i < insts_.size(); ++i) {
      if (!has_work(i)) continue;
      any_work = true;
      if (insts_[i].ready_at <= clock_)
        cand.push_back(i);
      else
        next_wake = std::min(next_wake, insts_[i].ready_at);
    }
    if (!any_work) return false;
    while (!cand.empty()) {
      std::size_t k = rng() % cand.size();
      std::size_t i = cand[k];
      if (step(i)) {
        insts_[i].ready_at = clock_ + 1 + rng() % (std::uint64_t{max_stall} + 1);
        ++clock_;
        return true;
      }
      cand[k] = cand.back();
      cand.pop_back();
    }
    if (next_wake == UINT64_MAX) throw std::logic_error(stall_report());
    clock_ = next_wake;
  }
}

void Engine::run_adversarial(std::mt19937_64& rng, unsigned max_stall) {
  while (step_adversarial(rng, max_stall)) {
  }
  if (!idle()) throw std::logic_error(stall_report());
}

void Engine::thread_main(std::size_t i) {
  unsigned misses = 0;
  while (running_.load(std::memory_order_acquire)) {
    if (step(i)) {
      misses = 0;
      continue;
    }
    if (++misses < 64) {
      std::this_thread::yield();
    } else {
      std::this_thread::sleep_for(std::chrono::microseconds(20));
    }
  }
}

void Engine::start() {
  if (running_.exchange(true)) return;
  threads_.reserve(insts_.size());
  for (std::size_t i = 0; i < insts_.size(); ++i) threads_.emplace_back([this, i] { thread_main(i); });
}

void Engine::wait_idle() const {
  while (!idle()) std::this_thread::sleep_for(std::chrono::microseconds(50));
}

void Engine::stop() {
  if (!running_.load()) return;
  wait_idle();
  running_.store(false, std::memory_order_release);
  for (auto& t : threads_) t.join();
  threads_.clear();
}

bool Engine::idle() const {
  const std::uint64_t sub = submitted_.load(std::memory_order_seq_cst);
  const std::uint64_t done = retired_.load(std::memory_order_seq_cst) + completed_.load(std::memory_order_seq_cst);
  if (sub != done) return false;
  const std::uint64_t delivered = notes_delivered_.load(std::memory_order_seq_cst);
  return notes_routed_.load(std::memory_order_seq_cst) == delivered;
}

EngineCounters Engine::counters() const {
  EngineCounters c;
  c.submitted = submitted_.load();
  c.retired = retired_.load();
  c.completed = completed_.load();
  c.notes_routed = notes_routed_.load();
  c.notes_delivered = notes_delivered_.load();
  c.protocol_order_violations = order_violations_.load();
  return c;
}

}  // namespace tcpipe
