#include "lifopri/kernel.hpp"

#include <fmt/format.h>

#include <cmath>

namespace lifopri {

void EventQueue::schedule(Seconds time, EventKind kind, std::uint64_t payload) {
  if (time < clock_ || std::isnan(time)) {
    throw Error(Errc::SchedulePast, fmt::format("event at {} is before the clock {}", time, clock_));
  }
  heap_.push(Event{time, next_sequence_++, kind, payload});
}

std::optional<Event> EventQueue::next_event() {
  if (heap_.empty()) return std::nullopt;
  Event e = heap_.top();
  heap_.pop();
  clock_ = e.time;
  return e;
}

void RunConfig::validate() const {
  validate_model(model);
  controller.validate();
  profile.validate();
  if (!(session_rate >= 0.0) || !std::isfinite(session_rate)) {
    throw Error(Errc::ConfigInvalid, "session rate must be a finite non-negative number");
  }
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw Error(Errc::ConfigInvalid, "horizon must be finite and >= 0");
  if (workers < 1) throw Error(Errc::ConfigInvalid, "need at least one worker");
  if (cpus < 1) throw Error(Errc::ConfigInvalid, "need at least one CPU");
  if (queues.empty()) throw Error(Errc::ConfigInvalid, "no queues configured");
  if (queues.size() > kKindCount) throw Error(Errc::ConfigInvalid, "at most eight queues are supported");
  if (!(retry.retry_probability >= 0.0 && retry.retry_probability <= 1.0) || retry.max_retries < 0) {
    throw Error(Errc::ConfigInvalid, "retry policy needs p in [0,1] and M >= 0");
  }
  if (!(timeouts.base_timeout >= 0.0) || !(timeouts.think_timeout_mean >= 0.0)) {
    throw Error(Errc::ConfigInvalid, "timeouts must be non-negative");
  }
  if (!(think_time >= 0.0)) throw Error(Errc::ConfigInvalid, "think time must be non-negative");
  if (trace_mode == TraceMode::Cycle && !pool && pool_size == 0) {
    throw Error(Errc::ConfigInvalid, "trace pool must not be empty");
  }
  if (pool && pool->empty()) throw Error(Errc::ConfigInvalid, "trace pool must not be empty");
}

namespace {

constexpr Seconds kSameTime = 1e-12;

struct SessionSlot {
  SessionInstance inst;
  std::uint32_t issued = 0;
  std::uint32_t not_generated = 0;
};

struct AttemptSlot {
  Request req;
  bool resolved = false;
  std::optional<Resolution> resolution;
  std::optional<Seconds> served_at;
};

class Simulation {
 public:
  explicit Simulation(const RunConfig& cfg)
      : cfg_(cfg),
        streams_(cfg.seed),
        bank_(cfg.queues),
        ctrl_(cfg.controller),
        cpu_(cfg.cpus, cfg.controller.measurement_interval),
        workers_{cfg.workers, 0},
        adaptive_(bank_.has_adaptive_queue()) {
    if (cfg_.pool) {
      pool_ = cfg_.pool;
    } else if (cfg_.trace_mode == TraceMode::Cycle) {
      pool_ = std::make_shared<const std::vector<SessionTrace>>(
          generate_trace_pool(cfg_.model, cfg_.pool_size, cfg_.seed));
    }
    Engine arrivals = streams_.sequential(Stream::Arrivals);
    const std::size_t pool_size = pool_ ? pool_->size() : 1;
    arrivals_ = schedule_session_arrivals(cfg_.session_rate, cfg_.horizon, pool_size, arrivals);
    result_.horizon = cfg_.horizon;
    result_.queues = cfg_.queues;
  }

  SimulationResult run() {
    if (!arrivals_.empty()) events_.schedule(arrivals_.front().time, EventKind::SessionArrival, 0);
    const Seconds window = ctrl_.measurement_interval;
    if (window <= cfg_.horizon) events_.schedule(window, EventKind::UtilizationWindowTick, 1);
    events_.schedule(cfg_.horizon, EventKind::HorizonEnd);

    while (auto e = events_.next_event()) {
      ++result_.events;
      const Seconds now = e->time;
      sync_cpu(now);
      switch (e->kind) {
        case EventKind::SessionArrival: on_arrival(e->payload); break;
        case EventKind::RequestIssue: issue_page(static_cast<SessionId>(e->payload)); break;
        case EventKind::Timeout: on_deadline(static_cast<AttemptId>(e->payload)); break;
        case EventKind::UtilizationWindowTick: on_tick(e->payload); break;
        case EventKind::PhaseComplete:
        case EventKind::HorizonEnd: break;
      }
      dispatch();
      if (workers_.available() && !bank_.empty()) ++result_.idle_with_backlog;
      reschedule_cpu();
    }
    finish();
    return std::move(result_);
  }

 private:
  Seconds now() const { return events_.clock(); }

  void sync_cpu(Seconds t) {
    for (const auto& c : cpu_.advance_to(t)) {
      if (c.finished) on_served(c.id);
    }
  }

  void reschedule_cpu() {
    const auto dt = cpu_.time_to_next_completion();
    if (!dt) {
      cpu_event_.reset();
      return;
    }
    const Seconds at = now() + *dt;
    if (cpu_event_ && *cpu_event_ <= now()) cpu_event_.reset();
    if (cpu_event_ && std::abs(*cpu_event_ - at) <= kSameTime) return;
    cpu_event_ = at;
    events_.schedule(at, EventKind::PhaseComplete);
  }

  void on_arrival(std::uint64_t index) {
    const auto& a = arrivals_[index];
    SessionSlot s;
    s.inst.id = static_cast<SessionId>(sessions_.size());
    s.inst.arrival_time = now();
    if (cfg_.trace_mode == TraceMode::Cycle) {
      s.inst.trace = (*pool_)[a.trace_index].requests;
    } else {
      Engine rng = streams_.keyed(Stream::Traces, 0xF00D0000ULL, s.inst.id);
      s.inst.trace = sample_trace(cfg_.model, rng).requests;
    }
    result_.sessions.arrived++;
    result_.sessions.trace_requests += s.inst.trace.size();
    sessions_.push_back(std::move(s));
    issue_page(sessions_.back().inst.id);
    if (index + 1 < arrivals_.size()) {
      events_.schedule(arrivals_[index + 1].time, EventKind::SessionArrival, index + 1);
    }
  }

  void issue_page(SessionId sid) {
    auto& s = sessions_[sid];
    if (s.inst.status != SessionStatus::Active) return;
    Request req;
    req.session = sid;
    req.position = static_cast<std::uint32_t>(s.inst.cursor);
    req.kind = s.inst.trace[s.inst.cursor];
    req.issue_time = now();
    req.attempt = 0;
    Engine rng = streams_.keyed(Stream::Timeouts, sid, req.position, 0);
    req.deadline = sample_deadline(cfg_.timeouts, req.issue_time, rng);
    ++s.issued;
    issue_attempt(req);
  }

  void issue_attempt(Request req) {
    req.id = static_cast<AttemptId>(attempts_.size());
    attempts_.push_back(AttemptSlot{req, false, std::nullopt, std::nullopt});
    result_.ledger.issue(req.kind);
    if (!bank_.enqueue({req.id, req.kind})) {
      resolve(req.id, Resolution::Dropped);
      fail_session(req.session);
      return;
    }
    if (std::isfinite(req.deadline)) events_.schedule(req.deadline, EventKind::Timeout, req.id);
  }

  void resolve(AttemptId id, Resolution r) {
    auto& a = attempts_[id];
    a.resolved = true;
    a.resolution = r;
    result_.ledger.record(AttemptOutcome{id, a.req.kind, r, a.req.issue_time, now(), a.req.deadline});
  }

  void on_served(AttemptId id) {
    workers_.release();
    auto& a = attempts_[id];
    a.served_at = now();
    if (a.resolved) {
      ++result_.late_completions;
      return;
    }
    if (now() > a.req.deadline) {
      // The deadline event is still pending at this same instant.
      on_deadline(id);
      return;
    }
    resolve(id, Resolution::Completed);
    auto& s = sessions_[a.req.session];
    const auto step = on_request_resolved(s.inst, Outcome::Success, now());
    if (step.next) {
      events_.schedule(now() + cfg_.think_time, EventKind::RequestIssue, a.req.session);
    } else if (s.inst.status == SessionStatus::Completed) {
      result_.sessions.completed++;
      result_.session_latencies.push_back(now() - s.inst.arrival_time);
    }
  }

  void on_deadline(AttemptId id) {
    if (attempts_[id].resolved) return;
    resolve(id, Resolution::TimedOut);
    const Request req = attempts_[id].req;
    Engine retry_rng = streams_.keyed(Stream::Retries, req.session, req.position, static_cast<std::uint64_t>(req.attempt));
    Engine deadline_rng =
        streams_.keyed(Stream::Timeouts, req.session, req.position, static_cast<std::uint64_t>(req.attempt) + 1);
    if (auto retry = on_timeout(req, cfg_.retry, cfg_.timeouts, retry_rng, deadline_rng)) {
      issue_attempt(*retry);
    } else {
      fail_session(req.session);
    }
  }

  void fail_session(SessionId sid) {
    auto& s = sessions_[sid];
    const auto step = on_request_resolved(s.inst, Outcome::Failure, now());
    for (auto k : step.not_generated) result_.ledger.record_not_generated(k);
    s.not_generated += static_cast<std::uint32_t>(step.not_generated.size());
    result_.sessions.aborted++;
  }

  void on_tick(std::uint64_t k) {
    const double util = cpu_.utilization();
    if (adaptive_) update_discipline(util);
    result_.utilization.push_back({now(), util, ctrl_.browsing_policy});
    const Seconds next = static_cast<double>(k + 1) * ctrl_.measurement_interval;
    if (next <= cfg_.horizon) events_.schedule(next, EventKind::UtilizationWindowTick, k + 1);
  }

  void update_discipline(double util) {
    const auto next = set_discipline(ctrl_, util);
    if (next.browsing_policy != ctrl_.browsing_policy) {
      result_.switches.push_back({now(), util, ctrl_.browsing_policy, next.browsing_policy});
    }
    ctrl_ = next;
  }

  void dispatch() {
    while (workers_.available() && !bank_.empty()) {
      if (adaptive_) update_discipline(cpu_.utilization());
      DispatchRecord rec;
      if (cfg_.detailed_logs) {
        rec.time = now();
        for (std::size_t q = 0; q < bank_.queue_count(); ++q) {
          rec.pending[q] = static_cast<std::uint16_t>(bank_.pending(q));
        }
        rec.policy = ctrl_.browsing_policy;
      }
      const auto picked = bank_.select_next(ctrl_.browsing_policy);
      const auto& req = attempts_[picked->request.id].req;
      Engine rng = streams_.keyed(Stream::Demands, req.session, req.position, static_cast<std::uint64_t>(req.attempt));
      const auto demand = sample_service_demand(cfg_.model.mean_exec(req.kind), cfg_.profile, rng);
      workers_.acquire();
      cpu_.add(req.id, demand);
      if (cfg_.detailed_logs) {
        rec.chosen = static_cast<std::uint8_t>(picked->queue);
        result_.dispatches.push_back(rec);
      }
    }
  }

  void finish() {
    result_.end_time = now();
    result_.busy_time = cpu_.busy_time_total();
    auto& st = result_.sessions;
    for (const auto& s : sessions_) {
      st.issued_positions += s.issued;
      st.not_generated += s.not_generated;
      if (s.inst.trace.size() != static_cast<std::size_t>(s.issued) + s.not_generated) ++st.conservation_violations;
    }
    if (cfg_.detailed_logs) {
      result_.attempts.reserve(attempts_.size());
      for (const auto& a : attempts_) result_.attempts.push_back({a.req, a.resolution, a.served_at});
    }
  }

  const RunConfig& cfg_;
  RngStreams streams_;
  EventQueue events_;
  QueueBank bank_;
  DisciplineController ctrl_;
  ProcessorSharingCpu cpu_;
  WorkerPool workers_;
  bool adaptive_;
  std::shared_ptr<const std::vector<SessionTrace>> pool_;
  std::vector<SessionArrival> arrivals_;
  std::vector<SessionSlot> sessions_;
  std::vector<AttemptSlot> attempts_;
  std::optional<Seconds> cpu_event_;
  SimulationResult result_;
};

}  // namespace

SimulationResult run(const RunConfig& config) {
  config.validate();
  return Simulation(config).run();
}

}  // namespace lifopri
