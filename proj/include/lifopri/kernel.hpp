#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "lifopri/client.hpp"
#include "lifopri/metrics.hpp"
#include "lifopri/server.hpp"
#include "lifopri/workload.hpp"

namespace lifopri {

enum class EventKind : std::uint8_t {
  SessionArrival,
  RequestIssue,
  PhaseComplete,
  Timeout,
  UtilizationWindowTick,
  HorizonEnd,
};

struct Event {
  Seconds time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::HorizonEnd;
  std::uint64_t payload = 0;
};

/// Event calendar ordered by (time, sequence).
class EventQueue {
 public:
  Seconds clock() const { return clock_; }
  /// Throws SchedulePast if `time` is before the clock.
  void schedule(Seconds time, EventKind kind, std::uint64_t payload = 0);
  /// Pops the earliest event and moves the clock to its time.
  std::optional<Event> next_event();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.sequence > b.sequence;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_sequence_ = 0;
  Seconds clock_ = 0.0;
};

enum class TraceMode : std::uint8_t { Cycle, Fresh };

/// Fully resolved parameters of one simulation run.
struct RunConfig {
  SessionModel model;
  /// Trace pool to cycle through; generated from `seed` when null.
  std::shared_ptr<const std::vector<SessionTrace>> pool;
  TraceMode trace_mode = TraceMode::Cycle;
  std::size_t pool_size = 1000;

  double session_rate = 0.0;  // sessions per second
  Seconds horizon = 0.0;
  std::uint64_t seed = 1;

  std::vector<QueueSpec> queues;
  DisciplineController controller;
  PhaseProfile profile;
  int workers = 30;
  int cpus = 1;

  TimeoutModel timeouts;
  RetryPolicy retry;
  /// Pause between a completed request and the next one of the same session.
  Seconds think_time = 0.0;

  /// Keep the per-dispatch log and the per-attempt log.
  bool detailed_logs = false;

  void validate() const;
};

struct UtilizationSample {
  Seconds time = 0.0;
  double utilization = 0.0;
  Policy policy = Policy::Fifo;
};

struct DisciplineSwitch {
  Seconds time = 0.0;
  double utilization = 0.0;
  Policy from = Policy::Fifo;
  Policy to = Policy::Fifo;
};

/// Queue lengths seen by one dispatch decision and the queue it picked.
struct DispatchRecord {
  Seconds time = 0.0;
  std::array<std::uint16_t, kKindCount> pending{};
  std::uint8_t chosen = 0;
  Policy policy = Policy::Fifo;
};

struct AttemptRecord {
  Request request;
  std::optional<Resolution> resolution;
  /// When the server finished it, if it did (possibly after the deadline).
  std::optional<Seconds> served_at;
};

struct SessionStats {
  std::uint64_t arrived = 0;
  std::uint64_t completed = 0;
  std::uint64_t aborted = 0;
  std::uint64_t trace_requests = 0;
  std::uint64_t issued_positions = 0;
  std::uint64_t not_generated = 0;
  /// Sessions whose trace length differs from issued + not generated.
  std::uint64_t conservation_violations = 0;
};

struct SimulationResult {
  OutcomeLedger ledger;
  SessionStats sessions;
  std::vector<Seconds> session_latencies;
  std::vector<UtilizationSample> utilization;
  std::vector<DisciplineSwitch> switches;
  std::vector<QueueSpec> queues;
  std::vector<DispatchRecord> dispatches;  // detailed_logs only
  std::vector<AttemptRecord> attempts;     // detailed_logs only
  Seconds horizon = 0.0;
  Seconds end_time = 0.0;
  Seconds busy_time = 0.0;
  std::uint64_t late_completions = 0;
  std::uint64_t events = 0;
  /// Events after which a worker sat idle while a queue held work.
  std::uint64_t idle_with_backlog = 0;
};

/// Runs until the horizon, then drains in-flight sessions. Deterministic for
/// a given config.
SimulationResult run(const RunConfig& config);

}  // namespace lifopri
