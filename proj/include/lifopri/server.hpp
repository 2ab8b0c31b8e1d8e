#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "lifopri/rng.hpp"
#include "lifopri/types.hpp"
#include "lifopri/workload.hpp"

namespace lifopri {

// ---------------------------------------------------------------------------
// Queues and request selection

enum class Policy : std::uint8_t { Fifo, Lifo };

/// How a queue picks from its buffer. Adaptive queues follow the controller's
/// browsing policy.
enum class QueueRule : std::uint8_t { Fifo, Lifo, Adaptive };

std::string_view policy_name(Policy p);

struct QueueSpec {
  std::string name;
  KindSet accepts;
  std::size_t capacity = 0;
  double utility = 1.0;
  QueueRule rule = QueueRule::Fifo;
};

struct QueuedRequest {
  AttemptId id = 0;
  RequestKind kind = RequestKind::Main;
};

struct Dequeued {
  std::size_t queue = 0;
  QueuedRequest request;
};

enum class QueueMode : std::uint8_t { SingleQueue, MultiQueue };

/// Bounded request queues with N_i * U_i selection. Queue ids are positions in
/// the QueueSpec vector; ties in N_i * U_i go to the lowest id.
class QueueBank {
 public:
  explicit QueueBank(std::vector<QueueSpec> specs);

  /// One queue for every kind.
  static QueueBank single_queue(std::size_t capacity, QueueRule rule);
  /// One queue per kind, ordered Tr-4, Tr-3, Tr-2, Tr-1, Br-1..Br-4.
  static QueueBank per_kind(const UtilityTable& utilities, std::size_t browsing_capacity,
                            std::size_t transaction_capacity, QueueRule browsing_rule);

  /// Accepted queue id, or nullopt when the target queue is full (dropped).
  /// Throws NoMatchingQueue if no queue accepts the kind.
  std::optional<std::size_t> enqueue(QueuedRequest req);

  /// Removes one request from the queue with the largest N_i * U_i.
  std::optional<Dequeued> select_next(Policy browsing_policy);

  /// Queue that select_next would pick, without removing anything.
  std::optional<std::size_t> argmax_queue() const;

  std::size_t queue_count() const { return specs_.size(); }
  const QueueSpec& spec(std::size_t q) const { return specs_[q]; }
  std::size_t pending(std::size_t q) const { return buffers_[q].size(); }
  std::size_t total_pending() const;
  bool empty() const { return total_pending() == 0; }
  const std::deque<QueuedRequest>& buffer(std::size_t q) const { return buffers_[q]; }
  std::optional<std::size_t> queue_for(RequestKind k) const;
  bool has_adaptive_queue() const;
  QueueMode mode() const { return specs_.size() == 1 ? QueueMode::SingleQueue : QueueMode::MultiQueue; }

 private:
  std::vector<QueueSpec> specs_;
  std::vector<std::deque<QueuedRequest>> buffers_;
  std::array<int, kKindCount> route_{};
};

/// Effective discipline of a queue under the current browsing policy.
Policy effective_policy(QueueRule rule, Policy browsing_policy);

/// Two-threshold switch between FIFO and LIFO for the adaptive queues.
struct DisciplineController {
  double upper_threshold = 0.99;
  double lower_threshold = 0.95;
  Policy browsing_policy = Policy::Fifo;
  Seconds measurement_interval = 1.0;

  /// Throws ConfigInvalid unless 0 < lower < upper <= 1 and the interval is positive.
  void validate() const;
};

/// FIFO -> LIFO when util > upper; LIFO -> FIFO when util < lower; otherwise unchanged.
DisciplineController set_discipline(DisciplineController ctrl, double measured_util);

// ---------------------------------------------------------------------------
// Service demand

enum class PhaseKind : std::uint8_t { Busy, Wait };

struct Phase {
  PhaseKind kind = PhaseKind::Busy;
  Seconds duration = 0.0;
};

struct ServiceDemand {
  std::vector<Phase> phases;

  Seconds total() const;
  Seconds busy_total() const;
};

enum class PhaseDistribution : std::uint8_t { Exponential, Deterministic };

/// Shape of a request's service demand: `phases` alternating phases starting
/// with Busy, of which `busy_fraction` of the expected time is CPU work.
struct PhaseProfile {
  int phases = 4;
  double busy_fraction = 0.5;
  PhaseDistribution distribution = PhaseDistribution::Exponential;

  void validate() const;
  /// Busy-only profile with a single phase.
  static PhaseProfile cpu_only(PhaseDistribution d);
};

ServiceDemand sample_service_demand(Seconds mean_exec_time, const PhaseProfile& profile, Engine& rng);

// ---------------------------------------------------------------------------
// CPU

struct PhaseCompletion {
  AttemptId id = 0;
  PhaseKind kind = PhaseKind::Busy;
  /// The whole demand is done.
  bool finished = false;
};

/// Processor-shared CPU. Busy phases progress at rate min(1, cpus / B) where B
/// is the number of executions currently in a Busy phase; Wait phases progress
/// at rate 1. Keeps the busy history needed for windowed utilization.
class ProcessorSharingCpu {
 public:
  ProcessorSharingCpu(int cpus, Seconds utilization_window);

  Seconds now() const { return now_; }
  /// Starts an execution at the current time. Zero-length phases are skipped.
  void add(AttemptId id, const ServiceDemand& demand);

  /// Advances the clock by dt, exactly integrating the piecewise-constant
  /// rates, and returns every phase that ended within the step in time order.
  std::vector<PhaseCompletion> advance(Seconds dt);
  std::vector<PhaseCompletion> advance_to(Seconds t) { return advance(t - now_); }

  /// Time from now until the next phase ends, if anything is executing.
  std::optional<Seconds> time_to_next_completion() const;

  int busy_count() const { return busy_; }
  std::size_t active_count() const { return executions_.size(); }
  int cpus() const { return cpus_; }
  /// Remaining work in the current phase, for inspection.
  std::optional<Seconds> remaining(AttemptId id) const;

  /// CPU busy time in the trailing window divided by the window length (or by
  /// the elapsed time while less than a window has passed).
  double utilization() const;
  Seconds window() const { return window_; }
  /// Busy CPU time accrued since construction (in CPU-seconds / cpus).
  Seconds busy_time_total() const { return busy_total_; }

 private:
  struct Execution {
    AttemptId id;
    std::vector<Phase> phases;
    std::size_t phase;
    Seconds remaining;
  };
  struct Segment {
    Seconds start;
    Seconds end;
    double level;
  };

  double busy_rate() const;
  void record_busy(Seconds start, Seconds end, double level);
  void prune_history();

  int cpus_;
  Seconds window_;
  Seconds now_ = 0.0;
  Seconds busy_total_ = 0.0;
  int busy_ = 0;
  std::vector<Execution> executions_;
  std::deque<Segment> history_;
};

struct WorkerPool {
  int max_workers = 30;
  int busy_workers = 0;

  bool available() const { return busy_workers < max_workers; }
  void acquire();
  void release();
};

}  // namespace lifopri
