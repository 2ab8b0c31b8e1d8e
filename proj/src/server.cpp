#include "lifopri/server.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lifopri {

std::string_view policy_name(Policy p) { return p == Policy::Fifo ? "FIFO" : "LIFO"; }

QueueBank::QueueBank(std::vector<QueueSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw Error(Errc::ConfigInvalid, "queue bank needs at least one queue");
  route_.fill(-1);
  for (std::size_t q = 0; q < specs_.size(); ++q) {
    if (!(specs_[q].utility >= 0.0) || !std::isfinite(specs_[q].utility)) {
      throw Error(Errc::ConfigInvalid, fmt::format("queue '{}' has invalid utility", specs_[q].name));
    }
    for (std::size_t k = 0; k < kKindCount; ++k) {
      if (!specs_[q].accepts.test(k)) continue;
      if (route_[k] >= 0) {
        throw Error(Errc::ConfigInvalid, fmt::format("{} is accepted by queues '{}' and '{}'",
                                                     label(kind_at(k)), specs_[route_[k]].name,
                                                     specs_[q].name));
      }
      route_[k] = static_cast<int>(q);
    }
  }
  buffers_.resize(specs_.size());
}

QueueBank QueueBank::single_queue(std::size_t capacity, QueueRule rule) {
  return QueueBank({QueueSpec{"SQ", all_kinds(), capacity, 1.0, rule}});
}

QueueBank QueueBank::per_kind(const UtilityTable& utilities, std::size_t browsing_capacity,
                              std::size_t transaction_capacity, QueueRule browsing_rule) {
  using K = RequestKind;
  constexpr std::array<K, kKindCount> order = {K::Confirm, K::Payment, K::Shipping, K::Login,
                                               K::Main,    K::Browse,  K::Search,   K::Details};
  std::vector<QueueSpec> specs;
  for (auto k : order) {
    const bool txn = is_transaction(k);
    specs.push_back(QueueSpec{std::string(label(k)), only(k),
                              txn ? transaction_capacity : browsing_capacity, utilities.of(k),
                              txn ? QueueRule::Fifo : browsing_rule});
  }
  return QueueBank(std::move(specs));
}

std::optional<std::size_t> QueueBank::queue_for(RequestKind k) const {
  const int q = route_[index_of(k)];
  if (q < 0) return std::nullopt;
  return static_cast<std::size_t>(q);
}

std::optional<std::size_t> QueueBank::enqueue(QueuedRequest req) {
  const auto q = queue_for(req.kind);
  if (!q) throw Error(Errc::NoMatchingQueue, fmt::format("no queue accepts {}", label(req.kind)));
  auto& buf = buffers_[*q];
  if (buf.size() >= specs_[*q].capacity) return std::nullopt;
  buf.push_back(req);
  return q;
}

std::optional<std::size_t> QueueBank::argmax_queue() const {
  std::optional<std::size_t> best;
  double best_dp = -1.0;
  for (std::size_t q = 0; q < specs_.size(); ++q) {
    if (buffers_[q].empty()) continue;
    const double dp = static_cast<double>(buffers_[q].size()) * specs_[q].utility;
    if (dp > best_dp) {
      best_dp = dp;
      best = q;
    }
  }
  return best;
}

std::optional<Dequeued> QueueBank::select_next(Policy browsing_policy) {
  const auto q = argmax_queue();
  if (!q) return std::nullopt;
  auto& buf = buffers_[*q];
  Dequeued out{*q, {}};
  if (effective_policy(specs_[*q].rule, browsing_policy) == Policy::Lifo) {
    out.request = buf.back();
    buf.pop_back();
  } else {
    out.request = buf.front();
    buf.pop_front();
  }
  return out;
}

std::size_t QueueBank::total_pending() const {
  std::size_t n = 0;
  for (const auto& b : buffers_) n += b.size();
  return n;
}

bool QueueBank::has_adaptive_queue() const {
  return std::any_of(specs_.begin(), specs_.end(),
                     [](const QueueSpec& s) { return s.rule == QueueRule::Adaptive; });
}

Policy effective_policy(QueueRule rule, Policy browsing_policy) {
  switch (rule) {
    case QueueRule::Fifo: return Policy::Fifo;
    case QueueRule::Lifo: return Policy::Lifo;
    case QueueRule::Adaptive: return browsing_policy;
  }
  return Policy::Fifo;
}

void DisciplineController::validate() const {
  if (!(lower_threshold > 0.0 && lower_threshold < upper_threshold && upper_threshold <= 1.0)) {
    throw Error(Errc::ConfigInvalid,
                fmt::format("thresholds must satisfy 0 < lower < upper <= 1 (got {} / {})",
                            lower_threshold, upper_threshold));
  }
  if (!(measurement_interval > 0.0)) {
    throw Error(Errc::ConfigInvalid, "utilization window must be positive");
  }
}

DisciplineController set_discipline(DisciplineController ctrl, double measured_util) {
  if (ctrl.browsing_policy == Policy::Fifo && measured_util > ctrl.upper_threshold) {
    ctrl.browsing_policy = Policy::Lifo;
  } else if (ctrl.browsing_policy == Policy::Lifo && measured_util < ctrl.lower_threshold) {
    ctrl.browsing_policy = Policy::Fifo;
  }
  return ctrl;
}

Seconds ServiceDemand::total() const {
  Seconds t = 0.0;
  for (const auto& p : phases) t += p.duration;
  return t;
}

Seconds ServiceDemand::busy_total() const {
  Seconds t = 0.0;
  for (const auto& p : phases) {
    if (p.kind == PhaseKind::Busy) t += p.duration;
  }
  return t;
}

void PhaseProfile::validate() const {
  if (phases < 1) throw Error(Errc::ConfigInvalid, "phase profile needs at least one phase");
  if (!(busy_fraction >= 0.0 && busy_fraction <= 1.0)) {
    throw Error(Errc::ConfigInvalid, "busy fraction must lie in [0,1]");
  }
  if (phases == 1 && busy_fraction != 1.0) {
    throw Error(Errc::ConfigInvalid, "a single-phase profile must be busy-only");
  }
}

PhaseProfile PhaseProfile::cpu_only(PhaseDistribution d) { return PhaseProfile{1, 1.0, d}; }

ServiceDemand sample_service_demand(Seconds mean_exec_time, const PhaseProfile& profile, Engine& rng) {
  profile.validate();
  const int busy_phases = (profile.phases + 1) / 2;
  const int wait_phases = profile.phases / 2;
  const double busy_mean = mean_exec_time * profile.busy_fraction / busy_phases;
  const double wait_mean = wait_phases > 0 ? mean_exec_time * (1.0 - profile.busy_fraction) / wait_phases : 0.0;

  ServiceDemand demand;
  for (int i = 0; i < profile.phases; ++i) {
    const PhaseKind kind = i % 2 == 0 ? PhaseKind::Busy : PhaseKind::Wait;
    const double mean = kind == PhaseKind::Busy ? busy_mean : wait_mean;
    const double d = profile.distribution == PhaseDistribution::Exponential ? exponential(rng, mean) : mean;
    if (d <= 0.0) continue;
    if (!demand.phases.empty() && demand.phases.back().kind == kind) {
      demand.phases.back().duration += d;
    } else {
      demand.phases.push_back({kind, d});
    }
  }
  return demand;
}

namespace {
constexpr Seconds kPhaseEpsilon = 1e-10;
}

ProcessorSharingCpu::ProcessorSharingCpu(int cpus, Seconds utilization_window)
    : cpus_(cpus), window_(utilization_window) {
  if (cpus_ < 1) throw Error(Errc::ConfigInvalid, "need at least one CPU");
  if (!(window_ > 0.0)) throw Error(Errc::ConfigInvalid, "utilization window must be positive");
}

void ProcessorSharingCpu::add(AttemptId id, const ServiceDemand& demand) {
  Execution e{id, {}, 0, 0.0};
  for (const auto& p : demand.phases) {
    if (p.duration > 0.0) e.phases.push_back(p);
  }
  if (e.phases.empty()) e.phases.push_back({PhaseKind::Wait, 0.0});
  e.remaining = e.phases.front().duration;
  if (e.phases.front().kind == PhaseKind::Busy) ++busy_;
  executions_.push_back(std::move(e));
}

double ProcessorSharingCpu::busy_rate() const {
  return busy_ > 0 ? std::min(1.0, static_cast<double>(cpus_) / busy_) : 0.0;
}

std::optional<Seconds> ProcessorSharingCpu::time_to_next_completion() const {
  if (executions_.empty()) return std::nullopt;
  const double rate = busy_rate();
  Seconds best = std::numeric_limits<Seconds>::infinity();
  for (const auto& e : executions_) {
    const bool busy = e.phases[e.phase].kind == PhaseKind::Busy;
    best = std::min(best, busy ? e.remaining / rate : e.remaining);
  }
  return std::max(0.0, best);
}

std::optional<Seconds> ProcessorSharingCpu::remaining(AttemptId id) const {
  for (const auto& e : executions_) {
    if (e.id == id) return e.remaining;
  }
  return std::nullopt;
}

std::vector<PhaseCompletion> ProcessorSharingCpu::advance(Seconds dt) {
  if (dt < 0.0) {
    if (dt < -1e-9) throw Error(Errc::SchedulePast, fmt::format("cannot advance CPU by {}", dt));
    dt = 0.0;
  }
  std::vector<PhaseCompletion> out;
  Seconds left = dt;
  for (;;) {
    if (executions_.empty()) {
      now_ += left;
      break;
    }
    const double rate = busy_rate();
    const Seconds step = std::min(left, *time_to_next_completion());
    for (auto& e : executions_) {
      e.remaining -= e.phases[e.phase].kind == PhaseKind::Busy ? step * rate : step;
    }
    if (busy_ > 0 && step > 0.0) {
      const double level = std::min(busy_, cpus_) / static_cast<double>(cpus_);
      record_busy(now_, now_ + step, level);
      busy_total_ += step * level;
    }
    now_ += step;
    left -= step;

    for (std::size_t i = 0; i < executions_.size();) {
      auto& e = executions_[i];
      if (e.remaining > kPhaseEpsilon) {
        ++i;
        continue;
      }
      const PhaseKind done = e.phases[e.phase].kind;
      if (done == PhaseKind::Busy) --busy_;
      ++e.phase;
      const bool finished = e.phase == e.phases.size();
      out.push_back({e.id, done, finished});
      if (finished) {
        executions_.erase(executions_.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      e.remaining = e.phases[e.phase].duration;
      if (e.phases[e.phase].kind == PhaseKind::Busy) ++busy_;
      ++i;
    }
    if (left <= 0.0) break;
  }
  prune_history();
  return out;
}

void ProcessorSharingCpu::record_busy(Seconds start, Seconds end, double level) {
  if (!history_.empty() && history_.back().level == level && history_.back().end >= start) {
    history_.back().end = end;
    return;
  }
  history_.push_back({start, end, level});
}

void ProcessorSharingCpu::prune_history() {
  const Seconds from = now_ - window_;
  while (!history_.empty() && history_.front().end <= from) history_.pop_front();
}

double ProcessorSharingCpu::utilization() const {
  const Seconds span = std::min(window_, now_);
  if (span <= 0.0) return 0.0;
  const Seconds from = now_ - span;
  double busy = 0.0;
  for (const auto& s : history_) {
    const Seconds a = std::max(s.start, from);
    const Seconds b = std::min(s.end, now_);
    if (b > a) busy += (b - a) * s.level;
  }
  return std::clamp(busy / span, 0.0, 1.0);
}

void WorkerPool::acquire() {
  if (!available()) throw std::logic_error("no free worker");
  ++busy_workers;
}

void WorkerPool::release() {
  if (busy_workers == 0) throw std::logic_error("no busy worker to release");
  --busy_workers;
}

}  // namespace lifopri
